//! Generalized inverses with prescribed complements.
//!
//! For `T: R^n -> R^m`, a complement `M` of `N(T)` in the domain and a
//! complement `W` of `R(T)` in the codomain determine a unique `S` with
//! `TST = T`, `STS = S`, `TS = Q` (projector onto `R(T)` along `W`) and
//! `ST = I - P` (`P` the projector onto `N(T)` along `M`). Orthogonal
//! complements give the Moore-Penrose inverse.

use serde::{Deserialize, Serialize};

use crate::dense::solve_square;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::subspace::Subspace;
use crate::DEFAULT_TOL;

/// Residuals of the two defining identities and of the induced idempotents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiResiduals {
    /// `||T S T - T||`
    pub r1: f64,
    /// `||S T S - S||`
    pub r2: f64,
    /// `||P^2 - P||` for `P = I - S T`
    pub idem_p: f64,
    /// `||Q^2 - Q||` for `Q = T S`
    pub idem_q: f64,
    /// `(1 + ||T||)(1 + ||S||)`
    pub scale: f64,
    pub tol: f64,
    pub pass: bool,
}

impl GiResiduals {
    /// Largest residual divided by the scale.
    pub fn worst_relative(&self) -> f64 {
        self.r1.max(self.r2).max(self.idem_p).max(self.idem_q) / self.scale
    }
}

/// An operator, a generalized inverse of it, and the induced idempotents.
#[derive(Debug, Clone, Serialize)]
pub struct GiBundle {
    pub t: Matrix,
    pub s: Matrix,
    /// Idempotent onto `N(T)`, equal to `I - S T`.
    pub p: Matrix,
    /// Idempotent onto `R(T)`, equal to `T S`.
    pub q: Matrix,
    pub rank: usize,
    pub residuals: GiResiduals,
}

impl GiBundle {
    /// Wraps an externally supplied pair `(T, S)`; `P` and `Q` are derived.
    pub fn from_pair(t: Matrix, s: Matrix, tol: f64) -> Result<Self> {
        let residuals = verify_gi(&t, &s, tol)?;
        let p = &Matrix::identity(t.cols()) - &(&s * &t);
        let q = &t * &s;
        let rank = Subspace::range_of(&q, tol)?.dim();
        Ok(Self {
            t,
            s,
            p,
            q,
            rank,
            residuals,
        })
    }

    pub fn domain_dim(&self) -> usize {
        self.t.cols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.t.rows()
    }
}

/// Complements used to pin down a generalized inverse.
#[derive(Debug, Clone)]
pub struct ComplementChoice {
    /// Complement of `N(T)` in the domain.
    pub m: Subspace,
    /// Complement of `R(T)` in the codomain.
    pub w: Subspace,
}

impl ComplementChoice {
    pub fn new(m: Subspace, w: Subspace) -> Self {
        Self { m, w }
    }

    /// `M = N(T)^⊥`, `W = R(T)^⊥`.
    pub fn orthogonal(t: &Matrix, tol: f64) -> Result<Self> {
        let m = Subspace::null_of(t, tol)?.orthogonal_complement();
        let w = Subspace::range_of(t, tol)?.orthogonal_complement();
        Ok(Self { m, w })
    }

    /// Random well-conditioned complements, deterministic for a seed.
    pub fn random(t: &Matrix, seed: u64, tol: f64) -> Result<Self> {
        let m = Subspace::null_of(t, tol)?.random_complement(seed)?;
        let w = Subspace::range_of(t, tol)?.random_complement(seed ^ 0x9E37_79B9_7F4A_7C15)?;
        Ok(Self { m, w })
    }

    fn tol(&self) -> f64 {
        self.m.tol().max(self.w.tol())
    }
}

fn complement_error(what: &str, v: &Subspace, w: &Subspace) -> Result<()> {
    let check = v.complement_check(w)?;
    if check.is_complement {
        return Ok(());
    }
    let reason = if check.witness.is_some() {
        format!("{what}: the subspaces intersect")
    } else {
        format!("{what}: dimensions fall short by {}", check.deficit)
    };
    Err(Error::Complement {
        reason,
        witness: check.witness,
        deficit: (check.deficit != 0).then_some(check.deficit),
    })
}

/// Projector with range `V` and null space `W`.
pub fn oblique_projector(v: &Subspace, w: &Subspace) -> Result<Matrix> {
    if v.ambient_dim() != w.ambient_dim() {
        return Err(Error::Dimension(format!(
            "ambient dimensions {} and {} differ",
            v.ambient_dim(),
            w.ambient_dim()
        )));
    }
    complement_error("oblique projector", v, w)?;
    let n = v.ambient_dim();
    if v.is_trivial() {
        return Ok(Matrix::zeros(n, n));
    }
    if w.is_trivial() {
        return Ok(Matrix::identity(n));
    }
    // P [B_V | B_W] = [B_V | 0]  <=>  [B_V | B_W]^T P^T = [B_V | 0]^T
    let a = v.basis().hcat(w.basis())?;
    let target = v.basis().hcat(&Matrix::zeros(n, w.dim()))?;
    let pt = solve_square(&a.transpose(), &target.transpose()).map_err(|e| Error::Complement {
        reason: format!("complement pair too ill-conditioned: {e}"),
        witness: None,
        deficit: None,
    })?;
    Ok(pt.transpose())
}

/// Residuals of `S` as a generalized inverse of `T`; passes when every
/// residual is at most `tol * (1 + ||T||)(1 + ||S||)`.
pub fn verify_gi(t: &Matrix, s: &Matrix, tol: f64) -> Result<GiResiduals> {
    if s.rows() != t.cols() || s.cols() != t.rows() {
        return Err(Error::Dimension(format!(
            "S is {}x{}, expected {}x{} for T {}x{}",
            s.rows(),
            s.cols(),
            t.cols(),
            t.rows(),
            t.rows(),
            t.cols()
        )));
    }
    let ts = t * s;
    let st = s * t;
    let r1 = (&(&ts * t) - t).norm2();
    let r2 = (&(&st * s) - s).norm2();
    let p = &Matrix::identity(t.cols()) - &st;
    let idem_p = (&(&p * &p) - &p).norm2();
    let idem_q = (&(&ts * &ts) - &ts).norm2();
    let scale = (1.0 + t.norm2()) * (1.0 + s.norm2());
    let bound = tol * scale;
    Ok(GiResiduals {
        r1,
        r2,
        idem_p,
        idem_q,
        scale,
        tol,
        pass: r1 <= bound && r2 <= bound && idem_p <= bound && idem_q <= bound,
    })
}

/// The unique generalized inverse determined by `choice`.
///
/// Restricts `T` to `M`, inverts that restriction on `R(T)`, composes with
/// the projector onto `R(T)` along `W`, and is zero on `W`.
pub fn build_gi(t: &Matrix, choice: &ComplementChoice) -> Result<GiBundle> {
    let (rows, cols) = t.shape();
    if choice.m.ambient_dim() != cols || choice.w.ambient_dim() != rows {
        return Err(Error::Dimension(format!(
            "complements live in R^{} and R^{}, T is {rows}x{cols}",
            choice.m.ambient_dim(),
            choice.w.ambient_dim()
        )));
    }
    let tol = choice.tol();
    let null = Subspace::null_of(t, tol)?;
    let range = Subspace::range_of(t, tol)?;
    complement_error("M is not a complement of N(T)", &choice.m, &null)?;
    complement_error("W is not a complement of R(T)", &choice.w, &range)?;

    let rank = range.dim();
    let (s, p, q) = if rank == 0 {
        (
            Matrix::zeros(cols, rows),
            Matrix::identity(cols),
            Matrix::zeros(rows, rows),
        )
    } else {
        let p = oblique_projector(&null, &choice.m)?;
        let q = oblique_projector(&range, &choice.w)?;
        let br = range.basis();
        let bm = choice.m.basis();
        // T restricted to M, in coordinates of B_M and B_R
        let k = &(&br.transpose() * t) * bm;
        let coords = solve_square(&k, &(&br.transpose() * &q))?;
        (bm * &coords, p, q)
    };
    let residuals = verify_gi(t, &s, GI_RESIDUAL_TOL)?;
    Ok(GiBundle {
        t: t.clone(),
        s,
        p,
        q,
        rank,
        residuals,
    })
}

/// Relative pass threshold for residuals of constructed inverses.
pub const GI_RESIDUAL_TOL: f64 = 1e-10;

/// Moore-Penrose inverse as the generalized inverse with orthogonal
/// complements.
pub fn moore_penrose(t: &Matrix) -> Result<GiBundle> {
    moore_penrose_with_tol(t, DEFAULT_TOL)
}

pub fn moore_penrose_with_tol(t: &Matrix, tol: f64) -> Result<GiBundle> {
    build_gi(t, &ComplementChoice::orthogonal(t, tol)?)
}

/// `c = ||T T^+||`, the norm of the idempotent `Q`.
pub fn norm_c(bundle: &GiBundle) -> f64 {
    bundle.q.norm2()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = DEFAULT_TOL;

    fn line(v: &[f64]) -> Subspace {
        Subspace::span(&Matrix::from_columns(v.len(), &[v.to_vec()]), TOL).unwrap()
    }

    fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
        let d = (a - b).max_abs();
        assert!(d <= tol, "difference {d:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn oblique_projector_examples() {
        let p = oblique_projector(&line(&[1.0, 0.0]), &line(&[0.0, 1.0])).unwrap();
        assert_close(&p, &Matrix::from_diag(&[1.0, 0.0]), 1e-15);
        let p = oblique_projector(&line(&[1.0, 0.0]), &line(&[1.0, 1.0])).unwrap();
        assert_close(&p, &Matrix::from_rows(&[&[1.0, -1.0], &[0.0, 0.0]]), 1e-14);
        let p = oblique_projector(&Subspace::full(3, TOL), &Subspace::trivial(3, TOL)).unwrap();
        assert_eq!(p, Matrix::identity(3));
    }

    #[test]
    fn oblique_projector_rejects_non_complement() {
        match oblique_projector(&line(&[1.0, 0.0]), &line(&[2.0, 0.0])) {
            Err(Error::Complement { witness: Some(w), .. }) => {
                assert!((w[0].abs() - 1.0).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
        match oblique_projector(&line(&[1.0, 0.0, 0.0]), &line(&[0.0, 1.0, 0.0])) {
            Err(Error::Complement { deficit: Some(1), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn build_gi_examples() {
        let t = Matrix::from_diag(&[1.0, 0.0]);
        let choice = ComplementChoice::new(line(&[1.0, 0.0]), line(&[0.0, 1.0]));
        let b = build_gi(&t, &choice).unwrap();
        assert_close(&b.s, &Matrix::from_diag(&[1.0, 0.0]), 1e-15);

        let choice = ComplementChoice::new(line(&[1.0, 1.0]), line(&[0.0, 1.0]));
        let b = build_gi(&t, &choice).unwrap();
        assert_close(&b.s, &Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0]]), 1e-14);
        assert!(b.residuals.pass);

        let i3 = Matrix::identity(3);
        let choice = ComplementChoice::orthogonal(&i3, TOL).unwrap();
        assert_eq!(choice.w.dim(), 0);
        assert_close(&build_gi(&i3, &choice).unwrap().s, &i3, 1e-15);
    }

    #[test]
    fn build_gi_rank_zero() {
        let z = Matrix::zeros(2, 3);
        let b = build_gi(&z, &ComplementChoice::orthogonal(&z, TOL).unwrap()).unwrap();
        assert_eq!(b.s, Matrix::zeros(3, 2));
        assert_eq!(b.p, Matrix::identity(3));
        assert_eq!(b.q, Matrix::zeros(2, 2));
        assert_eq!(b.rank, 0);
    }

    #[test]
    fn build_gi_rejects_bad_choice() {
        let t = Matrix::from_diag(&[1.0, 0.0]);
        let choice = ComplementChoice::new(line(&[0.0, 1.0]), line(&[0.0, 1.0]));
        match build_gi(&t, &choice) {
            Err(Error::Complement { witness: Some(w), .. }) => {
                assert!((w[1] - 1.0).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
        let choice = ComplementChoice::new(line(&[1.0, 0.0, 0.0]), line(&[0.0, 1.0]));
        assert!(matches!(build_gi(&t, &choice), Err(Error::Dimension(_))));
    }

    #[test]
    fn moore_penrose_examples() {
        let b = moore_penrose(&Matrix::from_diag(&[2.0, 0.0])).unwrap();
        assert_close(&b.s, &Matrix::from_diag(&[0.5, 0.0]), 1e-15);
        let b = moore_penrose(&Matrix::from_rows(&[&[1.0], &[1.0]])).unwrap();
        assert_close(&b.s, &Matrix::from_rows(&[&[0.5, 0.5]]), 1e-15);
        let b = moore_penrose(&Matrix::zeros(3, 2)).unwrap();
        assert_eq!(b.s, Matrix::zeros(2, 3));
    }

    #[test]
    fn verify_gi_examples() {
        let t = Matrix::from_diag(&[1.0, 0.0]);
        let r = verify_gi(&t, &t, 1e-10).unwrap();
        assert_eq!((r.r1, r.r2, r.idem_p, r.idem_q), (0.0, 0.0, 0.0, 0.0));
        assert!(r.pass);
        let s = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(verify_gi(&t, &s, 1e-10).unwrap().pass);
        let r = verify_gi(&Matrix::from_diag(&[1.0, 0.5]), &t, 1e-10).unwrap();
        assert!((r.r1 - 0.5).abs() < 1e-15);
        assert!(!r.pass);
        assert!(verify_gi(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3), 1e-10).is_err());
    }

    #[test]
    fn norm_c_examples() {
        let t = Matrix::from_diag(&[1.0, 0.0]);
        assert!((norm_c(&moore_penrose(&t).unwrap()) - 1.0).abs() < 1e-15);
        // Q = [[1,1],[0,0]] arises from T = e1 e1^T with W = span{(1,-1)}
        let choice = ComplementChoice::new(line(&[1.0, 0.0]), line(&[1.0, -1.0]));
        let b = build_gi(&t, &choice).unwrap();
        assert_close(&b.q, &Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 0.0]]), 1e-14);
        assert!((norm_c(&b) - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(norm_c(&moore_penrose(&Matrix::zeros(2, 2)).unwrap()), 0.0);
    }
}
