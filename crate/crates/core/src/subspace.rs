//! Tolerance-aware subspace arithmetic on orthonormal bases.
//!
//! Every dimension decision is a rank decision on a matrix of stacked
//! orthonormal bases, so its singular values live in `[0, sqrt(2)]` and a
//! relative cutoff behaves like an absolute one. The singular value that
//! sat closest to the cutoff is kept as the decision margin.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::{rank_factorization, svd};
use crate::error::{Error, Result};
use crate::matrix::{norm, Matrix};

/// Equality threshold on the gap metric.
pub const EQUALITY_TOL: f64 = 1e-8;

/// Smallest acceptable singular value of `[B_U | B_C]` for a sampled
/// complement `C`.
const COMPLEMENT_CONDITIONING: f64 = 1e-3;
const COMPLEMENT_ATTEMPTS: usize = 100;

/// A linear subspace of `R^n` held as an orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Matrix,
    tol: f64,
    margin: f64,
}

/// Outcome of [`Subspace::intersect`].
#[derive(Debug, Clone)]
pub struct Intersection {
    pub subspace: Subspace,
    /// Unit vector in both subspaces, present iff the intersection is nontrivial.
    pub witness: Option<Vec<f64>>,
    /// Normalized singular value of `[B_U | -B_V]` nearest the cutoff.
    pub margin: f64,
}

/// Gap between two subspaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceDistance {
    /// Sine of the largest principal angle, or 1 when the dimensions differ.
    pub value: f64,
    pub dims_match: bool,
}

impl SubspaceDistance {
    pub fn is_equal(&self) -> bool {
        self.dims_match && self.value <= EQUALITY_TOL
    }
}

/// Detailed complement test, see [`Subspace::complement_check`].
#[derive(Debug, Clone)]
pub struct ComplementCheck {
    pub is_complement: bool,
    pub witness: Option<Vec<f64>>,
    /// `ambient - (dim U + dim V)`; zero for a complementary pair.
    pub deficit: i64,
    pub margin: f64,
}

impl Subspace {
    /// Wraps a basis already known to be orthonormal.
    ///
    /// Fails when `basis^T basis` departs from the identity by more than 1e-10.
    pub fn from_orthonormal(basis: Matrix, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        let gram = &basis.transpose() * &basis;
        let dev = (&gram - &Matrix::identity(basis.cols())).max_abs();
        if dev > 1e-10 {
            return Err(Error::Input(format!(
                "basis is not orthonormal (deviation {dev:e})"
            )));
        }
        if basis.cols() > basis.rows() {
            return Err(Error::Dimension("more basis vectors than ambient dimension".into()));
        }
        Ok(Self {
            ambient_dim: basis.rows(),
            basis,
            tol,
            margin: 1.0,
        })
    }

    /// Column space of `vectors`, with rank cutoff `tol * sigma_max`.
    pub fn span(vectors: &Matrix, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        let f = rank_factorization(vectors, Some(relative_cutoff(vectors, tol)))?;
        let margin = f.cutoff_margin();
        Ok(Self {
            ambient_dim: vectors.rows(),
            basis: f.range_basis,
            tol,
            margin,
        })
    }

    /// Range of `m` (alias of [`Subspace::span`]).
    pub fn range_of(m: &Matrix, tol: f64) -> Result<Self> {
        Self::span(m, tol)
    }

    /// Null space of `m`, with rank cutoff `tol * sigma_max`.
    pub fn null_of(m: &Matrix, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        let f = rank_factorization(m, Some(relative_cutoff(m, tol)))?;
        let margin = f.cutoff_margin();
        Ok(Self {
            ambient_dim: m.cols(),
            basis: f.null_basis,
            tol,
            margin,
        })
    }

    pub fn trivial(ambient_dim: usize, tol: f64) -> Self {
        Self {
            ambient_dim,
            basis: Matrix::zeros(ambient_dim, 0),
            tol,
            margin: 1.0,
        }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Self {
            ambient_dim,
            basis: Matrix::identity(ambient_dim),
            tol,
            margin: 1.0,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_trivial(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Normalized singular value nearest the cutoff when this subspace was
    /// computed from a matrix; 1 for subspaces given exactly.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Same subspace with a different decision tolerance.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Orthogonal projector `B B^T`.
    pub fn projector(&self) -> Matrix {
        &self.basis * &self.basis.transpose()
    }

    /// Norm of the component of `v` orthogonal to this subspace.
    pub fn residual(&self, v: &[f64]) -> f64 {
        let coeffs = self.basis.transpose().matvec(v);
        let proj = self.basis.matvec(&coeffs);
        let r: Vec<f64> = v.iter().zip(&proj).map(|(a, b)| a - b).collect();
        norm(&r)
    }

    fn same_ambient(&self, other: &Self) -> Result<()> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::Dimension(format!(
                "ambient dimensions {} and {} differ",
                self.ambient_dim, other.ambient_dim
            )));
        }
        Ok(())
    }

    /// `U + V`, decided under the coarser of the two tolerances.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.same_ambient(other)?;
        let tol = self.tol.max(other.tol);
        let stacked = self.basis.hcat(&other.basis)?;
        Self::span(&stacked, tol)
    }

    /// `U ∩ V` from the null space of `[B_U | -B_V]`.
    pub fn intersect(&self, other: &Self) -> Result<Intersection> {
        self.same_ambient(other)?;
        let tol = self.tol.max(other.tol);
        let stacked = self.basis.hcat(&(-&other.basis))?;
        let f = rank_factorization(&stacked, Some(relative_cutoff(&stacked, tol)))?;
        let margin = f.cutoff_margin();
        let k = self.dim();
        let d = f.null_basis.cols();
        if d == 0 {
            return Ok(Intersection {
                subspace: Self::trivial(self.ambient_dim, tol),
                witness: None,
                margin,
            });
        }
        // x-parts of the null vectors mapped through B_U
        let top = f.null_basis.take_rows(k);
        let images = &self.basis * &top;
        let dec = svd(&images);
        let basis = dec.u.select_columns(&(0..d).collect::<Vec<_>>());
        let witness = Some(canonical_sign(basis.column(0)));
        Ok(Intersection {
            subspace: Self {
                ambient_dim: self.ambient_dim,
                basis,
                tol,
                margin,
            },
            witness,
            margin,
        })
    }

    pub fn complement_check(&self, other: &Self) -> Result<ComplementCheck> {
        let inter = self.intersect(other)?;
        let deficit = self.ambient_dim as i64 - (self.dim() + other.dim()) as i64;
        Ok(ComplementCheck {
            is_complement: inter.subspace.is_trivial() && deficit == 0,
            witness: inter.witness,
            deficit,
            margin: inter.margin,
        })
    }

    /// True iff `U ∩ V = {0}` and `dim U + dim V = ambient_dim`.
    pub fn is_complement(&self, other: &Self) -> Result<bool> {
        Ok(self.complement_check(other)?.is_complement)
    }

    /// Gap metric: sine of the largest principal angle.
    pub fn distance(&self, other: &Self) -> SubspaceDistance {
        if self.ambient_dim != other.ambient_dim || self.dim() != other.dim() {
            return SubspaceDistance {
                value: 1.0,
                dims_match: false,
            };
        }
        if self.dim() == 0 {
            return SubspaceDistance {
                value: 0.0,
                dims_match: true,
            };
        }
        let coeffs = &self.basis.transpose() * &other.basis;
        let resid = &other.basis - &(&self.basis * &coeffs);
        SubspaceDistance {
            value: resid.norm2().min(1.0),
            dims_match: true,
        }
    }

    /// `U^⊥`.
    pub fn orthogonal_complement(&self) -> Self {
        let k = self.dim();
        let n = self.ambient_dim;
        let basis = if k == 0 {
            Matrix::identity(n)
        } else {
            let v = svd(&self.basis.transpose()).v;
            v.select_columns(&(k..n).collect::<Vec<_>>())
        };
        Self {
            ambient_dim: n,
            basis,
            tol: self.tol,
            margin: 1.0,
        }
    }

    /// A seeded random complement of `U`.
    ///
    /// Draws `ambient - dim U` standard-normal vectors and redraws while the
    /// smallest singular value of `[B_U | C]` is below 1e-3.
    pub fn random_complement(&self, seed: u64) -> Result<Self> {
        let n = self.ambient_dim;
        let need = n - self.dim();
        if need == 0 {
            return Ok(Self::trivial(n, self.tol));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..COMPLEMENT_ATTEMPTS {
            let draw = gaussian_matrix(&mut rng, n, need);
            let dec = svd(&draw);
            if dec.sigma.last().copied().unwrap_or(0.0) <= 1e-8 * dec.sigma[0] {
                continue;
            }
            let candidate = dec.u;
            let stacked = self.basis.hcat(&candidate)?;
            let smin = crate::dense::singular_extremes(&stacked).1;
            if smin >= COMPLEMENT_CONDITIONING {
                return Ok(Self {
                    ambient_dim: n,
                    basis: candidate,
                    tol: self.tol,
                    margin: 1.0,
                });
            }
        }
        Err(Error::Sampling {
            attempts: COMPLEMENT_ATTEMPTS,
            reason: "no well-conditioned complement drawn".into(),
        })
    }
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let lead = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

pub(crate) fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::new(rows, cols, data).expect("finite normal draws")
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("tolerance must be positive, got {tol}")))
    }
}

fn relative_cutoff(m: &Matrix, tol: f64) -> f64 {
    let smax = m.norm2();
    (tol * smax).max(f64::MIN_POSITIVE)
}
