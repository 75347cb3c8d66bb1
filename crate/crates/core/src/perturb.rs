//! Stable perturbations `T̄ = T + δT` of an operator with a generalized
//! inverse `S = T⁺`.
//!
//! Everything hangs off the two carrier maps `W_Y = I + δT S` (on the
//! codomain) and `W_X = I + S δT` (on the domain). When `W_Y` is bijective,
//! `G = S W_Y⁻¹ = W_X⁻¹ S`, and `G` is a generalized inverse of `T̄` exactly
//! when `R(T̄) ∩ N(S) = {0}`. Each verdict below is reported as a
//! [`Decision`] carrying the numeric margin that backs it, so that
//! near-singular calls can be audited or filtered.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dense::{singular_extremes, solve_square_with, svd};
use crate::error::{Error, Result};
use crate::geninv::{norm_c, verify_gi, GiBundle, GiResiduals};
use crate::matrix::{norm, Matrix};
use crate::subspace::{gaussian_matrix, Subspace, EQUALITY_TOL};
use crate::DEFAULT_TOL;

/// Report schema identifier.
pub const SCHEMA: &str = "stabgi/1";

/// Tolerance for identities that mix several products (`G` two ways,
/// perturbed projectors).
pub const IDENTITY_TOL: f64 = 1e-9;

/// Tolerance for the explicit carrier-inverse identity.
pub const INVERSE_IDENTITY_TOL: f64 = 1e-8;

/// A scalar backing a decision and the threshold it was compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub value: f64,
    pub threshold: f64,
}

impl Margin {
    pub fn new(value: f64, threshold: f64) -> Self {
        Self { value, threshold }
    }

    /// `|ln(value / threshold)|`; infinite for a zero value.
    fn log_gap(&self) -> f64 {
        if self.value <= 0.0 || self.threshold <= 0.0 {
            f64::INFINITY
        } else {
            (self.value / self.threshold).ln().abs()
        }
    }

    /// Within a factor of ten of the threshold on either side.
    pub fn is_borderline(&self) -> bool {
        self.value > self.threshold / 10.0 && self.value < self.threshold * 10.0
    }

    fn most_critical(margins: &[Margin]) -> Margin {
        margins
            .iter()
            .copied()
            .min_by(|a, b| a.log_gap().total_cmp(&b.log_gap()))
            .unwrap_or(Margin::new(1.0, 1.0))
    }
}

/// A boolean verdict with the most borderline margin among the numeric
/// tests it depends on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub value: bool,
    pub margin: Margin,
    /// A vector exhibiting the failure of a set-theoretic condition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

impl Decision {
    fn new(value: bool, margins: &[Margin], witness: Option<Vec<f64>>) -> Self {
        Self {
            value,
            margin: Margin::most_critical(margins),
            witness,
        }
    }
}

/// Core subspaces of a perturbed system, computed once.
#[derive(Debug, Clone)]
struct CoreSubspaces {
    null_t: Subspace,
    range_t: Subspace,
    range_s: Subspace,
    null_s: Subspace,
    range_tbar: Subspace,
    null_tbar: Subspace,
}

/// `(T, S, δT)` together with `T̄` and the carrier maps.
#[derive(Debug, Clone)]
pub struct PerturbedSystem {
    bundle: GiBundle,
    dt: Matrix,
    tbar: Matrix,
    wy: Matrix,
    wx: Matrix,
    tol: f64,
    spaces: CoreSubspaces,
}

impl PerturbedSystem {
    pub fn new(bundle: GiBundle, dt: Matrix) -> Result<Self> {
        Self::with_tol(bundle, dt, DEFAULT_TOL)
    }

    /// `tol` is the relative threshold for rank, bijectivity and residual
    /// decisions.
    pub fn with_tol(bundle: GiBundle, dt: Matrix, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
        }
        if dt.shape() != bundle.t.shape() {
            return Err(Error::Dimension(format!(
                "dT is {}x{} but T is {}x{}",
                dt.rows(),
                dt.cols(),
                bundle.t.rows(),
                bundle.t.cols()
            )));
        }
        let t = &bundle.t;
        let s = &bundle.s;
        let tbar = t + &dt;
        let wy = &Matrix::identity(t.rows()) + &(&dt * s);
        let wx = &Matrix::identity(t.cols()) + &(s * &dt);
        let spaces = CoreSubspaces {
            null_t: Subspace::null_of(t, tol)?,
            range_t: Subspace::range_of(t, tol)?,
            range_s: Subspace::range_of(s, tol)?,
            null_s: Subspace::null_of(s, tol)?,
            range_tbar: Subspace::range_of(&tbar, tol)?,
            null_tbar: Subspace::null_of(&tbar, tol)?,
        };
        Ok(Self {
            bundle,
            dt,
            tbar,
            wy,
            wx,
            tol,
            spaces,
        })
    }

    pub fn bundle(&self) -> &GiBundle {
        &self.bundle
    }

    pub fn t(&self) -> &Matrix {
        &self.bundle.t
    }

    pub fn s(&self) -> &Matrix {
        &self.bundle.s
    }

    pub fn dt(&self) -> &Matrix {
        &self.dt
    }

    pub fn tbar(&self) -> &Matrix {
        &self.tbar
    }

    /// `I_Y + δT S`
    pub fn wy(&self) -> &Matrix {
        &self.wy
    }

    /// `I_X + S δT`
    pub fn wx(&self) -> &Matrix {
        &self.wx
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn null_t(&self) -> &Subspace {
        &self.spaces.null_t
    }

    pub fn range_t(&self) -> &Subspace {
        &self.spaces.range_t
    }

    pub fn range_s(&self) -> &Subspace {
        &self.spaces.range_s
    }

    pub fn null_s(&self) -> &Subspace {
        &self.spaces.null_s
    }

    pub fn range_tbar(&self) -> &Subspace {
        &self.spaces.range_tbar
    }

    pub fn null_tbar(&self) -> &Subspace {
        &self.spaces.null_tbar
    }

    fn tol_margin(&self, sub: &Subspace) -> Margin {
        Margin::new(sub.margin(), self.tol)
    }

    fn invert(&self, a: &Matrix) -> Result<Matrix> {
        solve_square_with(a, &Matrix::identity(a.rows()), self.tol)
    }

    /// `R(T̄) ∩ N(S) = {0}`, the stability condition.
    pub fn stability(&self) -> Result<Decision> {
        let inter = self.range_tbar().intersect(self.null_s())?;
        Ok(Decision::new(
            inter.subspace.is_trivial(),
            &[
                Margin::new(inter.margin, self.tol),
                self.tol_margin(self.range_tbar()),
                self.tol_margin(self.null_s()),
            ],
            inter.witness,
        ))
    }
}

/// Bijectivity of both carrier maps and the explicit inverse identity
/// `W_X⁻¹ = I - S W_Y⁻¹ δT`.
#[derive(Debug, Clone, Serialize)]
pub struct BijectivityCertificate {
    pub bij_y: bool,
    pub bij_x: bool,
    pub sigma_min_wy: f64,
    pub sigma_max_wy: f64,
    pub sigma_min_wx: f64,
    pub sigma_max_wx: f64,
    /// `W_Y⁻¹` when `bij_y`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Matrix>,
    /// `W_X⁻¹` when `bij_x`.
    #[serde(skip)]
    pub wx_inv: Option<Matrix>,
    /// `||W_X⁻¹ - (I - S C δT)||` when both maps are bijective.
    pub inverse_identity_residual: Option<f64>,
    /// Residual within `1e-8 (1 + ||W_X⁻¹||)`; vacuously true otherwise.
    pub inverse_identity_ok: bool,
    pub agree: bool,
}

impl BijectivityCertificate {
    pub fn margin_y(&self, tol: f64) -> Margin {
        Margin::new(ratio(self.sigma_min_wy, self.sigma_max_wy), tol)
    }

    pub fn margin_x(&self, tol: f64) -> Margin {
        Margin::new(ratio(self.sigma_min_wx, self.sigma_max_wx), tol)
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

pub fn bijectivity_pair(sys: &PerturbedSystem) -> Result<BijectivityCertificate> {
    let (smax_y, smin_y) = singular_extremes(sys.wy());
    let (smax_x, smin_x) = singular_extremes(sys.wx());
    let bij_y = smin_y > sys.tol * smax_y;
    let bij_x = smin_x > sys.tol * smax_x;
    let c = if bij_y { Some(sys.invert(sys.wy())?) } else { None };
    let wx_inv = if bij_x { Some(sys.invert(sys.wx())?) } else { None };
    let (residual, ok) = match (&c, &wx_inv) {
        (Some(_), Some(wxi)) => {
            // W_Y⁻¹ δT by a solve: multiplying by the explicit inverse loses
            // accuracy when W_Y is poorly conditioned
            let z = solve_square_with(sys.wy(), sys.dt(), sys.tol)?;
            let formula = &Matrix::identity(sys.t().cols()) - &(sys.s() * &z);
            let r = (wxi - &formula).norm2();
            (Some(r), r <= INVERSE_IDENTITY_TOL * (1.0 + wxi.norm2()))
        }
        _ => (None, true),
    };
    Ok(BijectivityCertificate {
        bij_y,
        bij_x,
        sigma_min_wy: smin_y,
        sigma_max_wy: smax_y,
        sigma_min_wx: smin_x,
        sigma_max_wx: smax_x,
        c,
        wx_inv,
        inverse_identity_residual: residual,
        inverse_identity_ok: ok,
        agree: bij_y == bij_x,
    })
}

/// The three equivalent conditions on the carrier map `W_Y`.
#[derive(Debug, Clone, Serialize)]
pub struct Dl1Conditions {
    /// `W_Y` is bijective.
    pub carrier_bijective: Decision,
    /// `W_X` restricted to `R(S)` is bijective on `R(S)`.
    pub restricted_bijective: Decision,
    /// `T̄R(S) + N(S)` is the whole codomain, that sum is direct, and
    /// `N(T̄) ∩ R(S) = {0}`.
    pub decomposition: Decision,
}

impl Dl1Conditions {
    pub fn values(&self) -> [bool; 3] {
        [
            self.carrier_bijective.value,
            self.restricted_bijective.value,
            self.decomposition.value,
        ]
    }

    pub fn agree(&self) -> bool {
        let v = self.values();
        v.iter().all(|&b| b == v[0])
    }
}

pub fn dl1_conditions(sys: &PerturbedSystem) -> Result<Dl1Conditions> {
    let cert = bijectivity_pair(sys)?;
    let tol = sys.tol;
    let carrier_bijective = Decision::new(cert.bij_y, &[cert.margin_y(tol)], None);

    let range_s = sys.range_s();
    let restricted_bijective = if range_s.is_trivial() {
        Decision::new(true, &[sys.tol_margin(range_s)], None)
    } else {
        let b = range_s.basis();
        let k = &(&b.transpose() * sys.wx()) * b;
        let (_, smin) = singular_extremes(&k);
        let threshold = tol * cert.sigma_max_wx;
        Decision::new(
            smin > threshold,
            &[
                Margin::new(ratio(smin, cert.sigma_max_wx), tol),
                sys.tol_margin(range_s),
            ],
            None,
        )
    };

    let image = Subspace::span(&(sys.tbar() * range_s.basis()), tol)?;
    let sum = image.sum(sys.null_s())?;
    let direct = image.intersect(sys.null_s())?;
    let kernel = sys.null_tbar().intersect(range_s)?;
    let full = sum.dim() == sys.t().rows();
    let decomposition = Decision::new(
        full && direct.subspace.is_trivial() && kernel.subspace.is_trivial(),
        &[
            Margin::new(image.margin(), tol),
            Margin::new(sum.margin(), tol),
            Margin::new(direct.margin, tol),
            Margin::new(kernel.margin, tol),
            sys.tol_margin(range_s),
            sys.tol_margin(sys.null_s()),
            sys.tol_margin(sys.null_tbar()),
        ],
        direct.witness.or(kernel.witness),
    );
    Ok(Dl1Conditions {
        carrier_bijective,
        restricted_bijective,
        decomposition,
    })
}

/// `G = S W_Y⁻¹`.
pub fn compute_g(sys: &PerturbedSystem) -> Result<Matrix> {
    let c = sys.invert(sys.wy())?;
    Ok(sys.s() * &c)
}

/// `||S W_Y⁻¹ - W_X⁻¹ S||`, the two expressions for `G`.
pub fn g_two_formula_residual(sys: &PerturbedSystem) -> Result<f64> {
    let left = compute_g(sys)?;
    let right = &sys.invert(sys.wx())? * sys.s();
    Ok((&left - &right).norm2())
}

/// The five conditions equivalent to stability under bijectivity of `W_Y`.
#[derive(Debug, Clone, Serialize)]
pub struct Dl2Conditions {
    /// `R(T̄) ∩ N(S) = {0}`.
    pub stable: Decision,
    /// `G` is a generalized inverse of `T̄` with `R(G) = R(S)`, `N(G) = N(S)`.
    pub g_is_inverse: Decision,
    /// `W_Y⁻¹ T̄` maps `N(T)` into `R(T)`.
    pub maps_null_into_range: Decision,
    /// `W_Y⁻¹ R(T̄) = R(T)`.
    pub range_transport: Decision,
    /// `W_X⁻¹ N(T) = N(T̄)`.
    pub null_transport: Decision,
    /// Residuals of `G` against `T̄`.
    pub g_residuals: GiResiduals,
}

impl Dl2Conditions {
    pub fn values(&self) -> [bool; 5] {
        [
            self.stable.value,
            self.g_is_inverse.value,
            self.maps_null_into_range.value,
            self.range_transport.value,
            self.null_transport.value,
        ]
    }

    pub fn agree(&self) -> bool {
        let v = self.values();
        v.iter().all(|&b| b == v[0])
    }
}

fn distance_margins(d: crate::subspace::SubspaceDistance) -> Margin {
    if d.dims_match {
        Margin::new(d.value, EQUALITY_TOL)
    } else {
        Margin::new(1.0, EQUALITY_TOL)
    }
}

pub fn dl2_conditions(sys: &PerturbedSystem) -> Result<Dl2Conditions> {
    let cert = bijectivity_pair(sys)?;
    let Some(c) = cert.c.as_ref() else {
        return Err(Error::Precondition(
            "I + dT S is not bijective; the stability equivalences assume it is".into(),
        ));
    };
    let tol = sys.tol;
    let stable = sys.stability()?;

    // (2) G = S C is a generalized inverse of T̄ with the ranges of S
    let g = sys.s() * c;
    let g_residuals = verify_gi(sys.tbar(), &g, tol)?;
    let range_g = Subspace::range_of(&g, tol)?;
    let null_g = Subspace::null_of(&g, tol)?;
    let d_range = range_g.distance(sys.range_s());
    let d_null = null_g.distance(sys.null_s());
    let g_is_inverse = Decision::new(
        g_residuals.pass && d_range.is_equal() && d_null.is_equal(),
        &[
            Margin::new(g_residuals.worst_relative(), tol),
            distance_margins(d_range),
            distance_margins(d_null),
            Margin::new(range_g.margin(), tol),
            Margin::new(null_g.margin(), tol),
        ],
        None,
    );

    // (3) C T̄ N(T) ⊆ R(T)
    let ctbar = c * sys.tbar();
    let maps_null_into_range = if sys.null_t().is_trivial() {
        Decision::new(true, &[sys.tol_margin(sys.null_t())], None)
    } else {
        let z = &ctbar * sys.null_t().basis();
        let outside = &z - &(&sys.range_t().projector() * &z);
        let scale = 1.0 + c.norm2() * sys.tbar().norm2();
        let resid = outside.norm2() / scale;
        let witness = (resid > EQUALITY_TOL).then(|| {
            let cols = outside.columns();
            let best = cols
                .iter()
                .enumerate()
                .max_by(|a, b| norm(a.1).total_cmp(&norm(b.1)))
                .map(|(j, _)| j)
                .unwrap_or(0);
            let v = sys.null_t().basis().column(best);
            v
        });
        Decision::new(
            resid <= EQUALITY_TOL,
            &[
                Margin::new(resid, EQUALITY_TOL),
                sys.tol_margin(sys.null_t()),
                sys.tol_margin(sys.range_t()),
            ],
            witness,
        )
    };

    // (4) C R(T̄) = R(T)
    let transported = Subspace::range_of(&ctbar, tol)?;
    let d4 = transported.distance(sys.range_t());
    let range_transport = Decision::new(
        d4.is_equal(),
        &[
            distance_margins(d4),
            Margin::new(transported.margin(), tol),
            sys.tol_margin(sys.range_t()),
        ],
        None,
    );

    // (5) W_X⁻¹ N(T) = N(T̄)
    let null_transport = match cert.wx_inv.as_ref() {
        Some(wxi) => {
            let moved = if sys.null_t().is_trivial() {
                Subspace::trivial(sys.t().cols(), tol)
            } else {
                Subspace::span(&(wxi * sys.null_t().basis()), tol)?
            };
            let d5 = moved.distance(sys.null_tbar());
            Decision::new(
                d5.is_equal(),
                &[
                    distance_margins(d5),
                    Margin::new(moved.margin(), tol),
                    sys.tol_margin(sys.null_t()),
                    sys.tol_margin(sys.null_tbar()),
                ],
                None,
            )
        }
        None => Decision::new(false, &[cert.margin_x(tol)], None),
    };

    Ok(Dl2Conditions {
        stable,
        g_is_inverse,
        maps_null_into_range,
        range_transport,
        null_transport,
        g_residuals,
    })
}

/// The four subspace conditions around the decompositions
/// `R^n = N(T̄) + R(S)` and `R^m = N(S) + R(T̄)`, and the two implications
/// linking them to bijectivity and stability.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionCheck {
    pub null_tbar_meets_range_s_trivially: Decision,
    pub range_tbar_meets_null_s_trivially: Decision,
    pub domain_decomposition: Decision,
    pub codomain_decomposition: Decision,
    pub bij_y: bool,
    pub stable: bool,
    /// all four conditions imply `W_Y` bijective
    pub implication_1_ok: bool,
    /// bijective and stable imply both decompositions
    pub implication_2_ok: bool,
}

impl DecompositionCheck {
    pub fn four_conditions(&self) -> [bool; 4] {
        [
            self.null_tbar_meets_range_s_trivially.value,
            self.range_tbar_meets_null_s_trivially.value,
            self.domain_decomposition.value,
            self.codomain_decomposition.value,
        ]
    }
}

pub fn decomposition_check(sys: &PerturbedSystem) -> Result<DecompositionCheck> {
    let tol = sys.tol;
    let cert = bijectivity_pair(sys)?;
    let k = sys.null_tbar().intersect(sys.range_s())?;
    let null_tbar_meets_range_s_trivially = Decision::new(
        k.subspace.is_trivial(),
        &[
            Margin::new(k.margin, tol),
            sys.tol_margin(sys.null_tbar()),
            sys.tol_margin(sys.range_s()),
        ],
        k.witness,
    );
    let range_tbar_meets_null_s_trivially = sys.stability()?;
    let dom = sys.null_tbar().sum(sys.range_s())?;
    let domain_decomposition = Decision::new(
        dom.dim() == sys.t().cols(),
        &[
            Margin::new(dom.margin(), tol),
            sys.tol_margin(sys.null_tbar()),
            sys.tol_margin(sys.range_s()),
        ],
        None,
    );
    let cod = sys.null_s().sum(sys.range_tbar())?;
    let codomain_decomposition = Decision::new(
        cod.dim() == sys.t().rows(),
        &[
            Margin::new(cod.margin(), tol),
            sys.tol_margin(sys.null_s()),
            sys.tol_margin(sys.range_tbar()),
        ],
        None,
    );
    let all_four = null_tbar_meets_range_s_trivially.value
        && range_tbar_meets_null_s_trivially.value
        && domain_decomposition.value
        && codomain_decomposition.value;
    let stable = range_tbar_meets_null_s_trivially.value;
    Ok(DecompositionCheck {
        implication_1_ok: !all_four || cert.bij_y,
        implication_2_ok: !(cert.bij_y && stable)
            || (domain_decomposition.value && codomain_decomposition.value),
        null_tbar_meets_range_s_trivially,
        range_tbar_meets_null_s_trivially,
        domain_decomposition,
        codomain_decomposition,
        bij_y: cert.bij_y,
        stable,
    })
}

/// Idempotents attached to `G` as a generalized inverse of `T̄`, with the
/// checks that tie them to `T̄`.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbedProjectors {
    /// `W_X⁻¹ P W_X`, onto `N(T̄)`.
    pub pbar: Matrix,
    /// `W_Y Q W_Y⁻¹`, onto `R(T̄)`.
    pub qbar: Matrix,
    /// `(1 + ||T̄||)(1 + ||G||)`
    pub scale: f64,
    /// `||P̄ - (I - G T̄)||`
    pub pbar_identity_residual: f64,
    /// `||Q̄ - T̄ G||`
    pub qbar_identity_residual: f64,
    pub pbar_idempotency: f64,
    pub qbar_idempotency: f64,
    /// Gap between `R(P̄)` and `N(T̄)`.
    pub pbar_range_distance: f64,
    /// Gap between `R(Q̄)` and `R(T̄)`.
    pub qbar_range_distance: f64,
    pub g_residuals: GiResiduals,
}

impl PerturbedProjectors {
    /// Every identity holds at its tolerance.
    pub fn all_ok(&self) -> bool {
        let b = IDENTITY_TOL * self.scale;
        self.pbar_identity_residual <= b
            && self.qbar_identity_residual <= b
            && self.pbar_idempotency <= b
            && self.qbar_idempotency <= b
            && self.pbar_range_distance <= EQUALITY_TOL
            && self.qbar_range_distance <= EQUALITY_TOL
            && self.g_residuals.pass
    }
}

pub fn perturbed_projectors(sys: &PerturbedSystem) -> Result<PerturbedProjectors> {
    let tol = sys.tol;
    let cert = bijectivity_pair(sys)?;
    let (Some(c), Some(wxi)) = (cert.c.as_ref(), cert.wx_inv.as_ref()) else {
        return Err(Error::Precondition("carrier maps are not bijective".into()));
    };
    if !sys.stability()?.value {
        return Err(Error::Precondition(
            "perturbation is not stable: R(T̄) meets N(S)".into(),
        ));
    }
    let g = sys.s() * c;
    let pbar = &(wxi * &sys.bundle.p) * sys.wx();
    let qbar = &(sys.wy() * &sys.bundle.q) * c;
    let n = sys.t().cols();
    let scale = (1.0 + sys.tbar().norm2()) * (1.0 + g.norm2());
    let gt = &g * sys.tbar();
    let tg = sys.tbar() * &g;
    let range_dist = |m: &Matrix, target: &Subspace| -> Result<f64> {
        let d = Subspace::range_of(m, tol)?.distance(target);
        Ok(if d.dims_match { d.value } else { 1.0 })
    };
    Ok(PerturbedProjectors {
        pbar_identity_residual: (&pbar - &(&Matrix::identity(n) - &gt)).norm2(),
        qbar_identity_residual: (&qbar - &tg).norm2(),
        pbar_idempotency: (&(&pbar * &pbar) - &pbar).norm2(),
        qbar_idempotency: (&(&qbar * &qbar) - &qbar).norm2(),
        pbar_range_distance: range_dist(&pbar, sys.null_tbar())?,
        qbar_range_distance: range_dist(&qbar, sys.range_tbar())?,
        g_residuals: verify_gi(sys.tbar(), &g, tol)?,
        pbar,
        qbar,
        scale,
    })
}

/// `W_Y S W_Y⁻¹`, the codomain projector built with `T⁺` in
/// place of `T T⁺`. Only shape-consistent for square `T`; `None` otherwise.
pub fn alternative_qbar(sys: &PerturbedSystem) -> Result<Option<Matrix>> {
    if !sys.t().is_square() {
        return Ok(None);
    }
    let c = sys.invert(sys.wy())?;
    Ok(Some(&(sys.wy() * sys.s()) * &c))
}

/// Comparison of the alternative and the corrected codomain projector against
/// `T̄ G`.
#[derive(Debug, Clone, Serialize)]
pub struct QbarDiscrepancy {
    pub shape_consistent: bool,
    /// `||W_Y S W_Y⁻¹ - T̄ G||`, when square.
    pub alternative_residual: Option<f64>,
    /// `||W_Y Q W_Y⁻¹ - T̄ G||`
    pub corrected_residual: f64,
    /// Idempotency defect of the alternative form, when square.
    pub alternative_idempotency: Option<f64>,
}

pub fn qbar_discrepancy(sys: &PerturbedSystem) -> Result<QbarDiscrepancy> {
    let proj = perturbed_projectors(sys)?;
    let g = compute_g(sys)?;
    let tg = sys.tbar() * &g;
    let alt = alternative_qbar(sys)?;
    Ok(QbarDiscrepancy {
        shape_consistent: alt.is_some(),
        alternative_residual: alt.as_ref().map(|p| (p - &tg).norm2()),
        alternative_idempotency: alt.as_ref().map(|p| (&(p * p) - p).norm2()),
        corrected_residual: proj.qbar_identity_residual,
    })
}

/// `a ||S|| + b ||T S|| < 1`.
pub fn norm_condition(sys: &PerturbedSystem, a: f64, b: f64) -> Result<bool> {
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Input(format!(
            "relative-bound constants must be nonnegative, got a={a}, b={b}"
        )));
    }
    Ok(a * sys.s().norm2() + b * norm_c(sys.bundle()) < 1.0)
}

/// Result of the multi-start search for the smallest `a` with
/// `||δT x|| <= a ||x|| + b ||T x||`.
#[derive(Debug, Clone, Serialize)]
pub struct MinimalA {
    /// Best value of `max(0, ||δT x|| - b ||T x||)` found on the unit sphere.
    pub value: f64,
    /// Maximizer found, or `None` when the clamp at zero was active.
    pub argmax: Option<Vec<f64>>,
    /// Always true: the search certifies a lower bound only.
    pub heuristic: bool,
}

pub const MINIMAL_A_DEFAULT_STARTS: usize = 64;
const ASCENT_MAX_ITERS: usize = 10_000;
const ASCENT_MIN_GAIN: f64 = 1e-12;

/// Smallest `a` for relative bound `b`, by projected gradient ascent of
/// `||δT x|| - b ||T x||` over the unit sphere. Starts from the right
/// singular vectors of `δT`, the coordinate axes, and `starts` seeded random
/// directions.
pub fn minimal_a(sys: &PerturbedSystem, b: f64, starts: usize, seed: u64) -> Result<MinimalA> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::Input(format!("b must be nonnegative, got {b}")));
    }
    Ok(sphere_maximize(sys.dt(), sys.t(), b, starts, seed))
}

pub(crate) fn sphere_maximize(dt: &Matrix, t: &Matrix, b: f64, starts: usize, seed: u64) -> MinimalA {
    let n = t.cols();
    let dtd = &dt.transpose() * dt;
    let ttt = &t.transpose() * t;
    let objective = |x: &[f64]| norm(&dt.matvec(x)) - b * norm(&t.matvec(x));
    // value and gradient from the Gram matrices, two products per step
    let eval = |x: &[f64]| -> (f64, Vec<f64>) {
        let g1 = dtd.matvec(x);
        let g2 = ttt.matvec(x);
        let dx = crate::matrix::dot(x, &g1).max(0.0).sqrt();
        let tx = crate::matrix::dot(x, &g2).max(0.0).sqrt();
        let grad = (0..n)
            .map(|i| {
                let a = if dx > 0.0 { g1[i] / dx } else { 0.0 };
                let c = if tx > 0.0 { b * g2[i] / tx } else { 0.0 };
                a - c
            })
            .collect();
        (dx - b * tx, grad)
    };

    // deterministic starts: right singular vectors of δT and the coordinate
    // axes, then seeded random directions
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut initial: Vec<Vec<f64>> = svd(dt).v.columns();
    initial.extend(Matrix::identity(n).columns());
    for _ in 0..starts.max(1) {
        initial.push(gaussian_matrix(&mut rng, n, 1).column(0));
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_x: Option<Vec<f64>> = None;
    for draw in initial {
        let Some(mut x) = normalized(draw) else { continue };
        let (mut fx, mut g) = eval(&x);
        let mut step = 0.5;
        for _ in 0..ASCENT_MAX_ITERS {
            let radial = crate::matrix::dot(&g, &x);
            let tangent: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| gi - radial * xi).collect();
            let tn = norm(&tangent);
            if tn <= 1e-15 {
                break;
            }
            let cand: Vec<f64> = x
                .iter()
                .zip(&tangent)
                .map(|(xi, ti)| xi + step * ti / tn)
                .collect();
            let Some(cand) = normalized(cand) else { break };
            let (fc, gc) = eval(&cand);
            if fc > fx {
                let gain = fc - fx;
                x = cand;
                fx = fc;
                g = gc;
                step = (step * 1.5).min(1.0);
                if gain < ASCENT_MIN_GAIN {
                    break;
                }
            } else {
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
        }
        let fx = objective(&x);
        if fx > best {
            best = fx;
            best_x = Some(x);
        }
    }
    if best > 0.0 {
        MinimalA {
            value: best,
            argmax: best_x,
            heuristic: true,
        }
    } else {
        MinimalA {
            value: 0.0,
            argmax: None,
            heuristic: true,
        }
    }
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm(&v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

/// The generalized inverse `G` of `T̄`, reported even when uncertified.
#[derive(Debug, Clone, Serialize)]
pub struct GReport {
    pub matrix: Matrix,
    /// True iff the perturbation is stable and `G` passes `verify_gi`.
    pub certified: bool,
    pub residuals: GiResiduals,
    /// `||S W_Y⁻¹ - W_X⁻¹ S||`, when `W_X` is invertible.
    pub two_formula_residual: Option<f64>,
}

/// Full analysis of a perturbed system.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub tol: f64,
    pub rank_t: usize,
    pub rank_tbar: usize,
    pub bijectivity: BijectivityCertificate,
    pub dl1: Dl1Conditions,
    /// Present iff `W_Y` is bijective.
    pub dl2: Option<Dl2Conditions>,
    pub stable: Decision,
    pub decompositions: DecompositionCheck,
    /// Present iff `W_Y` is bijective.
    #[serde(rename = "G")]
    pub g: Option<GReport>,
    /// Present iff bijective and stable.
    #[serde(rename = "Pbar")]
    pub pbar: Option<Matrix>,
    #[serde(rename = "Qbar")]
    pub qbar: Option<Matrix>,
    pub projectors: Option<PerturbedProjectors>,
    pub c: f64,
    pub norm_tplus: f64,
    pub decision_margins: BTreeMap<String, Margin>,
}

impl AnalysisReport {
    /// True when no decision margin lies within a factor of ten of its
    /// threshold.
    pub fn is_decisive(&self) -> bool {
        self.decision_margins.values().all(|m| !m.is_borderline())
    }
}

/// Runs every check on `sys`.
pub fn analyze(sys: &PerturbedSystem) -> Result<AnalysisReport> {
    let tol = sys.tol;
    let cert = bijectivity_pair(sys)?;
    let dl1 = dl1_conditions(sys)?;
    let dl2 = if cert.bij_y {
        Some(dl2_conditions(sys)?)
    } else {
        None
    };
    let stable = sys.stability()?;
    let decompositions = decomposition_check(sys)?;

    let g = match cert.c.as_ref() {
        Some(c) => {
            let matrix = sys.s() * c;
            let residuals = verify_gi(sys.tbar(), &matrix, tol)?;
            let two_formula_residual = cert
                .wx_inv
                .as_ref()
                .map(|wxi| (&matrix - &(wxi * sys.s())).norm2());
            Some(GReport {
                certified: stable.value && residuals.pass,
                matrix,
                residuals,
                two_formula_residual,
            })
        }
        None => None,
    };
    let projectors = if cert.bij_y && cert.bij_x && stable.value {
        Some(perturbed_projectors(sys)?)
    } else {
        None
    };

    let mut margins = BTreeMap::new();
    margins.insert("bij_y".to_string(), cert.margin_y(tol));
    margins.insert("bij_x".to_string(), cert.margin_x(tol));
    for (name, d) in [
        ("dl1.carrier_bijective", &dl1.carrier_bijective),
        ("dl1.restricted_bijective", &dl1.restricted_bijective),
        ("dl1.decomposition", &dl1.decomposition),
        ("stable", &stable),
        (
            "decompositions.null_tbar_meets_range_s_trivially",
            &decompositions.null_tbar_meets_range_s_trivially,
        ),
        ("decompositions.domain_decomposition", &decompositions.domain_decomposition),
        ("decompositions.codomain_decomposition", &decompositions.codomain_decomposition),
    ] {
        margins.insert(name.to_string(), d.margin);
    }
    if let Some(d2) = &dl2 {
        for (name, d) in [
            ("dl2.stable", &d2.stable),
            ("dl2.g_is_inverse", &d2.g_is_inverse),
            ("dl2.maps_null_into_range", &d2.maps_null_into_range),
            ("dl2.range_transport", &d2.range_transport),
            ("dl2.null_transport", &d2.null_transport),
        ] {
            margins.insert(name.to_string(), d.margin);
        }
    }
    margins.insert("rank_t".to_string(), sys.tol_margin(sys.range_t()));
    margins.insert("rank_tbar".to_string(), sys.tol_margin(sys.range_tbar()));
    margins.insert("rank_s".to_string(), sys.tol_margin(sys.range_s()));

    Ok(AnalysisReport {
        schema: SCHEMA,
        rows: sys.t().rows(),
        cols: sys.t().cols(),
        tol,
        rank_t: sys.range_t().dim(),
        rank_tbar: sys.range_tbar().dim(),
        dl1,
        dl2,
        stable,
        decompositions,
        pbar: projectors.as_ref().map(|p| p.pbar.clone()),
        qbar: projectors.as_ref().map(|p| p.qbar.clone()),
        projectors,
        g,
        c: norm_c(sys.bundle()),
        norm_tplus: sys.s().norm2(),
        decision_margins: margins,
        bijectivity: cert,
    })
}
