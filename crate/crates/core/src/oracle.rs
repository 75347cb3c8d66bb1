//! Seeded random perturbed systems in controlled regimes, and the battery
//! that checks every equivalence and identity on them.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geninv::{build_gi, norm_c, ComplementChoice, GI_RESIDUAL_TOL};
use crate::matrix::Matrix;
use crate::perturb::{
    analyze, qbar_discrepancy, AnalysisReport, PerturbedSystem, IDENTITY_TOL, SCHEMA,
};
use crate::subspace::{gaussian_matrix, Subspace, EQUALITY_TOL};
use crate::DEFAULT_TOL;

pub const MAX_DIM: usize = 12;
const RANK_REDRAWS: usize = 100;

/// How `δT` is drawn relative to `T` and its complements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `δT ∝ Q E + T F`: range stays inside `R(T)`, always stable.
    StableSmall,
    /// `δT ∝ (I - Q) E`: pushes the range out of `R(T)`.
    RankIncreasing,
    /// `δT ∝ (I - Q) E P`: maps `N(T)` into `N(T⁺)`.
    NullHitting,
    ZeroPerturbation,
    /// Square invertible `T`, arbitrary small `δT`.
    FullRank,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::StableSmall,
        Regime::RankIncreasing,
        Regime::NullHitting,
        Regime::ZeroPerturbation,
        Regime::FullRank,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Regime::StableSmall => "stable-small",
            Regime::RankIncreasing => "rank-increasing",
            Regime::NullHitting => "null-hitting",
            Regime::ZeroPerturbation => "zero-perturbation",
            Regime::FullRank => "full-rank",
        }
    }

    fn needs_deficiency(&self) -> bool {
        matches!(self, Regime::RankIncreasing | Regime::NullHitting)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown regime '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplementMode {
    Orthogonal,
    RandomOblique,
}

/// Parameters of one random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub regime: Regime,
    pub complement_mode: ComplementMode,
    pub seed: u64,
    pub scale: f64,
}

impl InstanceSpec {
    pub fn new(m: usize, n: usize, r: usize, regime: Regime, seed: u64) -> Self {
        Self {
            m,
            n,
            r,
            regime,
            complement_mode: ComplementMode::Orthogonal,
            seed,
            scale: 0.1,
        }
    }

    pub fn with_mode(mut self, mode: ComplementMode) -> Self {
        self.complement_mode = mode;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    fn validate(&self) -> Result<()> {
        let (m, n, r) = (self.m, self.n, self.r);
        if m == 0 || n == 0 || m > MAX_DIM || n > MAX_DIM {
            return Err(Error::Input(format!("dimensions {m}x{n} outside 1..={MAX_DIM}")));
        }
        if r > m.min(n) {
            return Err(Error::Input(format!("rank {r} exceeds min({m}, {n})")));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Input(format!("scale must be positive, got {}", self.scale)));
        }
        if self.regime == Regime::FullRank && !(m == n && r == m) {
            return Err(Error::Input("full-rank regime needs square T of full rank".into()));
        }
        if self.regime.needs_deficiency() && r >= m.min(n) {
            return Err(Error::Input(format!(
                "{} regime needs rank below min(m, n)",
                self.regime
            )));
        }
        Ok(())
    }
}

/// Draws `T = A B` of exact numerical rank `r`, its generalized inverse for
/// the requested complements, and `δT` for the regime.
pub fn random_instance(spec: &InstanceSpec) -> Result<PerturbedSystem> {
    spec.validate()?;
    let (m, n, r) = (spec.m, spec.n, spec.r);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let t = if r == 0 {
        Matrix::zeros(m, n)
    } else {
        let mut found = None;
        for _ in 0..RANK_REDRAWS {
            let a = gaussian_matrix(&mut rng, m, r);
            let b = gaussian_matrix(&mut rng, r, n);
            let t = &a * &b;
            if Subspace::range_of(&t, DEFAULT_TOL)?.dim() == r {
                found = Some(t);
                break;
            }
        }
        found.ok_or_else(|| Error::Sampling {
            attempts: RANK_REDRAWS,
            reason: format!("no {m}x{n} product of rank {r}"),
        })?
    };

    let choice = match spec.complement_mode {
        ComplementMode::Orthogonal => ComplementChoice::orthogonal(&t, DEFAULT_TOL)?,
        ComplementMode::RandomOblique => ComplementChoice::random(&t, rng.gen(), DEFAULT_TOL)?,
    };
    let bundle = build_gi(&t, &choice)?;

    let direction = match spec.regime {
        Regime::StableSmall => {
            let e = gaussian_matrix(&mut rng, m, n);
            let f = gaussian_matrix(&mut rng, n, n);
            &(&bundle.q * &e) + &(&t * &f)
        }
        Regime::RankIncreasing => {
            let e = gaussian_matrix(&mut rng, m, n);
            let comp = &Matrix::identity(m) - &bundle.q;
            &comp * &e
        }
        Regime::NullHitting => {
            let e = gaussian_matrix(&mut rng, m, n);
            let comp = &Matrix::identity(m) - &bundle.q;
            &(&comp * &e) * &bundle.p
        }
        Regime::ZeroPerturbation => Matrix::zeros(m, n),
        Regime::FullRank => gaussian_matrix(&mut rng, m, n),
    };
    let dt = perturbation_of_size(&direction, spec.scale, bundle.s.norm2());
    PerturbedSystem::new(bundle, dt)
}

/// `direction` rescaled to norm `scale / max(1, ||T⁺||)`, so that
/// `||δT T⁺|| <= scale` and the carrier maps stay well conditioned.
fn perturbation_of_size(direction: &Matrix, scale: f64, norm_s: f64) -> Matrix {
    let nd = direction.norm2();
    if nd == 0.0 {
        return direction.clone();
    }
    direction.scale(scale / (nd * norm_s.max(1.0)))
}

/// Keep `sys` unless some decision margin lies within a factor of ten of
/// its threshold.
pub fn margin_filter(sys: &PerturbedSystem) -> Result<bool> {
    Ok(analyze(sys)?.is_decisive())
}

/// One failed check, with enough context to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub index: usize,
    pub seed: u64,
    pub spec: Option<InstanceSpec>,
    pub condition: String,
    pub margins: BTreeMap<String, f64>,
}

/// Printed versus corrected codomain projector, aggregated.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QbarExperiment {
    pub instances: usize,
    /// Square instances, where the alternative form can be evaluated at all.
    pub square_instances: usize,
    /// Square instances where the alternative form equals `T̄ G` to 1e-9 scale.
    pub alternative_matches: usize,
    pub alternative_residual_min: Option<f64>,
    pub alternative_residual_max: Option<f64>,
    pub corrected_residual_max: f64,
}

/// Aggregated battery outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub schema: &'static str,
    pub seed: u64,
    pub dims_max: usize,
    pub instances_run: usize,
    pub instances_excluded: usize,
    pub dl1_agreement_count: usize,
    pub dl1_disagreement_count: usize,
    /// Kept instances with `W_Y` bijective.
    pub dl2_applicable: usize,
    pub dl2_agreement_count: usize,
    pub inverse_identity_agreement_count: usize,
    pub stable_count: usize,
    pub unstable_count: usize,
    pub stable_bijective_count: usize,
    /// Worst `build_gi` residual over scale, over every instance.
    pub gi_residual_max: f64,
    /// Worst gap-metric distance among subspace equalities that should hold.
    pub subspace_distance_max: f64,
    /// Worst projector identity residual over scale.
    pub projector_residual_max: f64,
    /// Smallest `c` over instances with nonzero `Q`.
    pub c_min_nonzero: Option<f64>,
    pub qbar_experiment: QbarExperiment,
    pub by_regime: BTreeMap<String, RegimeTally>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RegimeTally {
    pub run: usize,
    pub excluded: usize,
    pub stable: usize,
    pub unstable: usize,
}

impl BatteryReport {
    fn empty(seed: u64, dims_max: usize) -> Self {
        Self {
            schema: SCHEMA,
            seed,
            dims_max,
            instances_run: 0,
            instances_excluded: 0,
            dl1_agreement_count: 0,
            dl1_disagreement_count: 0,
            dl2_applicable: 0,
            dl2_agreement_count: 0,
            inverse_identity_agreement_count: 0,
            stable_count: 0,
            unstable_count: 0,
            stable_bijective_count: 0,
            gi_residual_max: 0.0,
            subspace_distance_max: 0.0,
            projector_residual_max: 0.0,
            c_min_nonzero: None,
            qbar_experiment: QbarExperiment::default(),
            by_regime: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    pub fn kept(&self) -> usize {
        self.instances_run - self.instances_excluded
    }

    pub fn exclusion_rate(&self) -> f64 {
        if self.instances_run == 0 {
            0.0
        } else {
            self.instances_excluded as f64 / self.instances_run as f64
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Battery configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryConfig {
    pub count: usize,
    pub dims_max: usize,
    pub seed: u64,
    pub regimes: Vec<Regime>,
    pub modes: Vec<ComplementMode>,
    pub scale: f64,
}

impl BatteryConfig {
    pub fn new(count: usize, dims_max: usize, seed: u64) -> Self {
        Self {
            count,
            dims_max,
            seed,
            regimes: Regime::ALL.to_vec(),
            modes: vec![ComplementMode::Orthogonal, ComplementMode::RandomOblique],
            scale: 0.1,
        }
    }

    pub fn with_regimes(mut self, regimes: Vec<Regime>) -> Self {
        self.regimes = regimes;
        self
    }

    /// Spec of instance `index`; regimes cycle fastest, complement modes next.
    pub fn instance_spec(&self, index: usize) -> Result<InstanceSpec> {
        let seed = instance_seed(self.seed, index);
        let regime = self.regimes[index % self.regimes.len()];
        let mode = self.modes[(index / self.regimes.len()) % self.modes.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
        let lo = if regime.needs_deficiency() { 2 } else { 1 };
        if self.dims_max < lo || self.dims_max > MAX_DIM {
            return Err(Error::Input(format!(
                "dims_max {} outside {lo}..={MAX_DIM} for the {regime} regime",
                self.dims_max
            )));
        }
        let m = rng.gen_range(lo..=self.dims_max);
        let n = if regime == Regime::FullRank {
            m
        } else {
            rng.gen_range(lo..=self.dims_max)
        };
        let k = m.min(n);
        let r = match regime {
            Regime::FullRank => k,
            Regime::RankIncreasing | Regime::NullHitting => rng.gen_range(0..k),
            _ => rng.gen_range(0..=k),
        };
        Ok(InstanceSpec {
            m,
            n,
            r,
            regime,
            complement_mode: mode,
            seed,
            scale: self.scale,
        })
    }
}

/// SplitMix64 step over `base + index`.
pub fn instance_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Everything measured on one instance.
#[derive(Debug, Clone)]
struct Outcome {
    index: usize,
    spec: Option<InstanceSpec>,
    kept: bool,
    dl1_agree: bool,
    dl2: Option<bool>,
    inverse_identity_agree: bool,
    stable: bool,
    stable_bijective: bool,
    gi_residual: f64,
    subspace_distance: f64,
    projector_residual: f64,
    c: Option<f64>,
    qbar: Option<crate::perturb::QbarDiscrepancy>,
    failures: Vec<Failure>,
}

fn margin_map(report: &AnalysisReport) -> BTreeMap<String, f64> {
    report
        .decision_margins
        .iter()
        .map(|(k, m)| (k.clone(), m.value))
        .collect()
}

fn run_instance(config: &BatteryConfig, index: usize) -> Outcome {
    let mut out = Outcome {
        index,
        spec: None,
        kept: false,
        dl1_agree: false,
        dl2: None,
        inverse_identity_agree: false,
        stable: false,
        stable_bijective: false,
        gi_residual: 0.0,
        subspace_distance: 0.0,
        projector_residual: 0.0,
        c: None,
        qbar: None,
        failures: Vec::new(),
    };
    let seed = instance_seed(config.seed, index);
    let fail = |out: &mut Outcome, condition: String, margins: BTreeMap<String, f64>| {
        out.failures.push(Failure {
            index,
            seed,
            spec: out.spec.clone(),
            condition,
            margins,
        });
    };
    let spec = match config.instance_spec(index) {
        Ok(s) => s,
        Err(e) => {
            fail(&mut out, format!("spec error: {e}"), BTreeMap::new());
            return out;
        }
    };
    out.spec = Some(spec.clone());
    let sys = match random_instance(&spec) {
        Ok(s) => s,
        Err(e) => {
            fail(&mut out, format!("instance error: {e}"), BTreeMap::new());
            return out;
        }
    };
    if let Err(e) = check_instance(&spec, &sys, &mut out) {
        fail(&mut out, format!("analysis error: {e}"), BTreeMap::new());
    }
    out
}

fn check_instance(spec: &InstanceSpec, sys: &PerturbedSystem, out: &mut Outcome) -> Result<()> {
    let index = out.index;
    let seed = spec.seed;
    let fail = |out: &mut Outcome, condition: &str, margins: BTreeMap<String, f64>| {
        out.failures.push(Failure {
            index,
            seed,
            spec: Some(spec.clone()),
            condition: condition.to_string(),
            margins,
        });
    };

    // construction soundness, on every instance
    let res = sys.bundle().residuals;
    out.gi_residual = res.worst_relative();
    if out.gi_residual > GI_RESIDUAL_TOL {
        fail(out, "build_gi residuals", BTreeMap::from([("worst".into(), out.gi_residual)]));
    }
    if sys.bundle().rank > 0 {
        let c = norm_c(sys.bundle());
        out.c = Some(c);
        if c < 1.0 - 1e-10 {
            fail(out, "c >= 1", BTreeMap::from([("c".into(), c)]));
        }
    }

    let report = analyze(sys)?;
    out.kept = report.is_decisive();
    if !out.kept {
        return Ok(());
    }
    let margins = margin_map(&report);
    let cert = &report.bijectivity;

    out.inverse_identity_agree = cert.agree;
    if !cert.agree {
        fail(out, "lemma 2.4: bij_y == bij_x", margins.clone());
    }
    if !cert.inverse_identity_ok {
        fail(out, "lemma 2.4: explicit inverse identity", margins.clone());
    }

    out.dl1_agree = report.dl1.agree();
    if !out.dl1_agree {
        fail(out, "dl1 three-way agreement", margins.clone());
    }

    out.stable = report.stable.value;
    if let Some(dl2) = &report.dl2 {
        let agree = dl2.agree();
        out.dl2 = Some(agree);
        if !agree {
            fail(out, "dl2 five-way agreement", margins.clone());
        }
        if let Some(g) = &report.g {
            if let Some(r) = g.two_formula_residual {
                if r > IDENTITY_TOL * (1.0 + g.matrix.norm2()) {
                    fail(out, "G two-formula identity", margins.clone());
                }
            }
        }
        if report.stable.value {
            if !dl2.g_residuals.pass {
                fail(out, "verify_gi(T̄, G) on stable instance", margins.clone());
            }
            let g = &report.g.as_ref().expect("G present when bijective").matrix;
            let d_range = Subspace::range_of(g, sys.tol())?.distance(sys.range_s());
            let d_null = Subspace::null_of(g, sys.tol())?.distance(sys.null_s());
            for d in [d_range, d_null] {
                let v = if d.dims_match { d.value } else { 1.0 };
                out.subspace_distance = out.subspace_distance.max(v);
                if v > EQUALITY_TOL {
                    fail(out, "R(G)=R(S), N(G)=N(S)", margins.clone());
                }
            }
            if !dl2.null_transport.value {
                fail(out, "W_X⁻¹ N(T) = N(T̄)", margins.clone());
            }
        }
    }

    if let Some(p) = &report.projectors {
        out.stable_bijective = true;
        out.projector_residual = p
            .pbar_identity_residual
            .max(p.qbar_identity_residual)
            .max(p.pbar_idempotency)
            .max(p.qbar_idempotency)
            / p.scale;
        out.subspace_distance = out
            .subspace_distance
            .max(p.pbar_range_distance)
            .max(p.qbar_range_distance);
        if !p.all_ok() {
            fail(out, "perturbed projector identities", margins.clone());
        }
        out.qbar = Some(qbar_discrepancy(sys)?);
    }

    if !report.decompositions.implication_1_ok {
        fail(out, "cor 3.2 implication 1", margins.clone());
    }
    if !report.decompositions.implication_2_ok {
        fail(out, "cor 3.2 implication 2", margins.clone());
    }

    match spec.regime {
        Regime::StableSmall | Regime::ZeroPerturbation | Regime::FullRank if !report.stable.value => {
            fail(out, "regime soundness: expected stable", margins.clone());
        }
        Regime::RankIncreasing if report.stable.value || report.rank_tbar <= report.rank_t => {
            fail(out, "regime soundness: expected rank increase and instability", margins.clone());
        }
        Regime::NullHitting if report.stable.value => {
            fail(out, "regime soundness: expected instability", margins.clone());
        }
        Regime::ZeroPerturbation
            if !report.dl2.as_ref().is_some_and(|d| d.values() == [true; 5]) =>
        {
            fail(out, "regime soundness: zero perturbation", margins.clone());
        }
        _ => {}
    }
    Ok(())
}

/// Runs `count` seeded instances cycling all regimes and complement modes.
pub fn battery(count: usize, dims_max: usize, seed: u64) -> BatteryReport {
    run_battery(&BatteryConfig::new(count, dims_max, seed))
}

pub fn run_battery(config: &BatteryConfig) -> BatteryReport {
    let outcomes: Vec<Outcome> = (0..config.count)
        .into_par_iter()
        .map(|i| run_instance(config, i))
        .collect();

    let mut report = BatteryReport::empty(config.seed, config.dims_max);
    for o in outcomes {
        report.instances_run += 1;
        let tally = report
            .by_regime
            .entry(o.spec.as_ref().map_or("unknown", |s| s.regime.name()).to_string())
            .or_default();
        tally.run += 1;
        report.gi_residual_max = report.gi_residual_max.max(o.gi_residual);
        if let Some(c) = o.c {
            report.c_min_nonzero = Some(report.c_min_nonzero.map_or(c, |m: f64| m.min(c)));
        }
        if !o.kept {
            report.instances_excluded += 1;
            tally.excluded += 1;
            report.failures.extend(o.failures);
            continue;
        }
        if o.stable {
            tally.stable += 1;
            report.stable_count += 1;
        } else {
            tally.unstable += 1;
            report.unstable_count += 1;
        }
        if o.dl1_agree {
            report.dl1_agreement_count += 1;
        } else {
            report.dl1_disagreement_count += 1;
        }
        if let Some(a) = o.dl2 {
            report.dl2_applicable += 1;
            if a {
                report.dl2_agreement_count += 1;
            }
        }
        if o.inverse_identity_agree {
            report.inverse_identity_agreement_count += 1;
        }
        if o.stable_bijective {
            report.stable_bijective_count += 1;
        }
        report.subspace_distance_max = report.subspace_distance_max.max(o.subspace_distance);
        report.projector_residual_max = report.projector_residual_max.max(o.projector_residual);
        if let Some(q) = o.qbar {
            let e = &mut report.qbar_experiment;
            e.instances += 1;
            e.corrected_residual_max = e.corrected_residual_max.max(q.corrected_residual);
            if let Some(p) = q.alternative_residual {
                e.square_instances += 1;
                if p <= IDENTITY_TOL * (1.0 + p) {
                    e.alternative_matches += 1;
                }
                e.alternative_residual_min = Some(e.alternative_residual_min.map_or(p, |m: f64| m.min(p)));
                e.alternative_residual_max = Some(e.alternative_residual_max.map_or(p, |m: f64| m.max(p)));
            }
        }
        report.failures.extend(o.failures);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::{dl2_conditions, PerturbedSystem};

    #[test]
    fn zero_perturbation_is_all_true() {
        let sys = random_instance(&InstanceSpec::new(4, 5, 2, Regime::ZeroPerturbation, 11)).unwrap();
        assert_eq!(sys.dt(), &Matrix::zeros(4, 5));
        assert_eq!(dl2_conditions(&sys).unwrap().values(), [true; 5]);
    }

    #[test]
    fn null_hitting_is_unstable() {
        for seed in 0..20 {
            let spec = InstanceSpec::new(5, 4, 2, Regime::NullHitting, seed)
                .with_mode(ComplementMode::RandomOblique);
            let sys = random_instance(&spec).unwrap();
            let stable = sys.stability().unwrap();
            assert!(!stable.value, "seed {seed}");
            assert!(stable.witness.is_some());
        }
    }

    #[test]
    fn stable_small_agrees() {
        let spec = InstanceSpec::new(6, 5, 3, Regime::StableSmall, 3).with_scale(0.05);
        let sys = random_instance(&spec).unwrap();
        let d = dl2_conditions(&sys).unwrap();
        assert!(d.agree());
        assert!(d.stable.value);
    }

    #[test]
    fn infeasible_specs_rejected() {
        assert!(random_instance(&InstanceSpec::new(3, 3, 4, Regime::StableSmall, 0)).is_err());
        assert!(random_instance(&InstanceSpec::new(3, 3, 3, Regime::RankIncreasing, 0)).is_err());
        assert!(random_instance(&InstanceSpec::new(3, 4, 3, Regime::FullRank, 0)).is_err());
        assert!(random_instance(&InstanceSpec::new(13, 4, 1, Regime::StableSmall, 0)).is_err());
        assert!(
            random_instance(&InstanceSpec::new(3, 4, 1, Regime::StableSmall, 0).with_scale(0.0))
                .is_err()
        );
    }

    #[test]
    fn instances_are_deterministic() {
        let spec = InstanceSpec::new(5, 6, 3, Regime::RankIncreasing, 99)
            .with_mode(ComplementMode::RandomOblique);
        let a = random_instance(&spec).unwrap();
        let b = random_instance(&spec).unwrap();
        assert_eq!(a.t().as_slice(), b.t().as_slice());
        assert_eq!(a.s().as_slice(), b.s().as_slice());
        assert_eq!(a.dt().as_slice(), b.dt().as_slice());
    }

    #[test]
    fn margin_filter_examples() {
        let spec = InstanceSpec::new(3, 3, 2, Regime::ZeroPerturbation, 1);
        assert!(margin_filter(&random_instance(&spec).unwrap()).unwrap());

        // W_Y = diag(1, 3e-10): sigma_min sits at three times the threshold
        let bundle = crate::geninv::moore_penrose(&Matrix::identity(2)).unwrap();
        let sys = PerturbedSystem::new(bundle, Matrix::from_diag(&[0.0, -1.0 + 3e-10])).unwrap();
        assert!(!margin_filter(&sys).unwrap());
    }

    #[test]
    fn empty_battery() {
        let r = battery(0, 6, 42);
        assert_eq!(r.instances_run, 0);
        assert!(r.passed());
    }

    #[test]
    fn small_battery_passes() {
        let r = battery(10, 6, 42);
        assert!(r.failures.is_empty(), "{:#?}", r.failures);
        assert_eq!(r.dl1_agreement_count, r.kept());
        assert_eq!(
            r.instances_run,
            r.dl1_agreement_count + r.dl1_disagreement_count + r.instances_excluded
        );
    }

    #[test]
    fn regime_names_round_trip() {
        for r in Regime::ALL {
            assert_eq!(r.name().parse::<Regime>().unwrap(), r);
        }
        assert!("bogus".parse::<Regime>().is_err());
    }
}
