//! Truncated diagonal operators `T e_k = t_k e_k`.
//!
//! Growth of `t_k` along the truncation stands in for an unbounded closed
//! operator. Every quantity of the perturbation analysis has a per-coordinate
//! closed form here, which makes this model an exact oracle for the matrix
//! pipeline. All reported values describe the truncation only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geninv::moore_penrose_with_tol;
use crate::matrix::Matrix;
use crate::perturb::{bijectivity_pair, compute_g, PerturbedSystem};
use crate::DEFAULT_TOL;

/// Entries with `|t_k| <= ZERO_THRESHOLD` form the zero pattern.
pub const ZERO_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    entries: Vec<f64>,
    zero_pattern: Vec<bool>,
    /// Free-form description of the intended infinite extension.
    pub tail_note: String,
}

impl DiagonalOperator {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("diagonal entry {k} is not finite")));
        }
        let zero_pattern = entries.iter().map(|v| v.abs() <= ZERO_THRESHOLD).collect();
        Ok(Self {
            entries,
            zero_pattern,
            tail_note: String::new(),
        })
    }

    pub fn with_tail_note(mut self, note: impl Into<String>) -> Self {
        self.tail_note = note.into();
        self
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn truncation(&self) -> usize {
        self.entries.len()
    }

    /// `k` is in the zero pattern.
    pub fn is_zero_at(&self, k: usize) -> bool {
        self.zero_pattern[k]
    }
}

/// Per-coordinate maximal Tseng inverse: `1/t_k` off the zero pattern.
pub fn diag_gi(t: &DiagonalOperator) -> DiagonalOperator {
    let s = t
        .entries
        .iter()
        .zip(&t.zero_pattern)
        .map(|(v, &z)| if z { 0.0 } else { 1.0 / v })
        .collect();
    DiagonalOperator::new(s).expect("finite reciprocals")
}

pub fn embed(t: &DiagonalOperator) -> Matrix {
    Matrix::from_diag(&t.entries)
}

fn same_truncation(t: &DiagonalOperator, d: &DiagonalOperator) -> Result<()> {
    if t.truncation() != d.truncation() {
        return Err(Error::Dimension(format!(
            "truncations differ: {} vs {}",
            t.truncation(),
            d.truncation()
        )));
    }
    Ok(())
}

/// Closed-form perturbation analysis of a diagonal pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagAnalysis {
    pub truncation: usize,
    /// `d_k = 0` at every `k` in the zero pattern of `t`.
    pub stable: bool,
    /// Every carrier entry `1 + d_k / t_k` exceeds the invertibility
    /// threshold.
    pub bijective: bool,
    /// `1e-10` times the largest carrier entry.
    pub bijectivity_threshold: f64,
    /// `1/(t_k + d_k)` off the zero pattern, zero on it; present iff bijective.
    pub g_entries: Option<Vec<f64>>,
    /// Smallest `|t_k + d_k|` above the zero threshold: a proxy for closedness
    /// of the perturbed range on the truncation. Absent when all vanish.
    pub range_closed_margin: Option<f64>,
    /// Norm of `T T⁺`: 1 unless `t` vanishes identically.
    pub c: f64,
    /// `max |d_k / t_k|` off the zero pattern.
    pub b_min: f64,
    pub bc: f64,
    pub bc_below_one: bool,
    pub scope: &'static str,
}

pub fn diag_analyze(t: &DiagonalOperator, d: &DiagonalOperator) -> Result<DiagAnalysis> {
    same_truncation(t, d)?;
    let n = t.truncation();
    let stable = (0..n).all(|k| !t.zero_pattern[k] || d.entries[k].abs() <= ZERO_THRESHOLD);
    let carrier: Vec<f64> = (0..n)
        .map(|k| {
            if t.zero_pattern[k] {
                1.0
            } else {
                1.0 + d.entries[k] / t.entries[k]
            }
        })
        .collect();
    let wmax = carrier.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    let threshold = DEFAULT_TOL * wmax;
    let bijective = carrier.iter().all(|w| w.abs() > threshold);
    let g_entries = bijective.then(|| {
        (0..n)
            .map(|k| {
                if t.zero_pattern[k] {
                    0.0
                } else {
                    1.0 / (t.entries[k] + d.entries[k])
                }
            })
            .collect()
    });
    let range_closed_margin = (0..n)
        .map(|k| (t.entries[k] + d.entries[k]).abs())
        .filter(|v| *v > ZERO_THRESHOLD)
        .min_by(f64::total_cmp);
    let c = if t.zero_pattern.iter().all(|&z| z) { 0.0 } else { 1.0 };
    let b_min = (0..n)
        .filter(|&k| !t.zero_pattern[k])
        .map(|k| (d.entries[k] / t.entries[k]).abs())
        .fold(0.0_f64, f64::max);
    let bc = b_min * c;
    Ok(DiagAnalysis {
        truncation: n,
        stable,
        bijective,
        bijectivity_threshold: threshold,
        g_entries,
        range_closed_margin,
        c,
        b_min,
        bc,
        bc_below_one: bc < 1.0,
        scope: "exact on the truncation; no claim about the infinite operator",
    })
}

/// Exact smallest `a` with `||δT x|| <= a ||x|| + b ||T x||` on the
/// truncation: `max(0, max_k (|d_k| - b |t_k|))`.
pub fn diag_tbound(t: &DiagonalOperator, d: &DiagonalOperator, b: f64) -> Result<f64> {
    same_truncation(t, d)?;
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::Input(format!("b must be nonnegative, got {b}")));
    }
    Ok(t.entries
        .iter()
        .zip(&d.entries)
        .map(|(tk, dk)| dk.abs() - b * tk.abs())
        .fold(0.0_f64, f64::max))
}

/// Agreement between the closed forms and the dense-matrix pipeline run on
/// the embedded pair.
#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub diag: DiagAnalysis,
    pub matrix_stable: bool,
    pub matrix_bijective: bool,
    /// Largest `|g_k - G_kk| / max(1, |g_k|)`, when both sides produced `G`.
    pub g_max_relative_diff: Option<f64>,
    pub agree: bool,
}

/// Entry tolerance for comparing closed-form and pipeline `G`.
pub const G_ENTRY_TOL: f64 = 1e-12;

pub fn cross_validate(t: &DiagonalOperator, d: &DiagonalOperator) -> Result<CrossValidation> {
    let diag = diag_analyze(t, d)?;
    let bundle = moore_penrose_with_tol(&embed(t), DEFAULT_TOL)?;
    let sys = PerturbedSystem::new(bundle, embed(d))?;
    let cert = bijectivity_pair(&sys)?;
    let matrix_stable = sys.stability()?.value;
    let g_max_relative_diff = match (&diag.g_entries, cert.bij_y) {
        (Some(g), true) => {
            let gm = compute_g(&sys)?;
            let mut worst = 0.0_f64;
            for i in 0..gm.rows() {
                for j in 0..gm.cols() {
                    let expect = if i == j { g[i] } else { 0.0 };
                    let diff = (gm[(i, j)] - expect).abs() / expect.abs().max(1.0);
                    worst = worst.max(diff);
                }
            }
            Some(worst)
        }
        _ => None,
    };
    let agree = matrix_stable == diag.stable
        && cert.bij_y == diag.bijective
        && g_max_relative_diff.is_none_or(|e| e <= G_ENTRY_TOL);
    Ok(CrossValidation {
        diag,
        matrix_stable,
        matrix_bijective: cert.bij_y,
        g_max_relative_diff,
        agree,
    })
}

/// Entries of one diagonal, as given in a diagonal spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EntrySpec {
    Explicit {
        values: Vec<f64>,
    },
    /// Named family evaluated at `k = 1..=N`: `linear` is `alpha k + beta`,
    /// `power` is `alpha k^p`.
    Formula {
        expr: String,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default = "one")]
        p: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl EntrySpec {
    pub fn materialize(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            EntrySpec::Explicit { values } => {
                if values.len() < n {
                    return Err(Error::Input(format!(
                        "{} explicit values supplied, truncation needs {n}",
                        values.len()
                    )));
                }
                Ok(values[..n].to_vec())
            }
            EntrySpec::Formula { expr, alpha, beta, p } => {
                let ks = (1..=n).map(|k| k as f64);
                match expr.as_str() {
                    "linear" => Ok(ks.map(|k| alpha * k + beta).collect()),
                    "power" => Ok(ks.map(|k| alpha * k.powf(*p)).collect()),
                    other => Err(Error::Input(format!(
                        "unknown formula family '{other}' (expected 'linear' or 'power')"
                    ))),
                }
            }
        }
    }
}

/// Diagonal spec file: `{"truncation": N, "t": {...}, "d": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagSpec {
    pub truncation: usize,
    pub t: EntrySpec,
    pub d: EntrySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_note: Option<String>,
}

impl DiagSpec {
    /// Builds `(t, d)`, optionally overriding the truncation.
    pub fn build(&self, truncate: Option<usize>) -> Result<(DiagonalOperator, DiagonalOperator)> {
        let n = truncate.unwrap_or(self.truncation);
        if n == 0 {
            return Err(Error::Input("truncation must be positive".into()));
        }
        let note = self.tail_note.clone().unwrap_or_default();
        let t = DiagonalOperator::new(self.t.materialize(n)?)?.with_tail_note(note.clone());
        let d = DiagonalOperator::new(self.d.materialize(n)?)?.with_tail_note(note);
        Ok((t, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(v: &[f64]) -> DiagonalOperator {
        DiagonalOperator::new(v.to_vec()).unwrap()
    }

    #[test]
    fn diag_gi_examples() {
        assert_eq!(diag_gi(&op(&[1.0, 2.0, 0.0])).entries(), &[1.0, 0.5, 0.0]);
        assert_eq!(diag_gi(&op(&[0.0, 0.0])).entries(), &[0.0, 0.0]);
    }

    #[test]
    fn analyze_examples() {
        let a = diag_analyze(&op(&[1.0, 2.0, 3.0, 0.0]), &op(&[0.0, 0.0, 0.0, 0.5])).unwrap();
        assert!(!a.stable);

        let t: Vec<f64> = (1..=8).map(|k| k as f64).collect();
        let d: Vec<f64> = t.iter().map(|k| -k / 2.0).collect();
        let a = diag_analyze(&op(&t), &op(&d)).unwrap();
        assert!(a.stable && a.bijective);
        let g = a.g_entries.unwrap();
        for (k, gk) in g.iter().enumerate() {
            assert!((gk - 2.0 / (k + 1) as f64).abs() < 1e-15);
        }
        assert_eq!(a.b_min, 0.5);
        assert_eq!(a.bc, 0.5);
        assert!(a.bc_below_one);
        assert_eq!(a.c, 1.0);

        let t = op(&[3.0, 0.0, -2.0]);
        let a = diag_analyze(&t, &op(&[0.0; 3])).unwrap();
        assert!(a.stable && a.bijective);
        assert_eq!(a.g_entries.unwrap(), diag_gi(&t).entries());
        assert_eq!(a.range_closed_margin, Some(2.0));
    }

    #[test]
    fn analyze_rejects_mismatch() {
        assert!(diag_analyze(&op(&[1.0]), &op(&[1.0, 2.0])).is_err());
        assert!(diag_tbound(&op(&[1.0]), &op(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn tbound_examples() {
        assert_eq!(diag_tbound(&op(&[1.0, 2.0]), &op(&[0.0, 0.0]), 0.5).unwrap(), 0.0);
        assert_eq!(diag_tbound(&op(&[1.0, 2.0]), &op(&[0.3, 1.0]), 0.5).unwrap(), 0.0);
        assert_eq!(diag_tbound(&op(&[1.0, 2.0]), &op(&[0.3, -1.0]), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn embed_examples() {
        assert_eq!(embed(&op(&[1.0, 0.0])), Matrix::from_diag(&[1.0, 0.0]));
        assert_eq!(embed(&op(&[2.0, 3.0])), Matrix::from_diag(&[2.0, 3.0]));
    }

    #[test]
    fn zero_pattern_flip_breaks_stability() {
        let t = op(&[1.0, 0.0, 4.0]);
        assert!(diag_analyze(&t, &op(&[0.2, 0.0, 0.1])).unwrap().stable);
        assert!(!diag_analyze(&t, &op(&[0.2, 1.0, 0.1])).unwrap().stable);
    }

    #[test]
    fn spec_parsing() {
        let spec: DiagSpec = serde_json::from_str(
            r#"{"truncation": 8,
                "t": {"kind": "formula", "expr": "linear", "alpha": 1, "beta": 0},
                "d": {"kind": "formula", "expr": "linear", "alpha": -0.5, "beta": 0}}"#,
        )
        .unwrap();
        let (t, d) = spec.build(None).unwrap();
        assert_eq!(t.entries()[7], 8.0);
        assert_eq!(d.entries()[0], -0.5);

        let spec: DiagSpec = serde_json::from_str(
            r#"{"truncation": 3,
                "t": {"kind": "formula", "expr": "power", "alpha": 2, "p": 2},
                "d": {"kind": "explicit", "values": [1, 2, 3, 4]}}"#,
        )
        .unwrap();
        let (t, d) = spec.build(Some(2)).unwrap();
        assert_eq!(t.entries(), &[2.0, 8.0]);
        assert_eq!(d.entries(), &[1.0, 2.0]);
        assert!(spec.build(Some(5)).is_err());

        let spec: DiagSpec = serde_json::from_str(
            r#"{"truncation": 3,
                "t": {"kind": "formula", "expr": "exp"},
                "d": {"kind": "explicit", "values": [0, 0, 0]}}"#,
        )
        .unwrap();
        assert!(spec.build(None).is_err());
    }

    #[test]
    fn cross_validation_agrees_on_examples() {
        let t: Vec<f64> = (1..=8).map(|k| k as f64).collect();
        let d: Vec<f64> = t.iter().map(|k| -k / 2.0).collect();
        let cv = cross_validate(&op(&t), &op(&d)).unwrap();
        assert!(cv.agree, "{cv:?}");
        let cv = cross_validate(&op(&[1.0, 0.0]), &op(&[0.0, 1.0])).unwrap();
        assert!(cv.agree && !cv.matrix_stable);
    }
}
