//! Large sets of ε-isomorphism under an index measure μ.
//!
//! Both searches maximize `μ(σ) = Σ_{i∈σ} μ_i` over Σ(T, ε) for a norm-one
//! operator and compare the result with `ε² Σ_i μ_i ‖Te_i‖²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::mask::SubsetMask;
use crate::structure::{self, IsomorphismChecker, DEFAULT_TOL};

/// Slack on the norm-one hypothesis.
pub const NORM_ONE_TOL: f64 = 1e-9;

/// Columns within this distance of norm one count as unit columns.
pub const UNIT_COLUMN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Counting,
    Probability,
    General,
}

/// Nonnegative weight per basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexMeasure {
    weights: Vec<f64>,
    kind: MeasureKind,
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "measure weight {i} is {}, expected a finite nonnegative number",
            weights[i]
        )));
    }
    Ok(())
}

impl IndexMeasure {
    pub fn counting(n: usize) -> Self {
        IndexMeasure {
            weights: vec![1.0; n],
            kind: MeasureKind::Counting,
        }
    }

    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "probability weights sum to {total}, not 1"
            )));
        }
        Ok(IndexMeasure {
            weights,
            kind: MeasureKind::Probability,
        })
    }

    pub fn general(weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(IndexMeasure {
            weights,
            kind: MeasureKind::General,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn value(&self, sigma: &SubsetMask) -> f64 {
        sigma.iter().map(|i| self.weights[i]).sum()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The same measure multiplied by `factor > 0` (kind becomes general
    /// unless `factor` is 1).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        if factor == 1.0 {
            return Ok(self.clone());
        }
        IndexMeasure::general(self.weights.iter().map(|w| w * factor).collect())
    }

    /// Restriction to the indices of `sigma`, renumbered `0..|σ|`.
    pub fn restrict(&self, sigma: &SubsetMask) -> IndexMeasure {
        IndexMeasure {
            weights: sigma.iter().map(|i| self.weights[i]).collect(),
            kind: if self.kind == MeasureKind::Counting {
                MeasureKind::Counting
            } else {
                MeasureKind::General
            },
        }
    }
}

/// `λ_i = μ_i‖Te_i‖² / Σ_j μ_j‖Te_j‖²`.
pub fn mu_to_lambda(mu: &IndexMeasure, t: &Matrix) -> Result<IndexMeasure> {
    check_len(mu, t)?;
    let sq: Vec<f64> = t.column_norms().iter().map(|c| c * c).collect();
    let total: f64 = mu.weights.iter().zip(&sq).map(|(m, s)| m * s).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegenerateMeasure(
            "Σ μ_i‖Te_i‖² is zero".into(),
        ));
    }
    let weights = mu.weights.iter().zip(&sq).map(|(m, s)| m * s / total).collect();
    Ok(IndexMeasure {
        weights,
        kind: MeasureKind::Probability,
    })
}

/// `μ_i = λ_i ‖Te_i‖^{-2}`; indices with `λ_i = 0` get `μ_i = 0`.
pub fn lambda_to_mu(lambda: &IndexMeasure, t: &Matrix) -> Result<IndexMeasure> {
    check_len(lambda, t)?;
    let norms = t.column_norms();
    let mut weights = Vec::with_capacity(norms.len());
    for (i, (&l, &c)) in lambda.weights.iter().zip(&norms).enumerate() {
        if l == 0.0 {
            weights.push(0.0);
        } else if c == 0.0 {
            return Err(Error::DegenerateMeasure(format!(
                "λ_{i} > 0 on the zero column {i}"
            )));
        } else {
            weights.push(l / (c * c));
        }
    }
    IndexMeasure::general(weights)
}

fn check_len(mu: &IndexMeasure, t: &Matrix) -> Result<()> {
    if mu.len() != t.cols() {
        return Err(Error::InvalidInput(format!(
            "measure over {} indices for an operator with {} columns",
            mu.len(),
            t.cols()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Exhaustive,
    Greedy,
    Pipeline,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    pub chosen: SubsetMask,
    pub mu_value: f64,
    /// `ε² Σ_i μ_i ‖Te_i‖²`.
    pub bound_rhs: f64,
    /// `mu_value / bound_rhs`; `None` when the bound is zero.
    pub empirical_c: Option<f64>,
}

impl SelectionResult {
    pub fn new(method: SelectionMethod, t: &Matrix, epsilon: f64, mu: &IndexMeasure, chosen: SubsetMask) -> Self {
        let mu_value = mu.value(&chosen);
        let bound_rhs = epsilon * epsilon * weighted_column_mass(t, mu);
        SelectionResult {
            method,
            chosen,
            mu_value,
            bound_rhs,
            empirical_c: (bound_rhs > 0.0).then(|| mu_value / bound_rhs),
        }
    }
}

/// `Σ_i μ_i ‖Te_i‖²`.
pub fn weighted_column_mass(t: &Matrix, mu: &IndexMeasure) -> f64 {
    t.column_norms()
        .iter()
        .zip(&mu.weights)
        .map(|(c, m)| m * c * c)
        .sum()
}

fn check_norm_one(t: &Matrix) -> Result<()> {
    let norm = linalg::operator_norm(t);
    if norm > 1.0 + NORM_ONE_TOL {
        return Err(Error::InvalidInput(format!(
            "operator norm {norm} exceeds one; normalize the operator first"
        )));
    }
    Ok(())
}

/// `a` beats `b` when larger beyond a relative rounding margin.
fn beats(a: f64, b: f64) -> bool {
    a > b + 1e-12 * a.abs().max(b.abs())
}

/// Maximizes μ over Σ(T, ε) by scanning its maximal sets. Ties go to the
/// lexicographically smallest set.
pub fn select_exhaustive(t: &Matrix, epsilon: f64, mu: &IndexMeasure) -> Result<SelectionResult> {
    check_len(mu, t)?;
    check_norm_one(t)?;
    let family = structure::isomorphism_family(t, epsilon, DEFAULT_TOL)?;
    let mut best: Option<(SubsetMask, f64)> = None;
    for m in family.maximal_sets() {
        let v = mu.value(m);
        if best.is_none_or(|(_, bv)| beats(v, bv)) {
            best = Some((*m, v));
        }
    }
    let (chosen, _) = best.ok_or_else(|| Error::Internal("family has no maximal set".into()))?;
    Ok(SelectionResult::new(SelectionMethod::Exhaustive, t, epsilon, mu, chosen))
}

/// Adds indices by decreasing μ_i (lowest index first on ties) whenever the
/// set stays in Σ(T, ε). Failed candidates stay failed for every superset, so
/// one pass yields a maximal member.
pub fn select_greedy(t: &Matrix, epsilon: f64, mu: &IndexMeasure) -> Result<SelectionResult> {
    check_len(mu, t)?;
    check_norm_one(t)?;
    let checker = IsomorphismChecker::new(t, epsilon, DEFAULT_TOL)?;
    let chosen = greedy_by_weight(t.cols(), mu, |s| checker.contains(s))?;
    Ok(SelectionResult::new(SelectionMethod::Greedy, t, epsilon, mu, chosen))
}

pub(crate) fn greedy_by_weight<F>(n: usize, mu: &IndexMeasure, mut admissible: F) -> Result<SubsetMask>
where
    F: FnMut(&SubsetMask) -> Result<bool>,
{
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mu.weights[b].total_cmp(&mu.weights[a]).then(a.cmp(&b)));
    let mut chosen = SubsetMask::empty(n);
    for i in order {
        let next = chosen.with(i);
        if admissible(&next)? {
            chosen = next;
        }
    }
    Ok(chosen)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cor15Report {
    /// `μ(σ)·‖T‖² / ε²`.
    pub ratio: f64,
    /// Whether `(1 − ε)‖f‖ ≤ ‖Tf‖ ≤ (1 + ε)‖f‖` holds on span(e_i, i ∈ σ).
    pub eq5_holds: bool,
}

/// Lower-bound ratios for a selected set. Each entry is `None` when the
/// corresponding bound does not apply or is vacuous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReports {
    /// `μ(σ) / (ε² Σ μ_i‖Te_i‖²)`.
    pub eq4: Option<f64>,
    /// Counting measure: `|σ| / (ε²‖T‖_HS²)`.
    pub eq6: Option<f64>,
    /// Unit columns and counting measure: `|σ|·‖T‖² / n`.
    pub thm14: Option<f64>,
    /// Unit columns.
    pub cor15: Option<Cor15Report>,
}

pub fn has_unit_columns(t: &Matrix) -> bool {
    t.cols() > 0 && t.column_norms().iter().all(|c| (c - 1.0).abs() <= UNIT_COLUMN_TOL)
}

pub fn bound_reports(t: &Matrix, epsilon: f64, mu: &IndexMeasure, result: &SelectionResult) -> Result<BoundReports> {
    check_len(mu, t)?;
    let sigma = &result.chosen;
    let mu_sigma = mu.value(sigma);
    let mass = weighted_column_mass(t, mu);
    let eps2 = epsilon * epsilon;
    let eq4 = (mass > 0.0).then(|| mu_sigma / (eps2 * mass));

    let counting = mu.kind() == MeasureKind::Counting;
    let hs = linalg::hs_norm(t);
    let eq6 = (counting && hs > 0.0).then(|| sigma.len() as f64 / (eps2 * hs * hs));

    let unit = has_unit_columns(t);
    let op = linalg::operator_norm(t);
    let thm14 = (unit && counting).then(|| sigma.len() as f64 * op * op / t.cols() as f64);
    let cor15 = if unit {
        let gram = linalg::principal_submatrix(&t.gram(), sigma)?;
        let spec = linalg::sym_eigs(&gram)?;
        let lo = (1.0 - epsilon).powi(2) - DEFAULT_TOL;
        let hi = (1.0 + epsilon).powi(2) + DEFAULT_TOL;
        Some(Cor15Report {
            ratio: mu_sigma * op * op / eps2,
            eq5_holds: spec.eigenvalues.iter().all(|&x| x >= lo && x <= hi),
        })
    } else {
        None
    };
    Ok(BoundReports {
        eq4,
        eq6,
        thm14,
        cor15,
    })
}

/// Serialized selection result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionJson {
    pub method: SelectionMethod,
    pub chosen: Vec<usize>,
    pub mu_value: f64,
    pub bound_rhs: f64,
    pub empirical_c: Option<f64>,
    pub reports: BoundReports,
}

impl SelectionJson {
    pub fn new(result: &SelectionResult, reports: BoundReports) -> Self {
        SelectionJson {
            method: result.method,
            chosen: result.chosen.indices(),
            mu_value: result.mu_value,
            bound_rhs: result.bound_rhs,
            empirical_c: result.empirical_c,
            reports,
        }
    }
}
