//! Executable version of the two-step selection argument.
//!
//! 1. Rescale `T` to norm one and normalize its columns (`T₁`).
//! 2. Szarek step: choose σ₁ maximizing μ with `‖T₁Q_σ₁‖ ≤ C`.
//! 3. Form the zero-diagonal `S = T₂ᵀT₂ − I` on σ₁, where `T₂ = T₁Q_σ₁`.
//! 4. If `‖S‖ ≤ ε`, σ₁ is already an ε-isomorphism set. Otherwise set
//!    `δ = ε/‖S‖` and pick σ′ ⊆ σ₁ maximizing μ with `‖Q_σ′SQ_σ′‖ ≤ δ‖S‖`.
//! 5. Check σ′ against the original `T` with the independent spectral test.
//!
//! Every inequality along the way is recorded in [`ProofTrace::checks`]; a
//! single failed check turns the run into [`Error::TraceFailed`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::mask::SubsetMask;
use crate::select::{self, IndexMeasure};
use crate::structure::{self, FamilyKind, IsomorphismChecker, DEFAULT_TOL, ENUMERATION_CAP, ZERO_DIAGONAL_TOL};

/// Default Szarek norm bound.
pub const DEFAULT_C: f64 = 2.0;

/// Slack on the norm inequalities `‖T₂‖ ≤ C` and `δ ≥ ε/(C² + 1)`.
pub const NORM_SLACK: f64 = 1e-9;

/// Rescales `T` to operator norm one. Inputs already within `1e-9` of norm
/// one are returned unchanged with scale 1.
pub fn normalize_operator(t: &Matrix) -> Result<(Matrix, f64)> {
    let norm = linalg::operator_norm(t);
    if norm == 0.0 {
        return Err(Error::DegenerateInput("the zero operator cannot be normalized".into()));
    }
    if (norm - 1.0).abs() <= NORM_SLACK {
        return Ok((t.clone(), 1.0));
    }
    let scale = 1.0 / norm;
    Ok((t.scaled(scale), scale))
}

/// Divides every nonzero column by its norm. Zero columns are returned
/// unchanged and flagged in the mask.
pub fn normalize_columns(t: &Matrix) -> (Matrix, SubsetMask) {
    let norms = t.column_norms();
    let mut zero = SubsetMask::empty(t.cols());
    for (j, &c) in norms.iter().enumerate() {
        if c == 0.0 {
            zero = zero.with(j);
        }
    }
    let cols = t.cols();
    let data: Vec<f64> = t
        .as_slice()
        .iter()
        .enumerate()
        .map(|(pos, &x)| {
            let c = norms[pos % cols];
            if c == 0.0 {
                x
            } else {
                x / c
            }
        })
        .collect();
    let m = Matrix::new(t.rows(), cols, data).expect("same shape as a valid matrix");
    (m, zero)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SzarekOutcome {
    pub sigma: SubsetMask,
    /// `‖T₁Q_σ‖`.
    pub norm: f64,
    /// `μ(σ) / Σ_i μ_i‖T₁e_i‖²`, the empirical constant of the measure form.
    pub ratio: Option<f64>,
}

/// Largest-μ set on which the unit-column operator `t1` has norm at most `C`.
/// Exhaustive up to [`ENUMERATION_CAP`] columns, greedy above.
pub fn szarek_step(t1: &Matrix, mu: &IndexMeasure, c: f64) -> Result<SzarekOutcome> {
    if !(c > 1.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must exceed 1, got {c}")));
    }
    check_measure(mu, t1)?;
    let n = t1.cols();
    let norms = t1.column_norms();
    let mut zero = SubsetMask::empty(n);
    for (j, &x) in norms.iter().enumerate() {
        if x == 0.0 {
            zero = zero.with(j);
        } else if (x - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "column {j} has norm {x}; the Szarek step needs unit columns"
            )));
        }
    }
    let gram = t1.gram();
    let limit = (c + NORM_SLACK).powi(2);
    let admissible = |s: &SubsetMask| -> Result<bool> {
        if !s.intersection(zero).is_empty() {
            return Ok(false);
        }
        if s.len() <= 1 {
            return Ok(true);
        }
        let spec = linalg::sym_eigs(&linalg::principal_submatrix(&gram, s)?)?;
        Ok(spec.max().unwrap_or(0.0) <= limit)
    };
    let sigma = if n <= ENUMERATION_CAP {
        let family = structure::enumerate_family(n, FamilyKind::Custom, admissible)?;
        best_by_measure(family.maximal_sets(), mu)
    } else {
        select::greedy_by_weight(n, mu, admissible)?
    };
    if sigma.is_empty() && zero.len() < n {
        return Err(Error::Internal(
            "no admissible nonempty set although singletons have norm one".into(),
        ));
    }
    let norm = linalg::operator_norm(&t1.select_columns(&sigma)?);
    let mass: f64 = (0..n).map(|i| mu.weight(i) * norms[i] * norms[i]).sum();
    Ok(SzarekOutcome {
        sigma,
        norm,
        ratio: (mass > 0.0).then(|| mu.value(&sigma) / mass),
    })
}

fn best_by_measure(sets: &[SubsetMask], mu: &IndexMeasure) -> SubsetMask {
    let mut best: Option<(SubsetMask, f64)> = None;
    for s in sets {
        let v = mu.value(s);
        if best.is_none_or(|(_, bv)| v > bv + 1e-12 * v.abs().max(bv.abs())) {
            best = Some((*s, v));
        }
    }
    best.map(|(s, _)| s).unwrap_or_else(|| SubsetMask::empty(mu.len()))
}

fn check_measure(mu: &IndexMeasure, t: &Matrix) -> Result<()> {
    if mu.len() != t.cols() {
        return Err(Error::InvalidInput(format!(
            "measure over {} indices for an operator with {} columns",
            mu.len(),
            t.cols()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ZeroDiagonal {
    pub s: Matrix,
    pub s_norm: f64,
    pub t2_norm: f64,
    /// `‖S‖ ≤ ‖T₂‖² + 1`.
    pub bound_holds: bool,
    pub max_diagonal: f64,
}

/// `S = T₂ᵀT₂ − I` for an operator with unit columns.
pub fn build_zero_diag(t2: &Matrix) -> Result<ZeroDiagonal> {
    let k = t2.cols();
    let g = t2.gram();
    let mut data = g.as_slice().to_vec();
    let mut max_diagonal: f64 = 0.0;
    for i in 0..k {
        let d = data[i * k + i] - 1.0;
        if d.abs() > ZERO_DIAGONAL_TOL {
            return Err(Error::DiagonalViolation { index: i, value: d });
        }
        max_diagonal = max_diagonal.max(d.abs());
        data[i * k + i] = d;
    }
    let s = Matrix::new(k, k, data)?;
    let s_norm = linalg::sym_operator_norm(&s)?;
    let t2_norm = linalg::operator_norm(t2);
    Ok(ZeroDiagonal {
        s,
        s_norm,
        t2_norm,
        bound_holds: s_norm <= t2_norm * t2_norm + 1.0 + 1e-12,
        max_diagonal,
    })
}

/// Largest-μ member of Σ′(S, δ).
pub fn bt_step(s: &Matrix, delta: f64, mu: &IndexMeasure) -> Result<SubsetMask> {
    check_measure(mu, s)?;
    let family = structure::suppression_family(s, delta, DEFAULT_TOL)?;
    Ok(best_by_measure(family.maximal_sets(), mu))
}

/// One recorded inequality `lhs ≤ rhs` (or `lhs ≥ rhs`, as the label says).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofTrace {
    #[serde(rename = "T")]
    pub input: Matrix,
    /// Factor applied to reach norm one.
    pub scale: f64,
    /// True when the input was not already norm one.
    pub rescaled: bool,
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c_param: f64,
    pub zero_columns: Vec<usize>,
    pub sigma1: Vec<usize>,
    pub szarek_ratio: Option<f64>,
    #[serde(rename = "T2_norm")]
    pub t2_norm: f64,
    #[serde(rename = "S")]
    pub s: Matrix,
    #[serde(rename = "S_norm")]
    pub s_norm: f64,
    /// `ε/‖S‖`; absent when the run short-circuited.
    pub delta: Option<f64>,
    pub sigma2: Vec<usize>,
    pub short_circuited: bool,
    pub mu_value: f64,
    /// `μ(σ′) / (ε² Σ μ_i‖Te_i‖²)` for the norm-one operator.
    pub eq4_ratio: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ProofTrace {
    pub fn n(&self) -> usize {
        self.input.cols()
    }

    pub fn sigma1_mask(&self) -> SubsetMask {
        SubsetMask::from_indices(self.n(), &self.sigma1).expect("indices recorded from a mask")
    }

    pub fn sigma2_mask(&self) -> SubsetMask {
        SubsetMask::from_indices(self.n(), &self.sigma2).expect("indices recorded from a mask")
    }

    pub fn check(&self, label: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.label == label)
    }

    pub fn first_failure(&self) -> Option<&str> {
        self.checks.iter().find(|c| !c.pass).map(|c| c.label.as_str())
    }
}

struct Ledger(Vec<Check>);

impl Ledger {
    fn record(&mut self, label: &str, lhs: f64, rhs: f64, pass: bool) {
        self.0.push(Check {
            label: label.to_string(),
            lhs,
            rhs,
            pass,
        });
    }
}

/// Runs the whole pipeline. Returns [`Error::TraceFailed`] with the full
/// ledger if any recorded inequality fails.
pub fn run_pipeline(t: &Matrix, epsilon: f64, mu: &IndexMeasure, c: f64) -> Result<ProofTrace> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(c > 1.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must exceed 1, got {c}")));
    }
    check_measure(mu, t)?;
    let n = t.cols();
    let mut ledger = Ledger(Vec::new());

    let (tn, scale) = normalize_operator(t)?;
    let (t1, zero) = normalize_columns(&tn);

    let szarek = szarek_step(&t1, mu, c)?;
    let sigma1 = szarek.sigma;

    // Weighted form: Σ_{i∈σ₁} λ_i ‖Te_i‖^{-2} with λ the probability
    // attached to μ. Vacuous when μ puts no mass on nonzero columns.
    let mass = select::weighted_column_mass(&tn, mu);
    if mass > 0.0 {
        let lambda = select::mu_to_lambda(mu, &tn)?;
        let norms = tn.column_norms();
        let lhs: f64 = sigma1
            .iter()
            .map(|i| lambda.weight(i) / (norms[i] * norms[i]))
            .sum();
        ledger.record("eq7", lhs, 0.0, lhs > 0.0);
    } else {
        ledger.record("eq7", 0.0, 0.0, true);
    }

    let t2 = t1.select_columns(&sigma1)?;
    let zd = build_zero_diag(&t2)?;
    ledger.record("eq10", zd.t2_norm, c, zd.t2_norm <= c + NORM_SLACK);
    ledger.record("eq11", zd.max_diagonal, ZERO_DIAGONAL_TOL, zd.max_diagonal <= ZERO_DIAGONAL_TOL);
    ledger.record("eq11-norm", zd.s_norm, zd.t2_norm * zd.t2_norm + 1.0, zd.bound_holds);

    let (local, delta, short_circuited) = if zd.s_norm <= epsilon {
        // |⟨Sf, f⟩| ≤ ‖S‖ ≤ ε for unit f, so σ₁ already works.
        ledger.record("short-circuit", zd.s_norm, epsilon, true);
        (SubsetMask::full(sigma1.len()), None, true)
    } else {
        let delta = epsilon / zd.s_norm;
        let floor = epsilon / (c * c + 1.0);
        ledger.record("eq12", delta, floor, delta >= floor - NORM_SLACK);
        let mu_local = mu.restrict(&sigma1);
        let local = bt_step(&zd.s, delta, &mu_local)?;
        let product = delta * zd.s_norm;
        ledger.record(
            "eq11-delta",
            product,
            epsilon,
            (product - epsilon).abs() <= 1e-12 * epsilon.max(1.0),
        );
        let sub = linalg::principal_submatrix(&zd.s, &local)?;
        let quad = if sub.rows() == 0 {
            0.0
        } else {
            let eig = linalg::sym_eigen(&sub)?;
            let k = if eig.spectrum.eigenvalues[0].abs() >= eig.spectrum.eigenvalues[sub.rows() - 1].abs() {
                0
            } else {
                sub.rows() - 1
            };
            let f = eig.vector(k);
            linalg::dot(&sub.mat_vec(&f), &f).abs()
        };
        ledger.record("suppression", quad, epsilon, quad <= epsilon + DEFAULT_TOL);
        (local, Some(delta), false)
    };

    let sigma2 = sigma1.lift(&local).union(zero);
    let checker = IsomorphismChecker::new(t, epsilon, DEFAULT_TOL)?;
    let distortion = checker.distortion(&sigma2)?;
    ledger.record("final-eq1", distortion, epsilon, checker.contains(&sigma2)?);

    let mu_value = mu.value(&sigma2);
    let eq4_ratio = (mass > 0.0).then(|| mu_value / (epsilon * epsilon * mass));
    let passed = ledger.0.iter().all(|c| c.pass);
    let trace = ProofTrace {
        input: t.clone(),
        scale,
        rescaled: scale != 1.0,
        epsilon,
        c_param: c,
        zero_columns: zero.indices(),
        sigma1: sigma1.indices(),
        szarek_ratio: szarek.ratio,
        t2_norm: zd.t2_norm,
        s: zd.s,
        s_norm: zd.s_norm,
        delta,
        sigma2: sigma2.indices(),
        short_circuited,
        mu_value,
        eq4_ratio,
        checks: ledger.0,
        passed,
    };
    debug_assert_eq!(trace.n(), n);
    if passed {
        Ok(trace)
    } else {
        Err(Error::TraceFailed(Box::new(trace)))
    }
}
