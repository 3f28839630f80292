//! Witness measures on downward-closed families.
//!
//! Given a family and nonnegative weights `w_i`, the marginal game asks for a
//! probability measure ν on the family maximizing
//!
//! ```text
//! t = min_i ν{σ ∋ i} / w_i        (over rows with w_i > 0)
//! ```
//!
//! With `w_i = ‖Te_i‖²` on Σ(T, ε) the optimum `t*` is the best constant in
//! `ν{σ ∋ i} ≥ t·‖Te_i‖²`; with unit weights on Σ′(S, δ) it is the best
//! constant in `ν′{σ ∋ i} ≥ t`.
//!
//! The dual player picks a probability vector λ over rows and the best
//! response is `max_σ Σ_{i∈σ} λ_i / w_i`. Because that payoff grows with σ,
//! the maximum over the whole family is attained on a maximal set, so a game
//! over the maximal sets alone is exact. The solver returns both ν and λ and
//! the duality gap recomputed from scratch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lp::{self, LpFailure};
use crate::mask::SubsetMask;
use crate::structure::IsoFamily;

/// Largest duality gap accepted as a certificate.
pub const CERTIFICATE_GAP: f64 = 1e-9;

/// Column count above which the simplex hands over to multiplicative weights.
pub const DEFAULT_COLUMN_CAP: usize = 100_000;

#[derive(Clone, Debug)]
pub struct MarginalGame {
    n: usize,
    columns: Vec<SubsetMask>,
    weights: Vec<f64>,
    active_rows: Vec<usize>,
}

/// Game whose columns are the maximal sets of `family`.
pub fn build_game(family: &IsoFamily, weights: &[f64]) -> Result<MarginalGame> {
    MarginalGame::new(family.n(), family.maximal_sets().to_vec(), weights)
}

impl MarginalGame {
    /// Game over an explicit list of columns. Used directly by oracles that
    /// play over every member of a family rather than the maximal ones.
    pub fn new(n: usize, columns: Vec<SubsetMask>, weights: &[f64]) -> Result<Self> {
        if weights.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} weights for a game over {n} indices",
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weight {i} is {}, expected a finite nonnegative number",
                weights[i]
            )));
        }
        if let Some(c) = columns.iter().find(|c| c.n() != n) {
            return Err(Error::InvalidInput(format!(
                "column over {} indices in a game over {n}",
                c.n()
            )));
        }
        let active_rows: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
        if active_rows.is_empty() {
            return Err(Error::DegenerateGame("all weights are zero".into()));
        }
        if columns.is_empty() {
            return Err(Error::DegenerateGame("the game has no columns".into()));
        }
        Ok(MarginalGame {
            n,
            columns,
            weights: weights.to_vec(),
            active_rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[SubsetMask] {
        &self.columns
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn active_rows(&self) -> &[usize] {
        &self.active_rows
    }

    /// `χ_σ(i) / w_i` for an active row.
    pub fn payoff(&self, row: usize, column: usize) -> f64 {
        if self.columns[column].contains(row) {
            1.0 / self.weights[row]
        } else {
            0.0
        }
    }

    /// Worst marginal ratio `min_i ν{σ ∋ i} / w_i` of a measure on the columns.
    pub fn floor_of(&self, nu: &[f64]) -> f64 {
        let marginals = self.marginals_of(nu);
        self.active_rows
            .iter()
            .map(|&i| marginals[i] / self.weights[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// `ν{σ ∋ i}` for every index.
    pub fn marginals_of(&self, nu: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (col, &p) in self.columns.iter().zip(nu) {
            for i in col.iter() {
                m[i] += p;
            }
        }
        m
    }

    /// Best-response value `max_σ Σ_{i∈σ} λ_i / w_i` over the columns, and the
    /// column attaining it (lowest index on ties).
    pub fn best_response(&self, lambda: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, col) in self.columns.iter().enumerate() {
            let v: f64 = self
                .active_rows
                .iter()
                .filter(|&&i| col.contains(i))
                .map(|&i| lambda[i] / self.weights[i])
                .sum();
            if v > best.0 {
                best = (v, k);
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Simplex,
    MultiplicativeWeights,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub column_cap: usize,
    pub max_pivots: usize,
    pub mw_rounds: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            column_cap: DEFAULT_COLUMN_CAP,
            max_pivots: 200_000,
            mw_rounds: 20_000,
        }
    }
}

/// A probability measure on a family together with its certificate.
#[derive(Clone, Debug)]
pub struct WitnessMeasure {
    /// Sets with positive probability, in the game's column order.
    pub support: Vec<(SubsetMask, f64)>,
    /// `min_i ν{σ ∋ i} / w_i` over active rows, recomputed from `support`.
    pub floor: f64,
    /// Dual strategy, indexed by basis index; zero on inactive rows.
    pub dual_lambda: Vec<f64>,
    /// `max_σ Σ λ_i / w_i − floor`.
    pub gap: f64,
    /// `ν{σ ∋ i}` for every index.
    pub marginals: Vec<f64>,
    pub method: SolveMethod,
}

impl WitnessMeasure {
    pub fn is_certified(&self) -> bool {
        self.gap <= CERTIFICATE_GAP
    }

    /// Dual value `Σ_{i∈σ} λ_i / w_i` for one set.
    pub fn dual_payoff(&self, game: &MarginalGame, sigma: &SubsetMask) -> f64 {
        game.active_rows
            .iter()
            .filter(|&&i| sigma.contains(i))
            .map(|&i| self.dual_lambda[i] / game.weights[i])
            .sum()
    }
}

pub fn solve_game(game: &MarginalGame) -> Result<WitnessMeasure> {
    solve_game_with(game, &SolverOptions::default())
}

pub fn solve_game_with(game: &MarginalGame, options: &SolverOptions) -> Result<WitnessMeasure> {
    let (nu, lambda, method) = if game.columns.len() > options.column_cap {
        let (nu, lambda) = multiplicative_weights(game, options.mw_rounds);
        (nu, lambda, SolveMethod::MultiplicativeWeights)
    } else {
        let (nu, lambda) = simplex(game, options.max_pivots)?;
        (nu, lambda, SolveMethod::Simplex)
    };
    let measure = certify(game, nu, lambda, method);
    if method == SolveMethod::Simplex && !measure.is_certified() {
        let dual = measure.floor + measure.gap;
        return Err(Error::NoCertificate {
            primal: measure.floor,
            dual,
        });
    }
    Ok(measure)
}

fn simplex(game: &MarginalGame, max_pivots: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = game.active_rows.len();
    let cols = game.columns.len();
    // One packing constraint per column: Σ_{i∈σ} y_i / w_i ≤ 1.
    let mut m = vec![0.0; cols * k];
    for (c, col) in game.columns.iter().enumerate() {
        for (v, &i) in game.active_rows.iter().enumerate() {
            if col.contains(i) {
                m[c * k + v] = 1.0 / game.weights[i];
            }
        }
    }
    let sol = match lp::solve_packing(&m, cols, k, max_pivots) {
        Ok(sol) => sol,
        Err(LpFailure::Unbounded) => {
            return Err(Error::DegenerateGame(
                "some active row is covered by no column".into(),
            ))
        }
        Err(LpFailure::IterationCap { primal, dual, value }) => {
            let lambda = expand(game, &normalize(primal));
            let nu = normalize(dual);
            let primal_floor = game.floor_of(&nu);
            let dual_value = game.best_response(&lambda).0;
            return Err(Error::NoCertificate {
                primal: if value > 0.0 { primal_floor } else { 0.0 },
                dual: dual_value,
            });
        }
    };
    if sol.value <= 0.0 {
        return Err(Error::DegenerateGame("game value is zero".into()));
    }
    let lambda = expand(game, &normalize(sol.primal));
    let nu = normalize(sol.dual);
    Ok((nu, lambda))
}

fn expand(game: &MarginalGame, active: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; game.n];
    for (&i, &v) in game.active_rows.iter().zip(active) {
        full[i] = v;
    }
    full
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        if *x < 1e-15 {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    v
}

/// Hedge on the row player against best-responding columns. Averages of both
/// strategies are returned; the caller measures the resulting gap.
fn multiplicative_weights(game: &MarginalGame, rounds: usize) -> (Vec<f64>, Vec<f64>) {
    let k = game.active_rows.len();
    let scale = game
        .active_rows
        .iter()
        .map(|&i| 1.0 / game.weights[i])
        .fold(0.0, f64::max);
    let rounds = rounds.max(1);
    let eta = ((k.max(2) as f64).ln() / rounds as f64).sqrt();
    let mut log_w = vec![0.0; k];
    let mut lambda_sum = vec![0.0; game.n];
    let mut counts = vec![0usize; game.columns.len()];
    for _ in 0..rounds {
        let max_log = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = log_w.iter().map(|l| (l - max_log).exp()).collect();
        let total: f64 = raw.iter().sum();
        let lambda = expand(game, &raw.iter().map(|r| r / total).collect::<Vec<_>>());
        for (acc, l) in lambda_sum.iter_mut().zip(&lambda) {
            *acc += l;
        }
        let (_, best) = game.best_response(&lambda);
        counts[best] += 1;
        for (v, &i) in game.active_rows.iter().enumerate() {
            let loss = game.payoff(i, best) / scale;
            log_w[v] -= eta * loss;
        }
    }
    let nu = counts.iter().map(|&c| c as f64 / rounds as f64).collect();
    let lambda = lambda_sum.iter().map(|s| s / rounds as f64).collect();
    (nu, lambda)
}

fn certify(game: &MarginalGame, nu: Vec<f64>, lambda: Vec<f64>, method: SolveMethod) -> WitnessMeasure {
    let marginals = game.marginals_of(&nu);
    let floor = game.floor_of(&nu);
    let (dual_value, _) = game.best_response(&lambda);
    let support = game
        .columns
        .iter()
        .zip(&nu)
        .filter(|(_, &p)| p > 0.0)
        .map(|(c, &p)| (*c, p))
        .collect();
    WitnessMeasure {
        support,
        floor,
        dual_lambda: lambda,
        gap: (dual_value - floor).abs(),
        marginals,
        method,
    }
}

/// Per-index view of a witness measure against the bound `c·ε²‖Te_i‖²`
/// (isomorphism) or `c·δ²` (suppression).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub marginals: Vec<f64>,
    /// `ν{σ ∋ i}` divided by the bound's scale; `None` where the bound is
    /// vacuous (zero column).
    pub ratios: Vec<Option<f64>>,
    /// Minimum ratio over non-vacuous indices.
    pub empirical_c: Option<f64>,
}

/// Report for a witness measure on Σ(T, ε): ratios `ν{σ ∋ i} / (ε²‖Te_i‖²)`.
pub fn theorem2_bound_report(t: &Matrix, epsilon: f64, witness: &WitnessMeasure) -> Result<BoundReport> {
    require_certified(witness)?;
    if witness.marginals.len() != t.cols() {
        return Err(Error::InvalidInput(format!(
            "witness over {} indices for an operator with {} columns",
            witness.marginals.len(),
            t.cols()
        )));
    }
    let scale: Vec<f64> = t
        .column_norms()
        .iter()
        .map(|c| epsilon * epsilon * c * c)
        .collect();
    Ok(report(witness, &scale))
}

/// Report for a witness measure on Σ′(S, δ): ratios `ν{σ ∋ i} / δ²`.
pub fn suppression_bound_report(delta: f64, witness: &WitnessMeasure) -> Result<BoundReport> {
    require_certified(witness)?;
    let scale = vec![delta * delta; witness.marginals.len()];
    Ok(report(witness, &scale))
}

fn require_certified(witness: &WitnessMeasure) -> Result<()> {
    if !witness.is_certified() {
        return Err(Error::NoCertificate {
            primal: witness.floor,
            dual: witness.floor + witness.gap,
        });
    }
    Ok(())
}

fn report(witness: &WitnessMeasure, scale: &[f64]) -> BoundReport {
    let ratios: Vec<Option<f64>> = witness
        .marginals
        .iter()
        .zip(scale)
        .map(|(&m, &s)| if s > 0.0 { Some(m / s) } else { None })
        .collect();
    let empirical_c = ratios
        .iter()
        .flatten()
        .copied()
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))));
    BoundReport {
        marginals: witness.marginals.clone(),
        ratios,
        empirical_c,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub set: Vec<usize>,
    pub prob: f64,
}

/// Serialized witness measure with its bound report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub floor: f64,
    pub gap: f64,
    pub support: Vec<SupportEntry>,
    pub dual_lambda: Vec<f64>,
    pub marginals: Vec<f64>,
    pub empirical_c: Option<f64>,
}

impl WitnessJson {
    pub fn new(witness: &WitnessMeasure, report: Option<&BoundReport>) -> Self {
        WitnessJson {
            floor: witness.floor,
            gap: witness.gap,
            support: witness
                .support
                .iter()
                .map(|(s, p)| SupportEntry {
                    set: s.indices(),
                    prob: *p,
                })
                .collect(),
            dual_lambda: witness.dual_lambda.clone(),
            marginals: witness.marginals.clone(),
            empirical_c: report.and_then(|r| r.empirical_c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{isomorphism_family, DEFAULT_TOL};
    use crate::testbed::doubling;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_game() {
        let f = isomorphism_family(&Matrix::identity(3), 0.5, DEFAULT_TOL).unwrap();
        let g = build_game(&f, &[1.0; 3]).unwrap();
        assert_eq!(g.columns().len(), 1);
        assert_eq!(g.active_rows(), &[0, 1, 2]);
        let w = solve_game(&g).unwrap();
        assert_abs_diff_eq!(w.floor, 1.0, epsilon = 1e-12);
        assert_eq!(w.support.len(), 1);
        assert_eq!(w.support[0].0, SubsetMask::full(3));
        assert!(w.gap <= CERTIFICATE_GAP);
    }

    #[test]
    fn twin_columns_split_evenly() {
        let t = Matrix::from_columns(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        let f = isomorphism_family(&t, 0.5, DEFAULT_TOL).unwrap();
        assert_eq!(f.maximal_sets().len(), 2);
        let w = solve_game(&build_game(&f, &[1.0, 1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(w.floor, 0.5, epsilon = 1e-12);
        for (_, p) in &w.support {
            assert_abs_diff_eq!(*p, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn doubling_game_matches_hand_solution() {
        let t = doubling(4);
        let f = isomorphism_family(&t, 0.5, DEFAULT_TOL).unwrap();
        let g = build_game(&f, &[1.0; 4]).unwrap();
        assert_eq!(g.columns().len(), 2);
        let w = solve_game(&g).unwrap();
        assert_abs_diff_eq!(w.floor, 0.5, epsilon = 1e-9);
        let expected = [1.0, 0.5, 0.5, 1.0];
        for (m, e) in w.marginals.iter().zip(expected) {
            assert_abs_diff_eq!(*m, e, epsilon = 1e-9);
        }
        // Oracle: scan ν = (p, 1 − p) over a fine grid.
        let best = (0..=10_000)
            .map(|k| {
                let p = k as f64 / 10_000.0;
                g.floor_of(&[p, 1.0 - p])
            })
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(best, w.floor, epsilon = 1e-9);

        let r = theorem2_bound_report(&t, 0.5, &w).unwrap();
        assert_abs_diff_eq!(r.empirical_c.unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn identity_report() {
        let t = Matrix::identity(4);
        let f = isomorphism_family(&t, 0.5, DEFAULT_TOL).unwrap();
        let w = solve_game(&build_game(&f, &[1.0; 4]).unwrap()).unwrap();
        let r = theorem2_bound_report(&t, 0.5, &w).unwrap();
        assert!(r.marginals.iter().all(|&m| (m - 1.0).abs() < 1e-12));
        assert_abs_diff_eq!(r.empirical_c.unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_column_row_is_inactive_and_vacuous() {
        let t = Matrix::from_columns(&[[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]).unwrap();
        let f = isomorphism_family(&t, 0.5, DEFAULT_TOL).unwrap();
        let weights: Vec<f64> = t.column_norms().iter().map(|c| c * c).collect();
        let g = build_game(&f, &weights).unwrap();
        assert_eq!(g.active_rows(), &[0, 2]);
        let w = solve_game(&g).unwrap();
        let r = theorem2_bound_report(&t, 0.5, &w).unwrap();
        assert_eq!(r.ratios[1], None);
        assert!(r.ratios[0].is_some() && r.ratios[2].is_some());
    }

    #[test]
    fn degenerate_games() {
        let f = isomorphism_family(&Matrix::identity(2), 0.5, DEFAULT_TOL).unwrap();
        assert!(matches!(build_game(&f, &[0.0, 0.0]), Err(Error::DegenerateGame(_))));
        assert!(build_game(&f, &[1.0]).is_err());
        assert!(build_game(&f, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn multiplicative_weights_fallback_reports_gap() {
        let t = doubling(6);
        let f = isomorphism_family(&t, 0.5, DEFAULT_TOL).unwrap();
        let g = build_game(&f, &[1.0; 6]).unwrap();
        let opts = SolverOptions {
            column_cap: 0,
            mw_rounds: 5_000,
            ..SolverOptions::default()
        };
        let w = solve_game_with(&g, &opts).unwrap();
        assert_eq!(w.method, SolveMethod::MultiplicativeWeights);
        let exact = solve_game(&g).unwrap();
        assert!(w.floor <= exact.floor + 1e-12);
        assert!(w.floor + w.gap >= exact.floor - 1e-12);
        assert!(w.gap < 0.05, "gap {}", w.gap);
        let sum: f64 = w.support.iter().map(|(_, p)| p).sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let t = doubling(4);
        let f = isomorphism_family(&t, 0.5, DEFAULT_TOL).unwrap();
        let w = solve_game(&build_game(&f, &[1.0; 4]).unwrap()).unwrap();
        let r = theorem2_bound_report(&t, 0.5, &w).unwrap();
        let js = WitnessJson::new(&w, Some(&r));
        let text = serde_json::to_string(&js).unwrap();
        assert_eq!(serde_json::from_str::<WitnessJson>(&text).unwrap(), js);
    }
}
