//! Deterministic operator ensembles and the empirical-constant estimator.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64`. Its output stream is specified independently of platform
//! and word size, so a `(kind, n, seed)` triple always yields the same matrix.
//! Gaussian entries use the Box–Muller transform on those uniforms. Sample `k`
//! of an ensemble with base seed `s` is generated from seed `s + k`
//! (wrapping), so every report row can be regenerated on its own.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, MAX_DIM};
use crate::mask::SubsetMask;
use crate::prooftrace::{self, DEFAULT_C};
use crate::select::{self, IndexMeasure};
use crate::structure::{self, IsomorphismChecker, DEFAULT_TOL, ENUMERATION_CAP};
use crate::witness::{self, build_game, solve_game};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnsembleKind {
    Identity,
    /// Column `j` is `e_{⌊(j+1)/2⌋}`, i.e. `Te_i = e_⌈(i+1)/2⌉` in one-based
    /// indexing. Columns `2k−1` and `2k` coincide.
    Doubling,
    /// Consecutive column pairs `(2k, 2k+1)` with inner product ρ, orthogonal
    /// to everything else.
    PairCorrelation(f64),
    /// Unit columns with every pairwise inner product equal to ρ.
    UniformCorrelation(f64),
    /// Gaussian matrix with columns rescaled to unit norm.
    GaussianNormalized,
    /// Product of `n×r` and `r×n` Gaussian matrices, columns rescaled to unit
    /// norm.
    RankDeficient(usize),
}

impl EnsembleKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnsembleKind::Identity => "identity",
            EnsembleKind::Doubling => "doubling",
            EnsembleKind::PairCorrelation(_) => "pair_correlation",
            EnsembleKind::UniformCorrelation(_) => "uniform_correlation",
            EnsembleKind::GaussianNormalized => "gaussian_normalized",
            EnsembleKind::RankDeficient(_) => "rank_deficient",
        }
    }

    fn is_random(&self) -> bool {
        matches!(self, EnsembleKind::GaussianNormalized | EnsembleKind::RankDeficient(_))
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleKind::PairCorrelation(rho) | EnsembleKind::UniformCorrelation(rho) => {
                write!(f, "{}:{rho}", self.name())
            }
            EnsembleKind::RankDeficient(r) => write!(f, "{}:{r}", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub seed: u64,
    pub count: usize,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize, seed: u64, count: usize) -> Self {
        EnsembleSpec { kind, n, seed, count }
    }

    /// Parses `gen:kind:n[:param][:seed]`. Kinds that take a parameter
    /// (`pair_correlation`, `uniform_correlation`, `rank_deficient`) read it
    /// before the seed. The count is 1.
    pub fn parse_generator(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.first() != Some(&"gen") || parts.len() < 3 {
            return Err(Error::InvalidSpec(format!(
                "expected gen:kind:n[:param][:seed], got {text:?}"
            )));
        }
        let n: usize = parts[2]
            .parse()
            .map_err(|e| Error::InvalidSpec(format!("dimension {:?}: {e}", parts[2])))?;
        let mut rest = parts[3..].iter();
        let float_param = |p: Option<&&str>| -> Result<f64> {
            let p = p.ok_or_else(|| Error::InvalidSpec(format!("{} needs a parameter", parts[1])))?;
            p.parse()
                .map_err(|e| Error::InvalidSpec(format!("parameter {p:?}: {e}")))
        };
        let kind = match parts[1] {
            "identity" => EnsembleKind::Identity,
            "doubling" => EnsembleKind::Doubling,
            "gaussian_normalized" => EnsembleKind::GaussianNormalized,
            "pair_correlation" => EnsembleKind::PairCorrelation(float_param(rest.next())?),
            "uniform_correlation" => EnsembleKind::UniformCorrelation(float_param(rest.next())?),
            "rank_deficient" => {
                let p = rest
                    .next()
                    .ok_or_else(|| Error::InvalidSpec("rank_deficient needs a rank".into()))?;
                EnsembleKind::RankDeficient(
                    p.parse()
                        .map_err(|e| Error::InvalidSpec(format!("rank {p:?}: {e}")))?,
                )
            }
            other => return Err(Error::InvalidSpec(format!("unknown ensemble kind {other:?}"))),
        };
        let seed = match rest.next() {
            Some(s) => s
                .parse()
                .map_err(|e| Error::InvalidSpec(format!("seed {s:?}: {e}")))?,
            None => 0,
        };
        if let Some(extra) = rest.next() {
            return Err(Error::InvalidSpec(format!("unexpected field {extra:?}")));
        }
        let spec = EnsembleSpec::new(kind, n, seed, 1);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_DIM {
            return Err(Error::InvalidSpec(format!(
                "dimension must lie in 1..={MAX_DIM}, got {}",
                self.n
            )));
        }
        match self.kind {
            EnsembleKind::PairCorrelation(rho) if rho.is_nan() || rho.abs() >= 1.0 => Err(Error::InvalidSpec(
                format!("pair correlation needs |ρ| < 1, got {rho}"),
            )),
            EnsembleKind::UniformCorrelation(rho) => {
                let lower = if self.n > 1 { -1.0 / (self.n as f64 - 1.0) } else { -1.0 };
                if rho > lower && rho < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!(
                        "uniform correlation in dimension {} needs {lower} < ρ < 1, got {rho}",
                        self.n
                    )))
                }
            }
            EnsembleKind::RankDeficient(r) if r == 0 || r >= self.n => Err(Error::InvalidSpec(
                format!("rank must lie in 1..{}, got {r}", self.n),
            )),
            _ => Ok(()),
        }
    }

    /// Seed used for sample `k`.
    pub fn sample_seed(&self, k: usize) -> u64 {
        self.seed.wrapping_add(k as u64)
    }
}

/// `count` matrices from the ensemble. Deterministic kinds repeat the same
/// matrix.
pub fn generate(spec: &EnsembleSpec) -> Result<Vec<Matrix>> {
    spec.validate()?;
    (0..spec.count)
        .map(|k| generate_one(spec.kind, spec.n, spec.sample_seed(k)))
        .collect()
}

pub fn generate_one(kind: EnsembleKind, n: usize, seed: u64) -> Result<Matrix> {
    EnsembleSpec::new(kind, n, seed, 1).validate()?;
    match kind {
        EnsembleKind::Identity => Ok(Matrix::identity(n)),
        EnsembleKind::Doubling => Ok(doubling(n)),
        EnsembleKind::PairCorrelation(rho) => {
            let mut m = Matrix::identity(n).as_slice().to_vec();
            let c = (1.0 - rho * rho).sqrt();
            for k in 0..n / 2 {
                let (a, b) = (2 * k, 2 * k + 1);
                m[a * n + b] = rho;
                m[b * n + b] = c;
            }
            Matrix::new(n, n, m)
        }
        EnsembleKind::UniformCorrelation(rho) => {
            let mut g = vec![rho; n * n];
            for i in 0..n {
                g[i * n + i] = 1.0;
            }
            cholesky_factor(&Matrix::new(n, n, g)?)
        }
        EnsembleKind::GaussianNormalized => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = gaussian_matrix(&mut rng, n, n)?;
            normalize_columns_strict(&g)
        }
        EnsembleKind::RankDeficient(r) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let left = gaussian_matrix(&mut rng, n, r)?;
            let right = gaussian_matrix(&mut rng, r, n)?;
            normalize_columns_strict(&left.matmul(&right)?)
        }
    }
}

/// The doubling operator on `ℓ₂ⁿ`: column `j` is `e_{⌊(j+1)/2⌋}`.
pub fn doubling(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n).as_slice().to_vec();
    for j in 0..n {
        m[j.div_ceil(2) * n + j] = 1.0;
    }
    Matrix::new(n, n, m).expect("doubling operator is well formed")
}

/// Index pairs `{2k − 1, 2k}` whose columns coincide in [`doubling`].
pub fn doubling_collisions(n: usize) -> Vec<(usize, usize)> {
    (1..)
        .map(|k| (2 * k - 1, 2 * k))
        .take_while(|&(_, b)| b < n)
        .collect()
}

/// Upper-triangular `R` with `RᵀR = G`; the columns of `R` realize the Gram
/// matrix `G`.
pub fn cholesky_factor(g: &Matrix) -> Result<Matrix> {
    if !g.is_square() {
        return Err(Error::InvalidInput("Cholesky needs a square matrix".into()));
    }
    let n = g.rows();
    let mut r = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..=j {
            let s: f64 = (0..i).map(|k| r[k * n + i] * r[k * n + j]).sum();
            if i == j {
                let d = g.get(j, j) - s;
                if d.is_nan() || d <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not positive definite (pivot {j} is {d})"
                    )));
                }
                r[j * n + j] = d.sqrt();
            } else {
                r[i * n + j] = (g.get(i, j) - s) / r[i * n + i];
            }
        }
    }
    Matrix::new(n, n, r)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Result<Matrix> {
    let mut data = Vec::with_capacity(rows * cols + 1);
    while data.len() < rows * cols {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        data.push(radius * angle.cos());
        data.push(radius * angle.sin());
    }
    data.truncate(rows * cols);
    Matrix::new(rows, cols, data)
}

fn normalize_columns_strict(m: &Matrix) -> Result<Matrix> {
    let norms = m.column_norms();
    if let Some(j) = norms.iter().position(|&c| c == 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let mut data = m.as_slice().to_vec();
    let cols = m.cols();
    for (pos, x) in data.iter_mut().enumerate() {
        *x /= norms[pos % cols];
    }
    Matrix::new(m.rows(), cols, data)
}

/// Monte-Carlo estimate of the probability that a uniform random subset is an
/// ε-isomorphism set of the doubling operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub hits: usize,
    pub estimate: f64,
    /// Binomial standard error at the exact value (estimate if unavailable).
    pub std_error: f64,
    /// Member count over `2ⁿ`, when `n` is within the enumeration cap.
    pub exact: Option<f64>,
    /// `(3/4)^{#colliding pairs}`.
    pub analytic: f64,
}

pub fn random_subset_rate(n: usize, epsilon: f64, trials: usize, seed: u64) -> Result<RateEstimate> {
    let t = generate_one(EnsembleKind::Doubling, n, seed)?;
    let checker = IsomorphismChecker::new(&t, epsilon, DEFAULT_TOL)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = SubsetMask::full(n).bits();
    let mut hits = 0;
    for _ in 0..trials {
        let sigma = SubsetMask::from_bits(n, rng.random::<u64>() & full)?;
        if checker.contains(&sigma)? {
            hits += 1;
        }
    }
    let exact = if n <= ENUMERATION_CAP {
        let family = structure::isomorphism_family(&t, epsilon, DEFAULT_TOL)?;
        Some(family.member_count() as f64 / (1u64 << n) as f64)
    } else {
        None
    };
    let estimate = if trials > 0 { hits as f64 / trials as f64 } else { f64::NAN };
    let p = exact.unwrap_or(estimate);
    Ok(RateEstimate {
        n,
        epsilon,
        trials,
        hits,
        estimate,
        std_error: (p * (1.0 - p) / trials.max(1) as f64).sqrt(),
        exact,
        analytic: 0.75f64.powi(doubling_collisions(n).len() as i32),
    })
}

/// One `(sample, ε, C)` cell of the estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub ensemble: String,
    pub n: usize,
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c_param: f64,
    pub seed: u64,
    pub c_eq2: Option<f64>,
    pub c_eq4: Option<f64>,
    pub c_eq6: Option<f64>,
    pub c_eq9: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub rows: Vec<EstimateRow>,
}

/// Min and median of one constant over the samples of a group.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub ensemble: String,
    pub n: usize,
    pub epsilon: f64,
    pub c_param: f64,
    pub samples: usize,
    /// `(min, median)` per constant, in the order eq2, eq4, eq6, eq9.
    pub stats: [Option<(f64, f64)>; 4],
}

pub const CSV_HEADER: &str = "ensemble,n,epsilon,C,seed,c_eq2,c_eq4,c_eq6,c_eq9,status";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl EstimateReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let header: Vec<&str> = CSV_HEADER.split(',').collect();
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.ensemble.clone(),
                r.n.to_string(),
                r.epsilon.to_string(),
                r.c_param.to_string(),
                r.seed.to_string(),
                fmt_opt(r.c_eq2),
                fmt_opt(r.c_eq4),
                fmt_opt(r.c_eq6),
                fmt_opt(r.c_eq9),
                r.status.clone(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Groups rows by `(ensemble, n, ε, C)` in first-appearance order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut groups: Vec<(SummaryRow, [Vec<f64>; 4])> = Vec::new();
        for r in &self.rows {
            let pos = groups.iter().position(|(g, _)| {
                g.ensemble == r.ensemble && g.n == r.n && g.epsilon == r.epsilon && g.c_param == r.c_param
            });
            let idx = match pos {
                Some(i) => i,
                None => {
                    groups.push((
                        SummaryRow {
                            ensemble: r.ensemble.clone(),
                            n: r.n,
                            epsilon: r.epsilon,
                            c_param: r.c_param,
                            samples: 0,
                            stats: [None; 4],
                        },
                        Default::default(),
                    ));
                    groups.len() - 1
                }
            };
            let (g, vals) = &mut groups[idx];
            g.samples += 1;
            for (k, v) in [r.c_eq2, r.c_eq4, r.c_eq6, r.c_eq9].into_iter().enumerate() {
                if let Some(v) = v {
                    vals[k].push(v);
                }
            }
        }
        groups
            .into_iter()
            .map(|(mut g, vals)| {
                for (k, mut v) in vals.into_iter().enumerate() {
                    if v.is_empty() {
                        continue;
                    }
                    v.sort_by(f64::total_cmp);
                    let mid = v.len() / 2;
                    let median = if v.len() % 2 == 1 {
                        v[mid]
                    } else {
                        0.5 * (v[mid - 1] + v[mid])
                    };
                    g.stats[k] = Some((v[0], median));
                }
                g
            })
            .collect()
    }

    /// Plot data: one line per `(ensemble, n, ε, C)` with min and median of
    /// each constant, tab separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "ensemble\tn\tepsilon\tC\tsamples\tmin_c_eq2\tmedian_c_eq2\tmin_c_eq4\tmedian_c_eq4\tmin_c_eq6\tmedian_c_eq6\tmin_c_eq9\tmedian_c_eq9\n",
        );
        for g in self.summary() {
            out.push_str(&format!("{}\t{}\t{}\t{}\t{}", g.ensemble, g.n, g.epsilon, g.c_param, g.samples));
            for s in g.stats {
                let (lo, med) = s.map_or((None, None), |(a, b)| (Some(a), Some(b)));
                out.push_str(&format!("\t{}\t{}", fmt_opt(lo), fmt_opt(med)));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("csv: {e}"))
}

/// Runs witness, selection and the proof pipeline on every sample for every
/// `(ε, C)` pair. A failing cell becomes a row with a `failed: …` status.
///
/// Samples are processed on scoped worker threads; rows come back in sample
/// order, so the report does not depend on scheduling.
pub fn estimate_constants(specs: &[EnsembleSpec], epsilons: &[f64], cs: &[f64]) -> Result<EstimateReport> {
    let cs: Vec<f64> = if cs.is_empty() { vec![DEFAULT_C] } else { cs.to_vec() };
    let mut jobs = Vec::new();
    for spec in specs {
        spec.validate()?;
        jobs.extend((0..spec.count).map(|k| (spec, k)));
    }
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(workers).max(1);
    let per_chunk: Vec<Vec<EstimateRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                let cs = &cs;
                scope.spawn(move || {
                    part.iter()
                        .flat_map(|&(spec, k)| sample_rows(spec, k, epsilons, cs))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("estimator worker panicked"))
            .collect()
    });
    Ok(EstimateReport {
        rows: per_chunk.into_iter().flatten().collect(),
    })
}

fn sample_rows(spec: &EnsembleSpec, k: usize, epsilons: &[f64], cs: &[f64]) -> Vec<EstimateRow> {
    let seed = spec.sample_seed(k);
    let matrix = generate_one(spec.kind, spec.n, seed);
    let mut rows = Vec::new();
    for &eps in epsilons {
        // eq2 and eq6 do not depend on C.
        let fixed = matrix
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|t| eq2_eq6(t, eps).map_err(|e| e.to_string()));
        for &c in cs {
            let mut row = EstimateRow {
                ensemble: spec.kind.to_string(),
                n: spec.n,
                epsilon: eps,
                c_param: c,
                seed: if spec.kind.is_random() { seed } else { spec.seed },
                c_eq2: None,
                c_eq4: None,
                c_eq6: None,
                c_eq9: None,
                status: "ok".into(),
            };
            let outcome = fixed.clone().and_then(|(c2, c6)| {
                let t = matrix.as_ref().map_err(|e| e.to_string())?;
                let (c4, c9) = eq4_eq9(t, eps, c).map_err(|e| e.to_string())?;
                Ok((c2, c4, c6, c9))
            });
            match outcome {
                Ok((c2, c4, c6, c9)) => {
                    row.c_eq2 = c2;
                    row.c_eq4 = c4;
                    row.c_eq6 = c6;
                    row.c_eq9 = c9;
                }
                Err(msg) => row.status = format!("failed: {msg}"),
            }
            rows.push(row);
        }
    }
    rows
}

fn eq2_eq6(t: &Matrix, eps: f64) -> Result<(Option<f64>, Option<f64>)> {
    let family = structure::isomorphism_family(t, eps, DEFAULT_TOL)?;
    let weights: Vec<f64> = t.column_norms().iter().map(|c| c * c).collect();
    let w = solve_game(&build_game(&family, &weights)?)?;
    let c2 = witness::theorem2_bound_report(t, eps, &w)?.empirical_c;

    let (tn, _) = prooftrace::normalize_operator(t)?;
    let mu = IndexMeasure::counting(t.cols());
    let sel = select::select_exhaustive(&tn, eps, &mu)?;
    let c6 = select::bound_reports(&tn, eps, &mu, &sel)?.eq6;
    Ok((c2, c6))
}

fn eq4_eq9(t: &Matrix, eps: f64, c: f64) -> Result<(Option<f64>, Option<f64>)> {
    let mu = IndexMeasure::counting(t.cols());
    let trace = prooftrace::run_pipeline(t, eps, &mu, c)?;
    let c9 = if trace.s_norm > 0.0 {
        let delta = eps / trace.s_norm;
        let fam = structure::suppression_family(&trace.s, delta, DEFAULT_TOL)?;
        let w = solve_game(&build_game(&fam, &vec![1.0; fam.n()])?)?;
        witness::suppression_bound_report(delta, &w)?.empirical_c
    } else {
        None
    };
    Ok((trace.eq4_ratio, c9))
}
