use serde::{Deserialize, Serialize};

use isolab::prooftrace::{self, ProofTrace};
use isolab::select::{self, SelectionJson, SelectionMethod, SelectionResult};
use isolab::structure::{self, IsoFamily, IsomorphismChecker, SuppressionChecker};
use isolab::testbed;
use isolab::witness::{self, WitnessJson};
use isolab::{Error, Matrix, SubsetMask};

use crate::input::{self, CliError, CliResult};
use crate::{CheckArgs, EstimateArgs, FamilyArgs, Format, Method, RateArgs, SelectArgs, TraceArgs};

/// Output of `check`.
#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckJson {
    pub verdict: bool,
    pub sigma: Vec<usize>,
    /// Normalized Gram spectrum, or the spectrum of `Q_σSQ_σ` for suppression.
    pub spectrum: Vec<f64>,
    /// `max |λ − 1|` for isomorphism, `‖Q_σSQ_σ‖ / ‖S‖` for suppression.
    pub distortion: f64,
    pub free_indices: Vec<usize>,
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn check(a: &CheckArgs) -> CliResult {
    let t = input::load_matrix(&a.common.input, a.common.seed)?;
    let sigma = SubsetMask::parse(t.cols(), &a.sigma)?;
    let report = if let Some(delta) = a.delta {
        let checker = SuppressionChecker::new(&t, delta, a.common.tol)?;
        let sub = isolab::linalg::principal_submatrix(&t, &sigma)?;
        let norm = checker.restricted_norm(&sigma)?;
        CheckJson {
            verdict: checker.contains(&sigma)?,
            sigma: sigma.indices(),
            spectrum: isolab::linalg::sym_eigs(&sub)?.eigenvalues,
            distortion: if checker.s_norm() > 0.0 { norm / checker.s_norm() } else { 0.0 },
            free_indices: Vec::new(),
        }
    } else {
        let eps = a
            .epsilon
            .ok_or_else(|| CliError::Usage("check needs --epsilon or --delta".into()))?;
        let checker = IsomorphismChecker::new(&t, eps, a.common.tol)?;
        CheckJson {
            verdict: checker.contains(&sigma)?,
            sigma: sigma.indices(),
            spectrum: checker.spectrum(&sigma)?.eigenvalues,
            distortion: checker.distortion(&sigma)?,
            free_indices: checker.free_indices().indices(),
        }
    };
    let text = match a.format {
        Format::Json => json(&report)?,
        Format::Text => {
            let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            format!(
                "verdict: {}\nsigma: {}\nspectrum: {}\ndistortion: {}\n",
                report.verdict,
                sigma,
                join(&report.spectrum),
                report.distortion
            )
        }
        other => return Err(CliError::Usage(format!("check cannot emit {other:?}"))),
    };
    input::emit(a.common.out.as_deref(), &text)
}

fn family(a: &FamilyArgs, t: &Matrix) -> CliResult<IsoFamily> {
    Ok(match (a.epsilon, a.delta) {
        (_, Some(delta)) => structure::suppression_family(t, delta, a.common.tol)?,
        (Some(eps), None) => structure::isomorphism_family(t, eps, a.common.tol)?,
        (None, None) => return Err(CliError::Usage("need --epsilon or --delta".into())),
    })
}

pub fn enumerate(a: &FamilyArgs) -> CliResult {
    let t = input::load_matrix(&a.common.input, a.common.seed)?;
    let fam = family(a, &t)?;
    input::emit(a.common.out.as_deref(), &json(&fam.to_json())?)
}

/// Isomorphism families use weights `‖Te_i‖²`, suppression families unit
/// weights.
pub fn witness(a: &FamilyArgs) -> CliResult {
    let t = input::load_matrix(&a.common.input, a.common.seed)?;
    let fam = family(a, &t)?;
    let weights: Vec<f64> = match a.delta {
        Some(_) => vec![1.0; t.cols()],
        None => t.column_norms().iter().map(|c| c * c).collect(),
    };
    let w = witness::solve_game(&witness::build_game(&fam, &weights)?)?;
    let report = if w.is_certified() {
        Some(match (a.epsilon, a.delta) {
            (_, Some(delta)) => witness::suppression_bound_report(delta, &w)?,
            (Some(eps), None) => witness::theorem2_bound_report(&t, eps, &w)?,
            (None, None) => unreachable!("family() rejected this"),
        })
    } else {
        None
    };
    input::emit(a.common.out.as_deref(), &json(&WitnessJson::new(&w, report.as_ref()))?)?;
    if !w.is_certified() {
        return Err(Error::NoCertificate {
            primal: w.floor,
            dual: w.floor + w.gap,
        }
        .into());
    }
    Ok(())
}

/// The operator is rescaled to norm one before selection; `pipeline` does the
/// same internally.
pub fn select(a: &SelectArgs) -> CliResult {
    let t = input::load_matrix(&a.common.input, a.common.seed)?;
    let mu = input::load_measure(&a.mu, t.cols())?;
    let (tn, scale) = prooftrace::normalize_operator(&t)?;
    if scale != 1.0 {
        eprintln!("isolab: note: operator rescaled by {scale} to norm one");
    }
    let result = match a.method {
        Method::Exhaustive => select::select_exhaustive(&tn, a.epsilon, &mu)?,
        Method::Greedy => select::select_greedy(&tn, a.epsilon, &mu)?,
        Method::Pipeline => {
            let trace = prooftrace::run_pipeline(&t, a.epsilon, &mu, a.c)?;
            SelectionResult::new(SelectionMethod::Pipeline, &tn, a.epsilon, &mu, trace.sigma2_mask())
        }
    };
    let reports = select::bound_reports(&tn, a.epsilon, &mu, &result)?;
    input::emit(a.common.out.as_deref(), &json(&SelectionJson::new(&result, reports))?)
}

/// A failed trace is still written out before exiting with code 4.
pub fn trace(a: &TraceArgs) -> CliResult {
    let t = input::load_matrix(&a.common.input, a.common.seed)?;
    let mu = input::load_measure(&a.mu, t.cols())?;
    match prooftrace::run_pipeline(&t, a.epsilon, &mu, a.c) {
        Ok(tr) => input::emit(a.common.out.as_deref(), &json(&tr)?),
        Err(Error::TraceFailed(tr)) => {
            input::emit(a.common.out.as_deref(), &json::<ProofTrace>(&tr)?)?;
            Err(Error::TraceFailed(tr).into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn estimate(a: &EstimateArgs) -> CliResult {
    let mut specs = Vec::new();
    for inp in &a.inputs {
        let mut spec = input::generator(inp, a.seed)?;
        spec.count = a.count;
        specs.push(spec);
    }
    let eps = input::parse_grid(&a.epsilon)?;
    let cs = input::parse_grid(&a.c)?;
    let report = testbed::estimate_constants(&specs, &eps, &cs)?;
    let text = match a.format {
        Format::Csv => report.to_csv()?,
        Format::Tsv => report.to_tsv(),
        other => return Err(CliError::Usage(format!("estimate cannot emit {other:?}"))),
    };
    input::emit(a.out.as_deref(), &text)
}

pub fn rate(a: &RateArgs) -> CliResult {
    let r = testbed::random_subset_rate(a.n, a.epsilon, a.trials, a.seed)?;
    input::emit(a.out.as_deref(), &json(&r)?)
}
