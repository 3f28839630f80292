//! Matrix, measure and grid ingestion plus the error type mapped to exit codes.

use std::fs;
use std::path::Path;

use isolab::testbed::{self, EnsembleSpec};
use isolab::{Error, IndexMeasure, Matrix};

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Io(String),
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Lib(e) => match e {
                Error::SizeCap { .. } => 3,
                Error::TraceFailed(_) | Error::NoCertificate { .. } => 4,
                Error::Internal(_) | Error::NoConvergence { .. } => 1,
                _ => 2,
            },
            CliError::Io(_) | CliError::Usage(_) => 2,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Lib(e) => e.to_string(),
            CliError::Io(m) | CliError::Usage(m) => m.clone(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(format!("serialization failed: {e}"))
    }
}

pub type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Reads a matrix file or builds sample 0 of a generator spec.
pub fn load_matrix(input: &str, seed: Option<u64>) -> CliResult<Matrix> {
    if input.starts_with("gen:") {
        let spec = generator(input, seed)?;
        return Ok(testbed::generate_one(spec.kind, spec.n, spec.sample_seed(0))?);
    }
    let text = fs::read_to_string(input).map_err(|e| CliError::Io(format!("cannot read {input}: {e}")))?;
    Ok(text.parse::<Matrix>()?)
}

pub fn generator(input: &str, seed: Option<u64>) -> CliResult<EnsembleSpec> {
    let mut spec = EnsembleSpec::parse_generator(input)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

/// `counting`, `file:PATH` (one weight per line) or `w0,w1,…`.
pub fn load_measure(spec: &str, n: usize) -> CliResult<IndexMeasure> {
    if spec == "counting" {
        return Ok(IndexMeasure::counting(n));
    }
    let weights = if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
        parse_list(text.lines().map(str::trim).filter(|l| !l.is_empty()))?
    } else {
        parse_list(spec.split(',').map(str::trim))?
    };
    if weights.len() != n {
        return Err(CliError::Usage(format!("measure has {} weights, expected {n}", weights.len())));
    }
    Ok(IndexMeasure::general(weights)?)
}

pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    parse_list(text.split(',').map(str::trim))
}

fn parse_list<'a>(items: impl Iterator<Item = &'a str>) -> CliResult<Vec<f64>> {
    items
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Usage(format!("not a finite number: {s:?}")))
        })
        .collect()
}

pub fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
