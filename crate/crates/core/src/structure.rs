//! Membership in the isomorphism structure Σ(T, ε) and the suppression
//! structure Σ′(S, δ), and exact enumeration of both as downward-closed
//! families.
//!
//! A set σ is an ε-isomorphism set of `T` when the Gram matrix of the
//! normalized columns `{Te_i / ‖Te_i‖ : i ∈ σ}` has its whole spectrum in
//! `[1 − ε, 1 + ε]`. Zero columns are ignored by that test, so they belong to
//! every member ("free indices").
//!
//! A set σ is a suppression set of a zero-diagonal symmetric `S` when
//! `‖Q_σ S Q_σ‖ ≤ δ‖S‖`.
//!
//! Both properties are inherited by subsets, so a family is stored as the
//! antichain of its maximal members.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::mask::SubsetMask;

/// Boundary slack on spectral tests. Membership at the boundary is inclusive.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest dimension the enumeration entry points accept.
pub const ENUMERATION_CAP: usize = 24;

/// Diagonal entries of a suppression operator must be this close to zero.
pub const ZERO_DIAGONAL_TOL: f64 = 1e-12;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be a finite nonnegative number, got {tol}"
        )));
    }
    Ok(())
}

/// Membership test for Σ(T, ε) with the normalized Gram matrix precomputed.
#[derive(Clone, Debug)]
pub struct IsomorphismChecker {
    gram: Matrix,
    free: SubsetMask,
    epsilon: f64,
    tol: f64,
}

impl IsomorphismChecker {
    pub fn new(t: &Matrix, epsilon: f64, tol: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_tol(tol)?;
        let n = t.cols();
        if n > crate::mask::MAX_MASK_DIM {
            return Err(Error::SizeCap {
                n,
                cap: crate::mask::MAX_MASK_DIM,
            });
        }
        let mut free = SubsetMask::empty(n);
        for (j, norm) in t.column_norms().into_iter().enumerate() {
            if norm == 0.0 {
                free = free.with(j);
            }
        }
        // Zero columns get an identity row/column so they never influence the
        // spectrum; `spectrum` strips them anyway.
        let nonzero = free.complement();
        let inner = linalg::gram_normalized(t, &nonzero)?;
        let mut gram = Matrix::identity(n);
        let idx = nonzero.indices();
        let mut data = gram.as_slice().to_vec();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                data[i * n + j] = inner.get(a, b);
            }
        }
        gram = Matrix::new(n, n, data)?;
        Ok(IsomorphismChecker {
            gram,
            free,
            epsilon,
            tol,
        })
    }

    pub fn n(&self) -> usize {
        self.free.n()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Indices whose column is zero.
    pub fn free_indices(&self) -> SubsetMask {
        self.free
    }

    /// Normalized Gram matrix over all nonzero columns (identity rows on zero
    /// columns).
    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    /// Spectrum of the normalized Gram matrix over `σ` minus the free indices.
    pub fn spectrum(&self, sigma: &SubsetMask) -> Result<linalg::Spectrum> {
        self.check_dim(sigma)?;
        let core = sigma.difference(self.free);
        linalg::sym_eigs(&linalg::principal_submatrix(&self.gram, &core)?)
    }

    /// Largest deviation `max |λ − 1|` over the Gram spectrum of `σ`.
    pub fn distortion(&self, sigma: &SubsetMask) -> Result<f64> {
        let spec = self.spectrum(sigma)?;
        Ok(spec
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, &x| m.max((x - 1.0).abs())))
    }

    pub fn contains(&self, sigma: &SubsetMask) -> Result<bool> {
        self.check_dim(sigma)?;
        if sigma.difference(self.free).len() <= 1 {
            return Ok(true);
        }
        let spec = self.spectrum(sigma)?;
        let lo = 1.0 - self.epsilon - self.tol;
        let hi = 1.0 + self.epsilon + self.tol;
        Ok(spec.eigenvalues.iter().all(|&x| x >= lo && x <= hi))
    }

    fn check_dim(&self, sigma: &SubsetMask) -> Result<()> {
        if sigma.n() != self.n() {
            return Err(Error::InvalidInput(format!(
                "subset over {} indices used with an operator on {} columns",
                sigma.n(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Decides whether `sigma` is a set of ε-isomorphism of `t`.
pub fn check_isomorphism(t: &Matrix, epsilon: f64, sigma: &SubsetMask, tol: f64) -> Result<bool> {
    IsomorphismChecker::new(t, epsilon, tol)?.contains(sigma)
}

/// Membership test for Σ′(S, δ) with `‖S‖` precomputed.
#[derive(Clone, Debug)]
pub struct SuppressionChecker {
    s: Matrix,
    s_norm: f64,
    delta: f64,
    tol: f64,
}

impl SuppressionChecker {
    pub fn new(s: &Matrix, delta: f64, tol: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive and finite, got {delta}"
            )));
        }
        check_tol(tol)?;
        if !s.is_square() {
            return Err(Error::InvalidInput(format!(
                "suppression operator must be square, got {}x{}",
                s.rows(),
                s.cols()
            )));
        }
        if s.rows() > crate::mask::MAX_MASK_DIM {
            return Err(Error::SizeCap {
                n: s.rows(),
                cap: crate::mask::MAX_MASK_DIM,
            });
        }
        for i in 0..s.rows() {
            let d = s.get(i, i);
            if d.abs() > ZERO_DIAGONAL_TOL {
                return Err(Error::DiagonalViolation { index: i, value: d });
            }
        }
        // Also rejects asymmetric input.
        let s_norm = linalg::sym_operator_norm(s)?;
        Ok(SuppressionChecker {
            s: s.clone(),
            s_norm,
            delta,
            tol,
        })
    }

    pub fn n(&self) -> usize {
        self.s.rows()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn s_norm(&self) -> f64 {
        self.s_norm
    }

    /// `‖Q_σ S Q_σ‖`.
    pub fn restricted_norm(&self, sigma: &SubsetMask) -> Result<f64> {
        if sigma.n() != self.n() {
            return Err(Error::InvalidInput(format!(
                "subset over {} indices used with a {}x{} operator",
                sigma.n(),
                self.n(),
                self.n()
            )));
        }
        linalg::sym_operator_norm(&linalg::principal_submatrix(&self.s, sigma)?)
    }

    pub fn contains(&self, sigma: &SubsetMask) -> Result<bool> {
        if (self.s_norm == 0.0 || sigma.len() <= 1) && sigma.n() == self.n() {
            return Ok(true);
        }
        let restricted = self.restricted_norm(sigma)?;
        Ok(restricted <= self.delta * self.s_norm + self.tol)
    }
}

/// Decides whether `‖Q_σ S Q_σ‖ ≤ δ‖S‖` (up to `tol`).
pub fn check_suppression(s: &Matrix, delta: f64, sigma: &SubsetMask, tol: f64) -> Result<bool> {
    SuppressionChecker::new(s, delta, tol)?.contains(sigma)
}

/// Which structure a family materializes, with its parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FamilyKind {
    Isomorphism { epsilon: f64 },
    Suppression { delta: f64 },
    /// Any other downward-closed predicate.
    Custom,
}

impl FamilyKind {
    pub fn label(&self) -> &'static str {
        match self {
            FamilyKind::Isomorphism { .. } => "isomorphism",
            FamilyKind::Suppression { .. } => "suppression",
            FamilyKind::Custom => "custom",
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match *self {
            FamilyKind::Isomorphism { epsilon } => Some(epsilon),
            FamilyKind::Suppression { delta } => Some(delta),
            FamilyKind::Custom => None,
        }
    }
}

/// A downward-closed family of subsets of `0..n`, stored as the antichain of
/// its maximal members in lexicographic order.
///
/// Free indices (zero columns of an isomorphism family) belong to every
/// member, so they appear in every maximal set.
#[derive(Clone, Debug, PartialEq)]
pub struct IsoFamily {
    n: usize,
    kind: FamilyKind,
    maximal_sets: Vec<SubsetMask>,
    free_indices: SubsetMask,
}

impl IsoFamily {
    /// Builds a family from arbitrary generating sets: keeps the maximal ones,
    /// deduplicates and sorts them.
    pub fn from_generators(
        n: usize,
        kind: FamilyKind,
        generators: impl IntoIterator<Item = SubsetMask>,
        free_indices: SubsetMask,
    ) -> Result<Self> {
        let mut sets: Vec<SubsetMask> = Vec::new();
        for g in generators {
            if g.n() != n {
                return Err(Error::InvalidInput(format!(
                    "generator over {} indices in a family over {n}",
                    g.n()
                )));
            }
            sets.push(g.union(free_indices));
        }
        if sets.is_empty() {
            sets.push(free_indices);
        }
        sets.sort_by_key(|s| std::cmp::Reverse(s.len()));
        let mut maximal: Vec<SubsetMask> = Vec::new();
        for s in sets {
            if !maximal.iter().any(|m| s.is_subset_of(m)) {
                maximal.push(s);
            }
        }
        maximal.sort();
        Ok(IsoFamily {
            n,
            kind,
            maximal_sets: maximal,
            free_indices,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn maximal_sets(&self) -> &[SubsetMask] {
        &self.maximal_sets
    }

    pub fn free_indices(&self) -> SubsetMask {
        self.free_indices
    }

    /// True iff `sigma` lies below some maximal set.
    pub fn contains(&self, sigma: &SubsetMask) -> Result<bool> {
        if sigma.n() != self.n {
            return Err(Error::InvalidInput(format!(
                "subset over {} indices queried against a family over {}",
                sigma.n(),
                self.n
            )));
        }
        Ok(self.maximal_sets.iter().any(|m| sigma.is_subset_of(m)))
    }

    /// Every member, each exactly once, in no particular order.
    pub fn members(&self) -> Vec<SubsetMask> {
        let mut out = Vec::new();
        for (k, m) in self.maximal_sets.iter().enumerate() {
            for s in m.subsets() {
                // Count each member at its first covering maximal set.
                if !self.maximal_sets[..k].iter().any(|p| s.is_subset_of(p)) {
                    out.push(s);
                }
            }
        }
        out
    }

    pub fn member_count(&self) -> usize {
        let mut count = 0;
        for (k, m) in self.maximal_sets.iter().enumerate() {
            for s in m.subsets() {
                if !self.maximal_sets[..k].iter().any(|p| s.is_subset_of(p)) {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn to_json(&self) -> FamilyJson {
        FamilyJson {
            n: self.n,
            kind: self.kind.label().to_string(),
            epsilon_or_delta: self.kind.parameter(),
            maximal_sets: self.maximal_sets.iter().map(SubsetMask::indices).collect(),
            free_indices: self.free_indices.indices(),
        }
    }

    pub fn from_json(json: &FamilyJson) -> Result<Self> {
        let kind = match (json.kind.as_str(), json.epsilon_or_delta) {
            ("isomorphism", Some(epsilon)) => FamilyKind::Isomorphism { epsilon },
            ("suppression", Some(delta)) => FamilyKind::Suppression { delta },
            ("custom", _) => FamilyKind::Custom,
            (other, p) => {
                return Err(Error::Parse(format!(
                    "unknown family kind {other:?} with parameter {p:?}"
                )))
            }
        };
        let free = SubsetMask::from_indices(json.n, &json.free_indices)?;
        let sets = json
            .maximal_sets
            .iter()
            .map(|s| SubsetMask::from_indices(json.n, s))
            .collect::<Result<Vec<_>>>()?;
        IsoFamily::from_generators(json.n, kind, sets, free)
    }
}

/// Serialized form of an [`IsoFamily`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub n: usize,
    pub kind: String,
    pub epsilon_or_delta: Option<f64>,
    pub maximal_sets: Vec<Vec<usize>>,
    pub free_indices: Vec<usize>,
}

/// Enumerates the maximal members of a downward-closed predicate on subsets
/// of `0..n`.
///
/// Depth-first search adds indices in increasing order and never descends
/// below a failed set. A node whose entire remaining subtree is a member (its
/// union with every later index passes) is collapsed to that single set.
/// Maximality is decided by trying every one-element extension.
pub fn enumerate_family<F>(n: usize, kind: FamilyKind, mut member: F) -> Result<IsoFamily>
where
    F: FnMut(&SubsetMask) -> Result<bool>,
{
    if n > ENUMERATION_CAP {
        return Err(Error::SizeCap {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let mut maximal = Vec::new();
    let root = SubsetMask::empty(n);
    if !member(&root)? {
        return Err(Error::InvalidInput(
            "the empty set must belong to every family".into(),
        ));
    }
    dfs(root, 0, n, &mut member, &mut maximal)?;
    maximal.sort();
    Ok(IsoFamily {
        n,
        kind,
        maximal_sets: maximal,
        free_indices: SubsetMask::empty(n),
    })
}

fn dfs<F>(
    sigma: SubsetMask,
    start: usize,
    n: usize,
    member: &mut F,
    maximal: &mut Vec<SubsetMask>,
) -> Result<()>
where
    F: FnMut(&SubsetMask) -> Result<bool>,
{
    let tail = (start..n).fold(sigma, |acc, j| acc.with(j));
    if tail != sigma && member(&tail)? {
        if is_maximal(&tail, start, member)? {
            maximal.push(tail);
        }
        return Ok(());
    }
    let mut extended = false;
    for j in start..n {
        let next = sigma.with(j);
        if member(&next)? {
            extended = true;
            dfs(next, j + 1, n, member, maximal)?;
        }
    }
    if !extended && is_maximal(&sigma, start, member)? {
        maximal.push(sigma);
    }
    Ok(())
}

/// Tries the extensions by indices below `start` not already in `sigma`;
/// callers have already ruled out extensions at or above `start`.
fn is_maximal<F>(sigma: &SubsetMask, start: usize, member: &mut F) -> Result<bool>
where
    F: FnMut(&SubsetMask) -> Result<bool>,
{
    for i in 0..start {
        if !sigma.contains(i) && member(&sigma.with(i))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Σ(T, ε) for an operator with at most [`ENUMERATION_CAP`] columns.
pub fn isomorphism_family(t: &Matrix, epsilon: f64, tol: f64) -> Result<IsoFamily> {
    if t.cols() > ENUMERATION_CAP {
        return Err(Error::SizeCap {
            n: t.cols(),
            cap: ENUMERATION_CAP,
        });
    }
    let checker = IsomorphismChecker::new(t, epsilon, tol)?;
    let mut family = enumerate_family(t.cols(), FamilyKind::Isomorphism { epsilon }, |s| {
        checker.contains(s)
    })?;
    family.free_indices = checker.free_indices();
    Ok(family)
}

/// Σ′(S, δ) for a zero-diagonal symmetric operator.
pub fn suppression_family(s: &Matrix, delta: f64, tol: f64) -> Result<IsoFamily> {
    if s.rows() > ENUMERATION_CAP {
        return Err(Error::SizeCap {
            n: s.rows(),
            cap: ENUMERATION_CAP,
        });
    }
    let checker = SuppressionChecker::new(s, delta, tol)?;
    enumerate_family(s.rows(), FamilyKind::Suppression { delta }, |sig| {
        checker.contains(sig)
    })
}
