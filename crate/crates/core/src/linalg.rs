//! Dense linear algebra for small symmetric spectral problems.
//!
//! Everything here works on [`Matrix`], a row-major `f64` matrix capped at
//! 64×64. The only nontrivial routine is the cyclic Jacobi eigensolver behind
//! [`sym_eigs`]; norms and Gram matrices are built on top of it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::SubsetMask;

/// Largest number of rows or columns a [`Matrix`] may have.
pub const MAX_DIM: usize = 64;

/// Entrywise asymmetry accepted by [`sym_eigs`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Jacobi stops once the off-diagonal Frobenius norm drops below
/// `CONVERGENCE_TOL * (1 + ‖A‖_HS)`.
pub const CONVERGENCE_TOL: f64 = 1e-12;

/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Dense real matrix, row-major.
///
/// The columns are the images `Te_i` of the canonical basis vectors.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<f64>>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        if repr.entries.len() != repr.rows {
            return Err(Error::InvalidInput(format!(
                "expected {} rows, found {}",
                repr.rows,
                repr.entries.len()
            )));
        }
        let mut data = Vec::with_capacity(repr.rows * repr.cols);
        for row in repr.entries {
            if row.len() != repr.cols {
                return Err(Error::InvalidInput(format!(
                    "expected {} columns, found {}",
                    repr.cols,
                    row.len()
                )));
            }
            data.extend(row);
        }
        Matrix::new(repr.rows, repr.cols, data)
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            entries: (0..m.rows).map(|i| m.row(i).to_vec()).collect(),
        }
    }
}

impl Matrix {
    /// Builds a matrix from row-major entries, rejecting non-finite values and
    /// dimensions above [`MAX_DIM`].
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::SizeCap {
                n: rows.max(cols),
                cap: MAX_DIM,
            });
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "entry ({}, {}) is not finite",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows <= MAX_DIM && cols <= MAX_DIM);
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in values.iter().enumerate() {
            data[i * n + i] = v;
        }
        Matrix::new(n, n, data)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::InvalidInput(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            for (i, &v) in c.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Matrix::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows)
            .map(|i| self.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols).map(|j| self.column_norm(j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `AᵀA`, assembled from column inner products so the result is exactly
    /// symmetric.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v: f64 = (0..self.rows).map(|i| self.get(i, a) * self.get(i, b)).sum();
                g.data[a * n + b] = v;
                g.data[b * n + a] = v;
            }
        }
        g
    }

    /// Keeps only the columns in `sigma`, in ascending order.
    pub fn select_columns(&self, sigma: &SubsetMask) -> Result<Matrix> {
        check_mask(sigma, self.cols)?;
        let idx = sigma.indices();
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            data.extend(idx.iter().map(|&j| self.get(i, j)));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        })
    }

    /// Largest entrywise gap `|A_ij − A_ji|`, with its position.
    fn worst_asymmetry(&self) -> Option<(usize, usize, f64)> {
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = (self.get(i, j) - self.get(j, i)).abs();
                if worst.is_none_or(|w| d > w.2) {
                    worst = Some((i, j, d));
                }
            }
        }
        worst
    }

    /// Parses the plain-text matrix format: a `rows cols` header line, then
    /// `rows` lines of `cols` whitespace-separated numbers. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse_text(text: &str) -> Result<Matrix> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::Parse(format!(
                "header must be `rows cols`, found {header:?}"
            )));
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("dimension {s:?}: {e}")))
        };
        let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
        if rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::SizeCap {
                n: rows.max(cols),
                cap: MAX_DIM,
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {r}")))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|e| Error::Parse(format!("row {r}: {tok:?}: {e}")))?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("row {r}: non-finite entry {tok:?}")));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::Parse(format!(
                    "row {r} has {} entries, expected {cols}",
                    data.len() - before
                )));
            }
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing content {extra:?}")));
        }
        Matrix::new(rows, cols, data)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl FromStr for Matrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Matrix::parse_text(s)
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

fn check_mask(sigma: &SubsetMask, n: usize) -> Result<()> {
    if sigma.n() != n {
        return Err(Error::InvalidInput(format!(
            "subset over {} indices used with dimension {n}",
            sigma.n()
        )));
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Off-diagonal Frobenius norm left when Jacobi stopped.
    pub residual: f64,
}

impl Spectrum {
    pub fn min(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    /// Largest absolute eigenvalue, i.e. the operator norm of the input.
    /// Zero for the empty spectrum.
    pub fn abs_max(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Spectrum together with orthonormal eigenvectors; column `k` of `vectors`
/// belongs to `spectrum.eigenvalues[k]`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub spectrum: Spectrum,
    pub vectors: Matrix,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigs(a: &Matrix) -> Result<Spectrum> {
    jacobi(a, false).map(|e| e.spectrum)
}

/// Eigenvalues and eigenvectors of a symmetric matrix.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    jacobi(a, true)
}

fn jacobi(a: &Matrix, want_vectors: bool) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    if let Some((i, j, diff)) = a.worst_asymmetry() {
        if diff > SYMMETRY_TOL {
            return Err(Error::Asymmetric { i, j, diff });
        }
    }
    let n = a.rows;
    // Symmetrize so tiny input asymmetry cannot leak into the rotations.
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    let mut v = if want_vectors {
        Matrix::identity(n).data
    } else {
        Vec::new()
    };
    let threshold = CONVERGENCE_TOL * (1.0 + hs_norm(a));
    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += m[p * n + q] * m[p * n + q];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut residual = off_norm(&m);
    let mut sweeps = 0;
    while residual > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m[r * n + p];
                    let arq = m[r * n + q];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    m[r * n + p] = new_rp;
                    m[p * n + r] = new_rp;
                    m[r * n + q] = new_rq;
                    m[q * n + r] = new_rq;
                }
                if want_vectors {
                    for r in 0..n {
                        let vrp = v[r * n + p];
                        let vrq = v[r * n + q];
                        v[r * n + p] = c * vrp - s * vrq;
                        v[r * n + q] = s * vrp + c * vrq;
                    }
                }
            }
        }
        residual = off_norm(&m);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[x * n + x].total_cmp(&m[y * n + y]));
    let eigenvalues = order.iter().map(|&k| m[k * n + k]).collect();
    let vectors = if want_vectors {
        let mut sorted = Matrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            for r in 0..n {
                sorted.data[r * n + dst] = v[r * n + src];
            }
        }
        sorted
    } else {
        Matrix::zeros(0, 0)
    };
    Ok(SymEigen {
        spectrum: Spectrum {
            eigenvalues,
            residual,
        },
        vectors,
    })
}

/// Largest singular value, `sqrt(λ_max(AᵀA))`. Zero for empty matrices.
pub fn operator_norm(a: &Matrix) -> f64 {
    if a.rows == 0 || a.cols == 0 {
        return 0.0;
    }
    // Use the smaller of AᵀA and AAᵀ; both share the nonzero spectrum.
    let g = if a.cols <= a.rows {
        a.gram()
    } else {
        a.transpose().gram()
    };
    let spec = sym_eigs(&g).expect("Gram matrices are symmetric and small");
    spec.max().unwrap_or(0.0).max(0.0).sqrt()
}

/// Operator norm of a symmetric matrix via its own spectrum, which avoids
/// squaring the condition number.
pub fn sym_operator_norm(a: &Matrix) -> Result<f64> {
    Ok(sym_eigs(a)?.abs_max())
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(a: &Matrix) -> f64 {
    a.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gram matrix of the normalized columns in `sigma`:
/// entry `(a, b)` is `⟨Te_a, Te_b⟩ / (‖Te_a‖‖Te_b‖)` for `a, b ∈ σ`.
pub fn gram_normalized(t: &Matrix, sigma: &SubsetMask) -> Result<Matrix> {
    check_mask(sigma, t.cols)?;
    let idx = sigma.indices();
    let norms: Vec<f64> = idx.iter().map(|&j| t.column_norm(j)).collect();
    if let Some(pos) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroColumn(idx[pos]));
    }
    let k = idx.len();
    let mut g = Matrix::zeros(k, k);
    for a in 0..k {
        g.data[a * k + a] = 1.0;
        for b in (a + 1)..k {
            let dot: f64 = (0..t.rows).map(|i| t.get(i, idx[a]) * t.get(i, idx[b])).sum();
            let v = dot / (norms[a] * norms[b]);
            g.data[a * k + b] = v;
            g.data[b * k + a] = v;
        }
    }
    Ok(g)
}

/// `Q_σ A Q_σ` restricted to `σ × σ`, indices in ascending order.
pub fn principal_submatrix(a: &Matrix, sigma: &SubsetMask) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "principal submatrix of a non-square {}x{} matrix",
            a.rows, a.cols
        )));
    }
    check_mask(sigma, a.rows)?;
    let idx = sigma.indices();
    let k = idx.len();
    let mut data = Vec::with_capacity(k * k);
    for &i in &idx {
        data.extend(idx.iter().map(|&j| a.get(i, j)));
    }
    Ok(Matrix {
        rows: k,
        cols: k,
        data,
    })
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
