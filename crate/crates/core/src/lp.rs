//! Dense simplex for `max 1ᵀy  s.t.  M y ≤ 1, y ≥ 0` with nonnegative `M`.
//!
//! The origin is feasible, so no phase one is needed. The condensed (Tucker)
//! tableau keeps only the nonbasic columns, so memory is `rows × vars` even
//! when there are many more constraints than variables. Bland's rule picks
//! both the entering and the leaving variable, which rules out cycling.

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    /// Optimal `y`, one entry per variable.
    pub primal: Vec<f64>,
    /// Optimal multipliers, one per constraint row (`x ≥ 0`, `Mᵀx ≥ 1`).
    pub dual: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum LpFailure {
    Unbounded,
    IterationCap { primal: Vec<f64>, dual: Vec<f64>, value: f64 },
}

/// `m` is given row-major with `rows × vars` entries.
pub(crate) fn solve_packing(m: &[f64], rows: usize, vars: usize, max_pivots: usize) -> Result<LpSolution, LpFailure> {
    debug_assert_eq!(m.len(), rows * vars);
    let mut a = m.to_vec();
    let mut b = vec![1.0; rows];
    let mut d = vec![1.0; vars];
    let mut z = 0.0;
    // Variable labels: 0..vars are y, vars..vars+rows are the slacks.
    let mut col_label: Vec<usize> = (0..vars).collect();
    let mut row_label: Vec<usize> = (vars..vars + rows).collect();
    let mut pivots = 0;

    loop {
        let entering = (0..vars)
            .filter(|&j| d[j] > PIVOT_TOL)
            .min_by_key(|&j| col_label[j]);
        let Some(j) = entering else {
            break;
        };
        let mut leaving: Option<(usize, f64)> = None;
        for r in 0..rows {
            let arj = a[r * vars + j];
            if arj > PIVOT_TOL {
                let ratio = b[r] / arj;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        if ratio < best_ratio - 1e-14
                            || (ratio <= best_ratio + 1e-14 && row_label[r] < row_label[best])
                        {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leaving else {
            return Err(LpFailure::Unbounded);
        };
        if pivots == max_pivots {
            let (primal, dual) = read_solution(&b, &d, &col_label, &row_label, vars, rows);
            return Err(LpFailure::IterationCap { primal, dual, value: z });
        }
        pivot(&mut a, &mut b, &mut d, &mut z, rows, vars, r, j);
        std::mem::swap(&mut col_label[j], &mut row_label[r]);
        pivots += 1;
    }

    let (primal, dual) = read_solution(&b, &d, &col_label, &row_label, vars, rows);
    Ok(LpSolution {
        primal,
        dual,
        value: z,
    })
}

#[allow(clippy::too_many_arguments)]
fn pivot(a: &mut [f64], b: &mut [f64], d: &mut [f64], z: &mut f64, rows: usize, vars: usize, r: usize, j: usize) {
    let p = a[r * vars + j];
    for l in 0..vars {
        if l != j {
            a[r * vars + l] /= p;
        }
    }
    a[r * vars + j] = 1.0 / p;
    b[r] /= p;
    for s in 0..rows {
        if s == r {
            continue;
        }
        let asj = a[s * vars + j];
        if asj == 0.0 {
            continue;
        }
        for l in 0..vars {
            if l != j {
                a[s * vars + l] -= asj * a[r * vars + l];
            }
        }
        a[s * vars + j] = -asj / p;
        b[s] -= asj * b[r];
    }
    let dj = d[j];
    for l in 0..vars {
        if l != j {
            d[l] -= dj * a[r * vars + l];
        }
    }
    d[j] = -dj / p;
    *z += dj * b[r];
}

fn read_solution(
    b: &[f64],
    d: &[f64],
    col_label: &[usize],
    row_label: &[usize],
    vars: usize,
    rows: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut primal = vec![0.0; vars];
    for (r, &label) in row_label.iter().enumerate() {
        if label < vars {
            primal[label] = b[r].max(0.0);
        }
    }
    let mut dual = vec![0.0; rows];
    for (j, &label) in col_label.iter().enumerate() {
        if label >= vars {
            dual[label - vars] = (-d[j]).max(0.0);
        }
    }
    (primal, dual)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_constraint() {
        // max y0 + y1 s.t. y0 + y1 ≤ 1
        let s = solve_packing(&[1.0, 1.0], 1, 2, 100).unwrap();
        assert!((s.value - 1.0).abs() < 1e-15);
        assert!((s.dual[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_disjoint_constraints() {
        // max y0 + y1 s.t. y0 ≤ 1, y1 ≤ 1
        let s = solve_packing(&[1.0, 0.0, 0.0, 1.0], 2, 2, 100).unwrap();
        assert!((s.value - 2.0).abs() < 1e-15);
        assert_eq!(s.primal, vec![1.0, 1.0]);
        assert_eq!(s.dual, vec![1.0, 1.0]);
    }

    #[test]
    fn unbounded_variable() {
        assert!(matches!(
            solve_packing(&[1.0, 0.0], 1, 2, 100),
            Err(LpFailure::Unbounded)
        ));
    }

    #[test]
    fn strong_duality_on_small_game() {
        // Constraint rows (sets): {0,1}, {1,2}, {0,2}; LP value 3/2.
        let m = [1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        let s = solve_packing(&m, 3, 3, 100).unwrap();
        assert!((s.value - 1.5).abs() < 1e-12);
        let dual_sum: f64 = s.dual.iter().sum();
        assert!((dual_sum - s.value).abs() < 1e-12);
        for v in 0..3 {
            let cover: f64 = (0..3).map(|r| m[r * 3 + v] * s.dual[r]).sum();
            assert!(cover >= 1.0 - 1e-12);
        }
    }
}
