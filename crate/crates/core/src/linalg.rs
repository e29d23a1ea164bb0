//! Small dense linear algebra used by the Lie algebra bookkeeping.
//!
//! Matrices here are at most a few dozen entries wide, so everything is
//! plain row-major `Vec<Vec<f64>>` with partial pivoting.

/// Pivot threshold for rank decisions during row reduction.
pub const PIVOT_TOL: f64 = 1e-10;

/// Reduced row echelon basis of the span of `vectors`.
///
/// Rows are returned with unit pivots, ordered by pivot column. Columns whose
/// best pivot falls below `tol` are treated as dependent.
pub fn span_basis(vectors: &[Vec<f64>], dim: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vectors.iter().filter(|v| v.len() == dim).cloned().collect();
    let mut pivot_row = 0;
    for col in 0..dim {
        if pivot_row == rows.len() {
            break;
        }
        let (best, best_abs) = rows[pivot_row..]
            .iter()
            .enumerate()
            .map(|(i, r)| (i + pivot_row, r[col].abs()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs < tol {
            continue;
        }
        rows.swap(pivot_row, best);
        let p = rows[pivot_row][col];
        for v in rows[pivot_row].iter_mut() {
            *v /= p;
        }
        let pivot = rows[pivot_row].clone();
        for (i, r) in rows.iter_mut().enumerate() {
            if i != pivot_row && r[col] != 0.0 {
                let f = r[col];
                for (x, y) in r.iter_mut().zip(&pivot) {
                    *x -= f * y;
                }
                r[col] = 0.0;
            }
        }
        pivot_row += 1;
    }
    rows.truncate(pivot_row);
    rows
}

pub fn rank(vectors: &[Vec<f64>], dim: usize) -> usize {
    span_basis(vectors, dim, PIVOT_TOL).len()
}

/// Inverse of a square matrix by Gauss-Jordan elimination.
pub fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let best = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[best][col].abs() < PIVOT_TOL {
            return None;
        }
        a.swap(col, best);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        let pivot = a[col].clone();
        for (i, r) in a.iter_mut().enumerate() {
            if i != col {
                let f = r[col];
                if f != 0.0 {
                    for (x, y) in r.iter_mut().zip(&pivot) {
                        *x -= f * y;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Determinant by LU with partial pivoting.
pub fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let best = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[best][col] == 0.0 {
            return 0.0;
        }
        if best != col {
            a.swap(col, best);
            det = -det;
        }
        det *= a[col][col];
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            for j in col..n {
                a[i][j] -= f * a[col][j];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_of_dependent_vectors() {
        let v = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 3.0]];
        let b = span_basis(&v, 3, PIVOT_TOL);
        assert_eq!(b.len(), 2);
        assert_eq!(b[0], vec![1.0, 2.0, 0.0]);
        assert_eq!(b[1], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = vec![vec![2.0, 1.0, 0.0], vec![0.0, 1.0, 4.0], vec![1.0, 0.0, 1.0]];
        let inv = invert(&m).unwrap();
        for (i, row) in m.iter().enumerate() {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| row[k] * inv[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!((determinant(&m) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        assert!(invert(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }
}
