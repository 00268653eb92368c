//! Small dense matrix helpers for the tiny systems this crate works with
//! (mixing matrices are rarely larger than 10x10).

/// Invert a square matrix by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` when a pivot falls below `tol`.
pub(crate) fn invert(a: &[Vec<f64>], tol: f64) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return None;
    }
    let mut work: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| work[i][col].abs().total_cmp(&work[j][col].abs()))
            .unwrap();
        if work[pivot][col].abs() <= tol {
            return None;
        }
        work.swap(col, pivot);
        inv.swap(col, pivot);
        let p = work[col][col];
        for j in 0..n {
            work[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = work[i][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                work[i][j] -= f * work[col][j];
                inv[i][j] -= f * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// Rank of an arbitrary rectangular matrix via row echelon reduction with
/// full column pivoting; entries below `tol` count as zero.
pub(crate) fn rank(a: &[Vec<f64>], tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let rows = a.len();
    let cols = a[0].len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let pivot = (r..rows)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if m[pivot][c].abs() <= tol {
            continue;
        }
        m.swap(r, pivot);
        for i in (r + 1)..rows {
            let f = m[i][c] / m[r][c];
            for j in c..cols {
                m[i][j] -= f * m[r][j];
            }
        }
        r += 1;
    }
    r
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
fn sym_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-30 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

/// Spectral condition number of a (possibly rectangular) matrix, computed
/// from the eigenvalues of the Gram matrix A^T A. Returns `f64::INFINITY`
/// when the matrix is numerically rank deficient.
pub(crate) fn condition_number(a: &[Vec<f64>]) -> f64 {
    if a.is_empty() || a[0].is_empty() {
        return f64::INFINITY;
    }
    let rows = a.len();
    let cols = a[0].len();
    if rows < cols {
        return f64::INFINITY;
    }
    let mut gram = vec![vec![0.0; cols]; cols];
    for i in 0..cols {
        for j in 0..cols {
            let mut s = 0.0;
            for row in a.iter().take(rows) {
                s += row[i] * row[j];
            }
            gram[i][j] = s;
        }
    }
    let eig = sym_eigenvalues(&gram);
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    if min <= 0.0 || max <= 0.0 {
        return f64::INFINITY;
    }
    (max / min).sqrt()
}
