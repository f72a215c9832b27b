//! Dense real symmetric linear algebra: cyclic Jacobi eigendecomposition and
//! an eigendecomposition-based minimum-norm least-squares solver.
//!
//! Everything downstream (oracle spectra, matrix exponentials, the per-step
//! linear systems, the small generalized eigenproblems) funnels through the
//! single Jacobi routine here, so there is one numerical kernel to trust.

use crate::error::{Error, Result};

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch(
                "ragged rows in matrix literal".into(),
            ));
        }
        Ok(Matrix {
            rows: nrows,
            cols: ncols,
            data: rows.concat(),
        })
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn max_symmetry_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec: {}x{} with vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)] * v[j])
                    .sum()
            })
            .collect())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Eigenvalues ascending; `vectors` holds the matching orthonormal
/// eigenvectors as columns, each sign-normalized so its largest-magnitude
/// entry is positive.
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

fn offdiag_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver for a real symmetric matrix.
///
/// Sweeps all upper-triangle pivots in row-major order, rotating each pair to
/// zero, until the off-diagonal Frobenius norm falls below `1e-12` relative
/// to the matrix norm. Symmetry of the input is checked up front.
pub fn eigh(a: &Matrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigh on {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    if n == 0 {
        return Err(Error::InvalidOperand("eigh on empty matrix".into()));
    }
    let frob: f64 = a.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    if a.max_symmetry_violation() > 1e-10 * (1.0 + frob) {
        return Err(Error::InvalidOperand(format!(
            "matrix not symmetric (violation {:.3e})",
            a.max_symmetry_violation()
        )));
    }

    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let tol = JACOBI_TOL * (1.0 + frob);

    let mut sweeps = 0;
    while offdiag_norm(&m) > tol {
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(Error::NoEigConvergence {
                sweeps,
                offdiag: offdiag_norm(&m),
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= JACOBI_TOL * tol {
                    continue;
                }
                // classic Jacobi rotation annihilating m[p][q]
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        values.push(m[(src, src)]);
        // sign-normalize: largest |entry| positive
        let mut best = 0usize;
        for k in 1..n {
            if v[(k, src)].abs() > v[(best, src)].abs() {
                best = k;
            }
        }
        let sign = if v[(best, src)] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[(k, col)] = sign * v[(k, src)];
        }
    }

    Ok(EigenDecomposition { values, vectors })
}

/// Minimum-norm least-squares solution of the symmetric system `A x = b`
/// via the truncated eigen pseudo-inverse.
///
/// Eigenvalues with `|lambda| <= cutoff * max|lambda|` are dropped. Returns
/// the solution and the number of retained modes.
pub fn solve_min_norm(a: &Matrix, b: &[f64], cutoff: f64) -> Result<(Vec<f64>, usize)> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "solve: {}x{} with rhs of length {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    let eig = eigh(a)?;
    let n = a.rows;
    let lam_max = eig
        .values
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    if lam_max == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let thresh = cutoff * lam_max;
    // x = sum_k (u_k . b / lambda_k) u_k over retained modes
    let mut x = vec![0.0; n];
    let mut rank = 0;
    for k in 0..n {
        let lam = eig.values[k];
        if lam.abs() <= thresh {
            continue;
        }
        rank += 1;
        let proj: f64 = (0..n).map(|i| eig.vectors[(i, k)] * b[i]).sum();
        let scale = proj / lam;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += scale * eig.vectors[(i, k)];
        }
    }
    Ok((x, rank))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn eigh_diagonal_matrix() {
        let m = Matrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let e = eigh(&m).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigh_two_by_two() {
        // [[0,1],[1,0]] has eigenvalues -1, +1
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = eigh(&m).unwrap();
        assert_close(e.values[0], -1.0, 1e-14);
        assert_close(e.values[1], 1.0, 1e-14);
        // eigenvector for +1 is (1,1)/sqrt(2), sign-normalized positive
        assert_close(e.vectors[(0, 1)], std::f64::consts::FRAC_1_SQRT_2, 1e-12);
        assert_close(e.vectors[(1, 1)], std::f64::consts::FRAC_1_SQRT_2, 1e-12);
    }

    #[test]
    fn eigh_reconstructs_input() {
        // fixed pseudo-random symmetric matrix
        let n = 6;
        let mut m = Matrix::zeros(n, n);
        let mut x = 0.37f64;
        for i in 0..n {
            for j in i..n {
                x = (x * 997.0 + 0.123).fract() - 0.5;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        let e = eigh(&m).unwrap();
        // V diag(w) V^T == M
        let mut vd = e.vectors.clone();
        for j in 0..n {
            for i in 0..n {
                vd[(i, j)] *= e.values[j];
            }
        }
        let recon = vd.matmul(&e.vectors.transpose()).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_close(recon[(i, j)], m[(i, j)], 1e-10);
            }
        }
        // columns orthonormal
        let gram = e.vectors.transpose().matmul(&e.vectors).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_close(gram[(i, j)], want, 1e-12);
            }
        }
        // ascending
        for k in 1..n {
            assert!(e.values[k] >= e.values[k - 1]);
        }
    }

    #[test]
    fn eigh_rejects_asymmetric() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(eigh(&m).is_err());
    }

    #[test]
    fn solve_full_rank() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let (x, rank) = solve_min_norm(&a, &[5.0, 10.0], 1e-8).unwrap();
        assert_eq!(rank, 2);
        assert_close(x[0], 1.0, 1e-12);
        assert_close(x[1], 3.0, 1e-12);
    }

    #[test]
    fn solve_singular_returns_min_norm_solution() {
        // A = [[1,1],[1,1]], b = (2,2): solutions x0+x1 = 2; min norm is (1,1)
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let (x, rank) = solve_min_norm(&a, &[2.0, 2.0], 1e-8).unwrap();
        assert_eq!(rank, 1);
        assert_close(x[0], 1.0, 1e-12);
        assert_close(x[1], 1.0, 1e-12);
    }

    #[test]
    fn solve_zero_matrix() {
        let a = Matrix::zeros(3, 3);
        let (x, rank) = solve_min_norm(&a, &[1.0, 2.0, 3.0], 1e-8).unwrap();
        assert_eq!(rank, 0);
        assert_eq!(x, vec![0.0; 3]);
    }
}
