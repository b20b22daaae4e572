//! Small dense matrices: a symmetric carrier type, a general square type for
//! congruence transforms, and a cyclic Jacobi eigensolver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense n×n real symmetric matrix, stored in full row-major form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.data[i * d.len() + i] = x;
        }
        m
    }

    /// Builds from the upper triangle of `f(i, j)` (i ≤ j).
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from rows; the lower triangle must mirror the upper one up to
    /// `1e-12` relative.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Argument("matrix rows must form a non-empty square".into()));
        }
        let scale = rows.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs())).max(1.0);
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if !rows[i][j].is_finite() {
                    return Err(Error::Argument(format!("non-finite entry at ({i},{j})")));
                }
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::Argument(format!("matrix not symmetric at ({i},{j})")));
                }
                m.data[i * n + j] = rows[i][j];
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
        self.data[j * self.n + i] = x;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m = m.max(self.get(i, j).abs());
                }
            }
        }
        m
    }

    /// Off-diagonal entries no larger than `rel_tol` times the largest
    /// diagonal magnitude.
    pub fn is_diagonal(&self, rel_tol: f64) -> bool {
        let dmax = self.diagonal().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        self.max_off_diagonal() <= rel_tol * dmax
    }

    pub fn leading_block(&self, k: usize) -> SymmetricMatrix {
        SymmetricMatrix::from_fn(k, |i, j| self.get(i, j))
    }

    pub fn sub_block(&self, idx: &[usize]) -> SymmetricMatrix {
        SymmetricMatrix::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix { n: self.n, data: self.data.clone() }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += x[i] * self.get(i, j) * x[j];
            }
        }
        s
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    /// Cᵀ·self·C, symmetrized.
    pub fn congruence(&self, c: &DenseMatrix) -> SymmetricMatrix {
        let p = c.transpose().mul(&self.to_dense()).mul(c);
        SymmetricMatrix::from_fn(self.n, |i, j| 0.5 * (p.get(i, j) + p.get(j, i)))
    }

    pub fn scaled(&self, c: f64) -> SymmetricMatrix {
        Self::from_fn(self.n, |i, j| c * self.get(i, j))
    }

    pub fn max_abs_diff(&self, other: &SymmetricMatrix) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    }

    pub fn determinant(&self) -> f64 {
        self.to_dense().determinant()
    }

    /// Eigenvalues in ascending order with matching unit eigenvectors.
    pub fn eigen(&self) -> Eigen {
        jacobi_eigen(self)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        jacobi_eigen(self).values
    }
}

/// General dense square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
    }

    pub fn transpose(&self) -> DenseMatrix {
        let n = self.n;
        let mut t = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                t.set(i, j, self.get(j, i));
            }
        }
        t
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut p = DenseMatrix { n, data: vec![0.0; n * n] };
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    p.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        p
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
                .unwrap_or(k);
            if a[p * n + k] == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[k * n + k];
            det *= piv;
            for i in k + 1..n {
                let f = a[i * n + k] / piv;
                if f != 0.0 {
                    for j in k..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                }
            }
        }
        det
    }

    /// Solves self·x = b by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let p = (k..n)
                .max_by(|&r, &s| a[r * n + k].abs().total_cmp(&a[s * n + k].abs()))
                .unwrap_or(k);
            if a[p * n + k].abs() <= 1e-300 + 1e-15 * scale * f64::EPSILON {
                return Err(Error::Domain("singular matrix in dense solve".into()));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            let piv = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / piv;
                if f != 0.0 {
                    for j in k..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                    x[i] -= f * x[k];
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s -= a[k * n + j] * x[j];
            }
            x[k] = s / a[k * n + k];
        }
        Ok(x)
    }
}

#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` pairs with `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi rotations with a fixed (row, column) sweep order.
pub fn jacobi_eigen(m: &SymmetricMatrix) -> Eigen {
    let n = m.n();
    let mut a: Vec<f64> = (0..n * n).map(|k| m.get(k / n, k % n)).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= 1e-17 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    Eigen {
        values: order.iter().map(|&i| a[i * n + i]).collect(),
        vectors: order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_on_2x2() {
        let m = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = m.eigen();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigenpairs_have_small_residual() {
        let m = SymmetricMatrix::from_fn(5, |i, j| 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 0.3 } else { 0.0 });
        let e = m.eigen();
        for (lam, q) in e.values.iter().zip(&e.vectors) {
            let mq = m.mul_vec(q);
            let r: f64 = mq.iter().zip(q).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
            assert!(r < 1e-12, "residual {r}");
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn determinant_and_solve() {
        let mut d = DenseMatrix::identity(3);
        d.set(0, 1, 2.0);
        d.set(2, 0, -1.0);
        d.set(1, 1, 3.0);
        // cofactor expansion along row 0: 1*(3*1 - 0) - 2*(0*1 - 0*(-1)) + 0
        assert!((d.determinant() - 3.0).abs() < 1e-14);
        let x = d.solve(&[1.0, 2.0, 3.0]).unwrap();
        let back: Vec<f64> = (0..3).map(|i| (0..3).map(|j| d.get(i, j) * x[j]).sum()).collect();
        for (a, b) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_asymmetric_rows() {
        assert!(SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
    }
}
