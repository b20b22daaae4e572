//! Elementary symmetric functions σ_k and their matrix derivatives at
//! diagonal points, plus the quotient auxiliary function
//! φ = σ_{l+1} + σ_{l+2}/σ_{l+1}.
//!
//! Indices are 0-based throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;

/// Off-diagonal entries must sit below this fraction of the largest diagonal
/// magnitude for the diagonal-point derivative formulas to apply.
pub const DIAGONAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumVector(Vec<f64>);

impl SpectrumVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("spectrum must be non-empty".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("spectrum entries must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxFunctionValue {
    pub sigma_l1: f64,
    pub q: f64,
    pub phi: f64,
    pub rank_level: usize,
}

/// Second-derivative tensor with `get(i, j, p, q) = ∂²f/∂A_ij∂A_pq`, every
/// matrix entry treated as an independent variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, p: usize, q: usize) -> usize {
        ((i * self.n + j) * self.n + p) * self.n + q
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, p: usize, q: usize) -> f64 {
        self.data[self.idx(i, j, p, q)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, p: usize, q: usize, x: f64) {
        let k = self.idx(i, j, p, q);
        self.data[k] = x;
    }
}

/// σ_k by the one-pass recurrence σ_k(λ₁..λ_m) = σ_k(λ₁..λ_{m-1}) + λ_m σ_{k-1}(λ₁..λ_{m-1}).
fn sigma_raw(lambda: &[f64], k: i64) -> f64 {
    let n = lambda.len() as i64;
    if k < 0 || k > n {
        return 0.0;
    }
    let k = k as usize;
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (m, &x) in lambda.iter().enumerate() {
        for j in (1..=k.min(m + 1)).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[k]
}

fn check_k(n: usize, k: i64) -> Result<()> {
    if k < -1 || k > n as i64 + 1 {
        return Err(Error::Argument(format!("k={k} outside [-1, {}]", n + 1)));
    }
    Ok(())
}

pub fn sigma_k(lambda: &SpectrumVector, k: i64) -> Result<f64> {
    check_k(lambda.len(), k)?;
    Ok(sigma_raw(lambda.values(), k))
}

/// σ_k with the entries at `excluded` (one or two distinct indices) set to zero.
pub fn sigma_k_excluding(lambda: &SpectrumVector, k: i64, excluded: &[usize]) -> Result<f64> {
    let n = lambda.len();
    check_k(n, k)?;
    if excluded.is_empty() || excluded.len() > 2 {
        return Err(Error::Argument("exclusion set must hold one or two indices".into()));
    }
    if excluded.iter().any(|&i| i >= n) {
        return Err(Error::Argument(format!("excluded index out of range for n={n}")));
    }
    if excluded.len() == 2 && excluded[0] == excluded[1] {
        return Err(Error::Argument("excluded indices must be distinct".into()));
    }
    let mut l = lambda.values().to_vec();
    for &i in excluded {
        l[i] = 0.0;
    }
    Ok(sigma_raw(&l, k))
}

fn diagonal_spectrum(h: &SymmetricMatrix) -> Result<Vec<f64>> {
    if !h.is_diagonal(DIAGONAL_TOL) {
        return Err(Error::Precondition(format!(
            "matrix is not diagonal (max off-diagonal {:e})",
            h.max_off_diagonal()
        )));
    }
    Ok(h.diagonal())
}

fn excl(l: &[f64], k: i64, drop: &[usize]) -> f64 {
    let mut v = l.to_vec();
    for &i in drop {
        v[i] = 0.0;
    }
    sigma_raw(&v, k)
}

fn grad_diag(l: &[f64], k: i64) -> SymmetricMatrix {
    let g: Vec<f64> = (0..l.len()).map(|i| excl(l, k - 1, &[i])).collect();
    SymmetricMatrix::from_diagonal(&g)
}

fn hess_diag(l: &[f64], k: i64) -> Tensor4 {
    let n = l.len();
    let mut t = Tensor4::zeros(n);
    for i in 0..n {
        for p in 0..n {
            if i != p {
                let s = excl(l, k - 2, &[i, p]);
                t.set(i, i, p, p, s);
                t.set(i, p, p, i, -s);
            }
        }
    }
    t
}

/// ∂σ_k/∂A at a diagonal point: diag(σ_{k-1}(A|i)).
pub fn sigma_gradient(h: &SymmetricMatrix, k: i64) -> Result<SymmetricMatrix> {
    let l = diagonal_spectrum(h)?;
    check_k(l.len(), k)?;
    Ok(grad_diag(&l, k))
}

/// ∂²σ_k/∂A_ij∂A_pq at a diagonal point.
pub fn sigma_hessian(h: &SymmetricMatrix, k: i64) -> Result<Tensor4> {
    let l = diagonal_spectrum(h)?;
    check_k(l.len(), k)?;
    Ok(hess_diag(&l, k))
}

/// σ_{l+1} and q = σ_{l+2}/σ_{l+1} (zero unless σ_{l+1} > 0) on the
/// eigenvalues of `h`.
pub fn phi_aux(h: &SymmetricMatrix, l: usize) -> Result<AuxFunctionValue> {
    let n = h.n();
    if n == 0 || l >= n {
        return Err(Error::Argument(format!("rank level l={l} outside [0, {}]", n.saturating_sub(1))));
    }
    let lam = if h.max_off_diagonal() == 0.0 { h.diagonal() } else { h.eigenvalues() };
    let s1 = sigma_raw(&lam, l as i64 + 1);
    let s2 = sigma_raw(&lam, l as i64 + 2);
    let q = if s1 > 0.0 { s2 / s1 } else { 0.0 };
    Ok(AuxFunctionValue { sigma_l1: s1, q, phi: s1 + q, rank_level: l })
}

fn quotient_setup(h: &SymmetricMatrix, l: usize) -> Result<(Vec<f64>, f64, f64)> {
    let lam = diagonal_spectrum(h)?;
    if l >= lam.len() {
        return Err(Error::Argument(format!("rank level l={l} outside [0, {}]", lam.len() - 1)));
    }
    let d = sigma_raw(&lam, l as i64 + 1);
    if d <= 0.0 {
        return Err(Error::Domain(format!("sigma_{} = {d:e} is not positive", l + 1)));
    }
    let num = sigma_raw(&lam, l as i64 + 2);
    Ok((lam, num, d))
}

/// Gradient of q = σ_{l+2}/σ_{l+1} at a diagonal point, by the quotient rule.
pub fn q_gradient(h: &SymmetricMatrix, l: usize) -> Result<SymmetricMatrix> {
    let (lam, num, den) = quotient_setup(h, l)?;
    let gn = grad_diag(&lam, l as i64 + 2);
    let gd = grad_diag(&lam, l as i64 + 1);
    let g: Vec<f64> = (0..lam.len())
        .map(|i| (gn.get(i, i) * den - num * gd.get(i, i)) / (den * den))
        .collect();
    Ok(SymmetricMatrix::from_diagonal(&g))
}

/// Full second-derivative tensor of q at a diagonal point:
/// ∂²q = ∂²N/D − (∂N⊗∂D + ∂D⊗∂N)/D² − N∂²D/D² + 2N ∂D⊗∂D/D³.
pub fn q_hessian(h: &SymmetricMatrix, l: usize) -> Result<Tensor4> {
    let (lam, num, den) = quotient_setup(h, l)?;
    let n = lam.len();
    let k = l as i64;
    let gn = grad_diag(&lam, k + 2);
    let gd = grad_diag(&lam, k + 1);
    let hn = hess_diag(&lam, k + 2);
    let hd = hess_diag(&lam, k + 1);
    let d2 = den * den;
    let d3 = d2 * den;
    let mut t = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for p in 0..n {
                for q in 0..n {
                    let (nij, dij) = (gn.get(i, j), gd.get(i, j));
                    let (npq, dpq) = (gn.get(p, q), gd.get(p, q));
                    let val = hn.get(i, j, p, q) / den
                        - (nij * dpq + dij * npq) / d2
                        - num * hd.get(i, j, p, q) / d2
                        + 2.0 * num * dij * dpq / d3;
                    t.set(i, j, p, q, val);
                }
            }
        }
    }
    Ok(t)
}

/// Leading term of the q-gradient on the vanishing block B:
/// (σ₁²(B|i) − σ₂(B|i)) / σ₁²(B), for each position i of `b`.
pub fn lemma_limit(b: &[f64]) -> Vec<f64> {
    let s1 = sigma_raw(b, 1);
    (0..b.len())
        .map(|i| {
            let a = excl(b, 1, &[i]);
            (a * a - excl(b, 2, &[i])) / (s1 * s1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> SpectrumVector {
        SpectrumVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_k(&sv(&[1.0, 2.0, 3.0, 4.0]), 0).unwrap(), 1.0);
        assert_eq!(sigma_k(&sv(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap(), 35.0);
        assert_eq!(sigma_k(&sv(&[5.0, 7.0]), 3).unwrap(), 0.0);
        assert_eq!(sigma_k(&sv(&[5.0, 7.0]), -1).unwrap(), 0.0);
        assert!(sigma_k(&sv(&[5.0, 7.0]), 4).is_err());
        assert!(sigma_k(&sv(&[5.0, 7.0]), -2).is_err());
    }

    #[test]
    fn excluded_examples() {
        assert_eq!(sigma_k_excluding(&sv(&[1.0, 2.0, 3.0]), 2, &[0]).unwrap(), 6.0);
        assert_eq!(sigma_k_excluding(&sv(&[1.0, 2.0, 3.0]), 1, &[1, 2]).unwrap(), 1.0);
        assert_eq!(sigma_k_excluding(&sv(&[1.0, 2.0, 3.0, 4.0]), 0, &[0]).unwrap(), 1.0);
        assert!(sigma_k_excluding(&sv(&[1.0, 2.0]), 1, &[2]).is_err());
        assert!(sigma_k_excluding(&sv(&[1.0, 2.0]), 1, &[1, 1]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = sigma_gradient(&SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]), 4).unwrap();
        assert_eq!(g.diagonal(), vec![24.0, 12.0, 8.0, 6.0]);
        let g = sigma_gradient(&SymmetricMatrix::identity(4), 1).unwrap();
        assert_eq!(g, SymmetricMatrix::identity(4));
        let g = sigma_gradient(&SymmetricMatrix::from_diagonal(&[2.0, 0.0, 0.0, 0.0]), 2).unwrap();
        assert_eq!(g.diagonal(), vec![0.0, 2.0, 2.0, 2.0]);
        let mut h = SymmetricMatrix::identity(3);
        h.set(0, 1, 1e-6);
        assert!(matches!(sigma_gradient(&h, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn hessian_examples() {
        let h = SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        assert_eq!(sigma_hessian(&h, 2).unwrap().get(0, 0, 1, 1), 1.0);
        let t = sigma_hessian(&h, 3).unwrap();
        assert_eq!(t.get(0, 0, 1, 1), 3.0);
        assert_eq!(t.get(0, 1, 1, 0), -3.0);
        assert_eq!(t.get(0, 1, 0, 1), 0.0);
    }

    #[test]
    fn phi_examples() {
        let a = phi_aux(&SymmetricMatrix::from_diagonal(&[2.0, 1.0, 0.0, 0.0]), 2).unwrap();
        assert_eq!((a.phi, a.q), (0.0, 0.0));
        let a = phi_aux(&SymmetricMatrix::from_diagonal(&[3.0, 2.0, 1.0, 0.5]), 2).unwrap();
        assert!((a.sigma_l1 - 11.5).abs() < 1e-14);
        assert!((a.q - 3.0 / 11.5).abs() < 1e-14);
        assert!((a.phi - 11.76087).abs() < 1e-5);
        let a = phi_aux(&SymmetricMatrix::identity(4), 3).unwrap();
        assert_eq!((a.sigma_l1, a.q, a.phi), (1.0, 0.0, 1.0));
    }

    #[test]
    fn q_gradient_examples() {
        let g = q_gradient(&SymmetricMatrix::from_diagonal(&[3.0, 2.0, 1.0, 0.5]), 2).unwrap();
        assert!((g.get(3, 3) - 36.0 / 132.25).abs() < 1e-14);
        // d = 0: sigma_3(a,b,c)^2 / sigma_3^2
        let g = q_gradient(&SymmetricMatrix::from_diagonal(&[3.0, 2.0, 1.0, 0.0]), 2).unwrap();
        assert!((g.get(3, 3) - 1.0).abs() < 1e-14);
        for s in [1e-2, 1e-4] {
            let g = q_gradient(&SymmetricMatrix::from_diagonal(&[1.0, 1.0, s, s]), 2).unwrap();
            assert!((g.get(2, 2) - 0.25).abs() <= 2.0 * s);
        }
        assert!(matches!(
            q_gradient(&SymmetricMatrix::from_diagonal(&[1.0, 1.0, 0.0, 0.0]), 2),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn q_hessian_is_swap_symmetric() {
        let t = q_hessian(&SymmetricMatrix::from_diagonal(&[3.0, 2.0, 1.0, 0.5]), 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for p in 0..4 {
                    for q in 0..4 {
                        assert_eq!(t.get(i, j, p, q), t.get(p, q, i, j));
                    }
                }
            }
        }
    }
}
