//! Leading principal minors, congruence diagonalization by minor ratios, and
//! eigenvalue-based definiteness verdicts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SymmetricMatrix};

/// Relative threshold for treating an intermediate minor as zero.
pub const MINOR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorSequence {
    pub minors: Vec<f64>,
}

impl MinorSequence {
    pub fn n(&self) -> usize {
        self.minors.len()
    }
}

#[derive(Clone, Debug)]
pub struct CongruenceResult {
    pub transform: DenseMatrix,
    pub diagonal: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
}

/// Scale for the k-th minor: (max |a_ij|)^k.
fn minor_scale(a: &SymmetricMatrix, k: usize) -> f64 {
    a.max_abs().powi(k as i32)
}

/// P_1..P_n by fraction-free (Bareiss) elimination. A vanishing pivot before
/// the last step hands the remaining blocks to pivoted LU determinants.
pub fn leading_minors(a: &SymmetricMatrix) -> MinorSequence {
    let n = a.n();
    let mut m: Vec<f64> = (0..n * n).map(|k| a.get(k / n, k % n)).collect();
    let mut minors = Vec::with_capacity(n);
    let mut prev = 1.0;
    for k in 0..n {
        let piv = m[k * n + k];
        minors.push(piv);
        if k + 1 == n {
            break;
        }
        if piv.abs() <= f64::MIN_POSITIVE || piv.abs() <= 1e-15 * minor_scale(a, k + 1) {
            for j in k + 2..=n {
                minors.push(a.leading_block(j).determinant());
            }
            break;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i * n + j] = (m[i * n + j] * piv - m[i * n + k] * m[k * n + j]) / prev;
            }
        }
        prev = piv;
    }
    MinorSequence { minors }
}

/// Builds C with CᵀAC = diag(P₁, P₂/P₁, …, P_n/P_{n−1}) by the inductive
/// block elimination C = C₁·diag(C_{n−1}, 1), where
/// C₁ = [[I, −A_{n−1}⁻¹α], [0, 1]] clears the last row and column.
pub fn congruent_diagonalize(a: &SymmetricMatrix) -> Result<CongruenceResult> {
    let n = a.n();
    let seq = leading_minors(a);
    for k in 0..n.saturating_sub(1) {
        let p = seq.minors[k];
        if !(p.abs() > MINOR_TOL * minor_scale(a, k + 1)) {
            return Err(Error::SingularMinor { k: k + 1, value: p });
        }
    }
    let transform = build_transform(a, n)?;
    let mut diagonal = vec![seq.minors[0]];
    for k in 1..n {
        diagonal.push(seq.minors[k] / seq.minors[k - 1]);
    }
    Ok(CongruenceResult { transform, diagonal })
}

fn build_transform(a: &SymmetricMatrix, m: usize) -> Result<DenseMatrix> {
    let n = a.n();
    if m <= 1 {
        return Ok(DenseMatrix::identity(n));
    }
    let inner = a.leading_block(m - 1).to_dense();
    let alpha: Vec<f64> = (0..m - 1).map(|i| a.get(i, m - 1)).collect();
    let x = inner.solve(&alpha)?;
    let mut c1 = DenseMatrix::identity(n);
    for (i, xi) in x.iter().enumerate() {
        c1.set(i, m - 1, -xi);
    }
    let c3 = build_transform(a, m - 1)?;
    Ok(c1.mul(&c3))
}

/// Verdict from the extreme eigenvalues, scaled by the largest magnitude.
pub fn classify_definiteness(a: &SymmetricMatrix, tol: f64) -> Definiteness {
    let ev = a.eigenvalues();
    classify_eigenvalues(&ev, tol)
}

pub fn classify_eigenvalues(ev: &[f64], tol: f64) -> Definiteness {
    let lmin = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if lmin > tol * scale && scale > 0.0 {
        Definiteness::PositiveDefinite
    } else if lmin >= -tol * scale {
        Definiteness::PositiveSemidefinite
    } else {
        Definiteness::Indefinite
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn claim2_example() -> SymmetricMatrix {
        SymmetricMatrix::from_rows(&[
            vec![1.25, -1.0, -0.75],
            vec![-1.0, 4.0, -1.0],
            vec![-0.75, -1.0, 1.25],
        ])
        .unwrap()
    }

    #[test]
    fn minors_examples() {
        assert_eq!(leading_minors(&SymmetricMatrix::identity(3)).minors, vec![1.0, 1.0, 1.0]);
        let a = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(leading_minors(&a).minors, vec![2.0, 3.0]);
        assert_eq!(leading_minors(&SymmetricMatrix::from_diagonal(&[1.0, -1.0])).minors, vec![1.0, -1.0]);
        let m = leading_minors(&claim2_example()).minors;
        assert!((m[0] - 1.25).abs() < 1e-15 && (m[1] - 4.0).abs() < 1e-14 && m[2].abs() < 1e-14);
    }

    #[test]
    fn minors_after_zero_pivot() {
        let a = SymmetricMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        assert_eq!(leading_minors(&a).minors, vec![0.0, -1.0, -2.0]);
    }

    #[test]
    fn diagonalize_examples() {
        let a = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let r = congruent_diagonalize(&a).unwrap();
        assert_eq!(r.diagonal, vec![2.0, 1.5]);
        let d = a.congruence(&r.transform);
        assert!(d.max_abs_diff(&SymmetricMatrix::from_diagonal(&r.diagonal)) < 1e-14);

        let r = congruent_diagonalize(&SymmetricMatrix::identity(4)).unwrap();
        assert_eq!(r.transform, DenseMatrix::identity(4));
        assert_eq!(r.diagonal, vec![1.0; 4]);

        let r = congruent_diagonalize(&claim2_example()).unwrap();
        assert!((r.diagonal[0] - 1.25).abs() < 1e-15);
        assert!((r.diagonal[1] - 3.2).abs() < 1e-14);
        assert!(r.diagonal[2].abs() < 1e-14);
    }

    #[test]
    fn singular_minor_is_named() {
        let a = SymmetricMatrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(congruent_diagonalize(&a), Err(Error::SingularMinor { k: 2, .. })));
    }

    #[test]
    fn definiteness_examples() {
        assert_eq!(classify_definiteness(&SymmetricMatrix::identity(4), 1e-10), Definiteness::PositiveDefinite);
        assert_eq!(
            classify_definiteness(&SymmetricMatrix::from_diagonal(&[1.0, 0.0]), 1e-10),
            Definiteness::PositiveSemidefinite
        );
        assert_eq!(
            classify_definiteness(&SymmetricMatrix::from_diagonal(&[1.0, -1.0]), 1e-10),
            Definiteness::Indefinite
        );
        assert_eq!(classify_definiteness(&SymmetricMatrix::zeros(2), 1e-10), Definiteness::PositiveSemidefinite);
    }
}
