mod common;

use common::*;
use powercvx::linalg::SymmetricMatrix;
use powercvx::symfun::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn derivatives_match_principal_minor_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..25 {
        let n = rng.gen_range(2..=5);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..2.5)).collect();
        let e = calculus_errors(&d);
        assert!(e <= 1e-6, "diag {d:?}: {e:e}");
    }
}

#[test]
fn lemma_limit_converges_linearly() {
    let g = [1.3, 0.7];
    let b = [0.9, 1.6, 0.4];
    let e: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&s| lemma_error(&g, &b, s)).collect();
    let order = (e[0] / e[2]).log10() / 2.0;
    assert!(order >= 0.9, "errors {e:?}, order {order}");
    // the documented example: diag(1,1,s,s), l = 2 gives 1/4 in the limit
    for s in [1e-2, 1e-4] {
        let q = q_gradient(&SymmetricMatrix::from_diagonal(&[1.0, 1.0, s, s]), 2).unwrap();
        assert!((q.get(2, 2) - 0.25).abs() <= 2.0 * s);
    }
}

#[test]
fn aux_function_on_full_and_degenerate_spectra() {
    let a = phi_aux(&SymmetricMatrix::from_diagonal(&[1.0, 2.0, 3.0, 0.0]), 1).unwrap();
    assert_eq!(a.sigma_l1, 11.0);
    assert_eq!(a.q, 6.0 / 11.0);
    let z = phi_aux(&SymmetricMatrix::from_diagonal(&[1.0, 0.0, 0.0, 0.0]), 1).unwrap();
    assert_eq!((z.sigma_l1, z.q), (0.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigma_recurrence_matches_subsets(x in prop::collection::vec(-3.0f64..3.0, 1..8), k in 0usize..9) {
        let sv = SpectrumVector::new(x.clone()).unwrap();
        let want = if k > x.len() { 0.0 } else { sigma_subsets(&x, k) };
        let got = sigma_k(&sv, k as i64).unwrap_or(0.0);
        prop_assert!((got - want).abs() <= 1e-11 * (1.0 + want.abs()));
    }

    #[test]
    fn sigma_is_symmetric_and_homogeneous(x in prop::collection::vec(-2.0f64..2.0, 2..7), t in 0.1f64..3.0, k in 1usize..6) {
        prop_assume!(k <= x.len());
        let mut y = x.clone();
        y.reverse();
        let s = |v: &[f64]| sigma_k(&SpectrumVector::new(v.to_vec()).unwrap(), k as i64).unwrap();
        let base = s(&x);
        prop_assert!((s(&y) - base).abs() <= 1e-12 * (1.0 + base.abs()));
        let scaled: Vec<f64> = x.iter().map(|v| v * t).collect();
        let want = t.powi(k as i32) * base;
        prop_assert!((s(&scaled) - want).abs() <= 1e-11 * (1.0 + want.abs()));
    }

    #[test]
    fn gradient_euler_identity(d in prop::collection::vec(0.2f64..3.0, 2..6), k in 1i64..6) {
        // Σ λ_i ∂σ_k/∂λ_i = k σ_k
        prop_assume!(k as usize <= d.len());
        let h = SymmetricMatrix::from_diagonal(&d);
        let g = sigma_gradient(&h, k).unwrap();
        let lhs: f64 = (0..d.len()).map(|i| d[i] * g.get(i, i)).sum();
        let sk = sigma_subsets(&d, k as usize);
        prop_assert!((lhs - k as f64 * sk).abs() <= 1e-11 * (1.0 + sk.abs()));
    }

    #[test]
    fn sigma_excluding_matches_subsets(x in prop::collection::vec(-2.0f64..2.0, 3..7), k in 0i64..5, i in 0usize..3) {
        let rest: Vec<f64> = x.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
        let got = sigma_k_excluding(&SpectrumVector::new(x.clone()).unwrap(), k, &[i]).unwrap();
        let want = if k as usize > rest.len() { 0.0 } else { sigma_subsets(&rest, k as usize) };
        prop_assert!((got - want).abs() <= 1e-11 * (1.0 + want.abs()));
    }
}
