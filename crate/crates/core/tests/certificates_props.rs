mod common;

use common::*;
use powercvx::congruence::Definiteness;
use powercvx::linalg::SymmetricMatrix;
use powercvx::ma_operator::F_eval;
use powercvx::rank_certificates::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rank3_jet() -> impl Strategy<Value = DegenerateJet> {
    (
        -3.0f64..-0.2,
        prop::array::uniform4(-1.0f64..1.0),
        0.1f64..5.0,
        0.1f64..5.0,
    )
        .prop_filter_map("infeasible", |(v, g, a, b)| make_rank3_jet(v, g, a, b).ok())
}

fn rank2_jet() -> impl Strategy<Value = DegenerateJet> {
    (-3.0f64..-0.2, prop::array::uniform4(-1.0f64..1.0), 0.1f64..5.0)
        .prop_filter_map("infeasible", |(v, g, a)| make_rank2_jet(v, g, a).ok())
}

#[test]
fn anchor_block_matches_cofactor_oracle() {
    let d = make_rank3_jet(-1.0, [0.0; 4], 1.0, 1.0).unwrap();
    let big = big_a_matrix(&d).unwrap();
    let red = block_reduce(&big, &d).unwrap();
    let want = [[1.25, -1.0, -0.75], [-1.0, 4.0, -1.0], [-0.75, -1.0, 1.25]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((red.a1.get(i, j) - want[i][j]).abs() <= 1e-14);
        }
    }
    let m = leading_minors_cofactor(&to_mat(&red.a1));
    for (got, want) in m.iter().zip([1.25, 4.0, 0.0]) {
        assert!((got - want).abs() <= 1e-14, "{m:?}");
    }
    // the sixfold minors of A match a cofactor expansion too
    let slow = leading_minors_cofactor(&to_mat(&big.matrix));
    for (k, s) in slow.iter().enumerate() {
        assert!((big.minors.minors[k] - s).abs() <= 1e-12 * big.matrix.max_abs().powi(k as i32 + 1));
    }
}

#[test]
fn sampled_jets_are_on_shell_and_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for rank in [2u8, 3] {
        for d in sample_jets(rank, 200, &mut rng) {
            assert_eq!(d.rank_level, rank);
            assert!(F_eval(&d.jet).abs() <= EXACT_TOL);
            let h = d.jet.hess.diagonal();
            assert!(h[1] > V22_RANGE.0 && h[1] < V22_RANGE.1);
            assert!(h[rank as usize..].iter().all(|&x| x == 0.0));
            assert!(h[..rank as usize].iter().all(|&x| x > 0.0));
        }
    }
}

#[test]
fn suites_are_deterministic_in_the_seed() {
    let a = run_rank3_suite(40, 9, 2).unwrap();
    let b = run_rank3_suite(40, 9, 2).unwrap();
    let c = run_rank3_suite(40, 10, 2).unwrap();
    assert_eq!(serde_json::to_string(&a.rows).unwrap(), serde_json::to_string(&b.rows).unwrap());
    assert_ne!(a.rows[0].v, c.rows[0].v);
    assert!(a.summary.passed && c.summary.passed);
    assert_eq!(a.summary.jets, 40);
    assert_eq!(a.columns.len(), a.rows[0].values.len());
}

#[test]
fn rank2_suite_reports_every_column() {
    let r = run_rank2_suite(100, 1, 4).unwrap();
    assert!(r.summary.passed, "{:?}", r.summary);
    for c in &r.columns {
        assert!(r.summary.max_values[*c] <= r.summary.tolerances[*c]);
    }
    assert_eq!(r.summary.verdict_failures["semidefinite"], 0);
}

#[test]
fn rank_level_mismatch_is_reported_not_panicked() {
    let d2 = make_rank2_jet(-1.0, [0.0; 4], 2.0).unwrap();
    assert!(big_a_matrix(&d2).is_err());
    assert!(identity_3_40(&d2).is_err());
    let any = SymmetricMatrix::identity(3);
    assert!(!claim2_check(&any, &d2).passed());
    assert!(!claim3_check(&any, &d2).passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank2_matrix_is_semidefinite_and_singular(d in rank2_jet()) {
        prop_assume!(F_eval(&d.jet).abs() <= EXACT_TOL);
        let b = claim1_matrix(&d).unwrap();
        prop_assert!(b.verdict != Definiteness::Indefinite);
        prop_assert!(b.residual_table["p3_rel"] <= FORMULA_TOL);
        prop_assert!(b.residual_table["p2_formula_rel"] <= FORMULA_TOL);
        let det = cofactor_det(&to_mat(&b.matrix));
        prop_assert!(det.abs() <= 1e-10 * b.matrix.max_abs().powi(3));
    }

    #[test]
    fn rank3_reduction_and_claims(d in rank3_jet(), x in prop::array::uniform6(-1.0f64..1.0)) {
        prop_assume!(F_eval(&d.jet).abs() <= EXACT_TOL);
        let h = d.jet.hess.get(1, 1);
        prop_assume!(h > V22_RANGE.0 && h < V22_RANGE.1);
        prop_assert!(identity_3_40(&d).unwrap() <= EXACT_TOL);
        let big = big_a_matrix(&d).unwrap();
        let red = block_reduce(&big, &d).unwrap();
        prop_assert!(red.off_block <= EXACT_TOL);
        prop_assert!(red.reconstruction <= EXACT_TOL);
        prop_assert!(red.closed_form <= FORMULA_TOL);
        // the reduction is unimodular, so det A = det A₁ · det A₂
        let (da, d1, d2) = (cofactor_det(&to_mat(&big.matrix)), cofactor_det(&to_mat(&red.a1)), cofactor_det(&to_mat(&red.a2)));
        prop_assert!((da - d1 * d2).abs() <= 1e-9 * big.matrix.max_abs().powi(6));
        let c2 = claim2_check(&red.a1, &d);
        prop_assert!(c2.passed(), "{:?}", c2);
        let c3 = claim3_check(&red.a2, &d);
        prop_assert!(c3.passed(), "{:?}", c3);
        prop_assert!(rank3_quadratic_equivalence(&d, &x).unwrap() <= FORMULA_TOL);
    }
}
