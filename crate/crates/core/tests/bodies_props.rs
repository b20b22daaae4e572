use powercvx::convex_bodies::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(rng: &mut ChaCha8Rng) -> Vec4 {
    loop {
        let v: Vec4 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

fn bodies() -> Vec<ConvexBody> {
    let e = ConvexBody::ellipsoid([0.1, -0.2, 0.0, 0.3], [1.3, 0.9, 1.0, 0.7]).unwrap();
    let b = ConvexBody::unit_ball();
    vec![
        b.clone(),
        e.clone(),
        ConvexBody::ellipsoid_from_coefficients([1.5, 1.0, 0.5, 1.0]).unwrap(),
        cone_hull_body(0.5, 1.0, 0.4).unwrap(),
        minkowski_interpolate(&b, &e, 0.35).unwrap(),
    ]
}

/// min over many directions of h(θ) − ⟨x, θ⟩: an upper bound on the margin.
fn brute_margin(body: &ConvexBody, x: &Vec4, dirs: &[Vec4]) -> f64 {
    dirs.iter().map(|d| body.support(d) - dot(x, d)).fold(f64::INFINITY, f64::min)
}

#[test]
fn support_is_sublinear() {
    for b in bodies() {
        assert!(b.sublinearity_defect(2000, 3) <= 1e-12, "{}", b.kind_name());
    }
}

#[test]
fn support_points_attain_the_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for b in bodies() {
        for _ in 0..200 {
            let t = unit(&mut rng);
            let p = b.support_point(&t).unwrap();
            assert!((dot(&p, &t) - b.support(&t)).abs() <= 1e-12);
            assert!(b.margin(&p) >= -1e-9, "{} {p:?}", b.kind_name());
        }
    }
}

#[test]
fn margin_agrees_with_direction_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dirs: Vec<Vec4> = (0..20000).map(|_| unit(&mut rng)).collect();
    for b in bodies() {
        let bb = b.bounding_box();
        for _ in 0..40 {
            let x: Vec4 = std::array::from_fn(|i| rng.gen_range(bb[i][0]..bb[i][1]));
            let m = b.margin(&x);
            let bf = brute_margin(&b, &x, &dirs);
            if m >= 0.0 {
                // inside, the margin is the minimum over all directions
                assert!(m <= bf + 1e-9, "{} {x:?}: {m} > {bf}", b.kind_name());
                assert!(bf - m <= 0.05, "{} {x:?}: {m} vs {bf}", b.kind_name());
            }
            assert_eq!(b.contains(&x), m > 0.0, "{} {x:?} margin {m}", b.kind_name());
        }
    }
}

#[test]
fn contains_matches_implicit_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (c, r) = ([0.1, -0.2, 0.0, 0.3], [1.3, 0.9, 1.0, 0.7]);
    let e = ConvexBody::ellipsoid(c, r).unwrap();
    for _ in 0..2000 {
        let x: Vec4 = std::array::from_fn(|_| rng.gen_range(-1.6..1.6));
        let s: f64 = (0..4).map(|i| ((x[i] - c[i]) / r[i]).powi(2)).sum();
        assert_eq!(e.contains(&x), s < 1.0);
        assert_eq!(e.margin(&x) > 0.0, s < 1.0, "{x:?}");
    }
}

#[test]
fn ellipsoid_margin_off_the_short_axes() {
    // nearest point (4/3, ±√5/3, 0, 0) leaves the long axis
    let e = ConvexBody::ellipsoid([0.0; 4], [2.0, 1.0, 1.0, 1.0]).unwrap();
    assert!((e.margin(&[1.0, 0.0, 0.0, 0.0]) - (2.0f64 / 3.0).sqrt()).abs() <= 1e-14);
    assert!((e.margin(&[0.0; 4]) - 1.0).abs() <= 1e-14);
    assert!((e.margin(&[3.0, 0.0, 0.0, 0.0]) + 1.0).abs() <= 1e-12);
}

#[test]
fn combination_of_balls_is_a_ball() {
    let b1 = ConvexBody::ball([0.2, 0.0, 0.0, 0.0], 1.0).unwrap();
    let b2 = ConvexBody::ball([0.0, 0.0, -0.4, 0.0], 2.0).unwrap();
    let m = minkowski_interpolate(&b1, &b2, 0.25).unwrap();
    let want = ConvexBody::ball([0.15, 0.0, -0.1, 0.0], 1.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let x: Vec4 = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
        assert!((m.margin(&x) - want.margin(&x)).abs() <= 1e-8, "{x:?}");
    }
    assert!((m.inradius() - 1.25).abs() <= 1e-15);
}

#[test]
fn ray_exit_lands_on_the_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for b in bodies() {
        let p = b.center();
        for _ in 0..50 {
            let d = unit(&mut rng);
            let s = b.ray_exit(&p, &d, 4.0).expect("every ray leaves a bounded body");
            let x: Vec4 = std::array::from_fn(|i| p[i] + s * d[i]);
            assert!(b.margin(&x).abs() <= 1e-9, "{} margin {}", b.kind_name(), b.margin(&x));
        }
        assert_eq!(b.ray_exit(&p, &unit(&mut rng), 1e-3), None);
    }
}

#[test]
fn sampled_body_approximates_its_source() {
    let e = ConvexBody::ellipsoid([0.0; 4], [1.3, 0.9, 1.0, 0.9]).unwrap();
    let s = e.to_sampled();
    assert!(s.is_sampled());
    for x in [[0.0; 4], [0.5, 0.2, 0.0, -0.1], [1.0, 0.0, 0.0, 0.0]] {
        assert!((s.margin(&x) - e.margin(&x)).abs() <= 0.1);
        assert!(s.margin(&x) >= e.margin(&x) - 1e-12);
    }
}

#[test]
fn invalid_bodies_are_rejected() {
    assert!(ConvexBody::ball([0.0; 4], -1.0).is_err());
    assert!(ConvexBody::ellipsoid([0.0; 4], [1.0, 0.0, 1.0, 1.0]).is_err());
    assert!(cone_hull_body(0.5, 1.0, 0.6).is_err());
    assert!(ConvexBody::from_json(r#"{"kind":"ball","params":{"center":[0,0,0],"radius":1}}"#).is_err());
    assert!(ConvexBody::new(BodyKind::Ball { center: [0.0; 4], radius: 1.0 }, 16).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(r in prop::array::uniform4(0.3f64..2.0), c in prop::array::uniform4(-0.5f64..0.5), t in 0.0f64..=1.0) {
        let e = ConvexBody::ellipsoid(c, r).unwrap();
        let m = minkowski_interpolate(&ConvexBody::unit_ball(), &e, t).unwrap();
        for b in [e, m] {
            let back = ConvexBody::from_json(&b.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, b);
        }
    }

    #[test]
    fn interpolated_support_is_linear_in_t(t in 0.0f64..=1.0, seed in any::<u64>()) {
        let b1 = ConvexBody::unit_ball();
        let om = ConvexBody::ellipsoid([0.0; 4], [1.3, 0.9, 1.0, 0.9]).unwrap();
        let m = minkowski_interpolate(&b1, &om, t).unwrap();
        let th = unit(&mut ChaCha8Rng::seed_from_u64(seed));
        let want = (1.0 - t) * b1.support(&th) + t * om.support(&th);
        prop_assert!((m.support(&th) - want).abs() <= 1e-14);
    }
}
