use proptest::prelude::*;
use quasinorm::bodies::{
    cube_sandwich, delta_nonconvexity, envelope_gauge, p_gauge_upper, GeneratingSet, PBody, SandwichOutcome,
};
use quasinorm::rng::rng;
use rand::Rng;

fn random_set(seed: u64, dim: usize, count: usize) -> GeneratingSet {
    let mut r = rng(seed);
    loop {
        let pts = (0..count)
            .map(|_| (0..dim).map(|_| r.random_range(-2.0..2.0)).collect())
            .collect();
        if let Ok(s) = GeneratingSet::new(pts, "random") {
            return s;
        }
    }
}

fn bodies() -> Vec<GeneratingSet> {
    vec![
        GeneratingSet::signed_basis(3),
        GeneratingSet::cube_vertices(3).unwrap(),
        GeneratingSet::sphere_sample(20, 3, 4).unwrap(),
        random_set(9, 3, 7),
    ]
}

fn point(seed: u64, dim: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..dim).map(|_| r.random_range(-3.0..3.0)).collect()
}

#[test]
fn envelope_gauge_is_a_norm() {
    let mut r = rng(1);
    for s in bodies() {
        for _ in 0..1000 {
            let x = point(r.random(), 3);
            let y = point(r.random(), 3);
            let t: f64 = r.random_range(-4.0..4.0);
            let gx = envelope_gauge(&s, &x).unwrap().value;
            let gy = envelope_gauge(&s, &y).unwrap().value;
            let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
            let gtx = envelope_gauge(&s, &tx).unwrap().value;
            assert!((gtx - t.abs() * gx).abs() <= 1e-9 * gx.max(1.0), "{} {gtx} {gx} {t}", s.label());
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let gs = envelope_gauge(&s, &sum).unwrap().value;
            assert!(gs <= gx + gy + 1e-9, "{}", s.label());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lp_ball_gauge_is_p_subadditive(
        x1 in prop::collection::vec(-3.0f64..3.0, 4),
        x2 in prop::collection::vec(-3.0f64..3.0, 4),
        p in 0.2f64..1.0,
    ) {
        let body = PBody::lp_ball(4, p).unwrap();
        let x: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let g = |v: &[f64]| p_gauge_upper(&body, v, 1, 0).unwrap().value.powf(p);
        prop_assert!(g(&x) <= (g(&x1) + g(&x2)) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn envelope_never_exceeds_p_gauge(seed in any::<u64>(), p in 0.3f64..1.0) {
        let x = point(seed, 3);
        for s in [GeneratingSet::signed_basis(3), random_set(seed ^ 5, 3, 5)] {
            let body = PBody::new(s.clone(), p).unwrap();
            let env = envelope_gauge(&s, &x).unwrap().value;
            let pg = p_gauge_upper(&body, &x, 4, seed).unwrap().value;
            prop_assert!(env <= pg * (1.0 + 1e-9) + 1e-12, "{env} > {pg}");
        }
    }
}

#[test]
fn delta_is_at_least_one_and_one_for_convex_bodies() {
    for n in 2..6 {
        for p in [0.3, 0.5, 0.75, 1.0] {
            let d = delta_nonconvexity(&PBody::lp_ball(n, p).unwrap(), 4, 0).unwrap();
            assert!(d.value >= 1.0);
            if p == 1.0 {
                assert_eq!(d.value, 1.0);
            }
        }
        let generic = PBody::new(random_set(n as u64, n, n + 3), 1.0).unwrap();
        assert_eq!(delta_nonconvexity(&generic, 4, 0).unwrap().value, 1.0);
        let generic = PBody::new(random_set(n as u64, n, n + 3), 0.5).unwrap();
        assert!(delta_nonconvexity(&generic, 4, 0).unwrap().value >= 1.0 - 1e-9);
    }
}

#[test]
fn cube_sandwich_matches_vertex_gauges() {
    let n = 3;
    let vertices: Vec<Vec<f64>> = GeneratingSet::cube_vertices(n).unwrap().points().to_vec();
    let mut r = rng(3);
    for trial in 0..40 {
        let count = r.random_range(n..9);
        let s = random_set(trial, n, count);
        let all_inside = vertices.iter().all(|v| envelope_gauge(&s, v).unwrap().value <= 1.0 + 1e-8);
        let verdict = cube_sandwich(&s).unwrap();
        assert_eq!(matches!(verdict, SandwichOutcome::Holds { .. }), all_inside, "trial {trial}");
    }
    assert!(matches!(
        cube_sandwich(&GeneratingSet::cube_vertices(n).unwrap()).unwrap(),
        SandwichOutcome::Holds { .. }
    ));
    assert!(matches!(
        cube_sandwich(&GeneratingSet::signed_basis(n)).unwrap(),
        SandwichOutcome::Violated { .. }
    ));
}
