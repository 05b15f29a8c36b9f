use proptest::prelude::*;
use quasinorm::balance::{
    exhaustive_signs, greedy_signs, halving_step, type1_represent, type2_theta, Euclidean, Norm, StarTerm, L1, LInf,
};
use quasinorm::bodies::{envelope_gauge, GeneratingSet};
use quasinorm::linalg::{axpy, norm2, random_unit_vector};
use quasinorm::rng::rng;
use rand::Rng;

fn vectors(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_square_never_outgrows_the_energy(seed in any::<u64>(), count in 1usize..40, dim in 1usize..6) {
        let xs = vectors(seed, count, dim);
        let report = greedy_signs(&xs, &Euclidean).unwrap();
        let mut partial = vec![0.0; dim];
        let mut energy = 0.0;
        for (x, &e) in xs.iter().zip(&report.signs) {
            axpy(e as f64, x, &mut partial);
            energy += norm2(x).powi(2);
            prop_assert!(norm2(&partial).powi(2) <= energy * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn halving_identity_holds(seed in any::<u64>(), half in 1usize..12) {
        let s = GeneratingSet::sphere_sample(6, 3, seed).unwrap();
        let mut r = rng(seed ^ 9);
        let terms: Vec<StarTerm> = (0..2 * half)
            .map(|_| StarTerm { generator: r.random_range(0..s.len()), lambda: r.random_range(-1.0..=1.0) })
            .collect();
        let h = halving_step(&s, &terms).unwrap();
        prop_assert_eq!(h.kept.len(), half);
        prop_assert!(h.signs.iter().filter(|&&e| e < 0).count() <= half);
        let n2 = terms.len() as f64;
        let mut u = vec![0.0; 3];
        let mut v = vec![0.0; 3];
        let mut signed = vec![0.0; 3];
        for (t, &e) in terms.iter().zip(&h.signs) {
            axpy(t.lambda / n2, s.point(t.generator), &mut u);
            axpy(e as f64 * t.lambda / n2, s.point(t.generator), &mut signed);
        }
        for t in &h.kept {
            axpy(t.lambda / half as f64, s.point(t.generator), &mut v);
        }
        for j in 0..3 {
            prop_assert!((u[j] - v[j] - signed[j]).abs() <= 1e-10);
        }
        h.certificate.verify(&s, &v, 1e-12).unwrap();
    }

    #[test]
    fn exhaustive_is_never_worse_than_greedy(seed in any::<u64>(), count in 1usize..=12, dim in 1usize..4) {
        let xs = vectors(seed, count, dim);
        let norms: [&dyn Norm; 3] = [&Euclidean, &L1, &LInf];
        for norm in norms {
            let g = greedy_signs(&xs, norm).unwrap().sum_norm;
            let e = exhaustive_signs(&xs, norm).unwrap().sum_norm;
            prop_assert!(e <= g + 1e-12);
        }
    }
}

#[test]
fn type1_rescaled_reconstruction() {
    let s = GeneratingSet::sphere_sample(12, 2, 5).unwrap();
    let mut r = rng(11);
    for _ in 0..10 {
        // a point of the envelope ball
        let d = random_unit_vector(&mut r, 2);
        let g = envelope_gauge(&s, &d).unwrap().value;
        let t: f64 = r.random_range(0.0..1.0);
        let x: Vec<f64> = d.iter().map(|v| v * t / g).collect();
        let rep = type1_represent(&s, 0.6, 4, &x, 4, 1e-6).unwrap();
        rep.representation.check_structure(&s).unwrap();
        assert!(rep.representation.reconstruction_error(&s, &x, rep.scale) <= 1e-6);
        assert!(rep.scale <= rep.scale_bound + 1e-12);
    }
}

#[test]
fn type2_theta_stays_in_range() {
    for qi in 0..=20 {
        let q = 1.05 + 0.0475 * qi as f64;
        for ti in 0..=40 {
            let tq = 1.0 + 0.5 * ti as f64;
            let th = type2_theta(q, tq).unwrap().theta;
            assert!(th > 0.75 && th <= 1.0, "q {q} T {tq}: {th}");
            // the gap is representable once q' is moderate
            if q >= 1.5 {
                assert!(th < 1.0, "q {q} T {tq}");
            }
        }
    }
}
