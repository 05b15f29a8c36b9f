use quasinorm::bodies::{envelope_gauge, GeneratingSet};
use quasinorm::dvoretzky::{
    apply, contraction_bound, distance_bound, dvoretzky_search, ellipsoid_gamma_represent, random_projection,
};
use quasinorm::linalg::{dot, random_unit_vector};
use quasinorm::rng::rng;
use rand::Rng;

#[test]
fn rank_one_projections_are_isotropic() {
    let seeds = 10_000;
    let mut mean = [0.0; 3];
    let mut cov = [[0.0; 3]; 3];
    for seed in 0..seeds {
        let rows = random_projection(3, 1, seed).unwrap();
        let v = &rows[0];
        assert!((dot(v, v) - 1.0).abs() < 1e-10);
        for i in 0..3 {
            mean[i] += v[i] / seeds as f64;
            for j in 0..3 {
                cov[i][j] += v[i] * v[j] / seeds as f64;
            }
        }
    }
    for i in 0..3 {
        // standard error of a coordinate mean is 1/√(3·10⁴) ≈ 0.0058
        assert!(mean[i].abs() < 0.025, "mean {mean:?}");
        for j in 0..3 {
            let target = if i == j { 1.0 / 3.0 } else { 0.0 };
            assert!((cov[i][j] - target).abs() <= 0.05 / 3.0, "cov {cov:?}");
        }
    }
}

#[test]
fn search_result_sandwiches_the_hull() {
    let s = GeneratingSet::sphere_sample(200, 12, 3).unwrap();
    let search = dvoretzky_search(&s, 3, 0.2, 20, 4).unwrap();
    let best = &search.best;
    for (i, r) in best.projection_matrix.iter().enumerate() {
        for (j, q) in best.projection_matrix.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((dot(r, q) - target).abs() < 1e-10);
        }
    }
    assert!(best.ellipticity >= 1.0);
    assert!((best.inner_radius * best.ellipticity - 1.0).abs() < 1e-12);
    let projected: Vec<Vec<f64>> = s.points().iter().map(|x| apply(&best.projection_matrix, x)).collect();
    let e = &best.ellipsoid;
    // outer: Δ(PS) ⊂ E
    for p in &projected {
        assert!(e.norm(p) <= 1.0 + 1e-9);
    }
    // inner: (1/ellipticity)·E ⊂ Δ(PS), probed by support functions and gauges
    let set = GeneratingSet::new(projected.clone(), "projected").unwrap();
    let mut r = rng(8);
    for _ in 0..200 {
        let u = random_unit_vector(&mut r, 3);
        let h_e = dot(&u, &e.support_point(&u));
        let h_s = projected.iter().map(|p| dot(&u, p).abs()).fold(0.0, f64::max);
        assert!(h_s >= best.inner_radius * h_e - 1e-9);
        let g = envelope_gauge(&set, &e.boundary_point(&u)).unwrap().value;
        assert!(g <= best.ellipticity * (1.0 + 1e-9), "{g} > {}", best.ellipticity);
    }
}

#[test]
fn expansion_contracts_step_by_step() {
    let s = GeneratingSet::sphere_sample(300, 10, 6).unwrap();
    let search = dvoretzky_search(&s, 2, 0.2, 30, 1).unwrap();
    let best = &search.best;
    let projected = GeneratingSet::new(
        s.points().iter().map(|x| apply(&best.projection_matrix, x)).collect(),
        "projected",
    )
    .unwrap();
    let eta = best.ellipticity - 1.0;
    let theta = 0.5;
    let mut r = rng(2);
    for _ in 0..50 {
        let u = random_unit_vector(&mut r, 2);
        let t: f64 = r.random();
        let y: Vec<f64> = best.ellipsoid.boundary_point(&u).iter().map(|v| v * (1.0 - theta) * t).collect();
        let rep = ellipsoid_gamma_represent(&projected, &best.ellipsoid, eta, theta, &y, 1e-6).unwrap();
        for &c in &rep.contractions {
            assert!(c <= contraction_bound(eta) + 1e-9);
        }
        assert!(rep.residual <= 1e-6);
        rep.representation.check_structure(&projected).unwrap();
        let gap: Vec<f64> = y.iter().zip(rep.representation.evaluate(&projected)).map(|(a, b)| a - b).collect();
        assert!(best.ellipsoid.norm(&gap) <= 1e-6 + 1e-12);
    }
}

#[test]
fn theta_matched_to_eta_gives_one_plus_epsilon() {
    // θ = √(3η) = ε/2, i.e. η = ε²/12
    for i in 1..=600 {
        let eps = i as f64 / 700.0;
        let theta = eps / 2.0;
        let eta = eps * eps / 12.0;
        assert!(((3.0 * eta).sqrt() - theta).abs() < 1e-12);
        assert!(distance_bound(eta, theta) <= 1.0 + eps + 1e-12, "ε = {eps}");
    }
    // the bound is tight at ε = 6/7 and fails beyond
    assert!((distance_bound(3.0 / 49.0, 3.0 / 7.0) - 13.0 / 7.0).abs() < 1e-12);
    let eps: f64 = 0.9;
    assert!(distance_bound(eps * eps / 12.0, eps / 2.0) > 1.0 + eps);
}
