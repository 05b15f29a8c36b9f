use proptest::prelude::*;
use quasinorm::linalg::{dot, random_unit_vector};
use quasinorm::optim::{max_gauge_over_polytope, mvee, solve_lp, GaugeOracle, LpOutcome, LpProblem};
use quasinorm::rng::rng;
use rand::Rng;

/// Random feasible LP: `b = A x0` for some `x0` inside the bounds.
fn feasible_problem(seed: u64, boxed: bool) -> LpProblem {
    let mut r = rng(seed);
    let rows = r.random_range(1..5);
    let vars = rows + r.random_range(1..6);
    let a: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..vars).map(|_| r.random_range(-3.0..3.0)).collect())
        .collect();
    let x0: Vec<f64> = (0..vars).map(|_| r.random_range(0.0..2.0)).collect();
    let b: Vec<f64> = a.iter().map(|row| dot(row, &x0)).collect();
    if boxed {
        let c: Vec<f64> = (0..vars).map(|_| r.random_range(-1.0..1.0)).collect();
        let bounds = x0
            .iter()
            .map(|&x| (x - r.random_range(0.1..1.0), x + r.random_range(0.1..1.0)))
            .collect();
        LpProblem::new(c, a, b, bounds).unwrap()
    } else {
        // positive costs keep the nonnegative problem bounded
        let c: Vec<f64> = (0..vars).map(|_| r.random_range(0.1..2.0)).collect();
        LpProblem::nonnegative(c, a, b).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp_strong_duality(seed in any::<u64>(), boxed in any::<bool>()) {
        let problem = feasible_problem(seed, boxed);
        let sol = match solve_lp(&problem).unwrap() {
            LpOutcome::Optimal(s) => s,
            other => panic!("feasible bounded problem reported {other:?}"),
        };
        prop_assert!((sol.value - sol.dual_objective(&problem)).abs() <= 1e-8 * sol.value.abs().max(1.0));
        prop_assert!(problem.primal_residual(&sol.x) <= 1e-8);
        prop_assert!(sol.complementary_slackness(&problem) <= 1e-8);
    }

    #[test]
    fn mvee_sandwich(seed in any::<u64>(), dim in 2usize..5, extra in 0usize..12) {
        let mut r = rng(seed);
        let points: Vec<Vec<f64>> = (0..dim + extra)
            .map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let e = match mvee(&points, 1e-7) {
            Ok(e) => e,
            Err(_) => return Ok(()), // degenerate draw
        };
        for p in &points {
            prop_assert!(e.norm(p) <= 1.0 + 1e-6);
        }
        // support function of E/√n stays below that of conv(±points)
        let shrink = (dim as f64 * (1.0 + 1e-6)).sqrt();
        for _ in 0..100 {
            let u = random_unit_vector(&mut r, dim);
            let h_e = dot(&u, &e.support_point(&u));
            let h_p = points.iter().map(|p| dot(&u, p).abs()).fold(0.0, f64::max);
            prop_assert!(h_e / shrink <= h_p * (1.0 + 1e-6) + 1e-12, "{} > {}", h_e / shrink, h_p);
        }
    }
}

/// `(Σ|x_i|^p)^{1/p}`, a quasi-norm for `p < 1`.
struct LpQuasi {
    dim: usize,
    p: f64,
}

impl GaugeOracle for LpQuasi {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let s: f64 = x.iter().map(|v| v.abs().powf(self.p)).sum();
        let value = s.powf(1.0 / self.p);
        if value == 0.0 {
            return (0.0, vec![1.0; x.len()]);
        }
        let g = x
            .iter()
            .map(|&v| value.powf(1.0 - self.p) * v.abs().max(1e-12).powf(self.p - 1.0) * v.signum())
            .collect();
        (value, g)
    }
}

fn cross_polytope(n: usize, r: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for j in 0..n {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[j] = s * r;
            out.push(v);
        }
    }
    out
}

#[test]
fn gauge_maximum_grows_with_nested_cross_polytopes() {
    let n = 3;
    let oracle = LpQuasi { dim: n, p: 0.5 };
    let mut vertices = Vec::new();
    let mut last = 0.0;
    for radius in [1.0, 1.5, 2.0] {
        vertices.extend(cross_polytope(n, radius));
        let m = max_gauge_over_polytope(&oracle, &vertices, 20, 7).unwrap();
        assert!(m.value >= last - 1e-9, "{} dropped below {last}", m.value);
        // the maximum sits at a facet barycentre: r·n^{1/p−1}
        assert!((m.value - radius * (n as f64).powf(1.0 / oracle.p - 1.0)).abs() < 1e-6 * radius, "{}", m.value);
        assert!(m.hull_residual < 1e-8);
        last = m.value;
    }
}
