//! Multi-start projected ascent of a (possibly non-convex) gauge over the
//! convex hull of a vertex list.
//!
//! The search runs in barycentric coordinates `w` on the probability simplex.
//! Starts: the barycenter, vertex-pair midpoints, and random Dirichlet(1)
//! combinations. The result is a lower bound for the maximum; the maximizing
//! point is re-checked for hull membership with an LP.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::lp::{solve_lp, LpOutcome, LpProblem};
use crate::error::{Error, Result};
use crate::linalg::{norm2, project_simplex};
use crate::rng::rng;

/// A gauge that can be evaluated together with a (super)gradient.
pub trait GaugeOracle {
    fn dim(&self) -> usize;

    /// Gauge value and a gradient; components may be capped where the gauge
    /// is not differentiable.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>);

    fn value(&self, x: &[f64]) -> f64 {
        self.value_and_gradient(x).0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeMaximum {
    pub value: f64,
    pub point: Vec<f64>,
    pub weights: Vec<f64>,
    /// Equality residual of the LP hull-membership check for `point`.
    pub hull_residual: f64,
    pub starts: usize,
}

const MAX_PAIR_STARTS: usize = 4096;
const ASCENT_ITERATIONS: usize = 3000;

fn combine(vertices: &[Vec<f64>], w: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (v, &wi) in vertices.iter().zip(w) {
        if wi != 0.0 {
            for (xj, vj) in x.iter_mut().zip(v) {
                *xj += wi * vj;
            }
        }
    }
    x
}

fn ascend<G: GaugeOracle + ?Sized>(gauge: &G, vertices: &[Vec<f64>], mut w: Vec<f64>) -> (f64, Vec<f64>) {
    let dim = gauge.dim();
    let (mut f, mut grad) = gauge.value_and_gradient(&combine(vertices, &w, dim));
    let mut step = 0.1;
    let mut stall = 0;
    for _ in 0..ASCENT_ITERATIONS {
        let gw: Vec<f64> = vertices.iter().map(|v| v.iter().zip(&grad).map(|(a, b)| a * b).sum()).collect();
        // remove the component normal to the simplex
        let mean = gw.iter().sum::<f64>() / gw.len() as f64;
        let d: Vec<f64> = gw.iter().map(|g| g - mean).collect();
        let dn = norm2(&d);
        if dn < 1e-14 {
            break;
        }
        let trial: Vec<f64> = w.iter().zip(&d).map(|(wi, di)| wi + step * di / dn).collect();
        let trial = project_simplex(&trial);
        let (ft, gt) = gauge.value_and_gradient(&combine(vertices, &trial, dim));
        if ft > f {
            if ft - f <= 1e-13 * f.abs().max(1.0) {
                stall += 1;
            } else {
                stall = 0;
            }
            f = ft;
            grad = gt;
            w = trial;
            step = (step * 1.5).min(1.0);
        } else {
            step *= 0.5;
        }
        if step < 1e-12 || stall > 20 {
            break;
        }
    }
    (f, w)
}

/// Lower bound for `max { gauge(x) : x ∈ conv(vertices) }` with its maximizer.
pub fn max_gauge_over_polytope<G: GaugeOracle + ?Sized>(
    gauge: &G,
    polytope_vertices: &[Vec<f64>],
    restarts: usize,
    seed: u64,
) -> Result<GaugeMaximum> {
    let dim = gauge.dim();
    let k = polytope_vertices.len();
    if k == 0 {
        return Err(Error::input("polytope needs at least one vertex"));
    }
    if polytope_vertices.iter().any(|v| v.len() != dim || v.iter().any(|x| !x.is_finite())) {
        return Err(Error::input(format!("vertices must be finite points of dimension {dim}")));
    }
    let mut g = rng(seed);

    let mut starts: Vec<Vec<f64>> = vec![vec![1.0 / k as f64; k]];
    let mut pair_starts: Vec<(f64, Vec<f64>)> = Vec::new();
    let total_pairs = k * (k - 1) / 2;
    let push_pair = |i: usize, j: usize, out: &mut Vec<(f64, Vec<f64>)>| {
        let mut w = vec![0.0; k];
        w[i] = 0.5;
        w[j] += 0.5;
        let f = gauge.value(&combine(polytope_vertices, &w, dim));
        out.push((f, w));
    };
    if total_pairs <= MAX_PAIR_STARTS {
        for i in 0..k {
            for j in i + 1..k {
                push_pair(i, j, &mut pair_starts);
            }
        }
    } else {
        for _ in 0..MAX_PAIR_STARTS {
            let i = g.random_range(0..k);
            let j = g.random_range(0..k);
            push_pair(i, j, &mut pair_starts);
        }
    }
    // the best few midpoints get a full ascent
    pair_starts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    starts.extend(pair_starts.into_iter().take(restarts.max(1)).map(|(_, w)| w));
    for _ in 0..restarts {
        let e: Vec<f64> = (0..k).map(|_| g.sample::<f64, _>(Exp1)).collect();
        let s: f64 = e.iter().sum();
        starts.push(e.into_iter().map(|x| x / s).collect());
    }

    let n_starts = starts.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for w0 in starts {
        let (f, w) = ascend(gauge, polytope_vertices, w0);
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, w));
        }
    }
    let (value, weights) = best.expect("at least one start");
    let point = combine(polytope_vertices, &weights, dim);
    let value = gauge.value(&point).min(value);
    let hull_residual = hull_membership_residual(polytope_vertices, &point)?;
    if hull_residual > 1e-8 {
        return Err(Error::numerical(format!(
            "maximizer failed the hull-membership check (residual {hull_residual:e})"
        )));
    }
    Ok(GaugeMaximum {
        value,
        point,
        weights,
        hull_residual,
        starts: n_starts,
    })
}

/// Solves `w >= 0, Σw = 1, Σ w_i v_i = x` and returns the equality residual,
/// or infinity when the LP is infeasible.
pub fn hull_membership_residual(vertices: &[Vec<f64>], x: &[f64]) -> Result<f64> {
    let k = vertices.len();
    let dim = x.len();
    let mut rows: Vec<Vec<f64>> = (0..dim).map(|j| vertices.iter().map(|v| v[j]).collect()).collect();
    rows.push(vec![1.0; k]);
    let mut rhs = x.to_vec();
    rhs.push(1.0);
    let lp = LpProblem::nonnegative(vec![0.0; k], rows, rhs)?;
    match solve_lp(&lp)? {
        LpOutcome::Optimal(s) => Ok(lp.primal_residual(&s.x)),
        _ => Ok(f64::INFINITY),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Euclid(usize);

    impl GaugeOracle for Euclid {
        fn dim(&self) -> usize {
            self.0
        }
        fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
            let n = norm2(x);
            let g = if n > 0.0 { x.iter().map(|v| v / n).collect() } else { vec![0.0; x.len()] };
            (n, g)
        }
    }

    #[test]
    fn convex_gauge_peaks_at_a_vertex() {
        let verts = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, -1.0]];
        let m = max_gauge_over_polytope(&Euclid(2), &verts, 8, 3).unwrap();
        assert!((m.value - 2.0).abs() < 1e-9);
        assert!(m.hull_residual < 1e-9);
    }

    #[test]
    fn hull_check_rejects_outside_points() {
        let verts = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(hull_membership_residual(&verts, &[0.5, 0.5]).unwrap() < 1e-12);
        assert!(hull_membership_residual(&verts, &[1.0, 1.0]).unwrap().is_infinite());
    }
}
