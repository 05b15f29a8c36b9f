//! Non-convexity, cube sandwich and Euclidean distance estimates.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gauge::{envelope_gauge, p_gauge_exact, PGaugeOracle};
use super::{AnalyticKind, GeneratingSet, PBody};
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, random_unit_vector};
use crate::optim::{max_gauge_over_polytope, mvee, Ellipsoid, GaugeOracle};
use crate::rng::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub value: f64,
    /// Point of the envelope ball where `value` is attained.
    pub point: Vec<f64>,
    /// Closed form (`ℓ_p` ball or `p = 1`).
    pub exact: bool,
    /// `value` is a proven lower bound: the gauge at `point` was computed exactly.
    pub certified: bool,
    pub method: String,
}

/// `δ` for a body: closed form for `ℓ_p` balls and convex bodies, otherwise
/// [`delta_search`].
pub fn delta_nonconvexity(body: &PBody, restarts: usize, seed: u64) -> Result<DeltaEstimate> {
    let n = body.dimension();
    if body.p() == 1.0 {
        return Ok(DeltaEstimate {
            value: 1.0,
            point: body.generators().point(0).to_vec(),
            exact: true,
            certified: true,
            method: "convex".into(),
        });
    }
    if body.kind() == AnalyticKind::LpBall {
        return Ok(DeltaEstimate {
            value: (n as f64).powf(1.0 / body.p() - 1.0),
            point: vec![1.0 / n as f64; n],
            exact: true,
            certified: true,
            method: "analytic".into(),
        });
    }
    delta_search(body, restarts, seed)
}

/// Lower bound for `δ` from multi-start ascent of the p-gauge over the
/// envelope ball `conv(±S)`.
pub fn delta_search(body: &PBody, restarts: usize, seed: u64) -> Result<DeltaEstimate> {
    let oracle = PGaugeOracle::new(body);
    let vertices = body.generators().symmetric_points();
    let best = max_gauge_over_polytope(&oracle, &vertices, restarts, seed)?;
    let (value, certified) = match body.kind() {
        AnalyticKind::LpBall => (oracle.value(&best.point), true),
        AnalyticKind::Generic if body.p() == 1.0 => (envelope_gauge(body.generators(), &best.point)?.value, true),
        AnalyticKind::Generic => match p_gauge_exact(body, &best.point)? {
            Some(c) => (c.value, true),
            None => (best.value, false),
        },
    };
    Ok(DeltaEstimate {
        value,
        point: best.point,
        exact: false,
        certified,
        method: "search".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SandwichOutcome {
    /// `B∞ ⊂ ΔS ⊂ d·B∞`.
    Holds { d: f64, lp_checks: usize },
    Violated { vertex: Vec<f64>, gauge: f64 },
}

const MAX_CUBE_DIMENSION: usize = 20;

/// Checks that every cube vertex lies in `ΔS` and returns `d = max ‖s‖∞`.
pub fn cube_sandwich(s: &GeneratingSet) -> Result<SandwichOutcome> {
    let n = s.dimension();
    if n > MAX_CUBE_DIMENSION {
        return Err(Error::input(format!("cube sweep limited to n <= {MAX_CUBE_DIMENSION}, got {n}")));
    }
    // generators of the form c·v with v a cube vertex and |c| >= 1 cover ±v outright
    let mut covered: HashSet<u32> = HashSet::new();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for p in s.points() {
        let c = p[0].abs();
        if c >= 1.0 && p.iter().all(|x| x.abs() == c) {
            let mask = p.iter().enumerate().fold(0u32, |m, (j, x)| if *x > 0.0 { m | 1 << j } else { m });
            covered.insert(mask);
            covered.insert(!mask & full);
        }
    }
    let mut lp_checks = 0;
    for mask in 0..=full {
        if covered.contains(&mask) {
            continue;
        }
        let a: Vec<f64> = (0..n).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
        lp_checks += 1;
        let g = envelope_gauge(s, &a)?;
        if g.value > 1.0 + 1e-8 {
            return Ok(SandwichOutcome::Violated { vertex: a, gauge: g.value });
        }
    }
    Ok(SandwichOutcome::Holds {
        d: s.max_sup_norm(),
        lp_checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DxEstimate {
    /// Sandwich ratio `r·outer` found by the search; at most `d_X` up to the
    /// search's accuracy.
    pub value: f64,
    /// `max_s ‖s‖_E`, the slack of the computed MVEE.
    pub outer: f64,
    /// Largest envelope gauge found on the boundary of `E`.
    pub inner_ratio: f64,
    /// Certified upper bound `√(n(1+tol))` from John's theorem.
    pub john_bound: f64,
    pub ellipsoid: Ellipsoid,
}

/// Ascent of the envelope gauge over `∂E`: each step moves to the support
/// point of `E` in the direction of the current norming functional, which
/// never decreases the gauge. Returns the best gauge and where it was found.
pub fn max_gauge_on_ellipsoid(s: &GeneratingSet, e: &Ellipsoid, starts: Vec<Vec<f64>>, steps: usize) -> Result<(f64, Vec<f64>)> {
    let mut best = (0.0f64, Vec::new());
    for y0 in starts {
        let mut y = y0;
        let mut cert = envelope_gauge(s, &y)?;
        for _ in 0..steps {
            let z = cert.functional.clone().unwrap_or_default();
            if norm_inf(&z) == 0.0 {
                break;
            }
            let y2 = e.support_point(&z);
            let c2 = envelope_gauge(s, &y2)?;
            if c2.value <= cert.value * (1.0 + 1e-12) {
                break;
            }
            y = y2;
            cert = c2;
        }
        if cert.value > best.0 {
            best = (cert.value, y);
        }
    }
    Ok(best)
}

const DX_RANDOM_STARTS: usize = 64;
const DX_ASCENT_STEPS: usize = 50;

/// Euclidean distance estimate of the envelope: MVEE of `±S` plus
/// convex-maximization ascent of the envelope gauge over the ellipsoid
/// boundary.
pub fn dx_estimate(s: &GeneratingSet, tolerance: f64) -> Result<DxEstimate> {
    let n = s.dimension();
    let e = mvee(s.points(), tolerance)?;
    let outer = s.points().iter().map(|p| e.norm(p)).fold(0.0, f64::max);

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let normalized: DMatrix<f64> = &e.shape_matrix / e.scale;
    let eig = normalized.symmetric_eigen();
    for c in 0..n {
        let v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        let len = e.norm(&v);
        starts.push(v.iter().map(|x| x / len).collect());
    }
    let mut g = rng(0x5eed_d0c5);
    for _ in 0..DX_RANDOM_STARTS {
        let u = random_unit_vector(&mut g, n);
        starts.push(e.boundary_point(&u));
    }
    let (best, _) = max_gauge_on_ellipsoid(s, &e, starts, DX_ASCENT_STEPS)?;
    Ok(DxEstimate {
        value: (best * outer).max(1.0),
        outer,
        inner_ratio: best,
        john_bound: (n as f64 * (1.0 + tolerance)).sqrt(),
        ellipsoid: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_ball_delta_closed_form() {
        let d = delta_nonconvexity(&PBody::lp_ball(8, 2.0 / 3.0).unwrap(), 4, 1).unwrap();
        assert!((d.value - 8f64.sqrt()).abs() < 1e-12);
        let d = delta_nonconvexity(&PBody::lp_ball(5, 0.5).unwrap(), 4, 1).unwrap();
        assert!((d.value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn convex_body_has_unit_delta() {
        let b = PBody::new(GeneratingSet::cube_vertices(3).unwrap(), 1.0).unwrap();
        assert_eq!(delta_nonconvexity(&b, 4, 1).unwrap().value, 1.0);
    }

    #[test]
    fn sandwich_cases() {
        match cube_sandwich(&GeneratingSet::cube_vertices(3).unwrap()).unwrap() {
            SandwichOutcome::Holds { d, .. } => assert_eq!(d, 1.0),
            other => panic!("{other:?}"),
        }
        match cube_sandwich(&GeneratingSet::signed_basis(2)).unwrap() {
            SandwichOutcome::Violated { gauge, .. } => assert!((gauge - 2.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let mut pts = GeneratingSet::cube_vertices(2).unwrap().points().to_vec();
        pts.push(vec![2.0, 0.0]);
        match cube_sandwich(&GeneratingSet::new(pts, "x").unwrap()).unwrap() {
            SandwichOutcome::Holds { d, .. } => assert_eq!(d, 2.0),
            other => panic!("{other:?}"),
        }
    }
}
