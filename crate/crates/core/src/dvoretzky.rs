//! Random low-rank projections whose image hull is nearly an ellipsoid, and
//! geometric-hull representations of ellipsoid points by the projected set.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bodies::{envelope_gauge, max_gauge_on_ellipsoid, GeneratingSet};
use crate::error::{Error, Result};
use crate::hulls::{GammaRepresentation, GammaTerm};
use crate::linalg::{dot, norm2, random_unit_vector};
use crate::optim::{mvee, nelder_mead, Ellipsoid};
use crate::parallel::par_map;
use crate::rng::{derive_seed, rng};

/// Directions probed when verifying the inner radius.
pub const INNER_DIRECTIONS: usize = 200;
/// Cheaper probe count used to rank trials before full verification.
const SCREEN_DIRECTIONS: usize = 12;
const ASCENT_STEPS: usize = 20;
const MVEE_TOLERANCE: f64 = 1e-7;
/// Fixed directions on which the hull's support function is tabulated for
/// the shape fit; normals found by the exact ascent are added as cuts.
const FIT_DIRECTIONS: usize = 400;
const FIT_ROUNDS: usize = 4;
const FIT_EVALS: usize = 1200;
/// Worst tabulated directions used as ascent starts after each fit.
const FIT_STARTS: usize = 6;
/// Only this many of the best MVEE-screened trials get reshaped.
const FIT_TOP: usize = 20;

/// Orthonormalized standard normal rows (`k × n`).
pub fn random_projection(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if k == 0 || k > n {
        return Err(Error::input(format!("need 1 ≤ k ≤ n (k = {k}, n = {n})")));
    }
    let mut r = rng(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    while rows.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
        // two Gram-Schmidt passes
        for _ in 0..2 {
            for q in &rows {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let len = dot(&v, &v).sqrt();
        if len > 1e-8 {
            rows.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    Ok(rows)
}

pub fn apply(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, x)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub projection_matrix: Vec<Vec<f64>>,
    /// Ellipsoid scaled so that every projected point has `E`-norm ≤ 1.
    pub ellipsoid: Ellipsoid,
    /// Largest envelope gauge found on `∂E`: `(1/ellipticity) E ⊂ Δ(PS) ⊂ E`.
    pub ellipticity: f64,
    pub inner_radius: f64,
    pub directions: usize,
    /// The same measurement against the minimum-volume enclosing ellipsoid,
    /// before the shape fit.
    pub mvee_ellipticity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvoretzkySearch {
    pub best: ProjectionResult,
    pub trials: usize,
    pub eta: f64,
    pub success: bool,
    /// Screening estimates per trial (lower bounds for the ellipticity).
    pub screened: Vec<f64>,
    /// Trials verified with the full direction budget.
    pub verified_trials: Vec<usize>,
}

struct Candidate {
    rows: Vec<Vec<f64>>,
    set: GeneratingSet,
    mvee: Ellipsoid,
    ellipsoid: Ellipsoid,
    screen: f64,
}

fn scaled_mvee(points: &[Vec<f64>]) -> Result<Ellipsoid> {
    let e = mvee(points, MVEE_TOLERANCE)?;
    let outer = points.iter().map(|p| e.norm(p)).fold(0.0, f64::max);
    Ellipsoid::new(e.shape_matrix.clone(), e.scale * outer * outer)
}

fn random_starts(e: &Ellipsoid, directions: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..directions)
        .map(|_| e.boundary_point(&random_unit_vector(&mut r, e.dim())))
        .collect()
}

fn ellipticity(set: &GeneratingSet, e: &Ellipsoid, directions: usize, seed: u64) -> Result<f64> {
    Ok(max_gauge_on_ellipsoid(set, e, random_starts(e, directions, seed), ASCENT_STEPS)?.0.max(1.0))
}

/// Lower-triangular factor (row-major `k × k`) from the packed parameters;
/// the diagonal is stored as logarithms.
fn factor(k: usize, params: &[f64]) -> Vec<f64> {
    let mut l = vec![0.0; k * k];
    let mut it = params.iter();
    for i in 0..k {
        for j in 0..=i {
            let v = *it.next().expect("k(k+1)/2 parameters");
            l[i * k + j] = if i == j { v.exp() } else { v };
        }
    }
    l
}

fn pack(k: usize, l: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        for j in 0..=i {
            out.push(if i == j { l[i * k + j].ln() } else { l[i * k + j] });
        }
    }
    out
}

/// `‖Lᵀp‖`, the norm of `p` for the shape `M = LLᵀ`.
fn shape_norm(k: usize, l: &[f64], p: &[f64]) -> f64 {
    (0..k)
        .map(|j| (j..k).map(|i| l[i * k + j] * p[i]).sum::<f64>().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `‖L⁻¹d‖`, the support function of `{x : xᵀMx ≤ 1}` at `d`.
fn shape_support(k: usize, l: &[f64], d: &[f64]) -> f64 {
    let mut y = vec![0.0; k];
    for i in 0..k {
        let s: f64 = (0..i).map(|j| l[i * k + j] * y[j]).sum();
        y[i] = (d[i] - s) / l[i * k + i];
    }
    dot(&y, &y).sqrt()
}

/// Outer radius over inner radius on the tabulated directions (a lower
/// bound for the true ratio of this shape).
fn tabulated_ratio(k: usize, l: &[f64], points: &[Vec<f64>], dirs: &[Vec<f64>], support: &[f64]) -> f64 {
    let outer = points.iter().map(|p| shape_norm(k, l, p)).fold(0.0, f64::max);
    let inner = dirs
        .iter()
        .zip(support)
        .map(|(d, h)| h / shape_support(k, l, d))
        .fold(f64::INFINITY, f64::min);
    outer / inner
}

fn hull_support(points: &[Vec<f64>], d: &[f64]) -> f64 {
    points.iter().map(|p| dot(p, d).abs()).fold(0.0, f64::max)
}

fn shape_ellipsoid(k: usize, l: &[f64], points: &[Vec<f64>]) -> Result<Ellipsoid> {
    let mut m = nalgebra::DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = (0..k).map(|t| l[i * k + t] * l[j * k + t]).sum();
        }
    }
    let outer = points.iter().map(|p| shape_norm(k, l, p)).fold(0.0, f64::max);
    Ellipsoid::new(m, outer * outer)
}

/// Fits the ellipsoid shape to the hull: minimizes the tabulated ratio
/// from the MVEE shape, measures the fitted shape with the exact gauge
/// ascent, and adds the norming functional of the worst point found as a
/// new direction. Returns the best measured ellipsoid and its value.
fn fit_shape(set: &GeneratingSet, start: &Ellipsoid, start_value: f64, seed: u64) -> Result<(Ellipsoid, f64)> {
    let k = start.dim();
    let points = set.points();
    let mut r = rng(derive_seed(seed, 3));
    let mut dirs: Vec<Vec<f64>> = (0..FIT_DIRECTIONS).map(|_| random_unit_vector(&mut r, k)).collect();
    let mut support: Vec<f64> = dirs.iter().map(|d| hull_support(points, d)).collect();
    let l0 = start.cholesky_factor();
    let mut params = pack(k, &(0..k * k).map(|t| l0[(t / k, t % k)]).collect::<Vec<_>>());
    let mut best = (start.clone(), start_value);
    for round in 0..FIT_ROUNDS {
        let (p, _) = nelder_mead(
            |x| tabulated_ratio(k, &factor(k, x), points, &dirs, &support).ln(),
            &params,
            0.05,
            FIT_EVALS,
            1e-10,
        );
        params = p;
        let l = factor(k, &params);
        let e = shape_ellipsoid(k, &l, points)?;
        let mut worst: Vec<(f64, usize)> = dirs
            .iter()
            .zip(&support)
            .enumerate()
            .map(|(i, (d, h))| (h / shape_support(k, &l, d), i))
            .collect();
        worst.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut starts: Vec<Vec<f64>> = worst.iter().take(FIT_STARTS).map(|&(_, i)| e.support_point(&dirs[i])).collect();
        starts.extend(random_starts(&e, SCREEN_DIRECTIONS, derive_seed(seed, 10 + round as u64)));
        let (value, y) = max_gauge_on_ellipsoid(set, &e, starts, ASCENT_STEPS)?;
        let value = value.max(1.0);

        if value < best.1 {
            best = (e, value);
        }
        match envelope_gauge(set, &y)?.functional {
            Some(z) if norm2(&z) > 0.0 => {
                let len = norm2(&z);
                let d: Vec<f64> = z.iter().map(|v| v / len).collect();
                support.push(hull_support(points, &d));
                dirs.push(d);
            }
            _ => break,
        }
    }
    Ok(best)
}

fn candidate(s: &GeneratingSet, k: usize, seed: u64) -> Result<Candidate> {
    let rows = random_projection(s.dimension(), k, seed)?;
    let pts: Vec<Vec<f64>> = s.points().iter().map(|p| apply(&rows, p)).collect();
    let set = GeneratingSet::new(pts, "projected")?;
    let mvee = scaled_mvee(set.points())?;
    let screen = ellipticity(&set, &mvee, SCREEN_DIRECTIONS, derive_seed(seed, 1))?;
    Ok(Candidate {
        rows,
        set,
        ellipsoid: mvee.clone(),
        mvee,
        screen,
    })
}

/// Tries `trials` random rank-`k` projections and returns the one with the
/// smallest verified ellipticity. Each trial's ellipsoid starts as the MVEE
/// of the projected points; the best few by that screen are then reshaped
/// to fit the hull. Every trial is screened with a few probe directions;
/// since probing more
/// directions can only raise the estimate, trials are verified in screening
/// order until the next screen value is no better than the best verified
/// ellipticity.
pub fn dvoretzky_search(s: &GeneratingSet, k: usize, eta: f64, trials: usize, seed: u64) -> Result<DvoretzkySearch> {
    if k == 0 || k > s.dimension() {
        return Err(Error::input(format!("need 1 ≤ k ≤ n (k = {k})")));
    }
    if !(eta > 0.0) {
        return Err(Error::input("eta must be positive"));
    }
    if trials == 0 {
        return Err(Error::input("need at least one trial"));
    }
    let mut candidates: Vec<Candidate> = par_map(trials, |t| candidate(s, k, derive_seed(seed, t as u64)))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut top: Vec<usize> = (0..trials).collect();
    top.sort_by(|&a, &b| candidates[a].screen.total_cmp(&candidates[b].screen).then(a.cmp(&b)));
    top.truncate(FIT_TOP);
    let fitted = par_map(top.len(), |i| {
        let c = &candidates[top[i]];
        fit_shape(&c.set, &c.mvee, c.screen, derive_seed(seed, top[i] as u64))
    });
    for (&t, f) in top.iter().zip(fitted) {
        let (e, v) = f?;
        candidates[t].ellipsoid = e;
        candidates[t].screen = v;
    }
    let screened: Vec<f64> = candidates.iter().map(|c| c.screen).collect();
    let mut order: Vec<usize> = (0..trials).collect();
    order.sort_by(|&a, &b| screened[a].total_cmp(&screened[b]).then(a.cmp(&b)));
    let mut best: Option<ProjectionResult> = None;
    let mut verified_trials = Vec::new();
    for t in order {
        if best.as_ref().is_some_and(|b| screened[t] >= b.ellipticity) {
            break;
        }
        let c = &candidates[t];
        let trial_seed = derive_seed(seed, t as u64);
        let value = ellipticity(&c.set, &c.ellipsoid, INNER_DIRECTIONS, derive_seed(trial_seed, 2))?.max(c.screen);
        verified_trials.push(t);
        if best.as_ref().is_none_or(|b| value < b.ellipticity) {
            best = Some(ProjectionResult {
                k,
                trial: t,
                seed: trial_seed,
                projection_matrix: c.rows.clone(),
                ellipsoid: c.ellipsoid.clone(),
                ellipticity: value,
                inner_radius: 1.0 / value,
                directions: INNER_DIRECTIONS + SCREEN_DIRECTIONS,
                mvee_ellipticity: 0.0,
            });
        }
    }
    let mut best = best.expect("at least one verified trial");
    let c = &candidates[best.trial];
    best.mvee_ellipticity = ellipticity(&c.set, &c.mvee, INNER_DIRECTIONS, derive_seed(best.seed, 2))?;
    Ok(DvoretzkySearch {
        success: best.ellipticity <= 1.0 + eta,
        best,
        trials,
        eta,
        screened,
        verified_trials,
    })
}

/// `√(2η + η²)`: a boundary point of `E` is this close to some `±u ∈ PS`
/// when `(1/(1+η)) E ⊂ Δ(PS) ⊂ E`.
pub fn contraction_bound(eta: f64) -> f64 {
    (2.0 * eta + eta * eta).sqrt()
}

/// `(1+η)/(1−θ)`: with `(1/(1+η)) E ⊂ Δ(PS) ⊂ E` every point of `Δ(PS)`
/// is this multiple of a `Γ_θ(PS)` point.
pub fn distance_bound(eta: f64, theta: f64) -> f64 {
    (1.0 + eta) / (1.0 - theta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidRepresentation {
    pub representation: GammaRepresentation,
    /// `‖r_{k+1}‖_E / ‖r_k‖_E` per step, before division by `θ`.
    pub contractions: Vec<f64>,
    pub bound: f64,
    /// `θ ≥ √(3η)`.
    pub a_priori: bool,
    /// `E`-norm of `y − (1−θ) Σ θ^k λ_k u_k`.
    pub residual: f64,
}

/// Greedy Γ_θ expansion of `y ∈ (1−θ)E` by the projected points: at each
/// step the residual `r` (in units of the remaining budget) is matched with
/// the `±u` of largest `E`-inner product with `r`, taking
/// `λ = ⟨r,u⟩_E / ‖u‖²_E` clipped to 1. Convergence is guaranteed in advance
/// when `θ ≥ √(3η)`; otherwise (and in any case) every step is checked: the
/// contraction must stay within `√(2η+η²)` and the rescaled residual inside
/// `E`, so an accepted expansion is a valid Γ_θ representation.
pub fn ellipsoid_gamma_represent(
    projected: &GeneratingSet,
    e: &Ellipsoid,
    eta: f64,
    theta: f64,
    y: &[f64],
    tolerance: f64,
) -> Result<EllipsoidRepresentation> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::input("theta must lie in (0,1)"));
    }
    if !(eta >= 0.0) {
        return Err(Error::input("eta must be non-negative"));
    }
    let bound = contraction_bound(eta);
    if y.len() != e.dim() || projected.dimension() != e.dim() {
        return Err(Error::input("dimension mismatch"));
    }
    if e.norm(y) > (1.0 - theta) * (1.0 + 1e-9) {
        return Err(Error::input("y lies outside (1−θ)E"));
    }
    let norms: Vec<f64> = projected.points().iter().map(|p| e.norm(p)).collect();
    let mut r: Vec<f64> = y.iter().map(|v| v / (1.0 - theta)).collect();
    let mut weight = 1.0 - theta;
    let mut terms = Vec::new();
    let mut contractions = Vec::new();
    let mut level = 0u64;
    while weight * e.norm(&r) > tolerance {
        if level >= 10_000 {
            return Err(Error::Budget("ellipsoid expansion did not converge".into()));
        }
        let rn = e.norm(&r);
        let (idx, ip) = projected
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| (i, e.inner(&r, p)))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .expect("non-empty set");
        let u = projected.point(idx);
        let lambda = (ip / (norms[idx] * norms[idx])).clamp(-1.0, 1.0);
        let next: Vec<f64> = r.iter().zip(u).map(|(a, b)| a - lambda * b).collect();
        let c = e.norm(&next) / rn;
        if c > bound + 1e-9 {
            return Err(Error::phase(
                "ellipsoid-represent",
                format!("step {level}: contraction {c} exceeds √(2η+η²) = {bound}; the ellipticity certificate is too weak"),
            ));
        }
        contractions.push(c);
        terms.push(GammaTerm { level, lambda, generator: idx });
        r = next.into_iter().map(|v| v / theta).collect();
        if e.norm(&r) > 1.0 + 1e-9 {
            return Err(Error::phase("ellipsoid-represent", format!("step {level}: residual left E")));
        }
        weight *= theta;
        level += 1;
    }
    let residual = weight * e.norm(&r);
    Ok(EllipsoidRepresentation {
        representation: GammaRepresentation {
            theta,
            terms,
            depth: level,
            residual_norm: residual,
        },
        contractions,
        bound,
        a_priori: theta >= (3.0 * eta).sqrt(),
        residual,
    })
}
