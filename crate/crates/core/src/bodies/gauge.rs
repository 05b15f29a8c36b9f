//! Envelope gauge (an LP) and p-gauge representations.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AnalyticKind, GeneratingSet, PBody};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::optim::{solve_lp, GaugeOracle, LpOutcome, LpProblem};
use crate::rng::rng;

/// Bases enumerated before the exact p-gauge gives up and falls back to
/// local descent.
pub(crate) const EXACT_BASIS_BUDGET: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeCertificate {
    pub value: f64,
    /// One signed coefficient per generator of `S`.
    pub coefficients: Vec<f64>,
    /// Euclidean norm of `Σ λ_i s_i − x`.
    pub residual: f64,
    /// True when `value` is the exact gauge rather than an upper bound.
    pub exact: bool,
    /// Norming functional `z` with `|⟨z,s⟩| ≤ 1` on `S` and `⟨z,x⟩ = value`
    /// (envelope gauge only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub functional: Option<Vec<f64>>,
}

impl GaugeCertificate {
    fn from_coefficients(s: &GeneratingSet, x: &[f64], coefficients: Vec<f64>, p: f64, exact: bool) -> Self {
        let recon = combine(s, &coefficients);
        let residual = norm2(&crate::linalg::sub(&recon, x));
        let value = p_sum(&coefficients, p).powf(1.0 / p);
        GaugeCertificate {
            value,
            coefficients,
            residual,
            exact,
            functional: None,
        }
    }
}

fn combine(s: &GeneratingSet, coefficients: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; s.dimension()];
    for (pt, &c) in s.points().iter().zip(coefficients) {
        if c != 0.0 {
            crate::linalg::axpy(c, pt, &mut out);
        }
    }
    out
}

fn p_sum(lambda: &[f64], p: f64) -> f64 {
    lambda.iter().filter(|l| **l != 0.0).map(|l| l.abs().powf(p)).sum()
}

fn check_dim(s: &GeneratingSet, x: &[f64]) -> Result<()> {
    if x.len() != s.dimension() {
        return Err(Error::input(format!(
            "query has dimension {} but the generating set lives in {}-space",
            x.len(),
            s.dimension()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("query point has a non-finite coordinate"));
    }
    Ok(())
}

/// Minimizes `Σ w_i |λ_i|` subject to `Σ λ_i s_i = x`.
fn weighted_l1_representation(s: &GeneratingSet, x: &[f64], weights: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = s.len();
    let n = s.dimension();
    let mut objective = weights.to_vec();
    objective.extend_from_slice(weights);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut r: Vec<f64> = s.points().iter().map(|p| p[j]).collect();
            r.extend(s.points().iter().map(|p| -p[j]));
            r
        })
        .collect();
    let lp = LpProblem::nonnegative(objective, rows, x.to_vec())?;
    match solve_lp(&lp)? {
        LpOutcome::Optimal(sol) => {
            let lambda = (0..k).map(|i| sol.x[i] - sol.x[k + i]).collect();
            Ok((lambda, sol.duals))
        }
        LpOutcome::Infeasible(_) => Err(Error::numerical("point is outside the span of the generators")),
        LpOutcome::Unbounded { .. } => Err(Error::numerical("gauge LP reported unbounded")),
    }
}

/// Gauge of `ΔS = conv(S ∪ −S)` at `x`, with coefficients and the dual
/// norming functional.
pub fn envelope_gauge(s: &GeneratingSet, x: &[f64]) -> Result<GaugeCertificate> {
    check_dim(s, x)?;
    if x.iter().all(|v| *v == 0.0) {
        return Ok(GaugeCertificate {
            value: 0.0,
            coefficients: vec![0.0; s.len()],
            residual: 0.0,
            exact: true,
            functional: Some(vec![0.0; s.dimension()]),
        });
    }
    let (lambda, duals) = weighted_l1_representation(s, x, &vec![1.0; s.len()])?;
    let mut cert = GaugeCertificate::from_coefficients(s, x, lambda, 1.0, true);
    cert.functional = Some(duals);
    Ok(cert)
}

/// Representative generator index for every distinct line through the
/// origin; among parallel generators the longest wins.
pub(crate) fn distinct_lines(s: &GeneratingSet) -> Vec<usize> {
    let mut reps: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    for (i, p) in s.points().iter().enumerate() {
        let len = norm2(p);
        if len == 0.0 {
            continue;
        }
        let lead = p.iter().find(|v| v.abs() > 1e-12 * len).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        let dir: Vec<f64> = p.iter().map(|v| sign * v / len).collect();
        match reps.iter_mut().find(|(_, d, _)| d.iter().zip(&dir).all(|(a, b)| (a - b).abs() <= 1e-12)) {
            Some(entry) => {
                if len > entry.2 {
                    entry.0 = i;
                    entry.2 = len;
                }
            }
            None => reps.push((i, dir, len)),
        }
    }
    reps.into_iter().map(|(i, _, _)| i).collect()
}

/// A basic representation `x = B λ_B` over `n` independent generators.
#[derive(Clone)]
struct Basis {
    idx: Vec<usize>,
    inv: DMatrix<f64>,
    lambda: Vec<f64>,
}

impl Basis {
    fn build(s: &GeneratingSet, idx: Vec<usize>, x: &[f64]) -> Option<Basis> {
        let n = s.dimension();
        let b = DMatrix::from_fn(n, n, |r, c| s.point(idx[c])[r]);
        let inv = b.try_inverse()?;
        if inv.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let lambda = (&inv * DVector::from_column_slice(x)).iter().copied().collect();
        Some(Basis { idx, inv, lambda })
    }

    fn coefficients(&self, k: usize) -> Vec<f64> {
        let mut c = vec![0.0; k];
        for (&i, &l) in self.idx.iter().zip(&self.lambda) {
            c[i] += l;
        }
        c
    }

    /// Best single swap by p-cost; returns whether the basis changed.
    fn improve(&mut self, s: &GeneratingSet, lines: &[usize], p: f64) -> bool {
        let n = self.idx.len();
        let current = p_sum(&self.lambda, p);
        let mut best: Option<(f64, usize, usize, Vec<f64>)> = None;
        for &j in lines {
            if self.idx.contains(&j) {
                continue;
            }
            let w: Vec<f64> = (0..n).map(|r| (0..n).map(|c| self.inv[(r, c)] * s.point(j)[c]).sum()).collect();
            let wmax = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..n {
                if w[i].abs() <= 1e-9 * wmax.max(1e-300) {
                    continue;
                }
                let t = self.lambda[i] / w[i];
                let mut cost = t.abs().powf(p);
                for r in 0..n {
                    if r != i {
                        let v = self.lambda[r] - t * w[r];
                        if v != 0.0 {
                            cost += v.abs().powf(p);
                        }
                    }
                }
                if cost < current * (1.0 - 1e-12) && best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, i, j, w.clone()));
                }
            }
        }
        let Some((_, i, j, w)) = best else {
            return false;
        };
        let t = self.lambda[i] / w[i];
        for r in 0..n {
            self.lambda[r] = if r == i { t } else { self.lambda[r] - t * w[r] };
        }
        // product-form update of the inverse
        let pivot_row: Vec<f64> = (0..n).map(|c| self.inv[(i, c)] / w[i]).collect();
        for r in 0..n {
            if r == i {
                continue;
            }
            for c in 0..n {
                self.inv[(r, c)] -= w[r] * pivot_row[c];
            }
        }
        for c in 0..n {
            self.inv[(i, c)] = pivot_row[c];
        }
        self.idx[i] = j;
        true
    }

    fn descend(&mut self, s: &GeneratingSet, lines: &[usize], p: f64, x: &[f64]) {
        let cap = 50 * self.idx.len().max(1);
        for step in 0..cap {
            if !self.improve(s, lines, p) {
                break;
            }
            if step % 32 == 31 {
                if let Some(fresh) = Basis::build(s, self.idx.clone(), x) {
                    *self = fresh;
                }
            }
        }
    }
}

/// Extends the support of `coefficients` (largest first) to a basis using
/// the remaining lines.
fn basis_from_support(s: &GeneratingSet, lines: &[usize], coefficients: &[f64], x: &[f64]) -> Option<Basis> {
    let n = s.dimension();
    let mut order: Vec<usize> = (0..s.len()).filter(|&i| coefficients[i].abs() > 1e-12).collect();
    order.sort_by(|&a, &b| coefficients[b].abs().partial_cmp(&coefficients[a].abs()).unwrap());
    order.extend(lines.iter().copied());
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut idx = Vec::new();
    for i in order {
        if idx.len() == n {
            break;
        }
        if idx.contains(&i) {
            continue;
        }
        let mut v = s.point(i).to_vec();
        let len = norm2(&v);
        for qq in &q {
            let d = dot(&v, qq);
            crate::linalg::axpy(-d, qq, &mut v);
        }
        let r = norm2(&v);
        if r > 1e-9 * len.max(1e-300) {
            q.push(v.iter().map(|t| t / r).collect());
            idx.push(i);
        }
    }
    if idx.len() < n {
        return None;
    }
    Basis::build(s, idx, x)
}

fn lp_ball_certificate(s: &GeneratingSet, x: &[f64], p: f64) -> GaugeCertificate {
    let mut coefficients = vec![0.0; s.len()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        if let Some(i) = s.points().iter().position(|pt| pt[j] != 0.0) {
            coefficients[i] = xj * s.point(i)[j];
        }
    }
    let value = p_sum(x, p).powf(1.0 / p);
    GaugeCertificate {
        value,
        coefficients,
        residual: 0.0,
        exact: true,
        functional: None,
    }
}

/// Exact p-gauge by enumerating bases of distinct generator lines, or
/// `None` when there are more than [`EXACT_BASIS_BUDGET`] of them.
pub(crate) fn p_gauge_exact(body: &PBody, x: &[f64]) -> Result<Option<GaugeCertificate>> {
    let s = body.generators();
    check_dim(s, x)?;
    let lines = distinct_lines(s);
    let n = s.dimension();
    if binomial(lines.len() as u64, n as u64) > EXACT_BASIS_BUDGET {
        return Ok(None);
    }
    let mut best: Option<Basis> = None;
    let mut best_cost = f64::INFINITY;
    let mut comb: Vec<usize> = (0..n).collect();
    loop {
        let idx: Vec<usize> = comb.iter().map(|&c| lines[c]).collect();
        if let Some(b) = Basis::build(s, idx, x) {
            let cost = p_sum(&b.lambda, body.p());
            let recon_ok = {
                let c = b.coefficients(s.len());
                norm2(&crate::linalg::sub(&combine(s, &c), x)) <= 1e-9 * norm2(x).max(1.0)
            };
            if recon_ok && cost < best_cost {
                best_cost = cost;
                best = Some(b);
            }
        }
        if !next_combination(&mut comb, lines.len()) {
            break;
        }
    }
    let b = best.ok_or_else(|| Error::numerical("no invertible basis among the generators"))?;
    Ok(Some(GaugeCertificate::from_coefficients(s, x, b.coefficients(s.len()), body.p(), true)))
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    r as u64
}

/// Advances `comb` (strictly increasing indices below `n`) lexicographically.
pub(crate) fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Upper bound (exact for `ℓ_p` balls, `p = 1`, and small generic bodies)
/// for the gauge of the absolutely p-convex hull of `S` at `x`.
pub fn p_gauge_upper(body: &PBody, x: &[f64], restarts: usize, seed: u64) -> Result<GaugeCertificate> {
    let s = body.generators();
    check_dim(s, x)?;
    let p = body.p();
    if body.kind() == AnalyticKind::LpBall {
        return Ok(lp_ball_certificate(s, x, p));
    }
    if p == 1.0 {
        return envelope_gauge(s, x);
    }
    if x.iter().all(|v| *v == 0.0) {
        return Ok(GaugeCertificate::from_coefficients(s, x, vec![0.0; s.len()], p, true));
    }
    if let Some(cert) = p_gauge_exact(body, x)? {
        return Ok(cert);
    }
    let lines = distinct_lines(s);
    let mut g = rng(seed);
    let mut best: Option<GaugeCertificate> = None;
    for attempt in 0..=restarts {
        let weights: Vec<f64> = if attempt == 0 {
            vec![1.0; s.len()]
        } else {
            (0..s.len()).map(|_| g.random_range(0.5..2.0)).collect()
        };
        let (lambda, _) = weighted_l1_representation(s, x, &weights)?;
        let mut cand = GaugeCertificate::from_coefficients(s, x, lambda.clone(), p, false);
        if let Some(mut b) = basis_from_support(s, &lines, &lambda, x) {
            b.descend(s, &lines, p, x);
            let c = GaugeCertificate::from_coefficients(s, x, b.coefficients(s.len()), p, false);
            if c.value < cand.value && c.residual <= 1e-8 * norm2(x).max(1.0) {
                cand = c;
            }
        }
        if best.as_ref().is_none_or(|b| cand.value < b.value) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one attempt"))
}

/// p-gauge with a gradient, for the multi-start maximizer. Generic bodies
/// use basis local descent warm-started from the previous query, so values
/// are upper bounds.
pub(crate) struct PGaugeOracle<'a> {
    body: &'a PBody,
    lines: Vec<usize>,
    warm: RefCell<Option<Basis>>,
}

impl<'a> PGaugeOracle<'a> {
    pub(crate) fn new(body: &'a PBody) -> Self {
        PGaugeOracle {
            body,
            lines: distinct_lines(body.generators()),
            warm: RefCell::new(None),
        }
    }
}

const GRADIENT_FLOOR: f64 = 1e-12;

fn lambda_gradient(lambda: &[f64], value: f64, p: f64) -> Vec<f64> {
    lambda
        .iter()
        .map(|&l| {
            let sign = if l < 0.0 { -1.0 } else { 1.0 };
            value.powf(1.0 - p) * l.abs().max(GRADIENT_FLOOR).powf(p - 1.0) * sign
        })
        .collect()
}

impl GaugeOracle for PGaugeOracle<'_> {
    fn dim(&self) -> usize {
        self.body.dimension()
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let p = self.body.p();
        let s = self.body.generators();
        if self.body.kind() == AnalyticKind::LpBall {
            let value = p_sum(x, p).powf(1.0 / p);
            if value == 0.0 {
                return (0.0, vec![1.0; x.len()]);
            }
            return (value, lambda_gradient(x, value, p));
        }
        let mut warm = self.warm.borrow_mut();
        let start = warm
            .as_ref()
            .and_then(|b| Basis::build(s, b.idx.clone(), x))
            .or_else(|| {
                let (lambda, _) = weighted_l1_representation(s, x, &vec![1.0; s.len()]).ok()?;
                basis_from_support(s, &self.lines, &lambda, x)
            });
        let Some(mut b) = start else {
            return (f64::NAN, vec![0.0; x.len()]);
        };
        if p < 1.0 {
            b.descend(s, &self.lines, p, x);
        }
        let value = p_sum(&b.lambda, p).powf(1.0 / p);
        let gl = lambda_gradient(&b.lambda, value, p);
        // ∇_x = B⁻ᵀ ∇_λ
        let n = x.len();
        let grad = (0..n).map(|c| (0..n).map(|r| b.inv[(r, c)] * gl[r]).sum()).collect();
        *warm = Some(b);
        (value, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_polytope_gauge_is_l1() {
        let s = GeneratingSet::signed_basis(3);
        let c = envelope_gauge(&s, &[0.5, -2.0, 0.25]).unwrap();
        assert!((c.value - 2.75).abs() < 1e-12);
        assert!(c.residual < 1e-12);
        let z = c.functional.unwrap();
        assert!((dot(&z, &[0.5, -2.0, 0.25]) - 2.75).abs() < 1e-9);
    }

    #[test]
    fn diagonal_pair_decomposition() {
        let s = GeneratingSet::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]], "diag").unwrap();
        let c = envelope_gauge(&s, &[1.0, 0.0]).unwrap();
        assert!((c.value - 1.0).abs() < 1e-12);
        assert!(envelope_gauge(&s, &[0.0, 0.0]).unwrap().value == 0.0);
    }

    #[test]
    fn lp_ball_values() {
        let b = PBody::lp_ball(2, 0.5).unwrap();
        let c = p_gauge_upper(&b, &[0.5, 0.5], 0, 0).unwrap();
        assert!((c.value - 2.0).abs() < 1e-12);
        let b = PBody::lp_ball(4, 0.75).unwrap();
        assert_eq!(p_gauge_upper(&b, &[1.0, 0.0, 0.0, 0.0], 0, 0).unwrap().value, 1.0);
    }

    #[test]
    fn generic_body_matches_lp_ball_when_rotated_labels() {
        // same ball presented as a generic body (duplicate generators)
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.5, 0.0]];
        let s = GeneratingSet::new(pts, "dup").unwrap();
        let b = PBody::with_kind(s, 0.5, AnalyticKind::Generic).unwrap();
        let c = p_gauge_upper(&b, &[0.3, -0.2], 0, 0).unwrap();
        let expect = (0.3f64.sqrt() + 0.2f64.sqrt()).powi(2);
        assert!((c.value - expect).abs() < 1e-12, "{}", c.value);
        assert!(c.exact);
    }

    #[test]
    fn descent_reaches_exact_value() {
        let mut g = rng(5);
        let pts: Vec<Vec<f64>> = (0..12).map(|_| (0..3).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
        let body = PBody::with_kind(GeneratingSet::new(pts, "r").unwrap(), 0.5, AnalyticKind::Generic).unwrap();
        let x = vec![0.2, -0.1, 0.3];
        let exact = p_gauge_exact(&body, &x).unwrap().unwrap();
        let oracle = PGaugeOracle::new(&body);
        let v = oracle.value(&x);
        assert!(v >= exact.value - 1e-9);
        assert!(envelope_gauge(body.generators(), &x).unwrap().value <= exact.value + 1e-9);
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(binomial(16, 8), 12870);
    }
}
