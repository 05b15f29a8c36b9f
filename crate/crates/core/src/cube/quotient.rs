//! Randomized construction of a coordinate quotient whose ball is close to
//! the cube: per-vertex decompositions, subsampling, snapping, counting,
//! the shattering chain, and the geometric splitting iteration.

use serde::{Deserialize, Serialize};

use super::chain::{alesker_chain_with, ShatterChain};
use super::counting::{counting_select, CountingSelection};
use super::subsample::{subsample_vertex_fit, VarianceCheck};
use super::vertex::{embed, to_signs, to_string};
use crate::balance::{round_to_slots, StarTerm};
use crate::bodies::{cube_sandwich, envelope_gauge, GeneratingSet, SandwichOutcome};
use crate::calibration::Calibration;
use crate::error::{Error, Result};
use crate::hulls::{approx2_transform, DeltaMCertificate, GammaDeltaRepresentation, GammaRepresentation};
use crate::linalg::{norm2, norm_inf};
use crate::parallel::par_map;
use crate::rng::{derive_seed, rng};

pub const MAX_QUOTIENT_DIM: usize = 14;
/// `θ` of the splitting iteration when every vertex certificate is within ¼.
pub const ASSEMBLY_THETA: f64 = 0.75;
const MAX_SPLIT_LEVELS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientOptions {
    /// Random `m`-subsets tried per vertex.
    pub trials: usize,
    /// Random points of `B∞_σ` represented and verified.
    pub queries: usize,
    /// Decompositions are rounded to `N = slot_factor · m` equal-weight terms.
    pub slot_factor: usize,
    /// Euclidean reconstruction tolerance after scaling.
    pub tolerance: f64,
}

impl Default for QuotientOptions {
    fn default() -> Self {
        QuotientOptions {
            trials: 64,
            queries: 200,
            slot_factor: 4,
            tolerance: 1e-6,
        }
    }
}

/// Nonzero entries of a [`DeltaMCertificate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCertificate {
    pub m: u64,
    /// `(generator, multiplicity, alpha)`.
    pub entries: Vec<(usize, u64, f64)>,
}

impl SparseCertificate {
    pub fn from_dense(c: &DeltaMCertificate) -> Self {
        SparseCertificate {
            m: c.m,
            entries: c
                .multiplicities
                .iter()
                .zip(&c.alphas)
                .enumerate()
                .filter(|(_, (&mu, _))| mu > 0)
                .map(|(i, (&mu, &a))| (i, mu, a))
                .collect(),
        }
    }

    pub fn to_dense(&self, len: usize) -> DeltaMCertificate {
        let mut multiplicities = vec![0; len];
        let mut alphas = vec![0.0; len];
        for &(i, mu, a) in &self.entries {
            multiplicities[i] = mu;
            alphas[i] = a;
        }
        DeltaMCertificate { m: self.m, multiplicities, alphas }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapEntry {
    pub vertex: String,
    /// Point of `Δ_m S` chosen for this vertex.
    pub x: Vec<f64>,
    /// `x` with the coordinates within `δ` of the vertex replaced by it.
    pub y: Vec<f64>,
    pub agreement: Vec<usize>,
    pub certificate: SparseCertificate,
    /// `N`, or `m` when `±vertex` is a generator.
    pub decomposition_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapTable {
    pub delta: f64,
    /// Indexed by vertex mask.
    pub entries: Vec<SnapEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexCertificate {
    pub vertex: String,
    /// `k_b = a_s · point(certificate)` satisfies `‖P_σ k_b − b‖∞ = error`.
    pub error: f64,
    pub certificate: SparseCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCertificate {
    pub point: Vec<f64>,
    /// `(a₁, a₂)` per level as masks in `σ` order.
    pub splits: Vec<(u32, u32)>,
    pub reconstruction_error: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsUsed {
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
    pub m: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub d: f64,
    /// Minimum agreement size over all vertices.
    pub k: usize,
    pub chain_levels: u32,
    pub a_s: u64,
    pub b_s: u64,
    /// `2 b_s m`, the `Δ` index of the assembled series.
    pub slots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub n: usize,
    pub sigma: Vec<usize>,
    pub epsilon: f64,
    pub seed: u64,
    pub calibration: Calibration,
    pub options: QuotientOptions,
    pub constants_used: ConstantsUsed,
    /// `θ` of the splitting iteration: `max(3/4, 1/2 + max vertex error)`.
    pub theta: f64,
    /// `θ^{1/slots}` after re-indexing into `Γ S`.
    pub theta_final: f64,
    /// `1 − c d⁻² ε⁵ (1 − ln ε)⁻¹`.
    pub theta_formula: f64,
    pub approx2_scale: f64,
    /// `a_s · approx2_scale / (1 − θ)`: `B∞_σ ⊂ scale · P_σ Γ_{θ_final} S`.
    #[serde(rename = "C_over_eps")]
    pub scale: f64,
    /// Calibrated `C/ε`.
    pub scale_target: f64,
    pub max_vertex_error: f64,
    pub shortcut_vertices: usize,
    pub variance: Option<VarianceCheck>,
    pub variance_checks_within: usize,
    pub variance_checks: usize,
    pub selection: CountingSelection,
    pub chain: ShatterChain,
    pub snap: SnapTable,
    pub vertex_certificates: Vec<VertexCertificate>,
    pub certificates: Vec<PointCertificate>,
    pub verified_fraction: f64,
}

/// `±a` as a generator index and sign.
fn vertex_generator(s: &GeneratingSet, a: &[f64]) -> Option<(usize, f64)> {
    s.points().iter().enumerate().find_map(|(i, p)| {
        if p.as_slice() == a {
            Some((i, 1.0))
        } else if p.iter().zip(a).all(|(x, y)| *x == -*y) {
            Some((i, -1.0))
        } else {
            None
        }
    })
}

struct VertexFit {
    entry: SnapEntry,
    agreement_mask: u32,
    variance: Option<VarianceCheck>,
    shortcut: bool,
}

fn fit_vertex(s: &GeneratingSet, mask: u32, n: usize, m: usize, delta: f64, opts: &QuotientOptions, seed: u64) -> Result<VertexFit> {
    let a = to_signs(mask, n);
    let (terms, shortcut) = match vertex_generator(s, &a) {
        Some((i, sign)) => (vec![StarTerm { generator: i, lambda: sign }; m], true),
        None => {
            let cert = envelope_gauge(s, &a)?;
            if cert.value > 1.0 + 1e-8 {
                return Err(Error::phase("decomposition", format!("vertex {} has gauge {}", to_string(mask, n), cert.value)));
            }
            (round_to_slots(&cert.coefficients, opts.slot_factor.max(1) * m), false)
        }
    };
    let fit = subsample_vertex_fit(s, &terms, &a, delta, m, opts.trials, seed)?;
    let y: Vec<f64> = (0..n)
        .map(|j| if fit.agreement >> j & 1 == 1 { a[j] } else { fit.x[j] })
        .collect();
    Ok(VertexFit {
        entry: SnapEntry {
            vertex: to_string(mask, n),
            agreement: (0..n).filter(|j| fit.agreement >> j & 1 == 1).collect(),
            certificate: SparseCertificate::from_dense(&fit.certificate),
            x: fit.x,
            y,
            decomposition_size: terms.len(),
        },
        agreement_mask: fit.agreement,
        variance: (!shortcut).then_some(fit.variance),
        shortcut,
    })
}

pub fn cube_quotient(s: &GeneratingSet, epsilon: f64, calibration: &Calibration, seed: u64) -> Result<QuotientReport> {
    cube_quotient_with(s, epsilon, calibration, seed, &QuotientOptions::default())
}

pub fn cube_quotient_with(
    s: &GeneratingSet,
    epsilon: f64,
    calibration: &Calibration,
    seed: u64,
    opts: &QuotientOptions,
) -> Result<QuotientReport> {
    let n = s.dimension();
    if n > MAX_QUOTIENT_DIM {
        return Err(Error::input(format!("cube quotient needs n ≤ {MAX_QUOTIENT_DIM} (got {n})")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::input("epsilon must lie in (0, 1)"));
    }
    let d = match cube_sandwich(s)? {
        SandwichOutcome::Holds { d, .. } => d,
        SandwichOutcome::Violated { vertex, gauge } => {
            return Err(Error::phase("sandwich", format!("vertex {vertex:?} has envelope gauge {gauge}")));
        }
    };
    let target = ((n as f64) * (1.0 - epsilon) - 1e-9).ceil() as usize;
    let delta = calibration.c1 * epsilon;
    let m = (calibration.c2 * d * d * epsilon.powi(-3) * (1.0 - epsilon.ln())).floor() as usize + 1;

    // per-vertex decomposition, subsampling and snapping
    let fits = par_map(1usize << n, |v| fit_vertex(s, v as u32, n, m, delta, opts, derive_seed(seed, v as u64)));
    let fits: Vec<VertexFit> = fits.into_iter().collect::<Result<_>>()?;
    let k = fits.iter().map(|f| f.agreement_mask.count_ones() as usize).min().unwrap_or(0);
    if k < target.max(1) {
        return Err(Error::phase(
            "snapping",
            format!("minimum agreement {k} below ⌈n(1−ε)⌉ = {target} at δ = {delta}, m = {m}"),
        ));
    }
    let candidates: Vec<(u32, u32)> = fits.iter().enumerate().map(|(v, f)| (v as u32, f.agreement_mask)).collect();
    let selection = counting_select(n, &candidates, k)?;
    let tau = selection.tau.clone();

    let chain = alesker_chain_with(&selection.patterns, epsilon, calibration.c)?;
    let sigma: Vec<usize> = chain.final_sigma().iter().map(|&i| tau[i]).collect();
    if sigma.len() < target {
        return Err(Error::phase("alesker", format!("|σ| = {} < {target}", sigma.len())));
    }
    let a_s = chain.scale();
    let b_s = chain.slots();

    // vertex certificates: k_b/a_s = (1/b_s) Σ coef · x_{a(t)} ∈ Δ_{b_s m} S
    let vertex_m = b_s * m as u64;
    let mut vertex_certificates = Vec::with_capacity(chain.rep_table.len());
    let mut dense_vertex = Vec::with_capacity(chain.rep_table.len());
    let mut max_vertex_error = 0.0f64;
    for entry in &chain.rep_table {
        let mut multiplicities = vec![0u64; s.len()];
        let mut alphas = vec![0.0; s.len()];
        for t in &entry.terms {
            let pos = selection.patterns.members().binary_search(&t.vertex).expect("chain vertex in T");
            let rep = selection.representatives[pos] as usize;
            for &(i, mu, alpha) in &fits[rep].entry.certificate.entries {
                multiplicities[i] += t.slots * mu;
                alphas[i] += t.coefficient as f64 * alpha;
            }
        }
        let cert = DeltaMCertificate { m: vertex_m, multiplicities, alphas };
        cert.check_structure(s)?;
        let global = embed(entry.pattern, &tau);
        let point = cert.point(s);
        let error = sigma
            .iter()
            .map(|&j| (a_s as f64 * point[j] - if global >> j & 1 == 1 { 1.0 } else { -1.0 }).abs())
            .fold(0.0, f64::max);
        if error > a_s as f64 * delta + 1e-9 {
            return Err(Error::phase(
                "vertex-certificate",
                format!("vertex {} off by {error} > a_s δ = {}", to_string(global, n), a_s as f64 * delta),
            ));
        }
        max_vertex_error = max_vertex_error.max(error);
        vertex_certificates.push(VertexCertificate {
            vertex: to_string(global, n),
            error,
            certificate: SparseCertificate::from_dense(&cert),
        });
        dense_vertex.push(cert);
    }
    if max_vertex_error >= 0.5 {
        return Err(Error::phase("assembly", format!("vertex error {max_vertex_error} leaves no room for splitting")));
    }
    let theta = ASSEMBLY_THETA.max(0.5 + max_vertex_error);
    let slots = 2 * vertex_m;
    let approx2_scale = crate::hulls::approx2_scale(theta, slots);
    let scale = a_s as f64 * approx2_scale / (1.0 - theta);

    let variance = fits
        .iter()
        .filter_map(|f| f.variance.clone())
        .max_by(|a, b| (a.mean_square_deviation / a.bound).total_cmp(&(b.mean_square_deviation / b.bound)));
    let variance_checks = fits.iter().filter(|f| f.variance.is_some()).count();
    let variance_checks_within = fits.iter().filter(|f| f.variance.as_ref().is_some_and(|v| v.within_bound)).count();

    let mut report = QuotientReport {
        n,
        sigma,
        epsilon,
        seed,
        calibration: *calibration,
        options: *opts,
        constants_used: ConstantsUsed {
            c1: calibration.c1,
            c2: calibration.c2,
            delta,
            m,
            big_n: fits.iter().map(|f| f.entry.decomposition_size).max().unwrap_or(m),
            d,
            k,
            chain_levels: chain.levels,
            a_s,
            b_s,
            slots,
        },
        theta,
        theta_final: theta.powf(1.0 / slots as f64),
        theta_formula: 1.0 - calibration.c * epsilon.powi(5) / (d * d * (1.0 - epsilon.ln())),
        approx2_scale,
        scale,
        scale_target: calibration.big_c / epsilon,
        max_vertex_error,
        shortcut_vertices: fits.iter().filter(|f| f.shortcut).count(),
        variance,
        variance_checks_within,
        variance_checks,
        selection,
        chain,
        snap: SnapTable {
            delta,
            entries: fits.into_iter().map(|f| f.entry).collect(),
        },
        vertex_certificates,
        certificates: Vec::new(),
        verified_fraction: 0.0,
    };

    let dim = report.sigma.len();
    let queries: Vec<Vec<f64>> = (0..opts.queries)
        .map(|i| {
            use rand::Rng;
            let mut r = rng(derive_seed(seed ^ 0x9e37_79b9, i as u64));
            (0..dim).map(|_| r.random_range(-1.0..=1.0)).collect()
        })
        .collect();
    let certificates = par_map(queries.len(), |i| {
        match represent_with(&report, s, &dense_vertex, &queries[i]) {
            Ok(rep) => PointCertificate {
                point: queries[i].clone(),
                splits: rep.splits,
                reconstruction_error: rep.reconstruction_error,
                verified: rep.reconstruction_error <= opts.tolerance,
            },
            Err(_) => PointCertificate {
                point: queries[i].clone(),
                splits: Vec::new(),
                reconstruction_error: f64::INFINITY,
                verified: false,
            },
        }
    });
    let verified = certificates.iter().filter(|c| c.verified).count();
    report.verified_fraction = if certificates.is_empty() {
        1.0
    } else {
        verified as f64 / certificates.len() as f64
    };
    report.certificates = certificates;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubePointRepresentation {
    /// Series in `Γ_{θ_final} S`; `scale · P_σ eval` reconstructs the query.
    pub representation: GammaRepresentation,
    pub scale: f64,
    pub splits: Vec<(u32, u32)>,
    pub reconstruction_error: f64,
}

/// The splitting rule: `a₁(j) = 1` iff `x(j) ≥ ½`, `a₂(j) = 1` iff `x(j) ≥ −½`.
pub fn split_point(x: &[f64]) -> (u32, u32) {
    let a1 = x.iter().enumerate().filter(|(_, &v)| v >= 0.5).fold(0u32, |m, (j, _)| m | 1 << j);
    let a2 = x.iter().enumerate().filter(|(_, &v)| v >= -0.5).fold(0u32, |m, (j, _)| m | 1 << j);
    (a1, a2)
}

pub fn represent_cube_point(report: &QuotientReport, s: &GeneratingSet, x: &[f64]) -> Result<CubePointRepresentation> {
    if report.vertex_certificates.len() != 1usize << report.sigma.len() {
        return Err(Error::phase("represent", "report is missing vertex certificates"));
    }
    let dense: Vec<DeltaMCertificate> = report.vertex_certificates.iter().map(|c| c.certificate.to_dense(s.len())).collect();
    represent_with(report, s, &dense, x)
}

fn represent_with(report: &QuotientReport, s: &GeneratingSet, vertex: &[DeltaMCertificate], x: &[f64]) -> Result<CubePointRepresentation> {
    let sigma = &report.sigma;
    if x.len() != sigma.len() {
        return Err(Error::input(format!("query has {} coordinates, σ has {}", x.len(), sigma.len())));
    }
    if x.iter().any(|v| !(v.abs() <= 1.0)) {
        return Err(Error::input("query lies outside B∞_σ"));
    }
    if s.dimension() != report.n {
        return Err(Error::input("generating set dimension differs from the report"));
    }
    let theta = report.theta;
    let a_s = report.constants_used.a_s as f64;
    let slots = report.constants_used.slots;
    let tolerance = report.options.tolerance;
    // k_b projected to σ
    let projected: Vec<Vec<f64>> = vertex
        .iter()
        .map(|c| {
            let p = c.point(s);
            sigma.iter().map(|&j| a_s * p[j]).collect()
        })
        .collect();
    let mut r = x.to_vec();
    let mut weight = 1.0;
    let mut splits = Vec::new();
    let mut terms = Vec::new();
    while weight * norm2(&r) > tolerance / 4.0 {
        if splits.len() >= MAX_SPLIT_LEVELS {
            return Err(Error::Budget(format!("splitting did not converge in {MAX_SPLIT_LEVELS} levels")));
        }
        let (a1, a2) = split_point(&r);
        let (c1, c2) = (&vertex[a1 as usize], &vertex[a2 as usize]);
        let cert = DeltaMCertificate {
            m: slots,
            multiplicities: c1.multiplicities.iter().zip(&c2.multiplicities).map(|(x, y)| x + y).collect(),
            alphas: c1.alphas.iter().zip(&c2.alphas).map(|(x, y)| x + y).collect(),
        };
        let (k1, k2) = (&projected[a1 as usize], &projected[a2 as usize]);
        for j in 0..r.len() {
            r[j] = (r[j] - 0.5 * (k1[j] + k2[j])) / theta;
        }
        if norm_inf(&r) > 1.0 + 1e-9 {
            return Err(Error::phase("represent", format!("residual left B∞ at level {}", splits.len())));
        }
        terms.push((splits.len() as u64, 1.0, cert));
        splits.push((a1, a2));
        weight *= theta;
    }
    let tail = weight * norm2(&r);
    let outer = GammaDeltaRepresentation {
        theta,
        m: slots,
        terms,
        residual_norm: tail * (1.0 - theta) / a_s,
    };
    let (representation, c) = approx2_transform(s, &outer)?;
    let scale = a_s * c / (1.0 - theta);
    let value = representation.evaluate(s);
    let err: f64 = sigma
        .iter()
        .zip(x)
        .map(|(&j, &xj)| (scale * value[j] - xj).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(CubePointRepresentation {
        representation,
        scale,
        splits,
        reconstruction_error: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitting_rule_examples() {
        let (a1, a2) = split_point(&[0.6, -0.7]);
        assert_eq!((a1, a2), (0b01, 0b01));
        let (a1, a2) = split_point(&[0.5, -0.5, 0.0]);
        assert_eq!((a1, a2), (0b001, 0b111));
    }

    #[test]
    fn cube_generators_give_the_trivial_quotient() {
        let s = GeneratingSet::cube_vertices(4).unwrap();
        let opts = QuotientOptions { queries: 20, ..Default::default() };
        let rep = cube_quotient_with(&s, 0.5, &Calibration::default(), 1, &opts).unwrap();
        assert_eq!(rep.sigma, vec![0, 1, 2, 3]);
        assert_eq!(rep.constants_used.a_s, 1);
        assert_eq!(rep.max_vertex_error, 0.0);
        assert_eq!(rep.theta, 0.75);
        assert!(rep.approx2_scale <= 1.2);
        assert_eq!(rep.verified_fraction, 1.0);
        assert_eq!(rep.shortcut_vertices, 16);
    }

    #[test]
    fn scaled_cross_polytope_runs_the_full_pipeline() {
        // n·B₁ ⊃ B∞, no vertex is a generator
        let n = 4;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = n as f64;
                e
            })
            .collect();
        let s = GeneratingSet::new(pts, "scaled-cross").unwrap();
        let opts = QuotientOptions { queries: 10, ..Default::default() };
        let rep = cube_quotient_with(&s, 0.5, &Calibration::default(), 5, &opts).unwrap();
        assert!(rep.sigma.len() >= 2);
        assert_eq!(rep.shortcut_vertices, 0);
        assert!(rep.max_vertex_error <= rep.constants_used.a_s as f64 * rep.constants_used.delta + 1e-9);
        assert_eq!(rep.verified_fraction, 1.0);
        let x = vec![0.3; rep.sigma.len()];
        let out = represent_cube_point(&rep, &s, &x).unwrap();
        assert!(out.reconstruction_error <= 1e-6);
    }
}
