//! Halving of equal-weight averages and the resulting `ΔS ⊂ C·Γ_{θ^{1/m}} S`
//! construction.

use serde::{Deserialize, Serialize};

use super::signs::{greedy_signs, Euclidean};
use crate::bodies::{envelope_gauge, GeneratingSet};
use crate::error::{Error, Result};
use crate::hulls::{approx2_transform, DeltaMCertificate, GammaDeltaRepresentation, GammaRepresentation};
use crate::linalg::{axpy, norm2, sub};

/// `λ·s_g` with `|λ| ≤ 1`, an element of the star hull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarTerm {
    pub generator: usize,
    pub lambda: f64,
}

impl StarTerm {
    pub const ZERO: StarTerm = StarTerm { generator: 0, lambda: 0.0 };

    fn vector(&self, s: &GeneratingSet) -> Vec<f64> {
        s.point(self.generator).iter().map(|v| v * self.lambda).collect()
    }
}

fn average(s: &GeneratingSet, terms: &[StarTerm], denominator: usize) -> Vec<f64> {
    let mut out = vec![0.0; s.dimension()];
    for t in terms {
        if t.lambda != 0.0 {
            axpy(t.lambda / denominator as f64, s.point(t.generator), &mut out);
        }
    }
    out
}

/// Certificate for `(1/m) Σ terms`.
pub fn certificate_from_terms(s: &GeneratingSet, terms: &[StarTerm], m: u64) -> DeltaMCertificate {
    let mut multiplicities = vec![0u64; s.len()];
    let mut alphas = vec![0.0; s.len()];
    for t in terms.iter().filter(|t| t.lambda != 0.0) {
        multiplicities[t.generator] += 1;
        alphas[t.generator] += t.lambda;
    }
    DeltaMCertificate { m, multiplicities, alphas }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalvingResult {
    /// `N` terms (minority sign class, zero padded).
    pub kept: Vec<StarTerm>,
    pub certificate: DeltaMCertificate,
    /// Greedy signs with the minority class set to `−1`.
    pub signs: Vec<i8>,
    /// Euclidean `‖u − v‖`.
    pub defect: f64,
    /// `max‖x_k‖ / √(2N)`, the Euclidean greedy guarantee.
    pub greedy_bound: f64,
}

/// One halving step: `u = (1/2N) Σ x_k` goes to `v = (1/N) Σ_{minority} x_k`
/// with `u − v = (1/2N) Σ ε_k x_k`.
pub fn halving_step(s: &GeneratingSet, terms: &[StarTerm]) -> Result<HalvingResult> {
    if terms.is_empty() || terms.len() % 2 != 0 {
        return Err(Error::input(format!("halving needs an even, positive number of terms (got {})", terms.len())));
    }
    for (k, t) in terms.iter().enumerate() {
        if t.generator >= s.len() || !(t.lambda.abs() <= 1.0) {
            return Err(Error::input(format!("term {k} is not in the star hull")));
        }
    }
    let n_half = terms.len() / 2;
    let vectors: Vec<Vec<f64>> = terms.iter().map(|t| t.vector(s)).collect();
    let report = greedy_signs(&vectors, &Euclidean)?;
    let minus = report.signs.iter().filter(|&&e| e < 0).count();
    // the class with at most N members keeps v inside Δ_N S
    let flip = minus > n_half;
    let signs: Vec<i8> = report.signs.iter().map(|&e| if flip { -e } else { e }).collect();
    let mut kept: Vec<StarTerm> = terms.iter().zip(&signs).filter(|(_, &e)| e < 0).map(|(t, _)| *t).collect();
    kept.resize(n_half, StarTerm::ZERO);

    let u = average(s, terms, terms.len());
    let v = average(s, &kept, n_half);
    let defect = norm2(&sub(&u, &v));
    let mut signed = vec![0.0; s.dimension()];
    for (x, &e) in vectors.iter().zip(&signs) {
        axpy(e as f64 / terms.len() as f64, x, &mut signed);
    }
    let identity_gap = (defect - norm2(&signed)).abs();
    if identity_gap > 1e-10 * (1.0 + defect) {
        return Err(Error::numerical(format!("halving identity off by {identity_gap:e}")));
    }
    let max_norm = vectors.iter().map(|x| norm2(x)).fold(0.0, f64::max);
    Ok(HalvingResult {
        certificate: certificate_from_terms(s, &kept, n_half as u64),
        kept,
        signs,
        defect,
        greedy_bound: max_norm / (terms.len() as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalvingRecord {
    pub outer_level: usize,
    /// Terms before the step (`2N`).
    pub terms: usize,
    pub defect: f64,
    pub greedy_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Type1Report {
    /// Series in `Γ_{θ^{1/m}} S`; `x ≈ scale · eval(representation)`.
    pub representation: GammaRepresentation,
    pub scale: f64,
    /// `2θ/((3θ−1)(1−θ))`.
    pub scale_bound: f64,
    pub theta: f64,
    pub m: u64,
    pub levels: u32,
    pub outer: GammaDeltaRepresentation,
    pub halving: Vec<HalvingRecord>,
    /// Envelope gauge of `y_k − v_k` per outer level; each must stay ≤ θ.
    pub outer_defects: Vec<f64>,
    pub reconstruction_error: f64,
}

const MAX_OUTER_LEVELS: usize = 400;

/// Equal-weight rounding of a signed decomposition into `slots` star-hull
/// terms: `floor(|λ_i|·slots)` full copies plus one fractional copy.
/// Overflowing fractional copies are dropped (the caller carries the error).
pub(crate) fn round_to_slots(coefficients: &[f64], slots: usize) -> Vec<StarTerm> {
    let mut full = Vec::new();
    let mut fractional = Vec::new();
    for (i, &c) in coefficients.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let scaled = c.abs() * slots as f64;
        let copies = scaled.floor();
        let sign = c.signum();
        for _ in 0..copies as usize {
            full.push(StarTerm { generator: i, lambda: sign });
        }
        let frac = scaled - copies;
        if frac > 0.0 {
            fractional.push(StarTerm { generator: i, lambda: sign * frac });
        }
    }
    full.truncate(slots);
    fractional.sort_by(|a, b| b.lambda.abs().partial_cmp(&a.lambda.abs()).unwrap());
    let room = slots - full.len();
    full.extend(fractional.into_iter().take(room));
    full.resize(slots, StarTerm::ZERO);
    full
}

/// Represents `x ∈ ΔS` in `Γ_{θ^{1/m}} S` by the halving pipeline: at each
/// outer level the current point `y_k` is decomposed by LP, rounded into
/// `2^levels · m` equal-weight star-hull terms, halved `levels` times down to
/// `v_k ∈ Δ_m S`, and the remainder `(y_k − v_k)/θ` is carried to the next
/// level. The Γ_θ(Δ_m S) series is then re-indexed into `Γ_{θ^{1/m}} S`.
pub fn type1_represent(s: &GeneratingSet, theta: f64, m: u64, x: &[f64], levels: u32, tolerance: f64) -> Result<Type1Report> {
    if !(theta > 1.0 / 3.0 && theta < 1.0) {
        return Err(Error::input(format!("theta {theta} outside (1/3, 1)")));
    }
    if m == 0 {
        return Err(Error::input("m must be positive"));
    }
    if levels > 20 {
        return Err(Error::input("at most 20 halving levels"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::input("tolerance must be positive"));
    }
    let g0 = envelope_gauge(s, x)?;
    if g0.value > 1.0 + 1e-9 {
        return Err(Error::input(format!("point has envelope gauge {} > 1", g0.value)));
    }
    let slots = (m as usize) << levels;
    let mut y = x.to_vec();
    let mut weight = 1.0;
    let mut outer_terms = Vec::new();
    let mut halving = Vec::new();
    let mut outer_defects = Vec::new();
    let mut k = 0usize;
    while weight * norm2(&y) > tolerance / 2.0 {
        if k >= MAX_OUTER_LEVELS {
            return Err(Error::Budget(format!("no convergence after {MAX_OUTER_LEVELS} outer levels")));
        }
        let g = envelope_gauge(s, &y)?;
        let mut terms = round_to_slots(&g.coefficients, slots);
        while terms.len() > m as usize {
            let step = halving_step(s, &terms)?;
            halving.push(HalvingRecord {
                outer_level: k,
                terms: terms.len(),
                defect: step.defect,
                greedy_bound: step.greedy_bound,
            });
            terms = step.kept;
        }
        let cert = certificate_from_terms(s, &terms, m);
        let v = cert.point(s);
        let rest = sub(&y, &v);
        let gd = envelope_gauge(s, &rest)?.value;
        outer_defects.push(gd);
        if gd > theta + 1e-9 {
            return Err(Error::phase(
                "halving",
                format!("outer level {k}: defect has envelope gauge {gd:.6} > theta {theta}; increase m or levels"),
            ));
        }
        outer_terms.push((k as u64, 1.0, cert));
        y = rest.iter().map(|r| r / theta).collect();
        weight *= theta;
        k += 1;
    }
    // x = Σ θ^k v_k + θ^K y_K = (1−θ)^{-1} · [(1−θ) Σ θ^k v_k] + tail
    let outer = GammaDeltaRepresentation {
        theta,
        m,
        terms: outer_terms,
        residual_norm: (1.0 - theta) * weight * norm2(&y),
    };
    let (representation, c) = approx2_transform(s, &outer)?;
    let scale = c / (1.0 - theta);
    let reconstruction_error = representation.reconstruction_error(s, x, scale);
    if reconstruction_error > tolerance {
        return Err(Error::numerical(format!(
            "reconstruction error {reconstruction_error:e} exceeds tolerance {tolerance:e}"
        )));
    }
    Ok(Type1Report {
        representation,
        scale,
        scale_bound: 2.0 * theta / ((3.0 * theta - 1.0) * (1.0 - theta)),
        theta,
        m,
        levels,
        outer,
        halving,
        outer_defects,
        reconstruction_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(k: usize) -> GeneratingSet {
        let pts = (0..k)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        GeneratingSet::new(pts, "circle").unwrap()
    }

    #[test]
    fn copies_cancel_and_keep_the_point() {
        let s = circle(8);
        let terms = vec![StarTerm { generator: 3, lambda: 0.7 }; 6];
        let r = halving_step(&s, &terms).unwrap();
        assert!(r.defect < 1e-15);
        let v = r.certificate.point(&s);
        assert!(norm2(&sub(&v, &StarTerm { generator: 3, lambda: 0.7 }.vector(&s))) < 1e-15);
    }

    #[test]
    fn antipodal_pair() {
        let s = circle(4);
        let r = halving_step(&s, &[StarTerm { generator: 0, lambda: 1.0 }, StarTerm { generator: 2, lambda: 1.0 }]).unwrap();
        assert!(r.defect < 1e-15);
        assert!(r.kept.len() == 1);
    }

    #[test]
    fn rounding_reproduces_point() {
        let t = round_to_slots(&[0.3, -0.25, 0.0, 0.1], 16);
        assert_eq!(t.len(), 16);
        let s: f64 = t.iter().filter(|x| x.generator == 1).map(|x| x.lambda).sum();
        assert!((s / 16.0 + 0.25).abs() < 1e-15);
    }

    #[test]
    fn pipeline_reconstructs_interior_point() {
        let s = circle(64);
        let x = [0.3, -0.5];
        let r = type1_represent(&s, 0.5, 32, &x, 5, 1e-6).unwrap();
        assert!(r.reconstruction_error <= 1e-6);
        assert!(r.scale <= r.scale_bound + 1e-12);
        r.representation.check_structure(&s).unwrap();
        for h in &r.halving {
            assert!(h.defect <= h.greedy_bound + 1e-12);
        }
    }

    #[test]
    fn outside_points_are_rejected() {
        assert!(matches!(type1_represent(&circle(16), 0.5, 4, &[2.0, 0.0], 3, 1e-6), Err(Error::Input(_))));
    }
}
