//! Geometric hulls `Γ_θ S = {(1−θ) Σ θ^k λ_k s_k : |λ_k| ≤ 1}`.

use serde::{Deserialize, Serialize};

use super::delta_m::DeltaMCertificate;
use crate::bodies::GeneratingSet;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaTerm {
    pub level: u64,
    pub lambda: f64,
    pub generator: usize,
}

/// Truncated series `(1−θ) Σ_k θ^k λ_k s_{g(k)}`; the represented point is
/// the series value plus a residual of Euclidean norm `residual_norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRepresentation {
    pub theta: f64,
    pub terms: Vec<GammaTerm>,
    pub depth: u64,
    pub residual_norm: f64,
}

impl GammaRepresentation {
    pub fn empty(theta: f64) -> Self {
        GammaRepresentation {
            theta,
            terms: Vec::new(),
            depth: 0,
            residual_norm: 0.0,
        }
    }

    /// Value of the truncated series.
    pub fn evaluate(&self, s: &GeneratingSet) -> Vec<f64> {
        let mut out = vec![0.0; s.dimension()];
        for t in &self.terms {
            let w = (1.0 - self.theta) * self.theta.powf(t.level as f64) * t.lambda;
            axpy(w, s.point(t.generator), &mut out);
        }
        out
    }

    /// Levels strictly increasing, bounded by `depth`, `|λ| ≤ 1 + 1e-12`,
    /// generator indices in range.
    pub fn check_structure(&self, s: &GeneratingSet) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::numerical(format!("theta {} outside (0,1)", self.theta)));
        }
        let mut prev: Option<u64> = None;
        for t in &self.terms {
            if prev.is_some_and(|p| t.level <= p) {
                return Err(Error::numerical(format!("levels not strictly increasing at {}", t.level)));
            }
            if t.level > self.depth {
                return Err(Error::numerical(format!("level {} exceeds depth {}", t.level, self.depth)));
            }
            if t.lambda.abs() > 1.0 + 1e-12 || !t.lambda.is_finite() {
                return Err(Error::numerical(format!("coefficient {} at level {}", t.lambda, t.level)));
            }
            if t.generator >= s.len() {
                return Err(Error::numerical(format!("generator index {} out of range", t.generator)));
            }
            prev = Some(t.level);
        }
        Ok(())
    }

    /// Euclidean distance between `scale · evaluate()` and `x`.
    pub fn reconstruction_error(&self, s: &GeneratingSet, x: &[f64], scale: f64) -> f64 {
        let v: Vec<f64> = self.evaluate(s).iter().map(|t| t * scale).collect();
        norm2(&sub(&v, x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "representation", rename_all = "snake_case")]
pub enum GammaOutcome {
    /// Residual within tolerance.
    Member(GammaRepresentation),
    /// Inconclusive: the best representation found.
    Unknown(GammaRepresentation),
}

impl GammaOutcome {
    pub fn representation(&self) -> &GammaRepresentation {
        match self {
            GammaOutcome::Member(r) | GammaOutcome::Unknown(r) => r,
        }
    }

    pub fn is_member(&self) -> bool {
        matches!(self, GammaOutcome::Member(_))
    }
}

/// Smallest `K` with `θ^K · diameter ≤ tolerance`, which bounds the tail
/// `(1−θ) Σ_{k>K} θ^k max‖s‖`.
pub fn default_depth(theta: f64, tolerance: f64, diameter: f64) -> u64 {
    if diameter <= tolerance {
        return 0;
    }
    ((tolerance / diameter).ln() / theta.ln()).ceil().max(0.0) as u64
}

/// Greedy Γ_θ representation: one term per level `0..=depth`, each choosing
/// the generator and clamped coefficient that minimize the new Euclidean
/// residual. Stops early once the residual is within `tolerance`.
pub fn gamma_greedy_represent(
    s: &GeneratingSet,
    theta: f64,
    x: &[f64],
    depth: Option<u64>,
    tolerance: f64,
) -> Result<GammaOutcome> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::input(format!("theta {theta} outside (0,1)")));
    }
    if x.len() != s.dimension() {
        return Err(Error::input("query dimension does not match the generating set"));
    }
    let depth = depth.unwrap_or_else(|| default_depth(theta, tolerance.max(1e-300), s.max_norm2()));
    let sq: Vec<f64> = s.points().iter().map(|p| dot(p, p)).collect();
    let mut r = x.to_vec();
    let mut r2 = dot(&r, &r);
    let mut terms = Vec::new();
    let mut weight = 1.0 - theta;
    for level in 0..=depth {
        if r2.sqrt() <= tolerance {
            break;
        }
        let mut best: Option<(f64, usize, f64)> = None;
        for (i, p) in s.points().iter().enumerate() {
            if sq[i] == 0.0 {
                continue;
            }
            let rs = dot(&r, p);
            let lambda = (rs / (weight * sq[i])).clamp(-1.0, 1.0);
            let new_r2 = r2 - 2.0 * weight * lambda * rs + weight * weight * lambda * lambda * sq[i];
            if best.is_none_or(|(b, _, _)| new_r2 < b) {
                best = Some((new_r2, i, lambda));
            }
        }
        if let Some((_, i, lambda)) = best {
            if lambda != 0.0 {
                axpy(-weight * lambda, s.point(i), &mut r);
                r2 = dot(&r, &r);
                terms.push(GammaTerm { level, lambda, generator: i });
            }
        }
        weight *= theta;
    }
    let rep = GammaRepresentation {
        theta,
        terms,
        depth,
        residual_norm: r2.sqrt(),
    };
    Ok(if rep.residual_norm <= tolerance {
        GammaOutcome::Member(rep)
    } else {
        GammaOutcome::Unknown(rep)
    })
}

/// Re-expresses a Γ_α representation in Γ_θ for `θ > α`:
/// `λ'_k = λ_k (α/θ)^k`. Returns the new representation and the scale
/// `(1−α)/(1−θ)` with `scale · eval(out) = eval(in)`.
pub fn gamma_rescale(rep: &GammaRepresentation, new_theta: f64) -> Result<(GammaRepresentation, f64)> {
    let alpha = rep.theta;
    if !(new_theta > alpha && new_theta < 1.0) {
        return Err(Error::input(format!("new theta {new_theta} must lie in ({alpha}, 1)")));
    }
    let ratio = alpha / new_theta;
    let scale = (1.0 - alpha) / (1.0 - new_theta);
    let terms = rep
        .terms
        .iter()
        .map(|t| GammaTerm {
            level: t.level,
            lambda: t.lambda * ratio.powf(t.level as f64),
            generator: t.generator,
        })
        .collect();
    Ok((
        GammaRepresentation {
            theta: new_theta,
            terms,
            depth: rep.depth,
            residual_norm: rep.residual_norm / scale,
        },
        scale,
    ))
}

/// A Γ_θ series whose summands are elements of `Δ_m S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaDeltaRepresentation {
    pub theta: f64,
    pub m: u64,
    /// `(level, λ, certificate)`, levels strictly increasing.
    pub terms: Vec<(u64, f64, DeltaMCertificate)>,
    pub residual_norm: f64,
}

impl GammaDeltaRepresentation {
    pub fn evaluate(&self, s: &GeneratingSet) -> Vec<f64> {
        let mut out = vec![0.0; s.dimension()];
        for (level, lambda, cert) in &self.terms {
            let w = (1.0 - self.theta) * self.theta.powf(*level as f64) * lambda;
            axpy(w, &cert.point(s), &mut out);
        }
        out
    }
}

/// `(1−θ) θ^{1/m−1} / (m (1−θ^{1/m}))`, the scale of the re-indexing.
pub fn approx2_scale(theta: f64, m: u64) -> f64 {
    if m == 1 {
        return 1.0;
    }
    let phi = theta.powf(1.0 / m as f64);
    // 1 − θ^{1/m} via expm1 to keep precision for large m
    let one_minus_phi = -(theta.ln() / m as f64).exp_m1();
    (1.0 - theta) * phi / theta / (m as f64 * one_minus_phi)
}

/// Upper bound `2θ/(3θ−1)` for [`approx2_scale`].
pub fn approx2_bound(theta: f64) -> f64 {
    2.0 * theta / (3.0 * theta - 1.0)
}

/// Rewrites a Γ_θ(Δ_m S) series as a Γ_{θ^{1/m}} S series: the `m` slots of
/// the level-`k` certificate go to levels `km, …, km+m−1`, slot `j` carrying
/// `λ_k μ_j θ^{(m−1−j)/m}`. Returns the series and its scale, so
/// `scale · eval(out) = eval(in)`.
pub fn approx2_transform(s: &GeneratingSet, outer: &GammaDeltaRepresentation) -> Result<(GammaRepresentation, f64)> {
    let theta = outer.theta;
    let m = outer.m;
    if !(theta > 1.0 / 3.0 && theta < 1.0) {
        return Err(Error::input(format!("theta {theta} outside (1/3, 1)")));
    }
    if m == 0 {
        return Err(Error::input("m must be positive"));
    }
    let phi = theta.powf(1.0 / m as f64);
    let scale = approx2_scale(theta, m);
    let mut terms = Vec::new();
    let mut prev: Option<u64> = None;
    let mut max_level = 0;
    for (level, lambda, cert) in &outer.terms {
        if prev.is_some_and(|p| *level <= p) {
            return Err(Error::input("outer levels must be strictly increasing"));
        }
        prev = Some(*level);
        if cert.m != m {
            return Err(Error::input(format!("certificate has m = {} (expected {m})", cert.m)));
        }
        cert.check_structure(s)?;
        let mut j = 0u64;
        for (i, (&mult, &alpha)) in cert.multiplicities.iter().zip(&cert.alphas).enumerate() {
            if mult == 0 {
                continue;
            }
            let mu = alpha / mult as f64;
            for _ in 0..mult {
                let coef = lambda * mu * theta.powf((m - 1 - j) as f64 / m as f64);
                if coef != 0.0 {
                    terms.push(GammaTerm {
                        level: level * m + j,
                        lambda: coef,
                        generator: i,
                    });
                }
                j += 1;
            }
        }
        max_level = level * m + m - 1;
    }
    Ok((
        GammaRepresentation {
            theta: phi,
            terms,
            depth: max_level,
            residual_norm: outer.residual_norm / scale,
        },
        scale,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross() -> GeneratingSet {
        GeneratingSet::signed_basis(2)
    }

    #[test]
    fn single_generator_is_one_term() {
        let s = cross();
        let out = gamma_greedy_represent(&s, 0.5, &[0.0, 0.5], None, 1e-12).unwrap();
        let r = out.representation();
        assert!(out.is_member());
        assert_eq!(r.terms, vec![GammaTerm { level: 0, lambda: 1.0, generator: 2 }]);
        assert_eq!(r.residual_norm, 0.0);
    }

    #[test]
    fn hand_expansion() {
        let s = GeneratingSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]], "x").unwrap();
        let out = gamma_greedy_represent(&s, 0.5, &[0.5, 0.25], None, 1e-12).unwrap();
        let r = out.representation();
        assert_eq!(
            r.terms,
            vec![
                GammaTerm { level: 0, lambda: 1.0, generator: 0 },
                GammaTerm { level: 1, lambda: 1.0, generator: 1 }
            ]
        );
        assert!(out.is_member());
    }

    #[test]
    fn zero_is_empty() {
        let out = gamma_greedy_represent(&cross(), 0.3, &[0.0, 0.0], Some(10), 0.0).unwrap();
        assert!(out.representation().terms.is_empty());
        assert!(out.is_member());
    }

    #[test]
    fn rescale_example() {
        let rep = GammaRepresentation {
            theta: 0.5,
            terms: vec![
                GammaTerm { level: 0, lambda: 1.0, generator: 0 },
                GammaTerm { level: 1, lambda: 1.0, generator: 1 },
            ],
            depth: 1,
            residual_norm: 0.0,
        };
        let (out, scale) = gamma_rescale(&rep, 0.75).unwrap();
        assert_eq!(scale, 2.0);
        assert_eq!(out.terms[0].lambda, 1.0);
        assert!((out.terms[1].lambda - 2.0 / 3.0).abs() < 1e-15);
        assert!(gamma_rescale(&rep, 0.4).is_err());
    }

    #[test]
    fn approx2_scale_bounds() {
        assert!((approx2_bound(0.75) - 1.2).abs() < 1e-15);
        assert_eq!(approx2_scale(0.75, 1), 1.0);
        for m in 1..200 {
            for &t in &[0.34, 0.5, 0.75, 0.9, 0.999] {
                assert!(approx2_scale(t, m) <= approx2_bound(t) + 1e-12);
            }
        }
    }

    #[test]
    fn depth_covers_tail() {
        let k = default_depth(0.5, 1e-6, 1.0);
        assert!(0.5f64.powi(k as i32) <= 1e-6);
        assert!(0.5f64.powi(k as i32 - 1) > 1e-6);
    }
}
