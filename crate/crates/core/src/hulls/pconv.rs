//! p-convex contraction: `Γ_θ B ⊂ p^{−1/p}(1−θ)^{1−1/p} B` for a p-convex `B`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::{p_gauge_upper, PBody};
use crate::error::{Error, Result};
use crate::linalg::axpy;
use crate::rng::{derive_seed, rng};

/// `p^{−1/p} (1−θ)^{1−1/p}`; exactly 1 when `p = 1`.
pub fn pconv_contraction_bound(p: f64, theta: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::input(format!("p = {p} outside (0,1]")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::input(format!("theta = {theta} outside (0,1)")));
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    Ok(p.powf(-1.0 / p) * (1.0 - theta).powf(1.0 - 1.0 / p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub lemma: String,
    pub p: f64,
    pub theta: f64,
    pub depth: u32,
    pub samples: usize,
    pub seed: u64,
    /// Largest p-gauge over the sampled series.
    pub max_ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

pub const SAMPLE_DEPTH: u32 = 64;

/// Samples truncated Γ_θ series with uniform `λ_k ∈ [−1,1]` and uniform
/// generators and checks their p-gauges against the contraction bound.
pub fn verify_pconv_contraction(body: &PBody, theta: f64, samples: usize, seed: u64) -> Result<ContractionReport> {
    let bound = pconv_contraction_bound(body.p(), theta)?;
    let s = body.generators();
    let mut max_ratio = 0.0f64;
    for i in 0..samples {
        let mut g = rng(derive_seed(seed, i as u64));
        let mut x = vec![0.0; s.dimension()];
        let mut w = 1.0 - theta;
        for _ in 0..SAMPLE_DEPTH {
            let lambda: f64 = g.random_range(-1.0..=1.0);
            let j = g.random_range(0..s.len());
            axpy(w * lambda, s.point(j), &mut x);
            w *= theta;
        }
        let gauge = p_gauge_upper(body, &x, 0, derive_seed(seed, i as u64))?;
        max_ratio = max_ratio.max(gauge.value);
    }
    Ok(ContractionReport {
        lemma: "pconv".into(),
        p: body.p(),
        theta,
        depth: SAMPLE_DEPTH,
        samples,
        seed,
        max_ratio,
        bound,
        pass: max_ratio <= bound + 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        assert!((pconv_contraction_bound(0.5, 0.5).unwrap() - 8.0).abs() < 1e-12);
        assert!((pconv_contraction_bound(0.5, 0.75).unwrap() - 16.0).abs() < 1e-12);
        assert_eq!(pconv_contraction_bound(1.0, 0.3).unwrap(), 1.0);
        let v = pconv_contraction_bound(0.75, 0.9).unwrap();
        assert!((v - 0.75f64.powf(-4.0 / 3.0) * 0.1f64.powf(-1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn convex_body_stays_in_ball() {
        let b = PBody::lp_ball(3, 1.0).unwrap();
        let r = verify_pconv_contraction(&b, 0.7, 200, 1).unwrap();
        assert!(r.pass && r.max_ratio <= 1.0 + 1e-12);
    }
}
