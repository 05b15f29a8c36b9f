//! Closed-form `θ` choices and the ℓ₁-subspace dimension bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Type2Theta {
    pub theta: f64,
    /// `ΔS ⊂ scale · Γ_θ S`.
    pub scale: f64,
    pub q_prime: f64,
}

/// `θ = 1 − ¼ ((2^{1/q'} − 1)/(2 T_q))^{q'}` with companion scale 12.
pub fn type2_theta(q: f64, tq: f64) -> Result<Type2Theta> {
    if !(q > 1.0 && q <= 2.0) {
        return Err(Error::input(format!("q = {q} outside (1,2]")));
    }
    if !(tq >= 1.0) || !tq.is_finite() {
        return Err(Error::input(format!("T_q = {tq} must be a finite value >= 1")));
    }
    let qp = q / (q - 1.0);
    let gap = 0.25 * ((2f64.powf(1.0 / qp) - 1.0) / (2.0 * tq)).powf(qp);
    Ok(Type2Theta {
        theta: 1.0 - gap,
        scale: 12.0,
        q_prime: qp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EltonTheta {
    pub theta: f64,
    /// `1 − θ`, kept separately because it underflows `θ` quickly.
    pub gap: f64,
    pub scale: f64,
    pub m: u64,
    pub c0: f64,
    pub big_c: f64,
    pub calibration_dependent: bool,
}

/// `θ = 1 − ½ (Cm)^{−C ln ln(Cm)}` (natural logarithms).
pub fn elton_theta(m: u64, c0: f64, big_c: f64) -> Result<EltonTheta> {
    if m < 2 {
        return Err(Error::input("m must be at least 2"));
    }
    if !(0.5..1.0).contains(&c0) {
        return Err(Error::input(format!("c0 = {c0} outside [1/2, 1)")));
    }
    if !(big_c >= 1.0) {
        return Err(Error::input(format!("C = {big_c} must be >= 1")));
    }
    let cm = big_c * m as f64;
    if cm <= std::f64::consts::E {
        return Err(Error::input(format!("Cm = {cm} <= e, so ln ln(Cm) is not positive")));
    }
    let exponent = -big_c * cm.ln().ln();
    let gap = 0.5 * cm.powf(exponent);
    Ok(EltonTheta {
        theta: 1.0 - gap,
        gap,
        scale: 8.0,
        m,
        c0,
        big_c,
        calibration_dependent: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryBound {
    /// `A = C δ^{p/(1−p)}`.
    pub a: f64,
    /// `c p exp(ln A / ln ln A)`.
    pub bound: f64,
    pub c: f64,
    pub big_c: f64,
}

/// Lower bound for the dimension of an ℓ₁-like subspace of the envelope.
pub fn corollary_l1_bound(delta: f64, p: f64, c: f64, big_c: f64) -> Result<CorollaryBound> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::input(format!("p = {p} must lie in (0,1); the convex case carries no bound")));
    }
    if !(delta >= 1.0) {
        return Err(Error::input(format!("delta = {delta} must be >= 1")));
    }
    let a = big_c * delta.powf(p / (1.0 - p));
    let threshold = std::f64::consts::E.powf(std::f64::consts::E);
    if !(a > threshold) {
        return Err(Error::input(format!("A = {a} <= e^e; the bound is not applicable")));
    }
    let la = a.ln();
    Ok(CorollaryBound {
        a,
        bound: c * p * (la / la.ln()).exp(),
        c,
        big_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type2_reference_values() {
        let t = type2_theta(2.0, 1.0).unwrap();
        let expect = 1.0 - 0.25 * ((2f64.sqrt() - 1.0) / 2.0).powi(2);
        assert!((t.theta - expect).abs() < 1e-15);
        assert!((t.theta - 0.98928).abs() < 1e-5);
        let big = type2_theta(2.0, 1e6).unwrap();
        let gap = 1.0 - big.theta;
        assert!((gap - 1.0723e-14).abs() < 0.01e-14, "{gap:e}");
        assert!(type2_theta(1.0, 2.0).is_err());
    }

    #[test]
    fn elton_monotone_in_c() {
        let a = elton_theta(100, 0.9, 1.0).unwrap();
        let b = elton_theta(100, 0.9, 2.0).unwrap();
        assert!(b.gap < a.gap);
        let c = elton_theta(2, 0.9, 10.0).unwrap();
        assert!(c.theta > 0.0 && c.theta < 1.0);
        assert!(elton_theta(2, 0.9, 1.0).is_err());
    }

    #[test]
    fn corollary_domain() {
        assert!(corollary_l1_bound(1.0, 0.5, 1.0, 1.0).is_err());
        assert!(corollary_l1_bound(2.0, 1.0, 1.0, 1.0).is_err());
        let b = corollary_l1_bound(1e6, 0.5, 1.0, 1.0).unwrap();
        assert!((b.a - 1e6).abs() < 1e-6);
        let b2 = corollary_l1_bound(1e6, 0.5, 1.0, 2.0).unwrap();
        assert!((b2.a - 2.0 * b.a).abs() < 1e-6 && b2.bound > b.bound);
    }
}
