//! Named absolute constants. The existence proofs leave them unspecified, so
//! every report carries the values it used; all are overridable by name.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Density exponent in `|V| ≥ 2^{n(1−cε)}` and the final `θ` formula.
    pub c: f64,
    /// Scale target `Cε⁻¹` and slot target `Cε⁻²` of the chain.
    #[serde(rename = "C")]
    pub big_c: f64,
    /// Elton's density constant.
    pub c0: f64,
    /// Snapping tolerance `δ = c₁ε`.
    pub c1: f64,
    /// Subsample size `m > c₂ d² ε⁻³ (1 − ln ε)`.
    pub c2: f64,
    #[serde(rename = "elton_C")]
    pub elton_c: f64,
    /// `c` and `C` of the ℓ₁-subspace bound `c p exp(ln A / ln ln A)`, `A = C δ^{p/(1−p)}`.
    pub corollary_c: f64,
    #[serde(rename = "corollary_C")]
    pub corollary_big_c: f64,
    /// Constant in `k ≥ c ln A / ln ln A`.
    pub cubic_c: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            c: 0.1,
            big_c: 8.0,
            c0: 0.9,
            c1: 0.25,
            c2: 1.0,
            elton_c: 10.0,
            corollary_c: 1.0,
            corollary_big_c: 1.0,
            cubic_c: 1.0,
        }
    }
}

impl Calibration {
    pub const KEYS: [&'static str; 9] = ["c", "C", "c0", "c1", "c2", "elton_C", "corollary_c", "corollary_C", "cubic_c"];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "c" => &mut self.c,
            "C" => &mut self.big_c,
            "c0" => &mut self.c0,
            "c1" => &mut self.c1,
            "c2" => &mut self.c2,
            "elton_C" => &mut self.elton_c,
            "corollary_c" => &mut self.corollary_c,
            "corollary_C" => &mut self.corollary_big_c,
            "cubic_c" => &mut self.cubic_c,
            _ => return None,
        })
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(key).map(|v| *v)
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::input(format!("constant {key} must be positive and finite")));
        }
        *self
            .slot(key)
            .ok_or_else(|| Error::input(format!("unknown constant {key:?} (known: {})", Self::KEYS.join(", "))))? = value;
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        Self::KEYS.iter().map(|&k| (k, self.get(k).expect("known key"))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_get_by_name() {
        let mut c = Calibration::default();
        c.set("C", 12.0).unwrap();
        assert_eq!(c.big_c, 12.0);
        assert_eq!(c.get("c"), Some(0.1));
        assert!(c.set("nope", 1.0).is_err());
        assert!(c.set("c", -1.0).is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"C\":12.0"));
        assert_eq!(serde_json::from_str::<Calibration>(&json).unwrap(), c);
    }
}
