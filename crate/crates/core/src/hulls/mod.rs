//! Membership oracles and representation certificates for `ΔS`, `Δ_m S`
//! and the geometric hulls `Γ_θ S`.

mod delta_m;
mod gamma;
mod pconv;

pub use delta_m::{delta_m_membership, DeltaMCertificate, DeltaMVerdict, DEFAULT_NODE_BUDGET};
pub use gamma::{
    approx2_bound, approx2_scale, approx2_transform, default_depth, gamma_greedy_represent, gamma_rescale,
    GammaDeltaRepresentation, GammaOutcome, GammaRepresentation, GammaTerm,
};
pub use pconv::{pconv_contraction_bound, verify_pconv_contraction, ContractionReport, SAMPLE_DEPTH};
