//! Sign balancing, the halving iteration and the `θ` formulas that turn
//! type/cotype information into geometric-hull inclusions.

mod halving;
mod signs;
mod theta;

pub(crate) use halving::round_to_slots;
pub use halving::{certificate_from_terms, halving_step, type1_represent, HalvingRecord, HalvingResult, StarTerm, Type1Report};
pub use signs::{
    bn_estimate, exhaustive_signs, greedy_signs, sign_average, tq_estimate, BalanceReport, BnEstimate, Envelope, Euclidean,
    LInf, Norm, SignMethod, TypeConstantReport, L1, MAX_EXHAUSTIVE, MAX_TYPE_N,
};
pub use theta::{corollary_l1_bound, elton_theta, type2_theta, CorollaryBound, EltonTheta, Type2Theta};
