//! Combinatorics over cube vertices and the cube-quotient constructions.

mod chain;
mod counting;
mod operator;
mod quotient;
mod shatter;
mod subsample;
mod vertex;

pub use chain::{
    alesker_chain, alesker_chain_with, chain_cube_certificate, chain_levels, chain_scale, chain_slots, ChainCertificates,
    ChainTerm, ChainVertexCertificate, FiberPair, RepEntry, ShatterChain,
};
pub use counting::{counting_select, CountingSelection};
pub use operator::{
    cubic_quotient_from_nonconvexity, l1_to_cube_operator, pnormed_quotient, verify_operator_image, CubicReport, L1Subspace,
    OperatorImage, PNormedReport, SampledSandwich,
};
pub use quotient::{
    cube_quotient, cube_quotient_with, represent_cube_point, split_point, ConstantsUsed, CubePointRepresentation,
    PointCertificate, QuotientOptions, QuotientReport, SnapEntry, SnapTable, SparseCertificate, VertexCertificate,
    ASSEMBLY_THETA, MAX_QUOTIENT_DIM,
};
pub use shatter::{find_shattered, find_shattered_among, largest_shattered, shatters, ShatterOutcome, DEFAULT_SHATTER_BUDGET};
pub use subsample::{subsample_vertex_fit, SubsampleFit, VarianceCheck};
pub use vertex::{embed, project, to_signs, to_string as vertex_string, VertexSet, MAX_VERTEX_DIM};
