//! Numerical kernels: linear programming, minimum-volume enclosing
//! ellipsoids, gauge maximization over polytopes and a simplex search.

pub mod gauge_max;
pub mod lp;
pub mod mvee;
pub mod nelder_mead;

pub use gauge_max::{max_gauge_over_polytope, GaugeMaximum, GaugeOracle};
pub use lp::{solve_lp, FarkasCertificate, LpOutcome, LpProblem, LpSolution};
pub use mvee::{mvee, mvee_report, Ellipsoid, MveeReport};
pub use nelder_mead::nelder_mead;
