pub mod balance;
pub mod bodies;
pub mod calibration;
pub mod cube;
pub mod dvoretzky;
pub mod error;
pub mod hulls;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod parallel;
pub mod rng;

pub use error::{Error, Result};
