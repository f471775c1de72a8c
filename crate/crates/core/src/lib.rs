//! Outage-constrained secure beamforming for multi-user SWIPT downlinks.
//!
//! Builds the sphere-bounding (S-procedure) and Bernstein-type safe
//! approximations as conic programs, solves them with the `conic` crate,
//! extracts rank-one beamformers and checks outage rates by Monte Carlo.

pub mod complexity;
pub mod error;
pub mod layout;
pub mod linalg;
pub mod method1;
pub mod method2;
pub mod quadforms;
pub mod scenario;
pub mod solution;

pub use error::CoreError;
pub use linalg::{ComplexVector, HermitianMatrix, C64};
pub use scenario::{Scenario, SystemConfig};
