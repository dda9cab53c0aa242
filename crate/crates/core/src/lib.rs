//! Finite-volume and kinetic solvers for the aggregation equation
//! `∂t u + div(∇S g(u)) = ε Δu`, `−ΔS + S = u`, `g(u) = u(1 − u)`,
//! together with entropy, energy and rigidity diagnostics.

pub mod config;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod hyperbolic;
pub mod initial;
pub mod io;
pub mod kinetic;
pub mod solver;

pub use config::SimConfig;
pub use error::{Error, Result};
pub use field::{CellField, FaceField};
pub use grid::{Boundary, Grid, GridSpec};
