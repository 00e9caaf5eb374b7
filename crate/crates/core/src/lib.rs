//! Loewner chains, SLE sampling and the discrete models they describe,
//! with exact formulas to check every Monte Carlo estimate against.

pub mod conformal;
pub mod error;
pub mod formulas;
pub mod io;
pub mod lattice;
pub mod loewner;
pub mod models;
pub mod montecarlo;
pub mod sle;

pub use conformal::{ComplexPoint, Direction, MapChain, SlitParams};
pub use error::{Error, Result};
pub use lattice::{LatticeDomain, LatticeKind, LatticePath, Shape};
pub use loewner::{DrivingKind, DrivingPath, FlowState, LoewnerTrace};
