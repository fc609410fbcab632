//! Exact and Monte Carlo computations for Sibuya trees and forests.

pub mod compositions;
pub mod dist;
pub mod error;
pub mod export;
pub mod numerics;
mod ode;
pub mod series;
pub mod simulate;
pub mod stirling;
pub mod thermo;
pub mod verify;

pub use dist::{Label, Pmf};
pub use error::{Error, Result};
pub use numerics::{AlphaParam, Exact, Mode, Scalar};
pub use series::TruncatedSeries;
pub use simulate::{Attachment, ForestState, RngStream};
pub use stirling::StirlingTable;
pub use thermo::{RescaledFamily, ThermoSolution};
