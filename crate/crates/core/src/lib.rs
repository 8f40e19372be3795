//! Strategic trading of locally private binary data.
//!
//! A data collector wants to learn a binary state `W`. Each of `N` individuals
//! holds a noisy signal of `W` and reports a randomized version of it (or
//! declines to participate) in exchange for a payment. Reporting leaks
//! privacy, measured as the local differential-privacy level of the reporting
//! strategy, and each individual pays a convex cost in that level.
//!
//! The crate is organised as follows:
//!
//! - [`model`]: model parameters, strategies, privacy levels, cost functions.
//! - [`mechanisms`]: payment rules (tabular, genie-aided, peer-majority) and
//!   the flip / genie-replication transforms.
//! - [`equilibrium`]: expected utilities, best responses, Nash verification.
//! - [`bounds`]: value-of-privacy bounds, Chernoff information and the
//!   payment–accuracy optimizer.
//! - [`simulate`]: seeded Monte Carlo of the whole game and MAP testing.

pub mod bounds;
pub mod equilibrium;
mod error;
pub mod mechanisms;
pub mod model;
pub mod numeric;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{CostFn, ModelParams, Report, ReportDist, Strategy};
