//! Personalised online super learner for repeated outcomes in panel data.
//!
//! Candidate learners are trained on one individual's own history (with
//! rolling-origin and rolling-window cross-validation) and on a historical
//! pool of other individuals. At every time step their out-of-fold
//! predictions are stacked with non-negative least squares, or the single
//! best learner is selected, and the next session is predicted.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and parallel orchestration live in the `posl` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cv;
pub mod engine;
pub mod ensemble;
mod error;
pub mod learners;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod paneldata;

pub use error::{Error, Result};
