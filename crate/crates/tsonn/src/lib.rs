//! Collocation-based neural PDE solving with pseudo time-stepping.
//!
//! The crate trains a tanh network against one of four benchmark PDEs in
//! three modes: direct residual minimization (`pinn`), and explicit or
//! implicit pseudo time-stepping (`etsonn` / `itsonn`), all under one
//! inner/outer iteration loop. Classical finite-difference solvers provide
//! reference solutions, and a CLI reproduces the benchmarks from config
//! files.

pub mod error;
pub mod loss;
pub mod net;
pub mod report;
pub mod trainer;
pub mod optim;
pub mod oracle;
pub mod parallel;
pub mod problems;
pub mod real;

pub use error::{Result, TsonnError};
