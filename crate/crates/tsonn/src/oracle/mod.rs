//! Classical grid-based reference solvers.
//!
//! These are kept independent of the network/training code paths: they use
//! their own stencils so equivalence tests between the two sides are
//! meaningful.

mod allen_cahn_fd;
mod burgers_fd;
mod cavity_fd;
mod euler;
mod laplace_fd;

pub use allen_cahn_fd::{allen_cahn_fd, allen_cahn_fd_params};
pub use burgers_fd::{burgers_explicit_stability_bound, burgers_steady_fd};
pub use cavity_fd::cavity_fd;
pub use euler::explicit_euler_trajectory;
pub use laplace_fd::laplace_annulus_fd;

use ndarray::Array2;

/// Structured-grid solver output.
#[derive(Debug, Clone)]
pub struct GridField {
    /// `(n, d)` physical coordinates; rows enumerate the grid with axis 0
    /// varying fastest.
    pub coords: Array2<f64>,
    /// `(n, components)` field values.
    pub values: Array2<f64>,
    /// Tensor axes, matching coordinate columns.
    pub axes: Vec<Vec<f64>>,
    pub components: Vec<String>,
    /// Terminal residual measure (scheme specific; see each solver).
    pub residual_norm: f64,
    pub iterations: usize,
}
