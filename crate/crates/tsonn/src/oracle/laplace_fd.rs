//! Potential flow on the annulus: SOR solve of the polar Laplace equation
//! plus a measured explicit pseudo-time stability bound.
//!
//! Wall ring: mirror-ghost Neumann (`phi_r = 0`). Far ring: Dirichlet
//! `phi = v_inf * x`, the free-stream potential; the induced deviation
//! from the unbounded analytic solution scales as `(r_wall / r_far)^2`.

use super::GridField;
use crate::error::{Result, TsonnError};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

struct PolarGrid {
    n_theta: usize,
    n_r: usize, // interior rings; total radial levels = n_r + 2
    r_wall: f64,
    dr: f64,
    dtheta: f64,
}

impl PolarGrid {
    fn new(n_theta: usize, n_r: usize, r_wall: f64, r_far: f64) -> Self {
        Self {
            n_theta,
            n_r,
            r_wall,
            dr: (r_far - r_wall) / (n_r + 1) as f64,
            dtheta: 2.0 * PI / n_theta as f64,
        }
    }

    fn radius(&self, i: usize) -> f64 {
        self.r_wall + i as f64 * self.dr
    }

    fn levels(&self) -> usize {
        self.n_r + 2
    }
}

/// Discrete polar Laplacian at level `i`, angle index `j`, with the wall
/// mirror ghost at `i = 0`. Not valid at the far (Dirichlet) ring.
fn laplacian(grid: &PolarGrid, phi: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let nt = grid.n_theta;
    let r = grid.radius(i);
    let (jm, jp) = ((j + nt - 1) % nt, (j + 1) % nt);
    let theta_term = (phi[i][jp] - 2.0 * phi[i][j] + phi[i][jm]) / (r * r * grid.dtheta * grid.dtheta);
    if i == 0 {
        // mirror ghost: phi[-1] = phi[1]
        2.0 * (phi[1][j] - phi[0][j]) / (grid.dr * grid.dr) + theta_term
    } else {
        let radial = (phi[i + 1][j] - 2.0 * phi[i][j] + phi[i - 1][j]) / (grid.dr * grid.dr);
        let first = (phi[i + 1][j] - phi[i - 1][j]) / (2.0 * grid.dr * r);
        radial + first + theta_term
    }
}

fn diagonal(grid: &PolarGrid, i: usize) -> f64 {
    let r = grid.radius(i);
    2.0 / (grid.dr * grid.dr) + 2.0 / (r * r * grid.dtheta * grid.dtheta)
}

/// Solves the annulus potential problem and measures the largest stable
/// explicit pseudo-time step on the same grid.
///
/// Returns the velocity field on all `n_theta * (n_r + 2)` nodes and the
/// measured bound.
pub fn laplace_annulus_fd(
    n_theta: usize,
    n_r: usize,
    tol: f64,
    max_sweeps: usize,
) -> Result<(GridField, f64)> {
    let (v_inf, r_wall, r_far) = (1.0, 0.5, 15.0);
    if n_theta < 8 || n_r < 4 {
        return Err(TsonnError::Config("annulus grid too small".into()));
    }
    let grid = PolarGrid::new(n_theta, n_r, r_wall, r_far);
    let levels = grid.levels();
    let nt = n_theta;

    let mut phi = vec![vec![0.0f64; nt]; levels];
    for (j, p) in phi[levels - 1].iter_mut().enumerate() {
        let theta = grid.dtheta * j as f64;
        *p = v_inf * r_far * theta.cos();
    }

    // SOR over wall + interior rows (far row is Dirichlet).
    let omega = 2.0 / (1.0 + (PI / levels.max(nt) as f64).sin());
    let mut residual = f64::INFINITY;
    let mut sweeps = 0usize;
    while sweeps < max_sweeps {
        let mut max_res = 0.0f64;
        for i in 0..levels - 1 {
            for j in 0..nt {
                let res = laplacian(&grid, &phi, i, j);
                max_res = max_res.max(res.abs());
                phi[i][j] += omega * res / diagonal(&grid, i);
            }
        }
        residual = max_res;
        sweeps += 1;
        if residual < tol {
            break;
        }
    }
    if residual >= tol {
        return Err(TsonnError::NoConvergence(format!(
            "annulus SOR residual {residual:.3e} after {sweeps} sweeps"
        )));
    }

    // Velocities from polar gradients; the wall radial derivative is zero
    // by the mirror construction.
    let mut coords = Array2::zeros((levels * nt, 2));
    let mut values = Array2::zeros((levels * nt, 2));
    for i in 0..levels {
        let r = grid.radius(i);
        for j in 0..nt {
            let theta = grid.dtheta * j as f64;
            let phi_r = if i == 0 {
                0.0
            } else if i == levels - 1 {
                // one-sided second order at the far ring
                (3.0 * phi[i][j] - 4.0 * phi[i - 1][j] + phi[i - 2][j]) / (2.0 * grid.dr)
            } else {
                (phi[i + 1][j] - phi[i - 1][j]) / (2.0 * grid.dr)
            };
            let (jm, jp) = ((j + nt - 1) % nt, (j + 1) % nt);
            let phi_t = (phi[i][jp] - phi[i][jm]) / (2.0 * grid.dtheta);
            let row = i * nt + j;
            coords[(row, 0)] = r * theta.cos();
            coords[(row, 1)] = r * theta.sin();
            values[(row, 0)] = phi_r * theta.cos() - phi_t * theta.sin() / r;
            values[(row, 1)] = phi_r * theta.sin() + phi_t * theta.cos() / r;
        }
    }

    let bound = measure_stable_dt(&grid);
    Ok((
        GridField {
            coords,
            values,
            axes: Vec::new(),
            components: vec!["u".into(), "v".into()],
            residual_norm: residual,
            iterations: sweeps,
        },
        bound,
    ))
}

/// Bisects the largest `dtau` for which explicit marching of the
/// homogeneous problem damps a deterministic noise field.
fn measure_stable_dt(grid: &PolarGrid) -> f64 {
    let is_stable = |dt: f64| -> bool {
        let nt = grid.n_theta;
        let levels = grid.levels();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut phi: Vec<Vec<f64>> =
            (0..levels).map(|_| (0..nt).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
        for p in phi[levels - 1].iter_mut() {
            *p = 0.0; // homogeneous far Dirichlet
        }
        let mut scratch = phi.clone();
        for _ in 0..400 {
            for i in 0..levels - 1 {
                for j in 0..nt {
                    scratch[i][j] = phi[i][j] + dt * laplacian(grid, &phi, i, j);
                }
            }
            for i in 0..levels - 1 {
                phi[i].copy_from_slice(&scratch[i]);
            }
            let amp = phi
                .iter()
                .take(levels - 1)
                .flat_map(|row| row.iter())
                .fold(0.0f64, |a, &v| a.max(v.abs()));
            if !amp.is_finite() || amp > 1e4 {
                return false;
            }
        }
        true
    };

    let mut lo = 1e-7;
    let mut hi = 1e-1;
    debug_assert!(is_stable(lo));
    for _ in 0..30 {
        let mid = (lo * hi).sqrt();
        if is_stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
