//! Semi-implicit integration of the Allen-Cahn equation: Crank-Nicolson
//! diffusion, explicit (Adams-Bashforth 2) reaction, periodic boundary.

use super::GridField;
use crate::error::{Result, TsonnError};
use crate::problems::allen_cahn_initial_condition;
use ndarray::Array2;

/// Cyclic tridiagonal solve (Sherman-Morrison around the Thomas
/// algorithm). Constant coefficients: diagonal `b`, off-diagonal `a`.
struct CyclicTridiag {
    n: usize,
    a: f64,
    b: f64,
    gamma: f64,
    /// Thomas solve of the modified system applied to the corner vector.
    z: Vec<f64>,
}

impl CyclicTridiag {
    fn new(n: usize, a: f64, b: f64) -> Self {
        let gamma = -b;
        let mut solver = Self {
            n,
            a,
            b,
            gamma,
            z: Vec::new(),
        };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = a;
        solver.z = solver.thomas(&u);
        solver
    }

    /// Thomas algorithm for the modified (acyclic) system.
    fn thomas(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        let b0 = self.b - self.gamma;
        let bn = self.b - self.a * self.a / self.gamma;
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        let diag = |i: usize| {
            if i == 0 {
                b0
            } else if i == n - 1 {
                bn
            } else {
                self.b
            }
        };
        c_prime[0] = self.a / diag(0);
        d_prime[0] = d[0] / diag(0);
        for i in 1..n {
            let m = diag(i) - self.a * c_prime[i - 1];
            c_prime[i] = self.a / m;
            d_prime[i] = (d[i] - self.a * d_prime[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d_prime[i] - c_prime[i] * x[i + 1];
        }
        x
    }

    fn solve(&self, d: &[f64]) -> Vec<f64> {
        let y = self.thomas(d);
        let n = self.n;
        let factor =
            (y[0] + self.a * y[n - 1] / self.gamma) / (1.0 + self.z[0] + self.a * self.z[n - 1] / self.gamma);
        y.iter().zip(self.z.iter()).map(|(yi, zi)| yi - factor * zi).collect()
    }
}

/// Integrates with the default benchmark coefficients (diffusivity `1e-4`,
/// reaction `5`). See [`allen_cahn_fd_params`].
pub fn allen_cahn_fd(nx: usize, nt_per_unit: usize) -> Result<GridField> {
    allen_cahn_fd_params(1e-4, 5.0, nx, nt_per_unit, 101)
}

/// Space-time solution on `[-1, 1] x [0, 1]`.
///
/// `nx` grid nodes include both endpoints (the right one duplicates the
/// left periodically); `nt_per_unit` integration steps cover the unit
/// interval and must be divisible by `nt_out - 1` so output slices land on
/// steps. A step that drives `max |u|` beyond `1 + 1e-6` aborts.
pub fn allen_cahn_fd_params(
    diffusivity: f64,
    reaction: f64,
    nx: usize,
    nt_per_unit: usize,
    nt_out: usize,
) -> Result<GridField> {
    if nx < 8 {
        return Err(TsonnError::Config("nx too small".into()));
    }
    if nt_out < 2 || nt_per_unit % (nt_out - 1) != 0 {
        return Err(TsonnError::Config(format!(
            "nt_per_unit {nt_per_unit} must be divisible by nt_out-1 = {}",
            nt_out - 1
        )));
    }
    let n = nx - 1; // unique periodic unknowns
    let h = 2.0 / n as f64;
    let dt = 1.0 / nt_per_unit as f64;
    let alpha = diffusivity * dt / (2.0 * h * h);
    let lhs = CyclicTridiag::new(n, -alpha, 1.0 + 2.0 * alpha);

    let xs_unique: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();
    let mut u: Vec<f64> = xs_unique.iter().map(|&x| allen_cahn_initial_condition(x)).collect();
    let f = |u: f64| reaction * (u - u * u * u);
    let mut f_prev: Vec<f64> = u.iter().map(|&v| f(v)).collect();

    let save_every = nt_per_unit / (nt_out - 1);
    let mut values = Array2::zeros((nx * nt_out, 1));
    let save_slice = |u: &[f64], k: usize, values: &mut Array2<f64>| {
        for i in 0..n {
            values[(k * nx + i, 0)] = u[i];
        }
        values[(k * nx + n, 0)] = u[0];
    };
    save_slice(&u, 0, &mut values);

    let lap = |u: &[f64], i: usize| {
        let left = u[(i + n - 1) % n];
        let right = u[(i + 1) % n];
        (right - 2.0 * u[i] + left) / (h * h)
    };

    let mut max_excess = 0.0f64;
    for step in 1..=nt_per_unit {
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let fi = f(u[i]);
            let reaction_term = if step == 1 {
                fi
            } else {
                1.5 * fi - 0.5 * f_prev[i]
            };
            rhs[i] = u[i] + 0.5 * diffusivity * dt * lap(&u, i) + dt * reaction_term;
            f_prev[i] = fi;
        }
        u = lhs.solve(&rhs);
        let umax = u.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if !umax.is_finite() || umax > 1.0 + 1e-6 {
            return Err(TsonnError::Instability(format!(
                "max |u| = {umax:.9} exceeded 1 + 1e-6 at step {step}; reduce dt"
            )));
        }
        max_excess = max_excess.max(umax - 1.0);
        if step % save_every == 0 {
            save_slice(&u, step / save_every, &mut values);
        }
    }

    let xs: Vec<f64> = (0..nx).map(|i| -1.0 + i as f64 * h).collect();
    let ts: Vec<f64> = (0..nt_out).map(|k| k as f64 / (nt_out - 1) as f64).collect();
    let mut coords = Array2::zeros((nx * nt_out, 2));
    for (k, &t) in ts.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            coords[(k * nx + i, 0)] = x;
            coords[(k * nx + i, 1)] = t;
        }
    }
    Ok(GridField {
        coords,
        values,
        axes: vec![xs, ts],
        components: vec!["u".into()],
        residual_norm: max_excess.max(0.0),
        iterations: nt_per_unit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_tridiag_matches_dense_solve() {
        let n = 7;
        let (a, b) = (-0.3, 1.7);
        let solver = CyclicTridiag::new(n, a, b);
        let d: Vec<f64> = (0..n).map(|i| (i as f64 * 0.77).sin()).collect();
        let x = solver.solve(&d);
        // Multiply back through the cyclic matrix.
        for i in 0..n {
            let left = x[(i + n - 1) % n];
            let right = x[(i + 1) % n];
            let got = a * left + b * x[i] + a * right;
            assert!((got - d[i]).abs() < 1e-12, "row {i}: {got} vs {}", d[i]);
        }
    }

    #[test]
    fn initial_slice_is_exact_and_maximum_principle_holds() {
        let field = allen_cahn_fd_params(1e-4, 5.0, 129, 2000, 11).unwrap();
        let nx = 129;
        for i in 0..nx {
            let x = field.coords[(i, 0)];
            assert_eq!(field.values[(i, 0)], allen_cahn_initial_condition(x));
        }
        let max_u = field.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(max_u <= 1.0 + 1e-9, "maximum principle violated: {max_u}");
    }

    #[test]
    fn halving_dt_changes_final_slice_below_1e_minus_5() {
        let coarse = allen_cahn_fd_params(1e-4, 5.0, 257, 4000, 3).unwrap();
        let fine = allen_cahn_fd_params(1e-4, 5.0, 257, 8000, 3).unwrap();
        let nx = 257;
        let base = 2 * nx; // final slice offset
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..nx {
            let d = coarse.values[(base + i, 0)] - fine.values[(base + i, 0)];
            num += d * d;
            den += fine.values[(base + i, 0)].powi(2);
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-5, "self-convergence failure: {rel}");
    }
}
