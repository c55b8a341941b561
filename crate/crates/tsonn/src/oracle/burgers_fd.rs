//! Pseudo-time relaxation of the steady Burgers equation with central
//! differences, marched from `u0(x) = -x` until the residual drops below
//! the requested tolerance.

use super::GridField;
use crate::error::{Result, TsonnError};

/// Explicit stability estimate `1 / (2 nu / h^2 + u_max / h)` with
/// `u_max = 1` (the boundary data scale).
pub fn burgers_explicit_stability_bound(nu: f64, n_nodes: usize) -> f64 {
    let h = 2.0 / (n_nodes - 1) as f64;
    1.0 / (2.0 * nu / (h * h) + 1.0 / h)
}

/// Steady solution on `n_nodes` uniform nodes over `[-1, 1]`.
///
/// `dtau` must sit below the advection-diffusion stability bound (the
/// error message reports it). Growth beyond 10x the boundary scale aborts
/// with the same bound.
pub fn burgers_steady_fd(nu: f64, n_nodes: usize, dtau: f64, tol: f64) -> Result<GridField> {
    if n_nodes < 3 {
        return Err(TsonnError::Config("need at least 3 nodes".into()));
    }
    if nu <= 0.0 || dtau <= 0.0 || tol <= 0.0 {
        return Err(TsonnError::Config("nu, dtau, tol must be positive".into()));
    }
    let bound = burgers_explicit_stability_bound(nu, n_nodes);
    if dtau >= bound {
        return Err(TsonnError::Instability(format!(
            "dtau {dtau:.3e} at or above the explicit stability bound {bound:.3e}"
        )));
    }

    let n = n_nodes;
    let h = 2.0 / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();
    let mut u: Vec<f64> = xs.iter().map(|&x| -x).collect();
    let mut resid = vec![0.0; n];

    let max_steps = 50_000_000usize;
    let mut norm = f64::INFINITY;
    let mut steps = 0;
    while steps < max_steps {
        norm = 0.0f64;
        for i in 1..n - 1 {
            let ux = (u[i + 1] - u[i - 1]) / (2.0 * h);
            let uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            let r = -u[i] * ux + nu * uxx;
            resid[i] = r;
            norm = norm.max(r.abs());
        }
        if norm < tol {
            break;
        }
        let mut umax = 0.0f64;
        for i in 1..n - 1 {
            u[i] += dtau * resid[i];
            umax = umax.max(u[i].abs());
        }
        if !umax.is_finite() || umax > 10.0 {
            return Err(TsonnError::Instability(format!(
                "growth detected (max |u| = {umax:.3e}); stability bound is {bound:.3e}"
            )));
        }
        steps += 1;
    }
    if norm >= tol {
        return Err(TsonnError::NoConvergence(format!(
            "residual {norm:.3e} after {steps} steps (tol {tol:.1e})"
        )));
    }

    let mut coords = ndarray::Array2::zeros((n, 1));
    let mut values = ndarray::Array2::zeros((n, 1));
    for i in 0..n {
        coords[(i, 0)] = xs[i];
        values[(i, 0)] = u[i];
    }
    Ok(GridField {
        coords,
        values,
        axes: vec![xs],
        components: vec!["u".into()],
        residual_norm: norm,
        iterations: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{burgers_closed_form, burgers_closed_form_constant};

    #[test]
    fn closed_form_constant_satisfies_defining_equation() {
        let nu = 0.05;
        let c = burgers_closed_form_constant(nu);
        assert!((c * (c / (2.0 * nu)).tanh() - 1.0).abs() < 1e-12);
        assert!((c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn converged_field_is_odd_and_matches_closed_form() {
        let nu = 0.05;
        let n = 500;
        let dtau = 0.9 * burgers_explicit_stability_bound(nu, n);
        let field = burgers_steady_fd(nu, n, dtau, 1e-10).unwrap();
        // u(0) = 0 by odd symmetry (n odd would place a node at 0; with
        // n = 500 check the two middle nodes are antisymmetric).
        let mid = field.values[(249, 0)] + field.values[(250, 0)];
        assert!(mid.abs() < 1e-9, "odd symmetry violated: {mid}");
        let mut max_err = 0.0f64;
        for i in 0..n {
            let x = field.coords[(i, 0)];
            max_err = max_err.max((field.values[(i, 0)] - burgers_closed_form(nu, x)).abs());
        }
        assert!(max_err < 1e-3, "max error vs closed form {max_err}");
    }

    #[test]
    fn refinement_is_second_order() {
        let nu = 0.05;
        let err_at = |n: usize| {
            let dtau = 0.9 * burgers_explicit_stability_bound(nu, n);
            let field = burgers_steady_fd(nu, n, dtau, 1e-10).unwrap();
            let mut e = 0.0f64;
            for i in 0..n {
                let x = field.coords[(i, 0)];
                e = e.max((field.values[(i, 0)] - burgers_closed_form(nu, x)).abs());
            }
            e
        };
        let (e1, e2) = (err_at(250), err_at(500));
        let ratio = e1 / e2;
        assert!((3.0..6.0).contains(&ratio), "refinement ratio {ratio}");
    }

    #[test]
    fn unstable_dtau_rejected_up_front() {
        let nu = 0.05;
        let bound = burgers_explicit_stability_bound(nu, 500);
        assert!(burgers_steady_fd(nu, 500, 2.0 * bound, 1e-8).is_err());
    }
}
