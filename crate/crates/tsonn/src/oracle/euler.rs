//! Raw explicit-Euler pseudo-time trajectories on a fixed grid, used as
//! the reference side of trainer equivalence checks. Divergence is a
//! legitimate output here: no growth guard is applied.

use crate::error::{Result, TsonnError};
use crate::problems::{ProblemKind, ProblemSpec};
use ndarray::Array1;

/// Marches `u <- u + dtau * N[u]` for `steps` steps and returns every
/// state including the initial one.
///
/// The grid is uniform over the problem domain with `initial.len()` nodes;
/// boundary nodes are held at their initial values. Supported for the
/// steady Burgers problem.
pub fn explicit_euler_trajectory(
    problem: &ProblemSpec,
    initial: &Array1<f64>,
    dtau: f64,
    steps: usize,
) -> Result<Vec<Array1<f64>>> {
    let ProblemKind::BurgersSteady { nu } = problem.kind else {
        return Err(TsonnError::Unsupported(format!(
            "explicit Euler trajectories are only provided for {}, got {}",
            crate::problems::ProblemId::BurgersSteady,
            problem.id()
        )));
    };
    let n = initial.len();
    if n < 3 {
        return Err(TsonnError::Config("need at least 3 nodes".into()));
    }
    let h = 2.0 / (n - 1) as f64;

    let mut states = Vec::with_capacity(steps + 1);
    let mut u = initial.clone();
    states.push(u.clone());
    for _ in 0..steps {
        let mut next = u.clone();
        for i in 1..n - 1 {
            let ux = (u[i + 1] - u[i - 1]) / (2.0 * h);
            let uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            next[i] = u[i] + dtau * (-u[i] * ux + nu * uxx);
        }
        u = next;
        states.push(u.clone());
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_stays_constant() {
        let problem = ProblemSpec::burgers_steady();
        let u0 = Array1::from_elem(11, 0.3);
        let states = explicit_euler_trajectory(&problem, &u0, 0.01, 5).unwrap();
        for s in &states {
            for &v in s.iter() {
                assert_eq!(v, 0.3);
            }
        }
    }

    #[test]
    fn single_step_adds_dtau_times_residual() {
        let problem = ProblemSpec::burgers_steady();
        let n = 21;
        let h = 2.0 / (n - 1) as f64;
        let u0 = Array1::from_shape_fn(n, |i| (-1.0 + i as f64 * h).sin());
        let dtau = 1e-3;
        let states = explicit_euler_trajectory(&problem, &u0, dtau, 1).unwrap();
        for i in 1..n - 1 {
            let ux = (u0[i + 1] - u0[i - 1]) / (2.0 * h);
            let uxx = (u0[i + 1] - 2.0 * u0[i] + u0[i - 1]) / (h * h);
            let want = u0[i] + dtau * (-u0[i] * ux + 0.05 * uxx);
            assert_eq!(states[1][i], want);
        }
        assert_eq!(states[1][0], u0[0]);
        assert_eq!(states[1][n - 1], u0[n - 1]);
    }

    #[test]
    fn above_bound_blows_up_within_200_steps() {
        let problem = ProblemSpec::burgers_steady();
        let n = 500;
        let h = 2.0 / (n - 1) as f64;
        let u0 = Array1::from_shape_fn(n, |i| 1.0 - 2.0 * i as f64 / (n - 1) as f64);
        let bound = crate::oracle::burgers_explicit_stability_bound(0.05, n);
        let states = explicit_euler_trajectory(&problem, &u0, 3.0 * bound, 200).unwrap();
        let _ = h;
        let max_final = states
            .iter()
            .map(|s| s.iter().fold(0.0f64, |a, &v| a.max(v.abs())))
            .fold(0.0f64, f64::max);
        assert!(max_final > 1e3 || !max_final.is_finite());
    }
}
