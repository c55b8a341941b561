//! Steady viscous Burgers equation on `[-1, 1]` with `u(-1) = 1`,
//! `u(1) = -1`.

use super::{BcKind, BoundaryGroup, PointSet, ProblemSpec};
use crate::error::{Result, TsonnError};
use crate::net::JetBatch;
use crate::real::{c, Real};
use ndarray::{array, Array2};

/// Root `c` of `c * tanh(c / (2 nu)) = 1`, the amplitude of the closed-form
/// solution.
pub fn burgers_closed_form_constant(nu: f64) -> f64 {
    let f = |cc: f64| cc * (cc / (2.0 * nu)).tanh() - 1.0;
    let (mut lo, mut hi) = (0.5, 2.0);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form solution `u(x) = -c tanh(c x / (2 nu))`.
pub fn burgers_closed_form(nu: f64, x: f64) -> f64 {
    let cc = burgers_closed_form_constant(nu);
    -cc * (cc * x / (2.0 * nu)).tanh()
}

/// `N[u] = -u u_x + nu u_xx`.
pub(super) fn residual<T: Real>(nu: f64, jets: &JetBatch<T>, out: &mut Array2<T>) {
    let nu = c::<T>(nu);
    for i in 0..out.nrows() {
        let u = jets.value[(i, 0)];
        let ux = jets.grad[(i, 0, 0)];
        let uxx = jets.hess[(i, 0, 0, 0)];
        out[(i, 0)] = -u * ux + nu * uxx;
    }
}

pub(super) fn residual_vjp<T: Real>(
    nu: f64,
    jets: &JetBatch<T>,
    cot: &Array2<T>,
    jet_cot: &mut JetBatch<T>,
) {
    let nu = c::<T>(nu);
    for i in 0..cot.nrows() {
        let u = jets.value[(i, 0)];
        let ux = jets.grad[(i, 0, 0)];
        let w = cot[(i, 0)];
        jet_cot.value[(i, 0)] += -w * ux;
        jet_cot.grad[(i, 0, 0)] += -w * u;
        jet_cot.hess[(i, 0, 0, 0)] += w * nu;
    }
}

pub(super) fn boundary_groups() -> Vec<BoundaryGroup> {
    vec![BoundaryGroup {
        kind: BcKind::Dirichlet {
            targets: array![[1.0], [-1.0]],
        },
        points: array![[-1.0], [1.0]],
        normals: None,
    }]
}

/// Uniform mesh of `dims = [n]` nodes including the endpoints.
pub(super) fn mesh_points(_problem: &ProblemSpec, dims: &[usize], seed: u64) -> Result<PointSet> {
    let [n] = dims else {
        return Err(TsonnError::Sampling(format!(
            "interval mesh needs [n], got {dims:?}"
        )));
    };
    let n = *n;
    if n < 3 {
        return Err(TsonnError::Sampling("interval mesh needs n >= 3".into()));
    }
    let h = 2.0 / (n - 1) as f64;
    let mut interior = Array2::zeros((n - 2, 1));
    for i in 1..n - 1 {
        interior[(i - 1, 0)] = -1.0 + i as f64 * h;
    }
    Ok(PointSet {
        interior,
        boundary: boundary_groups(),
        initial: Array2::zeros((0, 1)),
        seed,
        sampling: super::Sampling::Mesh(dims.to_vec()),
    })
}

/// Closed-form reference on a uniform mesh of `grid = [n]` nodes.
pub(super) fn reference(nu: f64, grid: &[usize]) -> Result<super::ReferenceField> {
    let [n] = grid else {
        return Err(TsonnError::Reference(format!(
            "interval reference grid needs [n], got {grid:?}"
        )));
    };
    let n = *n;
    let h = 2.0 / (n - 1) as f64;
    let mut coords = Array2::zeros((n, 1));
    let mut values = Array2::zeros((n, 1));
    let axis: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();
    for (i, &x) in axis.iter().enumerate() {
        coords[(i, 0)] = x;
        values[(i, 0)] = burgers_closed_form(nu, x);
    }
    Ok(super::ReferenceField {
        coords,
        values,
        axes: vec![axis],
        components: vec!["u".into()],
        provenance: super::Provenance::Analytic,
    })
}
