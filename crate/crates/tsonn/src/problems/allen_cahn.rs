//! Allen-Cahn equation on `[-1, 1] x [0, 1]` with periodic boundary and
//! `u(x, 0) = x^2 cos(pi x)`. Network inputs are `(x, t)`.

use super::{BcKind, BoundaryGroup, PointSet, ProblemSpec};
use crate::error::{Result, TsonnError};
use crate::net::JetBatch;
use crate::real::{c, Real};
use ndarray::Array2;
use std::f64::consts::PI;

pub fn allen_cahn_initial_condition(x: f64) -> f64 {
    x * x * (PI * x).cos()
}

/// `N[u] = -(u_t - gamma u_xx + rho u^3 - rho u)`.
pub(super) fn residual<T: Real>(
    diffusivity: f64,
    reaction: f64,
    jets: &JetBatch<T>,
    out: &mut Array2<T>,
) {
    let gamma = c::<T>(diffusivity);
    let rho = c::<T>(reaction);
    for i in 0..out.nrows() {
        let u = jets.value[(i, 0)];
        let ut = jets.grad[(i, 0, 1)];
        let uxx = jets.hess[(i, 0, 0, 0)];
        out[(i, 0)] = -(ut - gamma * uxx + rho * (u * u * u - u));
    }
}

pub(super) fn residual_vjp<T: Real>(
    diffusivity: f64,
    reaction: f64,
    jets: &JetBatch<T>,
    cot: &Array2<T>,
    jet_cot: &mut JetBatch<T>,
) {
    let gamma = c::<T>(diffusivity);
    let rho = c::<T>(reaction);
    let three = c::<T>(3.0);
    for i in 0..cot.nrows() {
        let u = jets.value[(i, 0)];
        let w = cot[(i, 0)];
        jet_cot.value[(i, 0)] += -w * rho * (three * u * u - T::one());
        jet_cot.grad[(i, 0, 1)] += -w;
        jet_cot.hess[(i, 0, 0, 0)] += w * gamma;
    }
}

/// Periodic matching of `u` and `u_x` across pairs `(2p, 2p+1)`.
pub(super) fn periodic_residual<T: Real>(jets: &JetBatch<T>, out: &mut Array2<T>) {
    for p in 0..out.nrows() {
        let (a, b) = (2 * p, 2 * p + 1);
        out[(p, 0)] = jets.value[(a, 0)] - jets.value[(b, 0)];
        out[(p, 1)] = jets.grad[(a, 0, 0)] - jets.grad[(b, 0, 0)];
    }
}

pub(super) fn periodic_vjp<T: Real>(cot: &Array2<T>, jet_cot: &mut JetBatch<T>) {
    for p in 0..cot.nrows() {
        let (a, b) = (2 * p, 2 * p + 1);
        jet_cot.value[(a, 0)] += cot[(p, 0)];
        jet_cot.value[(b, 0)] -= cot[(p, 0)];
        jet_cot.grad[(a, 0, 0)] += cot[(p, 1)];
        jet_cot.grad[(b, 0, 0)] -= cot[(p, 1)];
    }
}

/// `count` initial points uniform over `[-1, 1]` at `t = 0`, endpoints
/// included.
pub(super) fn uniform_initial(count: usize) -> Result<Array2<f64>> {
    if count < 2 {
        return Err(TsonnError::Sampling("need at least 2 initial points".into()));
    }
    let mut pts = Array2::zeros((count, 2));
    for i in 0..count {
        pts[(i, 0)] = -1.0 + 2.0 * i as f64 / (count - 1) as f64;
    }
    Ok(pts)
}

/// `count` boundary points as `count / 2` pairs `(-1, t), (1, t)` with `t`
/// uniform over `[0, 1]`.
pub(super) fn uniform_boundary(count: usize) -> Result<Vec<BoundaryGroup>> {
    let pairs = count / 2;
    if pairs < 2 {
        return Err(TsonnError::Sampling("need at least 4 boundary points".into()));
    }
    let mut pts = Array2::zeros((2 * pairs, 2));
    for p in 0..pairs {
        let t = p as f64 / (pairs - 1) as f64;
        pts[(2 * p, 0)] = -1.0;
        pts[(2 * p, 1)] = t;
        pts[(2 * p + 1, 0)] = 1.0;
        pts[(2 * p + 1, 1)] = t;
    }
    Ok(vec![BoundaryGroup {
        kind: BcKind::PeriodicPairs,
        points: pts,
        normals: None,
    }])
}

/// Space-time tensor mesh `dims = [nx, nt]`: interior nodes exclude the
/// periodic seam and the initial slice.
pub(super) fn mesh_points(_problem: &ProblemSpec, dims: &[usize], seed: u64) -> Result<PointSet> {
    let [nx, nt] = dims else {
        return Err(TsonnError::Sampling(format!(
            "space-time mesh needs [nx, nt], got {dims:?}"
        )));
    };
    let (nx, nt) = (*nx, *nt);
    if nx < 3 || nt < 2 {
        return Err(TsonnError::Sampling("space-time mesh too small".into()));
    }
    let mut interior = Array2::zeros(((nx - 2) * (nt - 1), 2));
    let mut row = 0;
    for it in 1..nt {
        let t = it as f64 / (nt - 1) as f64;
        for ix in 1..nx - 1 {
            interior[(row, 0)] = -1.0 + 2.0 * ix as f64 / (nx - 1) as f64;
            interior[(row, 1)] = t;
            row += 1;
        }
    }
    Ok(PointSet {
        interior,
        boundary: uniform_boundary(2 * nt)?,
        initial: uniform_initial(nx)?,
        seed,
        sampling: super::Sampling::Mesh(dims.to_vec()),
    })
}

/// Oracle reference restricted to a `grid = [nx, nt]` evaluation mesh.
/// The integration runs on a finer spatial grid whose nodes contain the
/// evaluation nodes.
pub(super) fn reference(
    diffusivity: f64,
    reaction: f64,
    grid: &[usize],
) -> Result<super::ReferenceField> {
    let [nx, nt] = grid else {
        return Err(TsonnError::Reference(format!(
            "space-time reference grid needs [nx, nt], got {grid:?}"
        )));
    };
    let (nx, nt) = (*nx, *nt);
    if nx < 2 || nt < 2 {
        return Err(TsonnError::Reference("reference grid too small".into()));
    }
    // Refine space until the fine grid both contains the evaluation nodes
    // and resolves the interface width ~ sqrt(2 gamma / rho).
    let mut refine = 1usize;
    let width = (2.0 * diffusivity / reaction).sqrt();
    while 2.0 / ((nx - 1) * refine) as f64 > 0.25 * width && refine < 64 {
        refine *= 2;
    }
    let nx_fine = (nx - 1) * refine + 1;
    let field = crate::oracle::allen_cahn_fd_params(diffusivity, reaction, nx_fine, 10_000, nt)?;

    let mut coords = Array2::zeros((nx * nt, 2));
    let mut values = Array2::zeros((nx * nt, 1));
    let xs: Vec<f64> = (0..nx).map(|i| -1.0 + 2.0 * i as f64 / (nx - 1) as f64).collect();
    let ts: Vec<f64> = (0..nt).map(|k| k as f64 / (nt - 1) as f64).collect();
    let mut row = 0;
    for (k, &t) in ts.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            coords[(row, 0)] = x;
            coords[(row, 1)] = t;
            // field rows are (x fastest) over the fine grid
            values[(row, 0)] = field.values[(k * nx_fine + i * refine, 0)];
            row += 1;
        }
    }
    Ok(super::ReferenceField {
        coords,
        values,
        axes: vec![xs, ts],
        components: vec!["u".into()],
        provenance: super::Provenance::Oracle,
    })
}
