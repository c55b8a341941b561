//! Potential flow past a cylinder: Laplace equation on an annulus with a
//! no-penetration wall and a free-stream far field.

use super::{BcKind, BoundaryGroup, PointSet, ProblemSpec};
use crate::error::{Result, TsonnError};
use crate::net::{all_pairs, JetBatch};
use crate::real::{c, Real};
use ndarray::Array2;
use std::f64::consts::PI;

/// Free-stream velocity field around a cylinder of radius `r` (requires
/// `(x, y)` away from the origin).
pub fn analytic_cylinder_velocity(x: f64, y: f64, v_inf: f64, r: f64) -> Result<(f64, f64)> {
    let s = x * x + y * y;
    if s == 0.0 {
        return Err(TsonnError::NonFiniteInput(
            "cylinder velocity is undefined at the origin".into(),
        ));
    }
    let u = v_inf * (1.0 - r * r * (x * x - y * y) / (s * s));
    let v = -v_inf * 2.0 * r * r * x * y / (s * s);
    Ok((u, v))
}

/// Exact potential-solution jets (value, gradient, Hessian) at `points`;
/// useful for consistency checks against the residual operators.
pub fn cylinder_potential_jets(
    points: &Array2<f64>,
    v_inf: f64,
    r: f64,
) -> Result<JetBatch<f64>> {
    let n = points.nrows();
    let mut jets = JetBatch::zeros(n, 1, 2, 2, all_pairs(2));
    let r2 = r * r;
    for i in 0..n {
        let (x, y) = (points[(i, 0)], points[(i, 1)]);
        let s = x * x + y * y;
        if s == 0.0 {
            return Err(TsonnError::NonFiniteInput("origin excluded".into()));
        }
        jets.value[(i, 0)] = v_inf * x * (1.0 + r2 / s);
        let (u, v) = analytic_cylinder_velocity(x, y, v_inf, r)?;
        jets.grad[(i, 0, 0)] = u;
        jets.grad[(i, 0, 1)] = v;
        let s3 = s * s * s;
        let phi_xx = v_inf * r2 * (2.0 * x * x * x - 6.0 * x * y * y) / s3;
        let phi_xy = v_inf * r2 * (6.0 * x * x * y - 2.0 * y * y * y) / s3;
        jets.hess[(i, 0, 0, 0)] = phi_xx;
        jets.hess[(i, 0, 0, 1)] = phi_xy;
        jets.hess[(i, 0, 1, 0)] = phi_xy;
        jets.hess[(i, 0, 1, 1)] = -phi_xx;
    }
    Ok(jets)
}

/// `N[phi] = phi_xx + phi_yy`.
pub(super) fn residual<T: Real>(jets: &JetBatch<T>, out: &mut Array2<T>) {
    for i in 0..out.nrows() {
        out[(i, 0)] = jets.hess[(i, 0, 0, 0)] + jets.hess[(i, 0, 1, 1)];
    }
}

pub(super) fn residual_vjp<T: Real>(
    _jets: &JetBatch<T>,
    cot: &Array2<T>,
    jet_cot: &mut JetBatch<T>,
) {
    for i in 0..cot.nrows() {
        jet_cot.hess[(i, 0, 0, 0)] += cot[(i, 0)];
        jet_cot.hess[(i, 0, 1, 1)] += cot[(i, 0)];
    }
}

pub(super) fn far_field_residual<T: Real>(v_inf: f64, jets: &JetBatch<T>, out: &mut Array2<T>) {
    for i in 0..out.nrows() {
        out[(i, 0)] = jets.grad[(i, 0, 0)] - c::<T>(v_inf);
        out[(i, 1)] = jets.grad[(i, 0, 1)];
    }
}

pub(super) fn far_field_vjp<T: Real>(cot: &Array2<T>, jet_cot: &mut JetBatch<T>) {
    for i in 0..cot.nrows() {
        jet_cot.grad[(i, 0, 0)] += cot[(i, 0)];
        jet_cot.grad[(i, 0, 1)] += cot[(i, 1)];
    }
}

pub(super) fn wall_residual<T: Real>(
    normals: &Array2<f64>,
    jets: &JetBatch<T>,
    out: &mut Array2<T>,
) {
    for i in 0..out.nrows() {
        out[(i, 0)] = jets.grad[(i, 0, 0)] * c::<T>(normals[(i, 0)])
            + jets.grad[(i, 0, 1)] * c::<T>(normals[(i, 1)]);
    }
}

pub(super) fn wall_vjp<T: Real>(normals: &Array2<f64>, cot: &Array2<T>, jet_cot: &mut JetBatch<T>) {
    for i in 0..cot.nrows() {
        jet_cot.grad[(i, 0, 0)] += cot[(i, 0)] * c::<T>(normals[(i, 0)]);
        jet_cot.grad[(i, 0, 1)] += cot[(i, 0)] * c::<T>(normals[(i, 1)]);
    }
}

/// O-mesh nodes: `dims = [n_theta, n_r]` interior rings between the wall
/// and far rings, mapped to cartesian coordinates.
pub(super) fn mesh_points(problem: &ProblemSpec, dims: &[usize], seed: u64) -> Result<PointSet> {
    let super::ProblemKind::LaplaceCylinder { r_wall, r_far, .. } = problem.kind else {
        unreachable!()
    };
    let [n_theta, n_r] = dims else {
        return Err(TsonnError::Sampling(format!(
            "annulus mesh needs [n_theta, n_r], got {dims:?}"
        )));
    };
    let (n_theta, n_r) = (*n_theta, *n_r);
    if n_theta < 3 || n_r < 1 {
        return Err(TsonnError::Sampling("annulus mesh too small".into()));
    }
    let dr = (r_far - r_wall) / (n_r + 1) as f64;
    let thetas: Vec<f64> = (0..n_theta).map(|j| 2.0 * PI * j as f64 / n_theta as f64).collect();

    let mut interior = Array2::zeros((n_theta * n_r, 2));
    let mut row = 0;
    for i in 1..=n_r {
        let r = r_wall + i as f64 * dr;
        for &theta in &thetas {
            interior[(row, 0)] = r * theta.cos();
            interior[(row, 1)] = r * theta.sin();
            row += 1;
        }
    }

    let ring = |radius: f64| -> (Array2<f64>, Array2<f64>) {
        let mut pts = Array2::zeros((n_theta, 2));
        let mut normals = Array2::zeros((n_theta, 2));
        for (j, &theta) in thetas.iter().enumerate() {
            pts[(j, 0)] = radius * theta.cos();
            pts[(j, 1)] = radius * theta.sin();
            normals[(j, 0)] = theta.cos();
            normals[(j, 1)] = theta.sin();
        }
        (pts, normals)
    };
    let (wall_pts, wall_normals) = ring(r_wall);
    let (far_pts, _) = ring(r_far);

    Ok(PointSet {
        interior,
        boundary: vec![
            BoundaryGroup {
                kind: BcKind::SlipWall,
                points: wall_pts,
                normals: Some(wall_normals),
            },
            BoundaryGroup {
                kind: BcKind::FarField,
                points: far_pts,
                normals: None,
            },
        ],
        initial: Array2::zeros((0, 2)),
        seed,
        sampling: super::Sampling::Mesh(dims.to_vec()),
    })
}

/// Evenly spaced wall and far-field rings for the random strategy.
pub(super) fn uniform_boundary(problem: &ProblemSpec, count: usize) -> Result<Vec<BoundaryGroup>> {
    let super::ProblemKind::LaplaceCylinder { r_wall, r_far, .. } = problem.kind else {
        unreachable!()
    };
    let per_ring = count / 2;
    if per_ring < 3 {
        return Err(TsonnError::Sampling("need at least 6 boundary points".into()));
    }
    let ring = |radius: f64, n: usize| {
        let mut pts = Array2::zeros((n, 2));
        let mut normals = Array2::zeros((n, 2));
        for j in 0..n {
            let theta = 2.0 * PI * j as f64 / n as f64;
            pts[(j, 0)] = radius * theta.cos();
            pts[(j, 1)] = radius * theta.sin();
            normals[(j, 0)] = theta.cos();
            normals[(j, 1)] = theta.sin();
        }
        (pts, normals)
    };
    let (wall_pts, wall_normals) = ring(r_wall, per_ring);
    let (far_pts, _) = ring(r_far, count - per_ring);
    Ok(vec![
        BoundaryGroup {
            kind: BcKind::SlipWall,
            points: wall_pts,
            normals: Some(wall_normals),
        },
        BoundaryGroup {
            kind: BcKind::FarField,
            points: far_pts,
            normals: None,
        },
    ])
}

/// Analytic reference velocities on the O-mesh nodes (all rings included).
pub(super) fn reference(
    v_inf: f64,
    r_wall: f64,
    r_far: f64,
    grid: &[usize],
) -> Result<super::ReferenceField> {
    let [n_theta, n_r] = grid else {
        return Err(TsonnError::Reference(format!(
            "annulus reference grid needs [n_theta, n_r], got {grid:?}"
        )));
    };
    let (n_theta, n_r) = (*n_theta, *n_r);
    let dr = (r_far - r_wall) / (n_r + 1) as f64;
    let n = n_theta * (n_r + 2);
    let mut coords = Array2::zeros((n, 2));
    let mut values = Array2::zeros((n, 2));
    let mut row = 0;
    for i in 0..=(n_r + 1) {
        let r = r_wall + i as f64 * dr;
        for j in 0..n_theta {
            let theta = 2.0 * PI * j as f64 / n_theta as f64;
            let (x, y) = (r * theta.cos(), r * theta.sin());
            let (u, v) = analytic_cylinder_velocity(x, y, v_inf, r_wall)?;
            coords[(row, 0)] = x;
            coords[(row, 1)] = y;
            values[(row, 0)] = u;
            values[(row, 1)] = v;
            row += 1;
        }
    }
    Ok(super::ReferenceField {
        coords,
        values,
        axes: Vec::new(),
        components: vec!["u".into(), "v".into()],
        provenance: super::Provenance::Analytic,
    })
}
