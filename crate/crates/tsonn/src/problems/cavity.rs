//! Lid-driven cavity: steady incompressible Navier-Stokes on the unit
//! square, state `(u, v, p)`, artificial compressibility for the
//! continuity component.

use super::{BcKind, BoundaryGroup, PointSet, ProblemSpec};
use crate::error::{Result, TsonnError};
use crate::net::JetBatch;
use crate::real::{c, Real};
use ndarray::Array2;

/// Momentum components are the negated steady residual, the continuity
/// component is `-beta (u_x + v_y)`:
///
/// ```text
/// N_u = -(u u_x + v u_y + p_x - (u_xx + u_yy) / Re)
/// N_v = -(u v_x + v v_y + p_y - (v_xx + v_yy) / Re)
/// N_p = -beta (u_x + v_y)
/// ```
pub(super) fn residual<T: Real>(re: f64, beta: f64, jets: &JetBatch<T>, out: &mut Array2<T>) {
    let inv_re = c::<T>(1.0 / re);
    let beta = c::<T>(beta);
    for i in 0..out.nrows() {
        let u = jets.value[(i, 0)];
        let v = jets.value[(i, 1)];
        let ux = jets.grad[(i, 0, 0)];
        let uy = jets.grad[(i, 0, 1)];
        let vx = jets.grad[(i, 1, 0)];
        let vy = jets.grad[(i, 1, 1)];
        let px = jets.grad[(i, 2, 0)];
        let py = jets.grad[(i, 2, 1)];
        let lap_u = jets.hess[(i, 0, 0, 0)] + jets.hess[(i, 0, 1, 1)];
        let lap_v = jets.hess[(i, 1, 0, 0)] + jets.hess[(i, 1, 1, 1)];
        out[(i, 0)] = -(u * ux + v * uy + px - lap_u * inv_re);
        out[(i, 1)] = -(u * vx + v * vy + py - lap_v * inv_re);
        out[(i, 2)] = -beta * (ux + vy);
    }
}

pub(super) fn residual_vjp<T: Real>(
    re: f64,
    beta: f64,
    jets: &JetBatch<T>,
    cot: &Array2<T>,
    jet_cot: &mut JetBatch<T>,
) {
    let inv_re = c::<T>(1.0 / re);
    let beta = c::<T>(beta);
    for i in 0..cot.nrows() {
        let u = jets.value[(i, 0)];
        let v = jets.value[(i, 1)];
        let ux = jets.grad[(i, 0, 0)];
        let uy = jets.grad[(i, 0, 1)];
        let vx = jets.grad[(i, 1, 0)];
        let vy = jets.grad[(i, 1, 1)];
        let (w0, w1, w2) = (cot[(i, 0)], cot[(i, 1)], cot[(i, 2)]);

        jet_cot.value[(i, 0)] += -(w0 * ux + w1 * vx);
        jet_cot.value[(i, 1)] += -(w0 * uy + w1 * vy);

        jet_cot.grad[(i, 0, 0)] += -(w0 * u) - w2 * beta;
        jet_cot.grad[(i, 0, 1)] += -(w0 * v);
        jet_cot.grad[(i, 1, 0)] += -(w1 * u);
        jet_cot.grad[(i, 1, 1)] += -(w1 * v) - w2 * beta;
        jet_cot.grad[(i, 2, 0)] += -w0;
        jet_cot.grad[(i, 2, 1)] += -w1;

        jet_cot.hess[(i, 0, 0, 0)] += w0 * inv_re;
        jet_cot.hess[(i, 0, 1, 1)] += w0 * inv_re;
        jet_cot.hess[(i, 1, 0, 0)] += w1 * inv_re;
        jet_cot.hess[(i, 1, 1, 1)] += w1 * inv_re;
    }
}

/// Boundary points evenly spaced along the perimeter, offset half a cell so
/// no point lands exactly on a corner. The lid group is the top edge.
pub(super) fn uniform_boundary(count: usize) -> Result<Vec<BoundaryGroup>> {
    if count < 8 {
        return Err(TsonnError::Sampling("need at least 8 boundary points".into()));
    }
    let mut lid = Vec::new();
    let mut walls = Vec::new();
    for i in 0..count {
        let s = 4.0 * (i as f64 + 0.5) / count as f64;
        let (x, y) = perimeter_point(s);
        if y == 1.0 {
            lid.push([x, y]);
        } else {
            walls.push([x, y]);
        }
    }
    Ok(build_groups(lid, walls))
}

fn perimeter_point(s: f64) -> (f64, f64) {
    if s < 1.0 {
        (s, 0.0)
    } else if s < 2.0 {
        (1.0, s - 1.0)
    } else if s < 3.0 {
        (3.0 - s, 1.0)
    } else {
        (0.0, 4.0 - s)
    }
}

fn build_groups(lid: Vec<[f64; 2]>, walls: Vec<[f64; 2]>) -> Vec<BoundaryGroup> {
    let to_array = |rows: &[[f64; 2]]| {
        let mut a = Array2::zeros((rows.len(), 2));
        for (i, r) in rows.iter().enumerate() {
            a[(i, 0)] = r[0];
            a[(i, 1)] = r[1];
        }
        a
    };
    let lid_targets = {
        let mut t = Array2::zeros((lid.len(), 2));
        t.column_mut(0).fill(1.0);
        t
    };
    vec![
        BoundaryGroup {
            kind: BcKind::Dirichlet { targets: lid_targets },
            points: to_array(&lid),
            normals: None,
        },
        BoundaryGroup {
            kind: BcKind::Dirichlet {
                targets: Array2::zeros((walls.len(), 2)),
            },
            points: to_array(&walls),
            normals: None,
        },
    ]
}

/// Tensor grid `dims = [nx, ny]`; edge nodes become boundary points
/// (corners count as stationary wall).
pub(super) fn mesh_points(_problem: &ProblemSpec, dims: &[usize], seed: u64) -> Result<PointSet> {
    let [nx, ny] = dims else {
        return Err(TsonnError::Sampling(format!(
            "cavity mesh needs [nx, ny], got {dims:?}"
        )));
    };
    let (nx, ny) = (*nx, *ny);
    if nx < 3 || ny < 3 {
        return Err(TsonnError::Sampling("cavity mesh needs nx, ny >= 3".into()));
    }
    let mut interior = Array2::zeros(((nx - 2) * (ny - 2), 2));
    let mut lid = Vec::new();
    let mut walls = Vec::new();
    let mut row = 0;
    for iy in 0..ny {
        let y = iy as f64 / (ny - 1) as f64;
        for ix in 0..nx {
            let x = ix as f64 / (nx - 1) as f64;
            let on_edge = ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1;
            if !on_edge {
                interior[(row, 0)] = x;
                interior[(row, 1)] = y;
                row += 1;
            } else if iy == ny - 1 && ix != 0 && ix != nx - 1 {
                lid.push([x, y]);
            } else {
                walls.push([x, y]);
            }
        }
    }
    Ok(PointSet {
        interior,
        boundary: build_groups(lid, walls),
        initial: Array2::zeros((0, 2)),
        seed,
        sampling: super::Sampling::Mesh(dims.to_vec()),
    })
}

/// Reference `(u, v)` from the vorticity-streamfunction solver on an
/// `n x n` grid, `grid = [n]` or `[n, n]`.
pub(super) fn reference(re: f64, grid: &[usize]) -> Result<super::ReferenceField> {
    let n = match grid {
        [n] => *n,
        [a, b] if a == b => *a,
        _ => {
            return Err(TsonnError::Reference(format!(
                "cavity reference grid must be square, got {grid:?}"
            )))
        }
    };
    let field = crate::oracle::cavity_fd(re, n, 1e-7, 2_000_000)?;
    Ok(super::ReferenceField {
        coords: field.coords.clone(),
        values: field.values.slice(ndarray::s![.., 0..2]).to_owned(),
        axes: field.axes.clone(),
        components: vec!["u".into(), "v".into()],
        provenance: super::Provenance::Oracle,
    })
}
