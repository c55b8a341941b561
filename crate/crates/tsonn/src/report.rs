//! Error metrics and prediction/reference comparison.

use crate::error::{Result, TsonnError};
use crate::problems::ReferenceField;
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

/// `||pred - reference||_2 / ||reference||_2` over all entries
/// (multi-component fields are flattened).
pub fn relative_l2(pred: ArrayView2<f64>, reference: ArrayView2<f64>) -> Result<f64> {
    if pred.dim() != reference.dim() {
        return Err(TsonnError::DimensionMismatch(format!(
            "field shapes differ: {:?} vs {:?}",
            pred.dim(),
            reference.dim()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&p, &r) in pred.iter().zip(reference.iter()) {
        num += (p - r) * (p - r);
        den += r * r;
    }
    if den == 0.0 {
        return Err(TsonnError::Reference("reference norm is zero".into()));
    }
    Ok((num / den).sqrt())
}

/// Per-component relative errors plus the combined value.
pub fn relative_l2_per_component(
    pred: ArrayView2<f64>,
    reference: ArrayView2<f64>,
) -> Result<(Vec<f64>, f64)> {
    let combined = relative_l2(pred, reference)?;
    let mut per = Vec::with_capacity(pred.ncols());
    for c in 0..pred.ncols() {
        let p = pred.slice(ndarray::s![.., c..c + 1]);
        let r = reference.slice(ndarray::s![.., c..c + 1]);
        per.push(relative_l2(p, r)?);
    }
    Ok((per, combined))
}

/// Multilinear interpolation of a tensor-grid reference at `coords`.
/// Supported for 1-D and 2-D grids; coordinates are clamped to the grid.
pub fn interpolate_reference(field: &ReferenceField, coords: ArrayView2<f64>) -> Result<Array2<f64>> {
    if field.axes.is_empty() {
        return Err(TsonnError::GridMismatch(
            "reference has no tensor axes; interpolation unavailable".into(),
        ));
    }
    let comps = field.values.ncols();
    let mut out = Array2::zeros((coords.nrows(), comps));
    match field.axes.len() {
        1 => {
            let xs = &field.axes[0];
            for (i, row) in coords.outer_iter().enumerate() {
                let (j, w) = bracket(xs, row[0]);
                for c in 0..comps {
                    out[(i, c)] =
                        (1.0 - w) * field.values[(j, c)] + w * field.values[(j + 1, c)];
                }
            }
        }
        2 => {
            let xs = &field.axes[0];
            let ys = &field.axes[1];
            let nx = xs.len();
            for (i, row) in coords.outer_iter().enumerate() {
                let (jx, wx) = bracket(xs, row[0]);
                let (jy, wy) = bracket(ys, row[1]);
                for c in 0..comps {
                    let v00 = field.values[(jy * nx + jx, c)];
                    let v10 = field.values[(jy * nx + jx + 1, c)];
                    let v01 = field.values[((jy + 1) * nx + jx, c)];
                    let v11 = field.values[((jy + 1) * nx + jx + 1, c)];
                    out[(i, c)] = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v10)
                        + wy * ((1.0 - wx) * v01 + wx * v11);
                }
            }
        }
        d => {
            return Err(TsonnError::Unsupported(format!(
                "{d}-dimensional interpolation not implemented"
            )))
        }
    }
    Ok(out)
}

/// Interval index and local weight for coordinate `x` on sorted `ticks`.
fn bracket(ticks: &[f64], x: f64) -> (usize, f64) {
    let n = ticks.len();
    if x <= ticks[0] {
        return (0, 0.0);
    }
    if x >= ticks[n - 1] {
        return (n - 2, 1.0);
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ticks[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = (x - ticks[lo]) / (ticks[lo + 1] - ticks[lo]);
    (lo, w)
}

/// Machine-readable comparison outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub components: Vec<String>,
    pub per_component: Vec<f64>,
    pub combined: f64,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
}

/// Compares a prediction against a reference sharing the same coordinates
/// (or interpolating the reference when grids differ).
pub fn compare_fields(
    pred_coords: ArrayView2<f64>,
    pred_values: ArrayView2<f64>,
    reference: &ReferenceField,
    threshold: Option<f64>,
) -> Result<CompareReport> {
    let ref_values = if reference.coords.dim() == pred_coords.dim()
        && reference
            .coords
            .iter()
            .zip(pred_coords.iter())
            .all(|(a, b)| a == b)
    {
        reference.values.clone()
    } else {
        interpolate_reference(reference, pred_coords)?
    };
    if ref_values.ncols() != pred_values.ncols() {
        return Err(TsonnError::DimensionMismatch(format!(
            "prediction has {} components, reference {}",
            pred_values.ncols(),
            ref_values.ncols()
        )));
    }
    let (per_component, combined) = relative_l2_per_component(pred_values, ref_values.view())?;
    Ok(CompareReport {
        components: reference.components.clone(),
        per_component,
        combined,
        threshold,
        pass: threshold.map(|t| combined < t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Provenance;
    use ndarray::array;

    #[test]
    fn relative_l2_reference_cases() {
        let r = array![[1.0], [2.0], [-2.0]];
        assert_eq!(relative_l2(r.view(), r.view()).unwrap(), 0.0);
        let zero = Array2::zeros((3, 1));
        assert_eq!(relative_l2(zero.view(), r.view()).unwrap(), 1.0);
        let scaled = r.mapv(|x| 1.01 * x);
        let err = relative_l2(scaled.view(), r.view()).unwrap();
        assert!((err - 0.01).abs() < 1e-12);
        assert!(relative_l2(r.view(), zero.view()).is_err());
    }

    #[test]
    fn relative_l2_reports_scale_not_invariance() {
        let r = array![[1.0], [2.0], [-2.0]];
        let p = array![[1.1], [1.9], [-2.2]];
        let base = relative_l2(p.view(), r.view()).unwrap();
        for c in [10.0, -3.0] {
            let rs = r.mapv(|x| c * x);
            let ps = p.mapv(|x| c * x);
            let scaled = relative_l2(ps.view(), rs.view()).unwrap();
            assert!((scaled - base).abs() < 1e-12);
        }
    }

    #[test]
    fn bilinear_interpolation_reproduces_linear_fields() {
        let xs = vec![0.0, 0.5, 1.0];
        let ys = vec![0.0, 1.0, 2.0];
        let mut coords = Array2::zeros((9, 2));
        let mut values = Array2::zeros((9, 1));
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                coords[(j * 3 + i, 0)] = x;
                coords[(j * 3 + i, 1)] = y;
                values[(j * 3 + i, 0)] = 2.0 * x - 3.0 * y + 1.0;
            }
        }
        let field = ReferenceField {
            coords,
            values,
            axes: vec![xs, ys],
            components: vec!["f".into()],
            provenance: Provenance::Analytic,
        };
        let probe = array![[0.25, 0.5], [0.9, 1.7], [0.0, 0.0]];
        let got = interpolate_reference(&field, probe.view()).unwrap();
        for (i, row) in probe.outer_iter().enumerate() {
            let want = 2.0 * row[0] - 3.0 * row[1] + 1.0;
            assert!((got[(i, 0)] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn compare_to_self_passes() {
        let coords = array![[0.0], [1.0]];
        let values = array![[2.0], [3.0]];
        let field = ReferenceField {
            coords: coords.clone(),
            values: values.clone(),
            axes: vec![vec![0.0, 1.0]],
            components: vec!["u".into()],
            provenance: Provenance::File,
        };
        let report = compare_fields(coords.view(), values.view(), &field, Some(1e-9)).unwrap();
        assert_eq!(report.combined, 0.0);
        assert_eq!(report.pass, Some(true));
    }
}
