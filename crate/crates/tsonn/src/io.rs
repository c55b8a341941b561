//! Run artifacts: history CSV, field snapshot CSV with JSON sidecar,
//! status JSON, and the run-from-config orchestration.
//!
//! Floats are serialized with 17 significant digits so a write/read
//! round trip reproduces `f64` values bit-exactly.

use crate::config::ResolvedRun;
use crate::error::{Result, TsonnError};
use crate::net::{evaluate_jets_masked, NetworkShape, ParameterVector};
use crate::problems::{
    reference_field, sample_points, PointSet, ProblemKind, ProblemSpec, Provenance, ReferenceField,
};
use crate::trainer::{train, RunHistory, RunStatus, TrainOutcome};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Decimal serialization that round-trips `f64` exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Exact header of the history CSV.
pub const HISTORY_HEADER: &str =
    "iter,outer_n,inner_k,loss_total,loss_main,loss_bc,loss_ic,rel_l2,wall_time_s";

pub fn write_history_csv(path: &Path, history: &RunHistory) -> Result<()> {
    let mut out = String::new();
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    for row in &history.rows {
        let rel = row.rel_l2.map(format_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.iter,
            row.outer,
            row.inner,
            format_f64(row.total),
            format_f64(row.main),
            format_f64(row.bc),
            format_f64(row.ic),
            rel,
            format_f64(row.wall_s),
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// JSON sidecar of a field snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub problem_id: String,
    pub grid_shape: Vec<usize>,
    pub coord_names: Vec<String>,
    pub components: Vec<String>,
    pub provenance: String,
    pub seed: u64,
    pub git_describe: String,
}

pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Writes `<path>` (CSV) and `<path with .json extension>` (sidecar).
pub fn write_field_csv(
    path: &Path,
    coords: &Array2<f64>,
    values: &Array2<f64>,
    sidecar: &FieldSidecar,
) -> Result<()> {
    if coords.nrows() != values.nrows() {
        return Err(TsonnError::DimensionMismatch(
            "coords and values row counts differ".into(),
        ));
    }
    let mut out = String::new();
    for name in sidecar.coord_names.iter().chain(sidecar.components.iter()) {
        if !out.is_empty() {
            out.push(',');
        }
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..coords.nrows() {
        let mut first = true;
        for j in 0..coords.ncols() {
            if !first {
                out.push(',');
            }
            out.push_str(&format_f64(coords[(i, j)]));
            first = false;
        }
        for j in 0..values.ncols() {
            out.push(',');
            out.push_str(&format_f64(values[(i, j)]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    let sidecar_path = path.with_extension("json");
    let mut f = std::fs::File::create(sidecar_path)?;
    f.write_all(serde_json::to_string_pretty(sidecar).unwrap().as_bytes())?;
    Ok(())
}

/// Reads a field CSV and its sidecar back.
pub fn read_field_csv(path: &Path) -> Result<(Array2<f64>, Array2<f64>, FieldSidecar)> {
    let sidecar: FieldSidecar = serde_json::from_str(
        &std::fs::read_to_string(path.with_extension("json"))?,
    )
    .map_err(|e| TsonnError::Parse(format!("sidecar: {e}")))?;
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| TsonnError::Parse("empty field csv".into()))?;
    let names: Vec<&str> = header.split(',').collect();
    let nc = sidecar.coord_names.len();
    let nv = sidecar.components.len();
    if names.len() != nc + nv {
        return Err(TsonnError::Parse(format!(
            "header has {} columns, sidecar describes {}",
            names.len(),
            nc + nv
        )));
    }
    let mut coords = Vec::new();
    let mut values = Vec::new();
    let mut rows = 0usize;
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != nc + nv {
            return Err(TsonnError::Parse(format!("bad row: `{line}`")));
        }
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|e| TsonnError::Parse(format!("bad float `{f}`: {e}")))?;
            if k < nc {
                coords.push(v);
            } else {
                values.push(v);
            }
        }
        rows += 1;
    }
    let coords = Array2::from_shape_vec((rows, nc), coords).expect("shape");
    let values = Array2::from_shape_vec((rows, nv), values).expect("shape");
    Ok((coords, values, sidecar))
}

/// Full network state at `coords` for export: the potential problem adds
/// the raw potential in front of the velocity components.
pub fn predict_full_state(
    problem: &ProblemSpec,
    shape: &NetworkShape,
    params: &ParameterVector<f64>,
    coords: &Array2<f64>,
) -> Result<(Vec<String>, Array2<f64>)> {
    match problem.kind {
        ProblemKind::LaplaceCylinder { .. } => {
            let jets = evaluate_jets_masked(params, shape, coords.view(), 1, vec![])?;
            let mut out = Array2::zeros((coords.nrows(), 3));
            for i in 0..coords.nrows() {
                out[(i, 0)] = jets.value[(i, 0)];
                out[(i, 1)] = jets.grad[(i, 0, 0)];
                out[(i, 2)] = jets.grad[(i, 0, 1)];
            }
            Ok((vec!["phi".into(), "u".into(), "v".into()], out))
        }
        _ => {
            let jets = evaluate_jets_masked(params, shape, coords.view(), 0, vec![])?;
            let names = match problem.kind {
                ProblemKind::Cavity { .. } => vec!["u".into(), "v".into(), "p".into()],
                _ => vec!["u".into()],
            };
            Ok((names, jets.value))
        }
    }
}

/// Resolved-run parameters echoed into `status.json` so a run directory is
/// self-describing even when CLI overrides were applied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatusJson {
    pub status: String,
    pub iterations: usize,
    pub divergence_iter: Option<usize>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_rel_l2: Option<f64>,
    pub elapsed_s: f64,
    pub problem_id: String,
    pub problem: serde_json::Value,
    pub mode: String,
    pub dtau: f64,
    pub inner_steps: usize,
    pub outer_steps: usize,
    pub optimizer: String,
    pub seed: u64,
    pub precision: String,
    pub eval_grid: Vec<usize>,
    pub network: (usize, usize),
    pub git_describe: String,
}

fn problem_params_json(problem: &ProblemSpec) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    match problem.kind {
        ProblemKind::LaplaceCylinder { v_inf, r_wall, r_far } => {
            map.insert("v_inf".into(), v_inf.into());
            map.insert("r_wall".into(), r_wall.into());
            map.insert("r_far".into(), r_far.into());
        }
        ProblemKind::BurgersSteady { nu } => {
            map.insert("nu".into(), nu.into());
        }
        ProblemKind::Cavity { re, beta } => {
            map.insert("re".into(), re.into());
            map.insert("beta".into(), beta.into());
        }
        ProblemKind::AllenCahn { diffusivity, reaction } => {
            map.insert("diffusivity".into(), diffusivity.into());
            map.insert("reaction".into(), reaction.into());
        }
    }
    map.insert("lambda_bc".into(), problem.lambda_bc.into());
    map.insert("lambda_ic".into(), problem.lambda_ic.into());
    serde_json::Value::Object(map)
}

/// Artifacts produced by one run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub status: RunStatus,
    pub final_rel_l2: Option<f64>,
}

/// Builds the reference field for a resolved run (used for the error
/// column during training and for `compare`).
pub fn build_reference(run: &ResolvedRun) -> Result<ReferenceField> {
    reference_field(&run.problem, &run.eval_grid)
}

/// Executes a resolved run and writes `config.toml` (copy), `history.csv`,
/// `field.csv` + `field.json`, and `status.json` into the output
/// directory. Divergence and stalls are recorded in the status file, not
/// raised.
pub fn run_from_config(
    run: &ResolvedRun,
    config_text: &str,
    reference: Option<&ReferenceField>,
) -> Result<RunArtifacts> {
    let t0 = std::time::Instant::now();
    std::fs::create_dir_all(&run.out_dir)?;
    std::fs::write(run.out_dir.join("config.toml"), config_text)?;

    let owned_reference = match reference {
        Some(_) => None,
        None => Some(build_reference(run)?),
    };
    let reference = reference.or(owned_reference.as_ref());

    let points: PointSet = sample_points(&run.problem, &run.sampling, run.train.seed)?;
    let outcome: TrainOutcome = train(&run.problem, &run.shape, points, &run.train, reference)?;

    write_history_csv(&run.out_dir.join("history.csv"), &outcome.history)?;

    let eval_coords = reference
        .map(|r| r.coords.clone())
        .unwrap_or_else(|| outcome.points.interior.clone());
    let (components, state) =
        predict_full_state(&run.problem, &run.shape, &outcome.params, &eval_coords)?;
    let sidecar = FieldSidecar {
        problem_id: run.problem.id().to_string(),
        grid_shape: run.eval_grid.clone(),
        coord_names: run.problem.coord_names().iter().map(|s| s.to_string()).collect(),
        components,
        provenance: "run".into(),
        seed: run.train.seed,
        git_describe: git_describe(),
    };
    write_field_csv(&run.out_dir.join("field.csv"), &eval_coords, &state, &sidecar)?;

    let final_rel_l2 = outcome
        .history
        .outer_records
        .iter()
        .rev()
        .find_map(|r| r.rel_l2);
    let status = StatusJson {
        status: outcome.history.status.as_str().into(),
        iterations: outcome.history.iterations,
        divergence_iter: outcome.history.divergence_iter,
        initial_loss: outcome.history.initial_loss,
        final_loss: outcome.history.final_loss,
        final_rel_l2,
        elapsed_s: t0.elapsed().as_secs_f64(),
        problem_id: run.problem.id().to_string(),
        problem: problem_params_json(&run.problem),
        mode: run.train.mode.to_string(),
        dtau: run.train.dtau,
        inner_steps: run.train.inner_steps,
        outer_steps: run.train.outer_steps,
        optimizer: if run.train.optimizer.is_lbfgs() {
            "lbfgs".into()
        } else {
            "adam".into()
        },
        seed: run.train.seed,
        precision: run.train.precision.as_str().into(),
        eval_grid: run.eval_grid.clone(),
        network: (run.shape.hidden_layers(), run.shape.hidden_width()),
        git_describe: git_describe(),
    };
    std::fs::write(
        run.out_dir.join("status.json"),
        serde_json::to_string_pretty(&status).unwrap(),
    )?;

    Ok(RunArtifacts {
        out_dir: run.out_dir.clone(),
        status: outcome.history.status,
        final_rel_l2,
    })
}

/// Loads a reference for `compare` from the requested source.
pub fn reference_from_source(
    problem: &ProblemSpec,
    eval_grid: &[usize],
    source: &str,
) -> Result<ReferenceField> {
    match source {
        "analytic" => match problem.kind {
            ProblemKind::LaplaceCylinder { .. } | ProblemKind::BurgersSteady { .. } => {
                reference_field(problem, eval_grid)
            }
            _ => Err(TsonnError::Reference(format!(
                "no analytic reference for {}",
                problem.id()
            ))),
        },
        "oracle" => match problem.kind {
            ProblemKind::LaplaceCylinder { .. } => {
                let [n_theta, n_r] = eval_grid else {
                    return Err(TsonnError::Reference("need [n_theta, n_r]".into()));
                };
                let (field, _) = crate::oracle::laplace_annulus_fd(*n_theta, *n_r, 1e-8, 200_000)?;
                Ok(ReferenceField {
                    coords: field.coords,
                    values: field.values,
                    axes: vec![],
                    components: vec!["u".into(), "v".into()],
                    provenance: Provenance::Oracle,
                })
            }
            ProblemKind::BurgersSteady { nu } => {
                let [n] = eval_grid else {
                    return Err(TsonnError::Reference("need [n]".into()));
                };
                let bound = crate::oracle::burgers_explicit_stability_bound(nu, *n);
                let field = crate::oracle::burgers_steady_fd(nu, *n, 0.9 * bound, 1e-10)?;
                Ok(ReferenceField {
                    coords: field.coords,
                    values: field.values,
                    axes: field.axes,
                    components: vec!["u".into()],
                    provenance: Provenance::Oracle,
                })
            }
            _ => reference_field(problem, eval_grid),
        },
        file if file.starts_with("file:") => {
            let path = PathBuf::from(&file[5..]);
            let (coords, values, sidecar) = read_field_csv(&path)?;
            Ok(ReferenceField {
                coords,
                values,
                axes: vec![],
                components: sidecar.components,
                provenance: Provenance::File,
            })
        }
        other => Err(TsonnError::Config(format!(
            "unknown reference source `{other}` (expected analytic|oracle|file:PATH)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn f64_formatting_round_trips() {
        for &x in &[
            0.0,
            -0.0,
            1.0,
            std::f64::consts::PI,
            1e-308,
            -2.2250738585072014e-308,
            9.87e307,
            -1.2345678901234567e-5,
        ] {
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s} -> {back}");
        }
    }

    proptest! {
        #[test]
        fn field_round_trip_is_bit_exact(raw in proptest::collection::vec(
            prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
            8..64,
        )) {
            let n = raw.len() / 4;
            prop_assume!(n > 0);
            let coords = Array2::from_shape_fn((n, 2), |(i, j)| raw[2 * i + j]);
            let values = Array2::from_shape_fn((n, 2), |(i, j)| raw[2 * n + 2 * i + j].abs());
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("field.csv");
            let sidecar = FieldSidecar {
                problem_id: "cavity".into(),
                grid_shape: vec![n],
                coord_names: vec!["x".into(), "y".into()],
                components: vec!["u".into(), "v".into()],
                provenance: "file".into(),
                seed: 0,
                git_describe: "test".into(),
            };
            write_field_csv(&path, &coords, &values, &sidecar).unwrap();
            let (c2, v2, s2) = read_field_csv(&path).unwrap();
            prop_assert_eq!(coords.mapv(f64::to_bits), c2.mapv(f64::to_bits));
            prop_assert_eq!(values.mapv(f64::to_bits), v2.mapv(f64::to_bits));
            prop_assert_eq!(s2.components, sidecar.components);
        }
    }
}
