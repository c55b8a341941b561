//! Run configuration files: strict TOML with one table per subsystem,
//! benchmark defaults pre-filled, a desk-scale override table, and CLI
//! overrides.

use crate::error::{Result, TsonnError};
use crate::loss::LossMode;
use crate::net::NetworkShape;
use crate::problems::{ProblemId, ProblemKind, ProblemSpec, Sampling};
use crate::trainer::{OptimizerConfig, Precision, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemTable {
    pub id: Option<String>,
    pub re: Option<f64>,
    pub nu: Option<f64>,
    pub v_inf: Option<f64>,
    pub r_wall: Option<f64>,
    pub r_far: Option<f64>,
    pub beta: Option<f64>,
    pub diffusivity: Option<f64>,
    pub reaction: Option<f64>,
    pub lambda_bc: Option<f64>,
    pub lambda_ic: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkTable {
    pub hidden_layers: Option<usize>,
    pub hidden_width: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PointsTable {
    /// `mesh` or `uniform-random`.
    pub strategy: Option<String>,
    pub mesh: Option<Vec<usize>>,
    pub interior: Option<usize>,
    pub boundary: Option<usize>,
    pub initial: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingTable {
    pub mode: Option<String>,
    pub dtau: Option<f64>,
    pub inner_steps: Option<usize>,
    pub outer_steps: Option<usize>,
    /// `adam` or `lbfgs`.
    pub optimizer: Option<String>,
    pub learning_rate: Option<f64>,
    pub lbfgs_memory: Option<usize>,
    pub reset_on_outer: Option<bool>,
    pub resample_on_outer: Option<bool>,
    pub seed: Option<u64>,
    pub precision: Option<String>,
    pub record_every: Option<usize>,
    pub error_every_outer: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputTable {
    pub dir: Option<String>,
    pub eval_grid: Option<Vec<usize>>,
}

/// Overrides applied when the run is launched with `--desk-scale`.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DeskScaleTable {
    #[serde(default)]
    pub network: NetworkTable,
    #[serde(default)]
    pub points: PointsTable,
    #[serde(default)]
    pub training: TrainingTable,
    #[serde(default)]
    pub output: OutputTable,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub problem: ProblemTable,
    #[serde(default)]
    pub network: NetworkTable,
    #[serde(default)]
    pub points: PointsTable,
    #[serde(default)]
    pub training: TrainingTable,
    #[serde(default)]
    pub output: OutputTable,
    #[serde(default)]
    pub desk_scale: Option<DeskScaleTable>,
}

/// Command-line overrides for `run` and `sweep`.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub mode: Option<String>,
    pub dtau: Option<f64>,
    pub inner_steps: Option<usize>,
    pub outer_steps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

/// A fully resolved run: problem, network, sampling, training settings,
/// and output locations.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub problem: ProblemSpec,
    pub shape: NetworkShape,
    pub sampling: Sampling,
    pub train: TrainConfig,
    pub out_dir: PathBuf,
    pub eval_grid: Vec<usize>,
}

/// Benchmark defaults (the values each experiment names, where stated).
struct Defaults {
    hidden_layers: usize,
    hidden_width: usize,
    sampling: Sampling,
    mode: LossMode,
    dtau: f64,
    inner_steps: usize,
    outer_steps: usize,
    optimizer: &'static str,
    resample_on_outer: bool,
    eval_grid: Vec<usize>,
}

fn defaults_for(id: ProblemId) -> Defaults {
    match id {
        ProblemId::LaplaceCylinder => Defaults {
            hidden_layers: 5,
            hidden_width: 128,
            sampling: Sampling::Mesh(vec![200, 100]),
            mode: LossMode::Itsonn,
            dtau: 1.0,
            inner_steps: 50,
            outer_steps: 1000,
            optimizer: "adam",
            resample_on_outer: false,
            eval_grid: vec![200, 100],
        },
        ProblemId::BurgersSteady => Defaults {
            hidden_layers: 3,
            hidden_width: 10,
            sampling: Sampling::Mesh(vec![500]),
            mode: LossMode::Itsonn,
            dtau: 0.1,
            inner_steps: 100,
            outer_steps: 500,
            optimizer: "adam",
            resample_on_outer: false,
            eval_grid: vec![500],
        },
        ProblemId::Cavity => Defaults {
            hidden_layers: 5,
            hidden_width: 128,
            sampling: Sampling::UniformRandom {
                interior: 20_000,
                boundary: 2_000,
                initial: 0,
            },
            mode: LossMode::Itsonn,
            dtau: 0.5,
            inner_steps: 300,
            outer_steps: 300,
            optimizer: "lbfgs",
            resample_on_outer: true,
            eval_grid: vec![500],
        },
        ProblemId::AllenCahn => Defaults {
            hidden_layers: 4,
            hidden_width: 128,
            sampling: Sampling::UniformRandom {
                interior: 20_000,
                boundary: 202,
                initial: 257,
            },
            mode: LossMode::Itsonn,
            dtau: 0.3,
            inner_steps: 100,
            outer_steps: 500,
            optimizer: "adam",
            resample_on_outer: false,
            eval_grid: vec![257, 101],
        },
    }
}

fn build_problem(table: &ProblemTable) -> Result<ProblemSpec> {
    let id_str = table
        .id
        .as_deref()
        .ok_or_else(|| TsonnError::Config("problem.id is required".into()))?;
    let id = ProblemId::parse(id_str)?;
    let mut spec = match id {
        ProblemId::LaplaceCylinder => ProblemSpec::laplace_cylinder(),
        ProblemId::BurgersSteady => ProblemSpec::burgers_steady(),
        ProblemId::Cavity => ProblemSpec::cavity(table.re.unwrap_or(100.0)),
        ProblemId::AllenCahn => ProblemSpec::allen_cahn(),
    };
    match &mut spec.kind {
        ProblemKind::LaplaceCylinder { v_inf, r_wall, r_far } => {
            if let Some(v) = table.v_inf {
                *v_inf = v;
            }
            if let Some(v) = table.r_wall {
                *r_wall = v;
            }
            if let Some(v) = table.r_far {
                *r_far = v;
            }
        }
        ProblemKind::BurgersSteady { nu } => {
            if let Some(v) = table.nu {
                *nu = v;
            }
        }
        ProblemKind::Cavity { beta, .. } => {
            if let Some(v) = table.beta {
                *beta = v;
            }
        }
        ProblemKind::AllenCahn { diffusivity, reaction } => {
            if let Some(v) = table.diffusivity {
                *diffusivity = v;
            }
            if let Some(v) = table.reaction {
                *reaction = v;
            }
        }
    }
    if let Some(v) = table.lambda_bc {
        spec.lambda_bc = v;
    }
    if let Some(v) = table.lambda_ic {
        spec.lambda_ic = v;
    }
    spec.validate()?;
    Ok(spec)
}

fn merge_network(base: &NetworkTable, over: &NetworkTable) -> NetworkTable {
    NetworkTable {
        hidden_layers: over.hidden_layers.or(base.hidden_layers),
        hidden_width: over.hidden_width.or(base.hidden_width),
    }
}

fn merge_points(base: &PointsTable, over: &PointsTable) -> PointsTable {
    PointsTable {
        strategy: over.strategy.clone().or_else(|| base.strategy.clone()),
        mesh: over.mesh.clone().or_else(|| base.mesh.clone()),
        interior: over.interior.or(base.interior),
        boundary: over.boundary.or(base.boundary),
        initial: over.initial.or(base.initial),
    }
}

fn merge_training(base: &TrainingTable, over: &TrainingTable) -> TrainingTable {
    TrainingTable {
        mode: over.mode.clone().or_else(|| base.mode.clone()),
        dtau: over.dtau.or(base.dtau),
        inner_steps: over.inner_steps.or(base.inner_steps),
        outer_steps: over.outer_steps.or(base.outer_steps),
        optimizer: over.optimizer.clone().or_else(|| base.optimizer.clone()),
        learning_rate: over.learning_rate.or(base.learning_rate),
        lbfgs_memory: over.lbfgs_memory.or(base.lbfgs_memory),
        reset_on_outer: over.reset_on_outer.or(base.reset_on_outer),
        resample_on_outer: over.resample_on_outer.or(base.resample_on_outer),
        seed: over.seed.or(base.seed),
        precision: over.precision.clone().or_else(|| base.precision.clone()),
        record_every: over.record_every.or(base.record_every),
        error_every_outer: over.error_every_outer.or(base.error_every_outer),
    }
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| TsonnError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Resolves the file against benchmark defaults, the desk-scale table
    /// (when requested), and CLI overrides, in that precedence order.
    pub fn resolve(&self, desk_scale: bool, cli: &CliOverrides) -> Result<ResolvedRun> {
        let problem = build_problem(&self.problem)?;
        let defaults = defaults_for(problem.id());

        let (mut network, mut points, mut training, mut output) = (
            self.network.clone(),
            self.points.clone(),
            self.training.clone(),
            self.output.clone(),
        );
        if desk_scale {
            let desk = self.desk_scale.as_ref().ok_or_else(|| {
                TsonnError::Config("--desk-scale requested but the config has no [desk_scale] table".into())
            })?;
            network = merge_network(&network, &desk.network);
            points = merge_points(&points, &desk.points);
            training = merge_training(&training, &desk.training);
            output = OutputTable {
                dir: desk.output.dir.clone().or(output.dir),
                eval_grid: desk.output.eval_grid.clone().or(output.eval_grid),
            };
        }

        let shape = NetworkShape::new(
            problem.input_dim(),
            problem.state_dim(),
            network.hidden_layers.unwrap_or(defaults.hidden_layers),
            network.hidden_width.unwrap_or(defaults.hidden_width),
        )?;

        let strategy = points.strategy.as_deref().unwrap_or(match defaults.sampling {
            Sampling::Mesh(_) => "mesh",
            Sampling::UniformRandom { .. } => "uniform-random",
        });
        let sampling = match strategy {
            "mesh" => {
                let dims = points.mesh.clone().unwrap_or(match &defaults.sampling {
                    Sampling::Mesh(d) => d.clone(),
                    _ => {
                        return Err(TsonnError::Config(format!(
                            "mesh strategy for {} needs points.mesh dims",
                            problem.id()
                        )))
                    }
                });
                Sampling::Mesh(dims)
            }
            "uniform-random" => {
                let (di, db, dic) = match &defaults.sampling {
                    Sampling::UniformRandom {
                        interior,
                        boundary,
                        initial,
                    } => (*interior, *boundary, *initial),
                    _ => (20_000, 2_000, 0),
                };
                Sampling::UniformRandom {
                    interior: points.interior.unwrap_or(di),
                    boundary: points.boundary.unwrap_or(db),
                    initial: points.initial.unwrap_or(dic),
                }
            }
            other => {
                return Err(TsonnError::Config(format!(
                    "unknown sampling strategy `{other}`"
                )))
            }
        };

        let mode = match cli.mode.as_deref().or(training.mode.as_deref()) {
            Some(m) => LossMode::parse(m)?,
            None => defaults.mode,
        };
        let optimizer = match training.optimizer.as_deref().unwrap_or(defaults.optimizer) {
            "adam" => OptimizerConfig::Adam {
                lr: training.learning_rate.unwrap_or(1e-3),
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            "lbfgs" => OptimizerConfig::Lbfgs {
                memory: training.lbfgs_memory.unwrap_or(50),
                c1: 1e-4,
                c2: 0.9,
                max_line_search: 25,
            },
            other => {
                return Err(TsonnError::Config(format!("unknown optimizer `{other}`")))
            }
        };

        let train = TrainConfig {
            mode,
            dtau: cli.dtau.or(training.dtau).unwrap_or(defaults.dtau),
            inner_steps: cli
                .inner_steps
                .or(training.inner_steps)
                .unwrap_or(defaults.inner_steps),
            outer_steps: cli
                .outer_steps
                .or(training.outer_steps)
                .unwrap_or(defaults.outer_steps),
            optimizer,
            reset_on_outer: training.reset_on_outer,
            resample_on_outer: training
                .resample_on_outer
                .unwrap_or(defaults.resample_on_outer),
            seed: cli.seed.or(training.seed).unwrap_or(0),
            precision: match training.precision.as_deref() {
                Some(p) => Precision::parse(p)?,
                None => Precision::F64,
            },
            record_every: training.record_every.unwrap_or(1),
            error_every_outer: training.error_every_outer.unwrap_or(1),
        };
        train.validate()?;

        let out_dir = PathBuf::from(
            cli.out
                .clone()
                .or(output.dir)
                .unwrap_or_else(|| format!("runs/{}-{}", problem.id(), mode)),
        );
        let eval_grid = output.eval_grid.unwrap_or(defaults.eval_grid);

        Ok(ResolvedRun {
            problem,
            shape,
            sampling,
            train,
            out_dir,
            eval_grid,
        })
    }
}
