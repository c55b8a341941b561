//! Unified inner/outer training loop for the three modes.
//!
//! Inner iterations optimize the current loss program; at each outer
//! boundary the snapshot is advanced to the current parameters, labels or
//! anchors are rebuilt, the optimizer history is reset per policy
//! (mandatory by default for L-BFGS under the time-stepped modes), and
//! interior points may be resampled. Direct residual training (`pinn`)
//! runs through the same loop and only depends on the total iteration
//! count.

use crate::error::{Result, TsonnError};
use crate::loss::{LossMode, LossProgram, LossValue, TsAnchors};
use crate::net::{init_parameters, JetBatch, NetworkShape, ParameterSnapshot, ParameterVector};
use crate::optim::{AdamState, LbfgsState};
use crate::problems::{pde_residual, PointSet, ProblemSpec, ReferenceField};
use crate::real::{c, Real};
use ndarray::{Array1, Array2};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F64,
    F32,
}

impl Precision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "f64" | "64" => Ok(Precision::F64),
            "f32" | "32" => Ok(Precision::F32),
            other => Err(TsonnError::Config(format!("unknown precision `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerConfig {
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
    Lbfgs {
        memory: usize,
        c1: f64,
        c2: f64,
        max_line_search: usize,
    },
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn lbfgs() -> Self {
        OptimizerConfig::Lbfgs {
            memory: 50,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
        }
    }

    pub fn is_lbfgs(&self) -> bool {
        matches!(self, OptimizerConfig::Lbfgs { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: LossMode,
    pub dtau: f64,
    /// Inner iterations per outer iteration (K).
    pub inner_steps: usize,
    /// Outer iterations (N).
    pub outer_steps: usize,
    pub optimizer: OptimizerConfig,
    /// Optimizer reset at outer boundaries; `None` selects the default
    /// policy (on for L-BFGS under time-stepped modes, off otherwise).
    pub reset_on_outer: Option<bool>,
    pub resample_on_outer: bool,
    pub seed: u64,
    pub precision: Precision,
    /// Record a history row every this many inner iterations (boundary
    /// rows are always recorded).
    pub record_every: usize,
    /// Evaluate the reference error every this many outer iterations.
    pub error_every_outer: usize,
}

impl TrainConfig {
    pub fn new(mode: LossMode, dtau: f64, inner_steps: usize, outer_steps: usize) -> Self {
        Self {
            mode,
            dtau,
            inner_steps,
            outer_steps,
            optimizer: OptimizerConfig::adam(1e-3),
            reset_on_outer: None,
            resample_on_outer: false,
            seed: 0,
            precision: Precision::F64,
            record_every: 1,
            error_every_outer: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner_steps < 1 || self.outer_steps < 1 {
            return Err(TsonnError::Config("inner and outer steps must be >= 1".into()));
        }
        if self.mode.is_time_stepped() && self.dtau <= 0.0 {
            return Err(TsonnError::Config(
                "dtau must be positive for time-stepped modes".into(),
            ));
        }
        if self.record_every < 1 || self.error_every_outer < 1 {
            return Err(TsonnError::Config("cadences must be >= 1".into()));
        }
        Ok(())
    }

    fn reset_policy(&self) -> bool {
        self.reset_on_outer
            .unwrap_or(self.optimizer.is_lbfgs() && self.mode.is_time_stepped())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Diverged,
    Stalled,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Diverged => "diverged",
            RunStatus::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub iter: usize,
    pub outer: usize,
    pub inner: usize,
    pub total: f64,
    pub main: f64,
    pub bc: f64,
    pub ic: f64,
    /// Reference error; populated on outer-boundary rows only.
    pub rel_l2: Option<f64>,
    pub wall_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub outer: usize,
    pub end_iter: usize,
    pub loss: f64,
    pub rel_l2: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunHistory {
    pub rows: Vec<HistoryRow>,
    pub outer_records: Vec<OuterRecord>,
    pub status: RunStatus,
    pub divergence_iter: Option<usize>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Final parameters in f64 (even on divergence, for postmortems).
    pub params: ParameterVector<f64>,
    pub history: RunHistory,
    /// Point set in effect at the end (reflects resampling).
    pub points: PointSet,
}

/// Loss threshold relative to the initial loss that flags divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Explicit pseudo-time labels built from a parameter snapshot.
#[derive(Debug, Clone)]
pub struct LabelField<T> {
    pub outer_index: usize,
    pub dtau: f64,
    /// `u(.; snapshot)` at the interior points.
    pub base: Array2<T>,
    /// `N[u(.; snapshot)]` at the interior points.
    pub resid: Array2<T>,
}

impl<T: Real> LabelField<T> {
    /// Label values `u + dtau * N[u]`.
    pub fn values(&self) -> Array2<T> {
        let dtau = c::<T>(self.dtau);
        let mut out = self.base.clone();
        ndarray::Zip::from(&mut out)
            .and(&self.resid)
            .for_each(|o, &r| *o = *o + dtau * r);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.base.iter().all(|v| v.is_finite()) && self.resid.iter().all(|v| v.is_finite())
    }
}

/// One explicit time step evaluated at the snapshot: the label every inner
/// iteration of the next outer step approximates.
pub fn explicit_labels<T: Real>(
    snapshot: &ParameterSnapshot<T>,
    points: &PointSet,
    problem: &ProblemSpec,
    shape: &NetworkShape,
    dtau: f64,
) -> Result<LabelField<T>> {
    let interior = points.interior.mapv(T::from_f64);
    let anchors = TsAnchors::compute(
        problem,
        shape,
        snapshot.params(),
        &interior,
        snapshot.outer_index(),
        true,
    )?;
    let field = LabelField {
        outer_index: snapshot.outer_index(),
        dtau,
        base: anchors.base,
        resid: anchors.resid.unwrap(),
    };
    if !field.is_finite() {
        return Err(TsonnError::Instability(
            "explicit labels are non-finite (stability breach)".into(),
        ));
    }
    Ok(field)
}

enum Opt<T> {
    Adam(AdamState<T>),
    Lbfgs(LbfgsState<T>),
}

/// Runs Algorithm-style training: `outer_steps` outer iterations of
/// `inner_steps` optimizer updates each. Returns the final parameters and
/// the full history; divergence and stalls are recorded in the status
/// rather than raised.
pub fn train(
    problem: &ProblemSpec,
    shape: &NetworkShape,
    points: PointSet,
    config: &TrainConfig,
    reference: Option<&ReferenceField>,
) -> Result<TrainOutcome> {
    config.validate()?;
    match config.precision {
        Precision::F64 => train_impl::<f64>(problem, shape, points, config, reference),
        Precision::F32 => train_impl::<f32>(problem, shape, points, config, reference),
    }
}

fn train_impl<T: Real>(
    problem: &ProblemSpec,
    shape: &NetworkShape,
    mut points: PointSet,
    config: &TrainConfig,
    reference: Option<&ReferenceField>,
) -> Result<TrainOutcome> {
    let start = Instant::now();
    let mut params: ParameterVector<T> = init_parameters(shape, config.seed);
    let mut program = LossProgram::new(problem, &points, shape, config.mode, config.dtau)?;
    let mut outer_index;
    if config.mode.is_time_stepped() {
        let anchors = TsAnchors::compute(
            problem,
            shape,
            &params,
            program.interior_points(),
            1,
            config.mode == LossMode::Etsonn,
        )?;
        program.set_anchors(anchors)?;
    }

    let mut opt = match config.optimizer {
        OptimizerConfig::Adam { lr, beta1, beta2, eps } => {
            Opt::Adam(AdamState::new(params.len(), lr, beta1, beta2, eps))
        }
        OptimizerConfig::Lbfgs { memory, c1, c2, max_line_search } => {
            Opt::Lbfgs(LbfgsState::new(memory, c1, c2, max_line_search))
        }
    };

    let mut rows: Vec<HistoryRow> = Vec::new();
    let mut outer_records: Vec<OuterRecord> = Vec::new();
    let mut status = RunStatus::Completed;
    let mut divergence_iter = None;
    let mut initial_loss = f64::NAN;
    let mut final_loss = f64::NAN;
    let mut iter = 0usize;

    // Carried (loss, grad) state for L-BFGS; refreshed whenever the loss
    // program changes.
    let mut carried: Option<(T, ParameterVector<T>, LossValue)> = None;

    let record =
        |rows: &mut Vec<HistoryRow>, iter: usize, outer: usize, inner: usize, v: &LossValue,
         force: bool, start: &Instant, every: usize| {
            if force || inner == 1 || iter % every == 0 {
                rows.push(HistoryRow {
                    iter,
                    outer,
                    inner,
                    total: v.total,
                    main: v.main,
                    bc: v.bc,
                    ic: v.ic,
                    rel_l2: None,
                    wall_s: start.elapsed().as_secs_f64(),
                });
            }
        };

    'outer: for outer in 1..=config.outer_steps {
        for inner in 1..=config.inner_steps {
            iter += 1;
            let is_boundary_row = inner == config.inner_steps;
            match &mut opt {
                Opt::Adam(adam) => {
                    let (value, grad) = program.loss_gradient(&params)?;
                    if initial_loss.is_nan() {
                        initial_loss = value.total;
                    }
                    final_loss = value.total;
                    record(
                        &mut rows,
                        iter,
                        outer,
                        inner,
                        &value,
                        is_boundary_row,
                        &start,
                        config.record_every,
                    );
                    if diverged(value.total, initial_loss) {
                        status = RunStatus::Diverged;
                        divergence_iter = Some(iter);
                        break 'outer;
                    }
                    let Some(grad) = grad else {
                        status = RunStatus::Diverged;
                        divergence_iter = Some(iter);
                        break 'outer;
                    };
                    if adam.step(&mut params, &grad).is_err() {
                        status = RunStatus::Diverged;
                        divergence_iter = Some(iter);
                        break 'outer;
                    }
                }
                Opt::Lbfgs(lbfgs) => {
                    if carried.is_none() {
                        let (value, grad) = program.loss_gradient(&params)?;
                        if initial_loss.is_nan() {
                            initial_loss = value.total;
                        }
                        final_loss = value.total;
                        if diverged(value.total, initial_loss) || grad.is_none() {
                            record(
                                &mut rows,
                                iter,
                                outer,
                                inner,
                                &value,
                                true,
                                &start,
                                config.record_every,
                            );
                            status = RunStatus::Diverged;
                            divergence_iter = Some(iter);
                            break 'outer;
                        }
                        carried = Some((c::<T>(value.total), grad.unwrap(), value));
                    }
                    let (f, g, _) = carried.take().unwrap();
                    let mut eval = |p: &ParameterVector<T>| {
                        match program.loss_gradient(p) {
                            Ok((v, Some(g))) if v.total.is_finite() => {
                                Some((c::<T>(v.total), g, v))
                            }
                            _ => None,
                        }
                    };
                    let out = lbfgs.step(&mut params, f, &g, &mut eval);
                    let value = out.payload.unwrap_or(LossValue {
                        total: out.loss.to_f64(),
                        main: f64::NAN,
                        bc: f64::NAN,
                        ic: f64::NAN,
                    });
                    final_loss = value.total;
                    record(
                        &mut rows,
                        iter,
                        outer,
                        inner,
                        &value,
                        is_boundary_row || out.stalled,
                        &start,
                        config.record_every,
                    );
                    if out.stalled {
                        status = RunStatus::Stalled;
                        divergence_iter = Some(iter);
                        break 'outer;
                    }
                    if diverged(value.total, initial_loss) {
                        status = RunStatus::Diverged;
                        divergence_iter = Some(iter);
                        break 'outer;
                    }
                    carried = Some((out.loss, out.grad, value));
                }
            }
        }

        // Outer boundary: advance the snapshot, rebuild anchors, apply
        // reset/resample policy, and measure the reference error.
        outer_index = outer + 1;
        let snapshot = ParameterSnapshot::new(outer_index, &params);

        if config.resample_on_outer && outer < config.outer_steps {
            let derived = config
                .seed
                .wrapping_add((outer as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            points.resample_interior(problem, derived)?;
            program.set_interior(&points.interior);
            carried = None;
        }
        if config.mode.is_time_stepped() {
            let anchors = TsAnchors::compute(
                problem,
                shape,
                snapshot.params(),
                program.interior_points(),
                outer_index,
                config.mode == LossMode::Etsonn,
            )?;
            let finite = anchors.base.iter().all(|v| v.is_finite())
                && anchors
                    .resid
                    .as_ref()
                    .map(|r| r.iter().all(|v| v.is_finite()))
                    .unwrap_or(true);
            program.set_anchors(anchors)?;
            carried = None;
            if !finite {
                status = RunStatus::Diverged;
                divergence_iter = Some(iter);
                break 'outer;
            }
        }
        if config.reset_policy() {
            match &mut opt {
                Opt::Adam(a) => a.reset(),
                Opt::Lbfgs(l) => l.reset(),
            }
            carried = None;
        }

        let rel = if outer % config.error_every_outer == 0 {
            reference
                .map(|r| reference_error(problem, shape, &params, r))
                .transpose()?
        } else {
            None
        };
        record_outer(&mut rows, &mut outer_records, outer, iter, final_loss, rel);
    }

    if status != RunStatus::Completed {
        let partial_outer = outer_records.len() + 1;
        record_outer(&mut rows, &mut outer_records, partial_outer, iter, final_loss, None);
    }

    Ok(TrainOutcome {
        params: params.cast::<f64>(),
        history: RunHistory {
            rows,
            outer_records,
            status,
            divergence_iter,
            initial_loss,
            final_loss,
            iterations: iter,
        },
        points,
    })
}

fn diverged(total: f64, initial: f64) -> bool {
    !total.is_finite() || (initial.is_finite() && total > DIVERGENCE_FACTOR * initial.abs().max(1e-300))
}

fn record_outer(
    rows: &mut Vec<HistoryRow>,
    outer_records: &mut Vec<OuterRecord>,
    outer: usize,
    end_iter: usize,
    loss: f64,
    rel: Option<f64>,
) {
    if let Some(err) = rel {
        if let Some(last) = rows.last_mut() {
            last.rel_l2 = Some(err);
        }
    }
    outer_records.push(OuterRecord {
        outer,
        end_iter,
        loss,
        rel_l2: rel,
    });
}

/// Relative L2 of the observable against the reference grid.
pub fn reference_error<T: Real>(
    problem: &ProblemSpec,
    shape: &NetworkShape,
    params: &ParameterVector<T>,
    reference: &ReferenceField,
) -> Result<f64> {
    let params64 = params.cast::<f64>();
    let pred = crate::problems::predict_observable(
        problem,
        shape,
        &params64,
        reference.coords.view(),
    )?;
    crate::report::relative_l2(pred.view(), reference.values.view())
}

/// Central-difference jets of tabulated values on a uniform 1-D mesh
/// (interior nodes only): the derivative provider for the exact-fit table
/// stand-in below.
pub fn fd_jets_1d(values: &Array1<f64>, h: f64) -> JetBatch<f64> {
    let n = values.len();
    let mut jets = JetBatch::zeros(n - 2, 1, 1, 2, vec![(0, 0)]);
    for i in 1..n - 1 {
        let row = i - 1;
        jets.value[(row, 0)] = values[i];
        jets.grad[(row, 0, 0)] = (values[i + 1] - values[i - 1]) / (2.0 * h);
        jets.hess[(row, 0, 0, 0)] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
    }
    jets
}

/// Explicit-mode outer trajectory with the network replaced by an
/// exact-fit table on a uniform Burgers mesh: each outer iteration builds
/// the labels from the table state and the single "inner step" adopts
/// them verbatim. Returns the state after every outer iteration,
/// including the initial one.
pub fn table_explicit_run(
    problem: &ProblemSpec,
    n_nodes: usize,
    dtau: f64,
    outers: usize,
) -> Result<Vec<Array1<f64>>> {
    if problem.id() != crate::problems::ProblemId::BurgersSteady {
        return Err(TsonnError::Unsupported(
            "the table stand-in is defined on the Burgers mesh".into(),
        ));
    }
    if n_nodes < 3 {
        return Err(TsonnError::Config("need at least 3 nodes".into()));
    }
    let h = 2.0 / (n_nodes - 1) as f64;
    let mut state = Array1::from_shape_fn(n_nodes, |i| -(-1.0 + i as f64 * h));
    let mut states = vec![state.clone()];
    for outer in 0..outers {
        let jets = fd_jets_1d(&state, h);
        let resid = pde_residual(problem, &jets)?;
        let labels = LabelField {
            outer_index: outer + 1,
            dtau,
            base: jets.value.clone(),
            resid,
        };
        let values = labels.values();
        for i in 1..n_nodes - 1 {
            state[i] = values[(i - 1, 0)];
        }
        // Boundary values are pinned by the exact fit of the Dirichlet data.
        state[0] = 1.0;
        state[n_nodes - 1] = -1.0;
        states.push(state.clone());
    }
    Ok(states)
}

#[cfg(test)]
mod tests;
