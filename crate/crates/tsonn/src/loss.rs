//! Loss assembly and parameter gradients for the three training modes.
//!
//! All modes share the weighted boundary/initial terms; they differ in the
//! interior term:
//!
//! ```text
//! pinn    |N[u(theta)]|^2
//! etsonn  |(u(theta) - u(snap)) / dtau - N[u(snap)]|^2
//! itsonn  |(u(theta) - u(snap)) / dtau - N[u(theta)]|^2
//! ```
//!
//! Norms are mean squares over the point set (summed over state
//! components). The time-stepped terms are evaluated in the divided form
//! shown, which equals `1/dtau^2 |u - label|^2` algebraically and keeps
//! the identity with the plain residual loss exact at `theta = snapshot`.
//!
//! Interior points are processed in fixed-size chunks combined in chunk
//! order, so values and gradients are bit-identical for any thread count.

use crate::error::{Result, TsonnError};
use crate::net::{
    backward_stacks, forward_stacks, JetBatch, NetworkShape, ParameterVector, StackLayout,
};
use crate::parallel;
use crate::problems::{
    boundary_residual, boundary_residual_vjp, initial_residual, initial_residual_vjp,
    pde_residual, pde_residual_vjp, BoundaryGroup, PointSet, ProblemSpec,
};
use crate::real::{c, Real};
use ndarray::{s, Array2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    Pinn,
    Etsonn,
    Itsonn,
}

impl LossMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossMode::Pinn => "pinn",
            LossMode::Etsonn => "etsonn",
            LossMode::Itsonn => "itsonn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pinn" => Ok(LossMode::Pinn),
            "etsonn" => Ok(LossMode::Etsonn),
            "itsonn" => Ok(LossMode::Itsonn),
            other => Err(TsonnError::Config(format!("unknown mode `{other}`"))),
        }
    }

    pub fn is_time_stepped(&self) -> bool {
        !matches!(self, LossMode::Pinn)
    }
}

impl std::fmt::Display for LossMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Snapshot-derived quantities entering the time-stepped interior terms.
#[derive(Debug, Clone)]
pub struct TsAnchors<T> {
    pub outer_index: usize,
    /// `u(.; snapshot)` at the interior points, `(m, state_dim)`.
    pub base: Array2<T>,
    /// `N[u(.; snapshot)]`; required by the explicit mode only.
    pub resid: Option<Array2<T>>,
}

impl<T: Real> TsAnchors<T> {
    /// Evaluates the snapshot network at `interior`; `with_resid` also
    /// evaluates the interior operator (one order-2 jet pass).
    pub fn compute(
        problem: &ProblemSpec,
        shape: &NetworkShape,
        snapshot: &ParameterVector<T>,
        interior: &Array2<T>,
        outer_index: usize,
        with_resid: bool,
    ) -> Result<Self> {
        if with_resid {
            let jets = crate::net::evaluate_jets_masked(
                snapshot,
                shape,
                interior.view(),
                2,
                problem.pde_pairs(),
            )?;
            let resid = pde_residual(problem, &jets)?;
            Ok(Self {
                outer_index,
                base: jets.value,
                resid: Some(resid),
            })
        } else {
            let jets =
                crate::net::evaluate_jets_masked(snapshot, shape, interior.view(), 0, Vec::new())?;
            Ok(Self {
                outer_index,
                base: jets.value,
                resid: None,
            })
        }
    }
}

/// Loss components in reporting precision. `total` combines them with the
/// problem's weights; `main`, `bc`, `ic` are unweighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub main: f64,
    pub bc: f64,
    pub ic: f64,
}

struct PreparedBoundary<T> {
    group: BoundaryGroup,
    points: Array2<T>,
}

/// A fully bound scalar loss: mode, problem, points, weights, pseudo-time
/// step, and (for time-stepped modes) the snapshot anchors. Evaluating it
/// twice with the same parameters gives identical results.
pub struct LossProgram<T> {
    pub mode: LossMode,
    pub dtau: f64,
    problem: ProblemSpec,
    shape: NetworkShape,
    interior: Array2<T>,
    boundary: Vec<PreparedBoundary<T>>,
    initial: Array2<f64>,
    initial_t: Array2<T>,
    bc_count: usize,
    anchors: Option<TsAnchors<T>>,
}

impl<T: Real> LossProgram<T> {
    pub fn new(
        problem: &ProblemSpec,
        points: &PointSet,
        shape: &NetworkShape,
        mode: LossMode,
        dtau: f64,
    ) -> Result<Self> {
        problem.validate()?;
        if shape.input_dim() != problem.input_dim() || shape.output_dim() != problem.state_dim() {
            return Err(TsonnError::DimensionMismatch(format!(
                "network {}->{} does not fit problem {} ({}->{})",
                shape.input_dim(),
                shape.output_dim(),
                problem.id(),
                problem.input_dim(),
                problem.state_dim()
            )));
        }
        if mode.is_time_stepped() && dtau <= 0.0 {
            return Err(TsonnError::Config("dtau must be positive".into()));
        }
        let boundary = points
            .boundary
            .iter()
            .map(|g| PreparedBoundary {
                group: g.clone(),
                points: g.points.mapv(T::from_f64),
            })
            .collect();
        Ok(Self {
            mode,
            dtau,
            problem: problem.clone(),
            shape: shape.clone(),
            interior: points.interior.mapv(T::from_f64),
            boundary,
            initial: points.initial.clone(),
            initial_t: points.initial.mapv(T::from_f64),
            bc_count: points.boundary_residual_count(),
            anchors: None,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn interior_count(&self) -> usize {
        self.interior.nrows()
    }

    pub fn interior_points(&self) -> &Array2<T> {
        &self.interior
    }

    pub fn anchors(&self) -> Option<&TsAnchors<T>> {
        self.anchors.as_ref()
    }

    /// Binds the snapshot anchors used by the time-stepped modes.
    pub fn set_anchors(&mut self, anchors: TsAnchors<T>) -> Result<()> {
        if anchors.base.nrows() != self.interior.nrows() {
            return Err(TsonnError::DimensionMismatch(
                "anchor rows do not match interior points".into(),
            ));
        }
        if self.mode == LossMode::Etsonn && anchors.resid.is_none() {
            return Err(TsonnError::Config(
                "explicit mode needs snapshot residuals".into(),
            ));
        }
        self.anchors = Some(anchors);
        Ok(())
    }

    /// Replaces the interior points (after resampling). Anchors are cleared
    /// because they are tied to the old points.
    pub fn set_interior(&mut self, interior: &Array2<f64>) {
        self.interior = interior.mapv(T::from_f64);
        self.anchors = None;
    }

    fn check_ready(&self) -> Result<()> {
        if self.mode.is_time_stepped() && self.anchors.is_none() {
            return Err(TsonnError::Config(format!(
                "{} loss evaluated without snapshot anchors",
                self.mode
            )));
        }
        Ok(())
    }

    /// Jet order and Hessian pairs the interior term needs.
    fn interior_requirements(&self) -> (u8, Vec<(usize, usize)>) {
        match self.mode {
            LossMode::Etsonn => (0, Vec::new()),
            _ => (2, self.problem.pde_pairs()),
        }
    }

    /// Loss value only.
    pub fn evaluate(&self, params: &ParameterVector<T>) -> Result<LossValue> {
        Ok(self.eval_inner(params, false)?.0)
    }

    /// Loss value and parameter gradient. A non-finite loss is a divergence
    /// signal: the value is returned but the gradient is withheld.
    pub fn loss_gradient(
        &self,
        params: &ParameterVector<T>,
    ) -> Result<(LossValue, Option<ParameterVector<T>>)> {
        self.eval_inner(params, true)
    }

    fn eval_inner(
        &self,
        params: &ParameterVector<T>,
        want_grad: bool,
    ) -> Result<(LossValue, Option<ParameterVector<T>>)> {
        self.check_ready()?;
        if params.len() != self.shape.param_len() {
            return Err(TsonnError::DimensionMismatch(
                "parameter vector does not match network shape".into(),
            ));
        }
        let m = self.interior.nrows();
        let state = self.problem.state_dim();
        let d = self.problem.input_dim();
        let (order, pairs) = self.interior_requirements();
        let layout = StackLayout::new(d, order, pairs.clone());
        let inv_m = 1.0 / m as f64;
        let dtau_t = c::<T>(self.dtau);

        struct ChunkOut<T> {
            sq: f64,
            grad: Option<ParameterVector<T>>,
        }

        let chunks = parallel::map_chunks(m, |s0, e0| -> Result<ChunkOut<T>> {
            let n = e0 - s0;
            let x = self.interior.slice(s![s0..e0, ..]);
            let (stack, trace) = forward_stacks(&self.shape, params, x, &layout, want_grad);
            let mut jets = JetBatch::zeros(n, state, d, order, pairs.clone());
            crate::net::stack_to_jets(&stack, &layout.with_n(n), &mut jets, 0);

            let resid = match self.mode {
                LossMode::Pinn => pde_residual(&self.problem, &jets)?,
                LossMode::Etsonn => {
                    let anchors = self.anchors.as_ref().unwrap();
                    let base = anchors.base.slice(s![s0..e0, ..]);
                    let snap_resid = anchors.resid.as_ref().unwrap().slice(s![s0..e0, ..]);
                    let mut r = Array2::zeros((n, state));
                    for i in 0..n {
                        for c0 in 0..state {
                            r[(i, c0)] = (jets.value[(i, c0)] - base[(i, c0)]) / dtau_t
                                - snap_resid[(i, c0)];
                        }
                    }
                    r
                }
                LossMode::Itsonn => {
                    let anchors = self.anchors.as_ref().unwrap();
                    let base = anchors.base.slice(s![s0..e0, ..]);
                    let n_theta = pde_residual(&self.problem, &jets)?;
                    let mut r = Array2::zeros((n, state));
                    for i in 0..n {
                        for c0 in 0..state {
                            r[(i, c0)] = (jets.value[(i, c0)] - base[(i, c0)]) / dtau_t
                                - n_theta[(i, c0)];
                        }
                    }
                    r
                }
            };

            let sq: f64 = resid.iter().map(|&v| v.to_f64() * v.to_f64()).sum();

            let grad = if want_grad {
                let mut jet_cot = JetBatch::zeros(n, state, d, order, pairs.clone());
                let w = resid.mapv(|r| r * c::<T>(2.0 * inv_m));
                match self.mode {
                    LossMode::Pinn => {
                        pde_residual_vjp(&self.problem, &jets, &w, &mut jet_cot);
                    }
                    LossMode::Etsonn => {
                        for i in 0..n {
                            for c0 in 0..state {
                                jet_cot.value[(i, c0)] += w[(i, c0)] / dtau_t;
                            }
                        }
                    }
                    LossMode::Itsonn => {
                        for i in 0..n {
                            for c0 in 0..state {
                                jet_cot.value[(i, c0)] += w[(i, c0)] / dtau_t;
                            }
                        }
                        let neg_w = w.mapv(|v| -v);
                        pde_residual_vjp(&self.problem, &jets, &neg_w, &mut jet_cot);
                    }
                }
                let cot_stack = crate::net::jets_cot_to_stack(&jet_cot, &layout.with_n(n));
                let mut g = ParameterVector::zeros(params.len());
                backward_stacks(
                    &self.shape,
                    params,
                    trace.as_ref().unwrap(),
                    cot_stack,
                    &layout,
                    &mut g,
                );
                Some(g)
            } else {
                None
            };
            Ok(ChunkOut { sq, grad })
        });

        let mut main_sq = 0.0f64;
        let mut grad = want_grad.then(|| ParameterVector::<T>::zeros(params.len()));
        for chunk in chunks {
            let chunk = chunk?;
            main_sq += chunk.sq;
            if let (Some(g), Some(cg)) = (grad.as_mut(), chunk.grad.as_ref()) {
                g.scaled_add(T::one(), cg);
            }
        }
        let main = main_sq * inv_m;

        // Boundary groups (small; evaluated sequentially).
        let mut bc_sq = 0.0f64;
        let bc_weight = 2.0 * self.problem.lambda_bc / self.bc_count.max(1) as f64;
        for prepared in &self.boundary {
            let group = &prepared.group;
            let order = group.jet_order();
            let layout = StackLayout::new(d, order, Vec::new());
            let n = prepared.points.nrows();
            let (stack, trace) =
                forward_stacks(&self.shape, params, prepared.points.view(), &layout, want_grad);
            let mut jets = JetBatch::zeros(n, state, d, order, Vec::new());
            crate::net::stack_to_jets(&stack, &layout.with_n(n), &mut jets, 0);
            let resid = boundary_residual(&self.problem, group, &jets)?;
            bc_sq += resid.iter().map(|&v| v.to_f64() * v.to_f64()).sum::<f64>();
            if let Some(g) = grad.as_mut() {
                let mut jet_cot = JetBatch::zeros(n, state, d, order, Vec::new());
                let w = resid.mapv(|r| r * c::<T>(bc_weight));
                boundary_residual_vjp(&self.problem, group, &jets, &w, &mut jet_cot);
                let cot_stack = crate::net::jets_cot_to_stack(&jet_cot, &layout.with_n(n));
                backward_stacks(
                    &self.shape,
                    params,
                    trace.as_ref().unwrap(),
                    cot_stack,
                    &layout,
                    g,
                );
            }
        }
        let bc = bc_sq / self.bc_count.max(1) as f64;

        // Initial points (time-dependent problems).
        let mut ic = 0.0f64;
        if self.initial.nrows() > 0 {
            let n = self.initial.nrows();
            let layout = StackLayout::new(d, 0, Vec::new());
            let (stack, trace) =
                forward_stacks(&self.shape, params, self.initial_t.view(), &layout, want_grad);
            let mut jets = JetBatch::zeros(n, state, d, 0, Vec::new());
            crate::net::stack_to_jets(&stack, &layout.with_n(n), &mut jets, 0);
            let resid = initial_residual(&self.problem, self.initial.view(), &jets)?;
            let ic_sq: f64 = resid.iter().map(|&v| v.to_f64() * v.to_f64()).sum();
            ic = ic_sq / n as f64;
            if let Some(g) = grad.as_mut() {
                let mut jet_cot = JetBatch::zeros(n, state, d, 0, Vec::new());
                let w = resid.mapv(|r| r * c::<T>(2.0 * self.problem.lambda_ic / n as f64));
                initial_residual_vjp(&w, &mut jet_cot);
                let cot_stack = crate::net::jets_cot_to_stack(&jet_cot, &layout.with_n(n));
                backward_stacks(
                    &self.shape,
                    params,
                    trace.as_ref().unwrap(),
                    cot_stack,
                    &layout,
                    g,
                );
            }
        }

        let total = main + self.problem.lambda_bc * bc + self.problem.lambda_ic * ic;
        let value = LossValue { total, main, bc, ic };
        if !total.is_finite() {
            return Ok((value, None));
        }
        Ok((value, grad))
    }
}

#[cfg(test)]
mod tests;
