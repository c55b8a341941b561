//! First-order (Adam) and quasi-Newton (L-BFGS) optimizers with an
//! explicit history reset for outer-iteration restarts.

use crate::error::{Result, TsonnError};
use crate::net::ParameterVector;
use crate::real::{c, Real};
use std::collections::VecDeque;

/// Bias-corrected Adam.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Real> AdamState<T> {
    pub fn new(param_len: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: vec![T::zero(); param_len],
            v: vec![T::zero(); param_len],
            t: 0,
            lr,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn with_defaults(param_len: usize) -> Self {
        Self::new(param_len, 1e-3, 0.9, 0.999, 1e-8)
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn moments(&self) -> (&[T], &[T]) {
        (&self.m, &self.v)
    }

    /// One update. A non-finite gradient refuses the step.
    pub fn step(&mut self, params: &mut ParameterVector<T>, grad: &ParameterVector<T>) -> Result<()> {
        if grad.len() != params.len() || grad.len() != self.m.len() {
            return Err(TsonnError::DimensionMismatch("adam buffers".into()));
        }
        if !grad.all_finite() {
            return Err(TsonnError::NonFiniteInput(
                "gradient contains NaN or Inf; step refused".into(),
            ));
        }
        self.t += 1;
        let b1 = c::<T>(self.beta1);
        let b2 = c::<T>(self.beta2);
        let one = T::one();
        let corr1 = one - c::<T>(self.beta1.powi(self.t as i32));
        let corr2 = one - c::<T>(self.beta2.powi(self.t as i32));
        let lr = c::<T>(self.lr);
        let eps = c::<T>(self.eps);
        for ((p, g), (m, v)) in params
            .as_mut_slice()
            .iter_mut()
            .zip(grad.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = b1 * *m + (one - b1) * *g;
            *v = b2 * *v + (one - b2) * *g * *g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }

    /// Clears moments and the step counter; hyperparameters are kept.
    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = T::zero());
        self.v.iter_mut().for_each(|x| *x = T::zero());
        self.t = 0;
    }
}

/// Outcome of one L-BFGS iteration. `P` is caller payload attached to
/// each evaluation (for example a loss breakdown); the outcome carries the
/// payload of the accepted point.
#[derive(Debug, Clone)]
pub struct LbfgsOutcome<T, P> {
    pub loss: T,
    pub grad: ParameterVector<T>,
    pub payload: Option<P>,
    /// Function/gradient evaluations consumed by the line search.
    pub evals: usize,
    /// Set when even the steepest-descent fallback failed.
    pub stalled: bool,
}

/// Limited-memory BFGS with a strong-Wolfe line search.
#[derive(Debug, Clone)]
pub struct LbfgsState<T> {
    history: VecDeque<(Vec<T>, Vec<T>, T)>, // (s, y, 1 / s.y)
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl<T: Real> LbfgsState<T> {
    pub fn new(memory: usize, c1: f64, c2: f64, max_line_search: usize) -> Self {
        Self {
            history: VecDeque::with_capacity(memory),
            memory,
            c1,
            c2,
            max_line_search,
        }
    }

    pub fn with_defaults() -> Self {
        Self::new(50, 1e-4, 0.9, 25)
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Clears the curvature history; hyperparameters are kept.
    pub fn reset(&mut self) {
        self.history.clear();
    }

    /// Two-loop recursion: approximate `H * g` from stored pairs (identity
    /// scaling on an empty history).
    fn direction(&self, grad: &ParameterVector<T>) -> Vec<T> {
        let n = grad.len();
        let mut q: Vec<T> = grad.as_slice().to_vec();
        let k = self.history.len();
        let mut alpha = vec![T::zero(); k];
        for (i, (s, y, rho)) in self.history.iter().enumerate().rev() {
            let a = *rho * dot(s, &q);
            alpha[i] = a;
            axpy(&mut q, -a, y);
        }
        if let Some((s, y, _)) = self.history.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|x| *x = *x * gamma);
        }
        for (i, (s, y, rho)) in self.history.iter().enumerate() {
            let b = *rho * dot(y, &q);
            axpy(&mut q, alpha[i] - b, s);
        }
        let _ = n;
        q.iter_mut().for_each(|x| *x = -*x);
        q
    }

    /// One quasi-Newton iteration from `(params, loss, grad)`.
    ///
    /// `eval` returns loss and gradient at trial parameters, or `None` for
    /// a non-finite loss (treated as an overlong step). On line-search
    /// failure the step falls back to backtracking steepest descent, and
    /// only if that also fails is `stalled` set (parameters unchanged).
    pub fn step<F, P>(
        &mut self,
        params: &mut ParameterVector<T>,
        loss: T,
        grad: &ParameterVector<T>,
        eval: &mut F,
    ) -> LbfgsOutcome<T, P>
    where
        F: FnMut(&ParameterVector<T>) -> Option<(T, ParameterVector<T>, P)>,
    {
        let mut dir = self.direction(grad);
        let mut slope = dot_pv(&dir, grad);
        if !(slope < T::zero()) {
            // Degenerate curvature model; drop it and go downhill.
            self.reset();
            dir = grad.iter().map(|&g| -g).collect();
            slope = dot_pv(&dir, grad);
        }

        match strong_wolfe(params, loss, grad, &dir, slope, self, eval) {
            Some((alpha, f_new, g_new, payload, evals)) => {
                self.accept(params, grad, &dir, alpha, &g_new);
                let mut new_params = params.clone();
                axpy_pv(&mut new_params, c::<T>(alpha), &dir);
                *params = new_params;
                LbfgsOutcome {
                    loss: f_new,
                    grad: g_new,
                    payload: Some(payload),
                    evals,
                    stalled: false,
                }
            }
            None => {
                // Fallback: backtracking Armijo on the raw gradient.
                self.reset();
                let dir: Vec<T> = grad.iter().map(|&g| -g).collect();
                let slope = dot_pv(&dir, grad);
                let mut alpha = 1.0 / grad.norm_inf().to_f64().max(1.0);
                let mut evals = 0usize;
                for _ in 0..40 {
                    let mut trial = params.clone();
                    axpy_pv(&mut trial, c::<T>(alpha), &dir);
                    evals += 1;
                    if let Some((f_new, g_new, payload)) = eval(&trial) {
                        if f_new <= loss + c::<T>(self.c1 * alpha) * slope {
                            self.accept(params, grad, &dir, alpha, &g_new);
                            *params = trial;
                            return LbfgsOutcome {
                                loss: f_new,
                                grad: g_new,
                                payload: Some(payload),
                                evals,
                                stalled: false,
                            };
                        }
                    }
                    alpha *= 0.5;
                }
                LbfgsOutcome {
                    loss,
                    grad: grad.clone(),
                    payload: None,
                    evals,
                    stalled: true,
                }
            }
        }
    }

    /// Stores the curvature pair for the accepted step; pairs with
    /// non-positive `s . y` never enter the history.
    fn accept(
        &mut self,
        _params: &ParameterVector<T>,
        grad_old: &ParameterVector<T>,
        dir: &[T],
        alpha: f64,
        grad_new: &ParameterVector<T>,
    ) {
        let a = c::<T>(alpha);
        let s: Vec<T> = dir.iter().map(|&d| a * d).collect();
        let y: Vec<T> = grad_new
            .iter()
            .zip(grad_old.iter())
            .map(|(&gn, &go)| gn - go)
            .collect();
        let sy = dot(&s, &y);
        if sy > T::zero() && sy.is_finite() {
            if self.history.len() >= self.memory {
                self.history.pop_front();
            }
            let rho = T::one() / sy;
            self.history.push_back((s, y, rho));
        }
        debug_assert!(self.history.iter().all(|(s, y, _)| dot(s, y) > T::zero()));
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

fn dot_pv<T: Real>(a: &[T], b: &ParameterVector<T>) -> T {
    dot(a, b.as_slice())
}

fn axpy<T: Real>(dst: &mut [T], a: T, src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d += a * *s;
    }
}

fn axpy_pv<T: Real>(dst: &mut ParameterVector<T>, a: T, src: &[T]) {
    axpy(dst.as_mut_slice(), a, src);
}

/// Strong-Wolfe line search (bracket and zoom with cubic interpolation).
/// Returns `(alpha, loss, grad, payload, evals)` or `None` after
/// `max_line_search` trial evaluations.
#[allow(clippy::too_many_arguments)]
fn strong_wolfe<T: Real, F, P>(
    params: &ParameterVector<T>,
    f0: T,
    _g0: &ParameterVector<T>,
    dir: &[T],
    slope0: T,
    cfg: &LbfgsState<T>,
    eval: &mut F,
) -> Option<(f64, T, ParameterVector<T>, P, usize)>
where
    F: FnMut(&ParameterVector<T>) -> Option<(T, ParameterVector<T>, P)>,
{
    let c1 = c::<T>(cfg.c1);
    let c2 = c::<T>(cfg.c2);
    let mut evals = 0usize;
    let mut probe = |alpha: f64| -> Option<(T, T, ParameterVector<T>, P)> {
        let mut trial = params.clone();
        axpy_pv(&mut trial, c::<T>(alpha), dir);
        let (f, g, payload) = eval(&trial)?;
        let d = dot_pv(dir, &g);
        Some((f, d, g, payload))
    };

    // Bracketing phase: unit step first (quasi-Newton scaling), then expand.
    let mut alpha_prev = 0.0f64;
    let mut f_prev = f0;
    let mut d_prev = slope0;
    let mut g_prev: Option<(ParameterVector<T>, P)> = None;
    let mut alpha = 1.0f64;
    #[allow(clippy::type_complexity)]
    let mut bracket: Option<(f64, T, T, f64, T, T, Option<(ParameterVector<T>, P)>)> = None;

    while evals < cfg.max_line_search {
        evals += 1;
        match probe(alpha) {
            None => {
                // Non-finite loss: the step was too long; bracket on it.
                bracket = Some((
                    alpha_prev,
                    f_prev,
                    d_prev,
                    alpha,
                    T::infinity(),
                    T::nan(),
                    g_prev.take(),
                ));
                break;
            }
            Some((f, d, g, payload)) => {
                if f > f0 + c1 * c::<T>(alpha) * slope0 || (evals > 1 && f >= f_prev) {
                    bracket = Some((alpha_prev, f_prev, d_prev, alpha, f, d, g_prev.take()));
                    break;
                }
                if d.abs() <= -c2 * slope0 {
                    return Some((alpha, f, g, payload, evals));
                }
                if d >= T::zero() {
                    bracket = Some((alpha, f, d, alpha_prev, f_prev, d_prev, Some((g, payload))));
                    break;
                }
                alpha_prev = alpha;
                f_prev = f;
                d_prev = d;
                g_prev = Some((g, payload));
                alpha *= 2.0;
            }
        }
    }
    let (mut lo, mut f_lo, mut d_lo, mut hi, mut f_hi, mut d_hi, mut g_lo) = bracket?;

    // Zoom phase.
    while evals < cfg.max_line_search {
        let trial = cubic_interpolate(
            lo,
            f_lo.to_f64(),
            d_lo.to_f64(),
            hi,
            f_hi.to_f64(),
            d_hi.to_f64(),
        );
        evals += 1;
        let Some((f, d, g, payload)) = probe(trial) else {
            hi = trial;
            f_hi = T::infinity();
            d_hi = T::nan();
            continue;
        };
        if f > f0 + c1 * c::<T>(trial) * slope0 || f >= f_lo {
            hi = trial;
            f_hi = f;
            d_hi = d;
        } else {
            if d.abs() <= -c2 * slope0 {
                return Some((trial, f, g, payload, evals));
            }
            if d.to_f64() * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
                d_hi = d_lo;
            }
            lo = trial;
            f_lo = f;
            d_lo = d;
            g_lo = Some((g, payload));
        }
        if (hi - lo).abs() < 1e-14 * lo.abs().max(1.0) {
            break;
        }
    }
    // Accept the best bracketed point if it satisfies Armijo.
    if let Some((g, payload)) = g_lo {
        if lo > 0.0 && f_lo <= f0 + c1 * c::<T>(lo) * slope0 {
            return Some((lo, f_lo, g, payload, evals));
        }
    }
    None
}

/// Minimizer of the cubic through two points with derivatives, clamped to
/// the bracket interior.
fn cubic_interpolate(x1: f64, f1: f64, g1: f64, x2: f64, f2: f64, g2: f64) -> f64 {
    let (lo, hi) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
    let width = hi - lo;
    let bounded = |x: f64| x.max(lo + 0.1 * width).min(hi - 0.1 * width);
    if !(f1.is_finite() && f2.is_finite() && g1.is_finite() && g2.is_finite()) {
        return 0.5 * (lo + hi);
    }
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_sq = d1 * d1 - g1 * g2;
    if d2_sq >= 0.0 {
        let d2 = d2_sq.sqrt() * (x2 - x1).signum();
        let min_pos = x2 - (x2 - x1) * (g2 + d2 - d1) / (g2 - g1 + 2.0 * d2);
        if min_pos.is_finite() {
            return bounded(min_pos);
        }
    }
    0.5 * (lo + hi)
}
