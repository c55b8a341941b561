//! Channel-stacked batch evaluation of network jets.
//!
//! A batch of n points with derivative order 2 carries, per network unit,
//! one value channel, `d` first-derivative channels, and one channel per
//! requested Hessian pair. All channels of one layer are stacked into a
//! single `(channels*n, width)` matrix so each affine layer is one GEMM;
//! the tanh chain rule is applied block-wise. The reverse pass propagates
//! cotangents through the same structure and accumulates parameter
//! gradients, two GEMMs per layer.

use super::{NetworkShape, ParameterVector};
use crate::real::{c, Real};
use ndarray::{s, Array2, ArrayView2, Zip};

/// Channel bookkeeping for one batch.
#[derive(Debug, Clone)]
pub(crate) struct StackLayout {
    pub n: usize,
    pub d: usize,
    pub order: u8,
    pub pairs: Vec<(usize, usize)>,
}

impl StackLayout {
    pub fn new(d: usize, order: u8, pairs: Vec<(usize, usize)>) -> Self {
        debug_assert!(order <= 2);
        debug_assert!(order >= 2 || pairs.is_empty());
        Self {
            n: 0,
            d,
            order,
            pairs,
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        let mut l = self.clone();
        l.n = n;
        l
    }

    pub fn channels(&self) -> usize {
        let mut ch = 1;
        if self.order >= 1 {
            ch += self.d;
        }
        if self.order >= 2 {
            ch += self.pairs.len();
        }
        ch
    }

    pub fn rows(&self) -> usize {
        self.channels() * self.n
    }

    fn val_rows(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    fn grad_rows(&self, k: usize) -> std::ops::Range<usize> {
        let base = (1 + k) * self.n;
        base..base + self.n
    }

    fn pair_rows(&self, idx: usize) -> std::ops::Range<usize> {
        let base = (1 + self.d + idx) * self.n;
        base..base + self.n
    }
}

/// Cached forward state needed by the reverse pass.
pub(crate) struct JetTrace<T> {
    /// Activation stacks: index 0 is the input seed stack, index `l + 1`
    /// the output of affine layer `l`.
    pub activations: Vec<Array2<T>>,
    /// Pre-activation stacks of the tanh layers only.
    pub z_hidden: Vec<Array2<T>>,
}

fn seed_stack<T: Real>(x: ArrayView2<T>, layout: &StackLayout) -> Array2<T> {
    let n = x.nrows();
    let d = layout.d;
    let mut stack = Array2::zeros((layout.channels() * n, d));
    stack.slice_mut(s![layout.val_rows(), ..]).assign(&x);
    if layout.order >= 1 {
        for k in 0..d {
            stack
                .slice_mut(s![layout.grad_rows(k), ..])
                .column_mut(k)
                .fill(T::one());
        }
    }
    stack
}

/// One tanh layer applied to a pre-activation stack.
fn tanh_forward<T: Real>(z: &Array2<T>, layout: &StackLayout) -> Array2<T> {
    let width = z.ncols();
    let mut a = Array2::zeros(z.raw_dim());
    let t = z.slice(s![layout.val_rows(), ..]).mapv(|v| v.tanh());
    a.slice_mut(s![layout.val_rows(), ..]).assign(&t);
    if layout.order == 0 {
        return a;
    }

    let mut p = Array2::<T>::zeros((layout.n, width));
    Zip::from(&mut p).and(&t).for_each(|p, &t| *p = T::one() - t * t);
    for k in 0..layout.d {
        let rows = layout.grad_rows(k);
        let zk = z.slice(s![rows.clone(), ..]);
        Zip::from(a.slice_mut(s![rows, ..]))
            .and(&p)
            .and(&zk)
            .for_each(|a, &p, &zk| *a = p * zk);
    }
    if layout.order < 2 {
        return a;
    }

    let mut q = Array2::<T>::zeros((layout.n, width));
    Zip::from(&mut q)
        .and(&t)
        .and(&p)
        .for_each(|q, &t, &p| *q = c::<T>(-2.0) * t * p);
    for (idx, &(i, j)) in layout.pairs.iter().enumerate() {
        let zi = z.slice(s![layout.grad_rows(i), ..]);
        let zj = z.slice(s![layout.grad_rows(j), ..]);
        let zp = z.slice(s![layout.pair_rows(idx), ..]);
        Zip::from(a.slice_mut(s![layout.pair_rows(idx), ..]))
            .and(&q)
            .and(&zi)
            .and(&zj)
            .for_each(|a, &q, &zi, &zj| *a = q * zi * zj);
        Zip::from(a.slice_mut(s![layout.pair_rows(idx), ..]))
            .and(&p)
            .and(&zp)
            .for_each(|a, &p, &zp| *a += p * zp);
    }
    a
}

/// Cotangent of a tanh layer: folds the output cotangent `abar` back onto
/// the pre-activation stack. `t` is the layer's value-channel output.
fn tanh_backward<T: Real>(
    abar: &Array2<T>,
    z: &Array2<T>,
    t: ArrayView2<T>,
    layout: &StackLayout,
) -> Array2<T> {
    let width = z.ncols();
    let mut zbar = Array2::zeros(z.raw_dim());
    let mut p = Array2::<T>::zeros((layout.n, width));
    Zip::from(&mut p).and(&t).for_each(|p, &t| *p = T::one() - t * t);

    // Value channel: direct term; derivative-channel terms accumulate below.
    {
        let mut vbar = zbar.slice_mut(s![layout.val_rows(), ..]);
        Zip::from(&mut vbar)
            .and(&abar.slice(s![layout.val_rows(), ..]))
            .and(&p)
            .for_each(|z, &a, &p| *z = a * p);
    }
    if layout.order == 0 {
        return zbar;
    }

    let mut q = Array2::<T>::zeros((layout.n, width));
    Zip::from(&mut q)
        .and(&t)
        .and(&p)
        .for_each(|q, &t, &p| *q = c::<T>(-2.0) * t * p);

    for k in 0..layout.d {
        let rows = layout.grad_rows(k);
        let ak = abar.slice(s![rows.clone(), ..]);
        let zk = z.slice(s![rows.clone(), ..]);
        Zip::from(zbar.slice_mut(s![rows, ..]))
            .and(&ak)
            .and(&p)
            .for_each(|z, &a, &p| *z = a * p);
        Zip::from(zbar.slice_mut(s![layout.val_rows(), ..]))
            .and(&ak)
            .and(&zk)
            .and(&q)
            .for_each(|v, &a, &zk, &q| *v += a * zk * q);
    }
    if layout.order < 2 {
        return zbar;
    }

    let mut r = Array2::<T>::zeros((layout.n, width));
    Zip::from(&mut r)
        .and(&t)
        .and(&p)
        .for_each(|r, &t, &p| *r = p * (c::<T>(6.0) * t * t - c::<T>(2.0)));

    for (idx, &(i, j)) in layout.pairs.iter().enumerate() {
        let prow = layout.pair_rows(idx);
        let ap = abar.slice(s![prow.clone(), ..]);
        let zi = z.slice(s![layout.grad_rows(i), ..]);
        let zj = z.slice(s![layout.grad_rows(j), ..]);
        let zp = z.slice(s![prow.clone(), ..]);
        Zip::from(zbar.slice_mut(s![prow, ..]))
            .and(&ap)
            .and(&p)
            .for_each(|z, &a, &p| *z = a * p);
        Zip::from(zbar.slice_mut(s![layout.val_rows(), ..]))
            .and(&ap)
            .and(&r)
            .and(&zi)
            .and(&zj)
            .for_each(|v, &a, &r, &zi, &zj| *v += a * r * zi * zj);
        Zip::from(zbar.slice_mut(s![layout.val_rows(), ..]))
            .and(&ap)
            .and(&q)
            .and(&zp)
            .for_each(|v, &a, &q, &zp| *v += a * q * zp);
        if i == j {
            Zip::from(zbar.slice_mut(s![layout.grad_rows(i), ..]))
                .and(&ap)
                .and(&q)
                .and(&zi)
                .for_each(|g, &a, &q, &zi| *g += c::<T>(2.0) * a * q * zi);
        } else {
            Zip::from(zbar.slice_mut(s![layout.grad_rows(i), ..]))
                .and(&ap)
                .and(&q)
                .and(&zj)
                .for_each(|g, &a, &q, &zj| *g += a * q * zj);
            Zip::from(zbar.slice_mut(s![layout.grad_rows(j), ..]))
                .and(&ap)
                .and(&q)
                .and(&zi)
                .for_each(|g, &a, &q, &zi| *g += a * q * zi);
        }
    }
    zbar
}

/// Forward pass over one point chunk. Returns the output stack and, when
/// requested, the trace consumed by [`backward_stacks`].
pub(crate) fn forward_stacks<T: Real>(
    shape: &NetworkShape,
    params: &ParameterVector<T>,
    x: ArrayView2<T>,
    layout: &StackLayout,
    want_trace: bool,
) -> (Array2<T>, Option<JetTrace<T>>) {
    let layout = layout.with_n(x.nrows());
    let num_layers = shape.num_layers();
    let mut activations: Vec<Array2<T>> = Vec::new();
    let mut z_hidden: Vec<Array2<T>> = Vec::new();

    let mut a = seed_stack(x, &layout);
    for l in 0..num_layers {
        let w = params.weights(shape, l);
        let b = params.bias(shape, l);
        let mut z = a.dot(&w.t());
        {
            let mut vrows = z.slice_mut(s![layout.val_rows(), ..]);
            vrows += &b;
        }
        if want_trace {
            activations.push(a);
        }
        if l + 1 < num_layers {
            let a_next = tanh_forward(&z, &layout);
            if want_trace {
                z_hidden.push(z);
            }
            a = a_next;
        } else {
            a = z;
        }
    }

    if want_trace {
        activations.push(a.clone());
        (
            a,
            Some(JetTrace {
                activations,
                z_hidden,
            }),
        )
    } else {
        (a, None)
    }
}

/// Reverse pass: output-stack cotangent to parameter gradient, accumulated
/// into `grad_out`.
pub(crate) fn backward_stacks<T: Real>(
    shape: &NetworkShape,
    params: &ParameterVector<T>,
    trace: &JetTrace<T>,
    out_cot: Array2<T>,
    layout: &StackLayout,
    grad_out: &mut ParameterVector<T>,
) {
    let n = out_cot.nrows() / layout.channels();
    let layout = layout.with_n(n);
    let num_layers = shape.num_layers();
    let offsets = shape.layer_offsets();
    let dims = shape.layer_dims();

    let mut abar = out_cot;
    for l in (0..num_layers).rev() {
        let zbar = if l + 1 == num_layers {
            abar
        } else {
            let t = trace.activations[l + 1].slice(s![layout.val_rows(), ..]);
            tanh_backward(&abar, &trace.z_hidden[l], t, &layout)
        };

        let wbar = zbar.t().dot(&trace.activations[l]);
        let (fan_in, fan_out) = dims[l];
        let at = offsets[l];
        let gw = &mut grad_out.as_mut_slice()[at..at + fan_in * fan_out];
        for ((o, i), &v) in wbar.indexed_iter() {
            gw[o * fan_in + i] += v;
        }
        let gb = &mut grad_out.as_mut_slice()[at + fan_in * fan_out..at + fan_in * fan_out + fan_out];
        for row in layout.val_rows() {
            for (o, g) in gb.iter_mut().enumerate() {
                *g += zbar[(row, o)];
            }
        }

        if l > 0 {
            abar = zbar.dot(&params.weights(shape, l));
        } else {
            break;
        }
    }
}

/// Copies an output stack into a [`super::JetBatch`] at point offset `at`.
pub(crate) fn stack_to_jets<T: Real>(
    stack: &Array2<T>,
    layout: &StackLayout,
    jets: &mut super::JetBatch<T>,
    at: usize,
) {
    let layout = layout.with_n(stack.nrows() / layout.channels());
    let n = layout.n;
    let out = stack.ncols();
    for i in 0..n {
        for o in 0..out {
            jets.value[(at + i, o)] = stack[(i, o)];
        }
    }
    if layout.order >= 1 {
        for k in 0..layout.d {
            let rows = layout.grad_rows(k);
            for i in 0..n {
                for o in 0..out {
                    jets.grad[(at + i, o, k)] = stack[(rows.start + i, o)];
                }
            }
        }
    }
    if layout.order >= 2 {
        for (idx, &(pi, pj)) in layout.pairs.iter().enumerate() {
            let rows = layout.pair_rows(idx);
            for i in 0..n {
                for o in 0..out {
                    let v = stack[(rows.start + i, o)];
                    jets.hess[(at + i, o, pi, pj)] = v;
                    jets.hess[(at + i, o, pj, pi)] = v;
                }
            }
        }
    }
}

/// Folds a `JetBatch`-shaped cotangent into output-stack form. For an
/// off-diagonal pair both symmetric `hess` entries contribute, since
/// `stack_to_jets` mirrored the single stored channel into both.
pub(crate) fn jets_cot_to_stack<T: Real>(
    cot: &super::JetBatch<T>,
    layout: &StackLayout,
) -> Array2<T> {
    let n = cot.len();
    let out = cot.value.ncols();
    let layout = layout.with_n(n);
    let mut stack = Array2::zeros((layout.rows(), out));
    for i in 0..n {
        for o in 0..out {
            stack[(i, o)] = cot.value[(i, o)];
        }
    }
    if layout.order >= 1 {
        for k in 0..layout.d {
            let rows = layout.grad_rows(k);
            for i in 0..n {
                for o in 0..out {
                    stack[(rows.start + i, o)] = cot.grad[(i, o, k)];
                }
            }
        }
    }
    if layout.order >= 2 {
        for (idx, &(pi, pj)) in layout.pairs.iter().enumerate() {
            let rows = layout.pair_rows(idx);
            for i in 0..n {
                for o in 0..out {
                    let mut v = cot.hess[(i, o, pi, pj)];
                    if pi != pj {
                        v += cot.hess[(i, o, pj, pi)];
                    }
                    stack[(rows.start + i, o)] = v;
                }
            }
        }
    }
    stack
}
