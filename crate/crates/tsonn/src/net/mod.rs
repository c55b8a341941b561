//! Fully connected tanh network with analytic propagation of input jets
//! (value, gradient, Hessian) and reverse-mode parameter gradients.
//!
//! The parameter layout is layer-major: for each layer, the weight matrix
//! in row-major `(fan_out, fan_in)` order followed by the bias vector.

mod batch;

pub(crate) use batch::{
    backward_stacks, forward_stacks, jets_cot_to_stack, stack_to_jets, StackLayout,
};

use crate::error::{Result, TsonnError};
use crate::real::{c, Real};
use ndarray::{Array2, Array3, Array4, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Architecture of the solution network: tanh hidden layers, identity output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkShape {
    input_dim: usize,
    output_dim: usize,
    hidden_layers: usize,
    hidden_width: usize,
}

impl NetworkShape {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        hidden_layers: usize,
        hidden_width: usize,
    ) -> Result<Self> {
        if input_dim < 1 || output_dim < 1 || hidden_layers < 1 || hidden_width < 1 {
            return Err(TsonnError::InvalidShape(format!(
                "all counts must be >= 1, got {input_dim}-{hidden_layers}x{hidden_width}-{output_dim}"
            )));
        }
        Ok(Self {
            input_dim,
            output_dim,
            hidden_layers,
            hidden_width,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn hidden_layers(&self) -> usize {
        self.hidden_layers
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden_width
    }

    /// Number of affine layers (hidden layers plus the output layer).
    pub fn num_layers(&self) -> usize {
        self.hidden_layers + 1
    }

    /// `(fan_in, fan_out)` of each affine layer, in evaluation order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.num_layers());
        let mut fan_in = self.input_dim;
        for _ in 0..self.hidden_layers {
            dims.push((fan_in, self.hidden_width));
            fan_in = self.hidden_width;
        }
        dims.push((fan_in, self.output_dim));
        dims
    }

    /// Flat offset of each layer's weight block; biases follow the weights.
    pub(crate) fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.num_layers());
        let mut at = 0;
        for (fan_in, fan_out) in self.layer_dims() {
            offsets.push(at);
            at += fan_in * fan_out + fan_out;
        }
        offsets
    }

    pub fn param_len(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|(i, o)| i * o + o)
            .sum()
    }
}

/// Flat vector of weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector<T>(Vec<T>);

impl<T: Real> ParameterVector<T> {
    pub fn zeros(len: usize) -> Self {
        Self(vec![T::zero(); len])
    }

    pub fn from_vec(data: Vec<T>) -> Self {
        Self(data)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Converts to another working precision.
    pub fn cast<U: Real>(&self) -> ParameterVector<U> {
        ParameterVector(self.0.iter().map(|&x| U::from_f64(x.to_f64())).collect())
    }

    /// Weight matrix of layer `l` as a `(fan_out, fan_in)` view.
    pub fn weights<'a>(&'a self, shape: &NetworkShape, l: usize) -> ArrayView2<'a, T> {
        let (fan_in, fan_out) = shape.layer_dims()[l];
        let at = shape.layer_offsets()[l];
        ArrayView2::from_shape((fan_out, fan_in), &self.0[at..at + fan_in * fan_out])
            .expect("parameter layout")
    }

    /// Bias vector of layer `l`.
    pub fn bias<'a>(&'a self, shape: &NetworkShape, l: usize) -> ArrayView1<'a, T> {
        let (fan_in, fan_out) = shape.layer_dims()[l];
        let at = shape.layer_offsets()[l] + fan_in * fan_out;
        ArrayView1::from_shape(fan_out, &self.0[at..at + fan_out]).expect("parameter layout")
    }

    pub fn scaled_add(&mut self, a: T, other: &ParameterVector<T>) {
        debug_assert_eq!(self.len(), other.len());
        for (x, y) in self.0.iter_mut().zip(other.0.iter()) {
            *x += a * *y;
        }
    }

    pub fn dot(&self, other: &ParameterVector<T>) -> T {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(&x, &y)| x * y)
            .sum()
    }

    pub fn norm_inf(&self) -> T {
        self.0
            .iter()
            .fold(T::zero(), |acc, x| acc.max(x.abs()))
    }
}

/// Frozen copy of the parameters taken at an outer-iteration boundary.
#[derive(Debug, Clone)]
pub struct ParameterSnapshot<T> {
    outer_index: usize,
    params: ParameterVector<T>,
}

impl<T: Real> ParameterSnapshot<T> {
    pub fn new(outer_index: usize, params: &ParameterVector<T>) -> Self {
        Self {
            outer_index,
            params: params.clone(),
        }
    }

    pub fn outer_index(&self) -> usize {
        self.outer_index
    }

    pub fn params(&self) -> &ParameterVector<T> {
        &self.params
    }
}

/// Glorot-uniform weights, zero biases, deterministic per seed.
///
/// Draws are made in f64 and converted, so a given seed produces the same
/// initial state in both precisions.
pub fn init_parameters<T: Real>(shape: &NetworkShape, seed: u64) -> ParameterVector<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(shape.param_len());
    for (fan_in, fan_out) in shape.layer_dims() {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            let u: f64 = rng.random();
            data.push(c::<T>(bound * (2.0 * u - 1.0)));
        }
        data.extend(std::iter::repeat_n(T::zero(), fan_out));
    }
    ParameterVector(data)
}

/// Network value and input derivatives at a batch of points.
///
/// `hess` is stored with both symmetric entries filled; entries for pairs
/// that were not requested (see [`evaluate_jets_masked`]) are zero.
#[derive(Debug, Clone)]
pub struct JetBatch<T> {
    /// `(n, output_dim)`
    pub value: Array2<T>,
    /// `(n, output_dim, input_dim)`
    pub grad: Array3<T>,
    /// `(n, output_dim, input_dim, input_dim)`
    pub hess: Array4<T>,
    order: u8,
    pairs: Vec<(usize, usize)>,
}

impl<T: Real> JetBatch<T> {
    pub fn zeros(n: usize, out: usize, d: usize, order: u8, pairs: Vec<(usize, usize)>) -> Self {
        Self {
            value: Array2::zeros((n, out)),
            grad: Array3::zeros((n, out, d)),
            hess: Array4::zeros((n, out, d, d)),
            order,
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.value.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// All unique Hessian index pairs `(i, j)` with `i <= j` for dimension `d`.
pub fn all_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            pairs.push((i, j));
        }
    }
    pairs
}

fn check_points<T: Real>(shape: &NetworkShape, points: &ArrayView2<T>) -> Result<()> {
    if points.ncols() != shape.input_dim() {
        return Err(TsonnError::DimensionMismatch(format!(
            "points have {} columns, network expects {}",
            points.ncols(),
            shape.input_dim()
        )));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(TsonnError::NonFiniteInput(
            "evaluation points contain NaN or Inf".into(),
        ));
    }
    Ok(())
}

fn check_params<T: Real>(shape: &NetworkShape, params: &ParameterVector<T>) -> Result<()> {
    if params.len() != shape.param_len() {
        return Err(TsonnError::DimensionMismatch(format!(
            "parameter vector has length {}, shape requires {}",
            params.len(),
            shape.param_len()
        )));
    }
    Ok(())
}

/// Evaluates the network and its input derivatives up to `order` (0, 1 or 2).
pub fn evaluate_jets<T: Real>(
    params: &ParameterVector<T>,
    shape: &NetworkShape,
    points: ArrayView2<T>,
    order: u8,
) -> Result<JetBatch<T>> {
    let pairs = if order >= 2 {
        all_pairs(shape.input_dim())
    } else {
        Vec::new()
    };
    evaluate_jets_masked(params, shape, points, order, pairs)
}

/// Like [`evaluate_jets`], but only the listed Hessian pairs are computed.
/// Unlisted `hess` entries are left at zero.
pub fn evaluate_jets_masked<T: Real>(
    params: &ParameterVector<T>,
    shape: &NetworkShape,
    points: ArrayView2<T>,
    order: u8,
    pairs: Vec<(usize, usize)>,
) -> Result<JetBatch<T>> {
    check_points(shape, &points)?;
    check_params(shape, params)?;
    let n = points.nrows();
    let layout = StackLayout::new(points.ncols(), order, pairs.clone());
    let mut jets = JetBatch::zeros(n, shape.output_dim(), shape.input_dim(), order, pairs);
    // Chunked so large batches stay cache-friendly.
    for (s, e) in crate::parallel::chunk_ranges(n) {
        let (out_stack, _) =
            forward_stacks(shape, params, points.slice(ndarray::s![s..e, ..]), &layout, false);
        batch::stack_to_jets(&out_stack, &layout, &mut jets, s);
    }
    Ok(jets)
}
