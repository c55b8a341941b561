//! Benchmark PDE definitions: operators, domains, point sampling, and
//! reference solutions.
//!
//! Each problem supplies its interior operator `N[u]`, boundary and (for
//! the time-dependent case) initial operators, plus the adjoint of each
//! with respect to the network jets. The interior sign convention makes
//! the highest spatial derivative diffusive under `du/dtau = N[u]`, so
//! pseudo-time marching relaxes toward the solution.

mod allen_cahn;
mod burgers;
mod cavity;
mod laplace;

pub use allen_cahn::allen_cahn_initial_condition;
pub use burgers::{burgers_closed_form, burgers_closed_form_constant};
pub use laplace::{analytic_cylinder_velocity, cylinder_potential_jets};

use crate::error::{Result, TsonnError};
use crate::net::{evaluate_jets_masked, JetBatch, NetworkShape, ParameterVector};
use crate::real::Real;
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemId {
    LaplaceCylinder,
    BurgersSteady,
    Cavity,
    AllenCahn,
}

impl ProblemId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemId::LaplaceCylinder => "laplace-cylinder",
            ProblemId::BurgersSteady => "burgers-steady",
            ProblemId::Cavity => "cavity",
            ProblemId::AllenCahn => "allen-cahn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "laplace-cylinder" | "laplace" => Ok(ProblemId::LaplaceCylinder),
            "burgers-steady" | "burgers" => Ok(ProblemId::BurgersSteady),
            "cavity" => Ok(ProblemId::Cavity),
            "allen-cahn" => Ok(ProblemId::AllenCahn),
            other => Err(TsonnError::Config(format!("unknown problem id `{other}`"))),
        }
    }
}

impl std::fmt::Display for ProblemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Physical parameters of one benchmark.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    /// Potential flow past a cylinder in an annulus.
    LaplaceCylinder { v_inf: f64, r_wall: f64, r_far: f64 },
    /// Steady viscous Burgers equation on `[-1, 1]`.
    BurgersSteady { nu: f64 },
    /// Lid-driven cavity, incompressible Navier-Stokes on the unit square.
    Cavity { re: f64, beta: f64 },
    /// Allen-Cahn equation on `[-1, 1] x [0, 1]` space-time.
    AllenCahn { diffusivity: f64, reaction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub lambda_bc: f64,
    pub lambda_ic: f64,
}

impl ProblemSpec {
    pub fn laplace_cylinder() -> Self {
        Self {
            kind: ProblemKind::LaplaceCylinder {
                v_inf: 1.0,
                r_wall: 0.5,
                r_far: 15.0,
            },
            lambda_bc: 0.1,
            lambda_ic: 0.0,
        }
    }

    pub fn burgers_steady() -> Self {
        Self {
            kind: ProblemKind::BurgersSteady { nu: 0.05 },
            lambda_bc: 1.0,
            lambda_ic: 0.0,
        }
    }

    pub fn cavity(re: f64) -> Self {
        Self {
            kind: ProblemKind::Cavity { re, beta: 1.0 },
            lambda_bc: 1.0,
            lambda_ic: 0.0,
        }
    }

    pub fn allen_cahn() -> Self {
        Self {
            kind: ProblemKind::AllenCahn {
                diffusivity: 1e-4,
                reaction: 5.0,
            },
            lambda_bc: 1.0,
            lambda_ic: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(TsonnError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        if self.lambda_bc < 0.0 || self.lambda_ic < 0.0 {
            return Err(TsonnError::Config("loss weights must be >= 0".into()));
        }
        match self.kind {
            ProblemKind::LaplaceCylinder { v_inf, r_wall, r_far } => {
                positive("v_inf", v_inf)?;
                positive("r_wall", r_wall)?;
                if r_far <= r_wall {
                    return Err(TsonnError::Config("r_far must exceed r_wall".into()));
                }
                Ok(())
            }
            ProblemKind::BurgersSteady { nu } => positive("nu", nu),
            ProblemKind::Cavity { re, beta } => {
                positive("re", re)?;
                positive("beta", beta)
            }
            ProblemKind::AllenCahn { diffusivity, reaction } => {
                positive("diffusivity", diffusivity)?;
                positive("reaction", reaction)
            }
        }
    }

    pub fn id(&self) -> ProblemId {
        match self.kind {
            ProblemKind::LaplaceCylinder { .. } => ProblemId::LaplaceCylinder,
            ProblemKind::BurgersSteady { .. } => ProblemId::BurgersSteady,
            ProblemKind::Cavity { .. } => ProblemId::Cavity,
            ProblemKind::AllenCahn { .. } => ProblemId::AllenCahn,
        }
    }

    /// Network input dimension (spatial, plus time for Allen-Cahn).
    pub fn input_dim(&self) -> usize {
        match self.kind {
            ProblemKind::BurgersSteady { .. } => 1,
            _ => 2,
        }
    }

    /// Network output dimension.
    pub fn state_dim(&self) -> usize {
        match self.kind {
            ProblemKind::Cavity { .. } => 3,
            _ => 1,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self.kind, ProblemKind::AllenCahn { .. })
    }

    /// Hessian pairs the interior operator reads; other pairs need not be
    /// evaluated during training.
    pub fn pde_pairs(&self) -> Vec<(usize, usize)> {
        match self.kind {
            ProblemKind::BurgersSteady { .. } => vec![(0, 0)],
            ProblemKind::LaplaceCylinder { .. } | ProblemKind::Cavity { .. } => {
                vec![(0, 0), (1, 1)]
            }
            // Inputs are (x, t); only u_xx appears.
            ProblemKind::AllenCahn { .. } => vec![(0, 0)],
        }
    }

    /// Components compared against the reference solution.
    pub fn observable_components(&self) -> Vec<&'static str> {
        match self.kind {
            ProblemKind::LaplaceCylinder { .. } => vec!["u", "v"],
            ProblemKind::BurgersSteady { .. } => vec!["u"],
            ProblemKind::Cavity { .. } => vec!["u", "v"],
            ProblemKind::AllenCahn { .. } => vec!["u"],
        }
    }

    /// Coordinate column names in exported fields.
    pub fn coord_names(&self) -> Vec<&'static str> {
        match self.kind {
            ProblemKind::BurgersSteady { .. } => vec!["x"],
            ProblemKind::AllenCahn { .. } => vec!["x", "t"],
            _ => vec!["x", "y"],
        }
    }
}

/// Boundary condition family of one group of boundary points.
#[derive(Debug, Clone, PartialEq)]
pub enum BcKind {
    /// Free-stream velocity residual `(phi_x - v_inf, phi_y)`.
    FarField,
    /// No-penetration residual `grad(phi) . n`.
    SlipWall,
    /// Prescribed values for the leading state components.
    Dirichlet { targets: Array2<f64> },
    /// Matching of value and x-derivative across consecutive point pairs.
    PeriodicPairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGroup {
    pub kind: BcKind,
    /// `(nb, input_dim)`; for `PeriodicPairs` rows `2p` and `2p+1` form pair `p`.
    pub points: Array2<f64>,
    /// Outward unit normals, required by `SlipWall`.
    pub normals: Option<Array2<f64>>,
}

impl BoundaryGroup {
    /// Number of residual rows (pairs count once).
    pub fn residual_count(&self) -> usize {
        match self.kind {
            BcKind::PeriodicPairs => self.points.nrows() / 2,
            _ => self.points.nrows(),
        }
    }

    pub fn residual_dim(&self) -> usize {
        match &self.kind {
            BcKind::FarField => 2,
            BcKind::SlipWall => 1,
            BcKind::Dirichlet { targets } => targets.ncols(),
            BcKind::PeriodicPairs => 2,
        }
    }

    /// Jet order the residual needs.
    pub fn jet_order(&self) -> u8 {
        match self.kind {
            BcKind::Dirichlet { .. } => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// Tensor-product nodes; dims are problem specific
    /// (annulus `[n_theta, n_r]`, interval `[n]`, square `[nx, ny]`,
    /// space-time `[nx, nt]`).
    Mesh(Vec<usize>),
    /// Random interior points with uniformly spaced boundary/initial points.
    UniformRandom {
        interior: usize,
        boundary: usize,
        initial: usize,
    },
}

/// Collocation, boundary, and initial points for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub interior: Array2<f64>,
    pub boundary: Vec<BoundaryGroup>,
    pub initial: Array2<f64>,
    pub seed: u64,
    pub sampling: Sampling,
}

impl PointSet {
    pub fn interior_count(&self) -> usize {
        self.interior.nrows()
    }

    pub fn boundary_residual_count(&self) -> usize {
        self.boundary.iter().map(|g| g.residual_count()).sum()
    }

    pub fn initial_count(&self) -> usize {
        self.initial.nrows()
    }

    /// Redraws the interior points (random strategy only); boundary and
    /// initial points are kept.
    pub fn resample_interior(&mut self, problem: &ProblemSpec, seed: u64) -> Result<()> {
        match self.sampling {
            Sampling::UniformRandom { interior, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                self.interior = random_interior(problem, interior, &mut rng);
                self.seed = seed;
                Ok(())
            }
            Sampling::Mesh(_) => Err(TsonnError::Sampling(
                "mesh point sets cannot be resampled".into(),
            )),
        }
    }
}

/// Samples collocation/boundary/initial points for `problem`.
pub fn sample_points(problem: &ProblemSpec, sampling: &Sampling, seed: u64) -> Result<PointSet> {
    problem.validate()?;
    match sampling {
        Sampling::Mesh(dims) => match problem.kind {
            ProblemKind::LaplaceCylinder { .. } => laplace::mesh_points(problem, dims, seed),
            ProblemKind::BurgersSteady { .. } => burgers::mesh_points(problem, dims, seed),
            ProblemKind::Cavity { .. } => cavity::mesh_points(problem, dims, seed),
            ProblemKind::AllenCahn { .. } => allen_cahn::mesh_points(problem, dims, seed),
        },
        Sampling::UniformRandom {
            interior,
            boundary,
            initial,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let interior_pts = random_interior(problem, *interior, &mut rng);
            let (boundary_groups, initial_pts) = match problem.kind {
                ProblemKind::LaplaceCylinder { .. } => {
                    (laplace::uniform_boundary(problem, *boundary)?, Array2::zeros((0, 2)))
                }
                ProblemKind::BurgersSteady { .. } => {
                    (burgers::boundary_groups(), Array2::zeros((0, 1)))
                }
                ProblemKind::Cavity { .. } => {
                    (cavity::uniform_boundary(*boundary)?, Array2::zeros((0, 2)))
                }
                ProblemKind::AllenCahn { .. } => (
                    allen_cahn::uniform_boundary(*boundary)?,
                    allen_cahn::uniform_initial(*initial)?,
                ),
            };
            Ok(PointSet {
                interior: interior_pts,
                boundary: boundary_groups,
                initial: initial_pts,
                seed,
                sampling: sampling.clone(),
            })
        }
    }
}

fn random_interior(problem: &ProblemSpec, count: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    match problem.kind {
        ProblemKind::LaplaceCylinder { r_wall, r_far, .. } => {
            let mut pts = Array2::zeros((count, 2));
            for i in 0..count {
                // Uniform over the annulus area.
                let u: f64 = rng.random();
                let r = (r_wall * r_wall + (r_far * r_far - r_wall * r_wall) * u).sqrt();
                let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                pts[(i, 0)] = r * theta.cos();
                pts[(i, 1)] = r * theta.sin();
            }
            pts
        }
        ProblemKind::BurgersSteady { .. } => {
            let mut pts = Array2::zeros((count, 1));
            for i in 0..count {
                pts[(i, 0)] = 2.0 * rng.random::<f64>() - 1.0;
            }
            pts
        }
        ProblemKind::Cavity { .. } => {
            let mut pts = Array2::zeros((count, 2));
            for i in 0..count {
                pts[(i, 0)] = rng.random::<f64>();
                pts[(i, 1)] = rng.random::<f64>();
            }
            pts
        }
        ProblemKind::AllenCahn { .. } => {
            let mut pts = Array2::zeros((count, 2));
            for i in 0..count {
                pts[(i, 0)] = 2.0 * rng.random::<f64>() - 1.0;
                pts[(i, 1)] = rng.random::<f64>();
            }
            pts
        }
    }
}

fn check_pde_jets<T: Real>(problem: &ProblemSpec, jets: &JetBatch<T>) -> Result<()> {
    if jets.order() < 2 {
        return Err(TsonnError::DimensionMismatch(format!(
            "interior residual needs order-2 jets, got order {}",
            jets.order()
        )));
    }
    if jets.value.ncols() != problem.state_dim() {
        return Err(TsonnError::DimensionMismatch(format!(
            "jets carry {} outputs, problem state dimension is {}",
            jets.value.ncols(),
            problem.state_dim()
        )));
    }
    Ok(())
}

/// Interior operator `N[u]` per point, `(n, state_dim)`.
pub fn pde_residual<T: Real>(problem: &ProblemSpec, jets: &JetBatch<T>) -> Result<Array2<T>> {
    check_pde_jets(problem, jets)?;
    let mut out = Array2::zeros((jets.len(), problem.state_dim()));
    match problem.kind {
        ProblemKind::LaplaceCylinder { .. } => laplace::residual(jets, &mut out),
        ProblemKind::BurgersSteady { nu } => burgers::residual(nu, jets, &mut out),
        ProblemKind::Cavity { re, beta } => cavity::residual(re, beta, jets, &mut out),
        ProblemKind::AllenCahn { diffusivity, reaction } => {
            allen_cahn::residual(diffusivity, reaction, jets, &mut out)
        }
    }
    Ok(out)
}

/// Accumulates `cot^T dN/d(jets)` into `jet_cot`.
pub(crate) fn pde_residual_vjp<T: Real>(
    problem: &ProblemSpec,
    jets: &JetBatch<T>,
    cot: &Array2<T>,
    jet_cot: &mut JetBatch<T>,
) {
    match problem.kind {
        ProblemKind::LaplaceCylinder { .. } => laplace::residual_vjp(jets, cot, jet_cot),
        ProblemKind::BurgersSteady { nu } => burgers::residual_vjp(nu, jets, cot, jet_cot),
        ProblemKind::Cavity { re, beta } => cavity::residual_vjp(re, beta, jets, cot, jet_cot),
        ProblemKind::AllenCahn { diffusivity, reaction } => {
            allen_cahn::residual_vjp(diffusivity, reaction, jets, cot, jet_cot)
        }
    }
}

/// Boundary operator for one group, `(residual_count, residual_dim)`.
pub fn boundary_residual<T: Real>(
    problem: &ProblemSpec,
    group: &BoundaryGroup,
    jets: &JetBatch<T>,
) -> Result<Array2<T>> {
    if jets.order() < group.jet_order() {
        return Err(TsonnError::DimensionMismatch(format!(
            "boundary residual needs order-{} jets, got {}",
            group.jet_order(),
            jets.order()
        )));
    }
    if matches!(group.kind, BcKind::SlipWall) && group.normals.is_none() {
        return Err(TsonnError::DimensionMismatch(
            "wall boundary group is missing normals".into(),
        ));
    }
    let mut out = Array2::zeros((group.residual_count(), group.residual_dim()));
    match (&problem.kind, &group.kind) {
        (ProblemKind::LaplaceCylinder { v_inf, .. }, BcKind::FarField) => {
            laplace::far_field_residual(*v_inf, jets, &mut out);
        }
        (_, BcKind::SlipWall) => {
            let normals = group.normals.as_ref().unwrap();
            laplace::wall_residual(normals, jets, &mut out);
        }
        (_, BcKind::Dirichlet { targets }) => {
            dirichlet_residual(targets, jets, &mut out);
        }
        (_, BcKind::PeriodicPairs) => {
            allen_cahn::periodic_residual(jets, &mut out);
        }
        (kind, bc) => {
            return Err(TsonnError::Unsupported(format!(
                "boundary kind {bc:?} not defined for problem {kind:?}"
            )));
        }
    }
    Ok(out)
}

pub(crate) fn boundary_residual_vjp<T: Real>(
    problem: &ProblemSpec,
    group: &BoundaryGroup,
    jets: &JetBatch<T>,
    cot: &Array2<T>,
    jet_cot: &mut JetBatch<T>,
) {
    match (&problem.kind, &group.kind) {
        (ProblemKind::LaplaceCylinder { .. }, BcKind::FarField) => {
            laplace::far_field_vjp(cot, jet_cot);
        }
        (_, BcKind::SlipWall) => {
            laplace::wall_vjp(group.normals.as_ref().unwrap(), cot, jet_cot);
        }
        (_, BcKind::Dirichlet { targets }) => {
            dirichlet_vjp(targets.ncols(), cot, jet_cot);
        }
        (_, BcKind::PeriodicPairs) => {
            allen_cahn::periodic_vjp(cot, jet_cot);
        }
        _ => unreachable!("validated by boundary_residual"),
    }
    let _ = jets;
}

fn dirichlet_residual<T: Real>(targets: &Array2<f64>, jets: &JetBatch<T>, out: &mut Array2<T>) {
    for i in 0..out.nrows() {
        for c in 0..targets.ncols() {
            out[(i, c)] = jets.value[(i, c)] - T::from_f64(targets[(i, c)]);
        }
    }
}

fn dirichlet_vjp<T: Real>(dim: usize, cot: &Array2<T>, jet_cot: &mut JetBatch<T>) {
    for i in 0..cot.nrows() {
        for c in 0..dim {
            jet_cot.value[(i, c)] += cot[(i, c)];
        }
    }
}

/// Initial-condition residual `u(x, 0) - g(x)`; Allen-Cahn only.
pub fn initial_residual<T: Real>(
    problem: &ProblemSpec,
    points: ArrayView2<f64>,
    jets: &JetBatch<T>,
) -> Result<Array2<T>> {
    if !problem.is_time_dependent() {
        return Err(TsonnError::Unsupported(format!(
            "initial conditions do not apply to {}",
            problem.id()
        )));
    }
    if points.column(1).iter().any(|&t| t != 0.0) {
        return Err(TsonnError::Sampling("initial points must lie on t = 0".into()));
    }
    let mut out = Array2::zeros((points.nrows(), 1));
    for i in 0..points.nrows() {
        out[(i, 0)] =
            jets.value[(i, 0)] - T::from_f64(allen_cahn_initial_condition(points[(i, 0)]));
    }
    Ok(out)
}

pub(crate) fn initial_residual_vjp<T: Real>(cot: &Array2<T>, jet_cot: &mut JetBatch<T>) {
    for i in 0..cot.nrows() {
        jet_cot.value[(i, 0)] += cot[(i, 0)];
    }
}

/// Where a reference field comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Oracle,
    File,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Oracle => "oracle",
            Provenance::File => "file",
        }
    }
}

/// Reference solution on an evaluation grid.
#[derive(Debug, Clone)]
pub struct ReferenceField {
    /// `(n, input_dim)` evaluation coordinates.
    pub coords: Array2<f64>,
    /// `(n, components)` reference values.
    pub values: Array2<f64>,
    /// Tensor axes when the grid is a cartesian product: `axes[k]` holds the
    /// sorted ticks of coordinate column `k`, and rows enumerate the grid
    /// with axis 0 varying fastest. Empty for non-cartesian grids.
    pub axes: Vec<Vec<f64>>,
    pub components: Vec<String>,
    pub provenance: Provenance,
}

/// Builds the problem's reference field on the given grid.
///
/// Laplace and Burgers references are analytic; cavity and Allen-Cahn are
/// produced by the finite-difference solvers in [`crate::oracle`].
pub fn reference_field(problem: &ProblemSpec, grid: &[usize]) -> Result<ReferenceField> {
    problem.validate()?;
    match problem.kind {
        ProblemKind::LaplaceCylinder { v_inf, r_wall, r_far } => {
            laplace::reference(v_inf, r_wall, r_far, grid)
        }
        ProblemKind::BurgersSteady { nu } => burgers::reference(nu, grid),
        ProblemKind::Cavity { re, .. } => cavity::reference(re, grid),
        ProblemKind::AllenCahn { diffusivity, reaction } => {
            allen_cahn::reference(diffusivity, reaction, grid)
        }
    }
}

/// Evaluates the quantity compared against references (velocities for the
/// potential-flow problem, state values otherwise) at `coords`.
pub fn predict_observable<T: Real>(
    problem: &ProblemSpec,
    shape: &NetworkShape,
    params: &ParameterVector<T>,
    coords: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    let coords_t = coords.mapv(T::from_f64);
    match problem.kind {
        ProblemKind::LaplaceCylinder { .. } => {
            let jets = evaluate_jets_masked(params, shape, coords_t.view(), 1, vec![])?;
            let mut out = Array2::zeros((coords.nrows(), 2));
            for i in 0..coords.nrows() {
                out[(i, 0)] = jets.grad[(i, 0, 0)].to_f64();
                out[(i, 1)] = jets.grad[(i, 0, 1)].to_f64();
            }
            Ok(out)
        }
        ProblemKind::Cavity { .. } => {
            let jets = evaluate_jets_masked(params, shape, coords_t.view(), 0, vec![])?;
            let mut out = Array2::zeros((coords.nrows(), 2));
            for i in 0..coords.nrows() {
                out[(i, 0)] = jets.value[(i, 0)].to_f64();
                out[(i, 1)] = jets.value[(i, 1)].to_f64();
            }
            Ok(out)
        }
        _ => {
            let jets = evaluate_jets_masked(params, shape, coords_t.view(), 0, vec![])?;
            Ok(jets.value.mapv(|v| v.to_f64()))
        }
    }
}

#[cfg(test)]
mod tests;
