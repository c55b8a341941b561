use super::*;
use crate::net::init_parameters;
use crate::problems::{sample_points, Sampling};

fn small_setup(problem: &ProblemSpec, interior: usize) -> (NetworkShape, PointSet) {
    let shape = NetworkShape::new(problem.input_dim(), problem.state_dim(), 2, 8).unwrap();
    let sampling = match problem.id() {
        crate::problems::ProblemId::BurgersSteady => Sampling::Mesh(vec![interior + 2]),
        _ => Sampling::UniformRandom {
            interior,
            boundary: 16,
            initial: 9,
        },
    };
    let points = sample_points(problem, &sampling, 77).unwrap();
    (shape, points)
}

fn make_program(
    problem: &ProblemSpec,
    mode: LossMode,
    dtau: f64,
    snapshot_seed: Option<u64>,
) -> (LossProgram<f64>, NetworkShape) {
    let (shape, points) = small_setup(problem, 40);
    let mut program = LossProgram::new(problem, &points, &shape, mode, dtau).unwrap();
    if let Some(seed) = snapshot_seed {
        let snap: ParameterVector<f64> = init_parameters(&shape, seed);
        let anchors = TsAnchors::compute(
            problem,
            &shape,
            &snap,
            program.interior_points(),
            1,
            mode == LossMode::Etsonn,
        )
        .unwrap();
        program.set_anchors(anchors).unwrap();
    }
    (program, shape)
}

fn all_problems() -> Vec<ProblemSpec> {
    vec![
        ProblemSpec::laplace_cylinder(),
        ProblemSpec::burgers_steady(),
        ProblemSpec::cavity(100.0),
        ProblemSpec::allen_cahn(),
    ]
}

/// Central finite differences of the loss over every parameter.
fn fd_gradient(program: &LossProgram<f64>, params: &ParameterVector<f64>) -> ParameterVector<f64> {
    let mut fd = ParameterVector::zeros(params.len());
    for i in 0..params.len() {
        let eps = 1e-6 * (1.0 + params.as_slice()[i].abs());
        let mut plus = params.clone();
        plus.as_mut_slice()[i] += eps;
        let mut minus = params.clone();
        minus.as_mut_slice()[i] -= eps;
        let lp = program.evaluate(&plus).unwrap().total;
        let lm = program.evaluate(&minus).unwrap().total;
        fd.as_mut_slice()[i] = (lp - lm) / (2.0 * eps);
    }
    fd
}

#[test]
fn gradients_match_finite_differences_for_all_modes_and_problems() {
    for problem in all_problems() {
        for mode in [LossMode::Pinn, LossMode::Etsonn, LossMode::Itsonn] {
            let (program, shape) = make_program(&problem, mode, 0.37, Some(5));
            let params: ParameterVector<f64> = init_parameters(&shape, 21);
            let (value, grad) = program.loss_gradient(&params).unwrap();
            assert!(value.total.is_finite());
            let grad = grad.expect("finite loss must yield a gradient");
            let fd = fd_gradient(&program, &params);
            let scale = fd.norm_inf().max(grad.norm_inf());
            let mut worst = 0.0f64;
            for (g, f) in grad.iter().zip(fd.iter()) {
                worst = worst.max((g - f).abs());
            }
            let rel = worst / scale;
            assert!(
                rel < 1e-5,
                "{} / {mode}: gradient mismatch {rel:.2e}",
                problem.id()
            );
        }
    }
}

/// At `theta = snapshot` all three interior terms coincide exactly.
#[test]
fn loss_equality_at_snapshot() {
    for problem in all_problems() {
        for (seed, dtau) in [(3u64, 0.05), (4, 1.0), (5, 250.0)] {
            let (shape, points) = small_setup(&problem, 30);
            let params: ParameterVector<f64> = init_parameters(&shape, seed);
            let mut values = Vec::new();
            for mode in [LossMode::Pinn, LossMode::Etsonn, LossMode::Itsonn] {
                let mut program =
                    LossProgram::new(&problem, &points, &shape, mode, dtau).unwrap();
                if mode.is_time_stepped() {
                    let anchors = TsAnchors::compute(
                        &problem,
                        &shape,
                        &params,
                        program.interior_points(),
                        1,
                        mode == LossMode::Etsonn,
                    )
                    .unwrap();
                    program.set_anchors(anchors).unwrap();
                }
                values.push(program.evaluate(&params).unwrap().total);
            }
            let base = values[0];
            for v in &values[1..] {
                assert!(
                    (v - base).abs() <= 1e-12 * base.abs(),
                    "{}: losses differ at snapshot: {values:?}",
                    problem.id()
                );
            }
        }
    }
}

/// A zero-weight network has `N = 0`, so the label equals the current
/// value and the explicit interior term sits at the bottom of its
/// quadratic: zero gradient when the boundary weight is off.
#[test]
fn etsonn_gradient_vanishes_at_exact_fit() {
    let mut problem = ProblemSpec::burgers_steady();
    problem.lambda_bc = 0.0;
    let (shape, points) = small_setup(&problem, 25);
    let mut params: ParameterVector<f64> = ParameterVector::zeros(shape.param_len());
    let bias_at = shape.param_len() - 1;
    params.as_mut_slice()[bias_at] = 0.3;
    let mut program = LossProgram::new(&problem, &points, &shape, LossMode::Etsonn, 0.1).unwrap();
    let anchors =
        TsAnchors::compute(&problem, &shape, &params, program.interior_points(), 1, true).unwrap();
    program.set_anchors(anchors).unwrap();
    let (value, grad) = program.loss_gradient(&params).unwrap();
    assert_eq!(value.total, 0.0);
    assert!(grad.unwrap().iter().all(|&g| g == 0.0));
}

/// Explicit-mode arithmetic: anchored at `N = 2` with `theta = snapshot`
/// the interior residual is `-2` and the mean square is 4.
#[test]
fn etsonn_single_point_arithmetic() {
    let mut problem = ProblemSpec::burgers_steady();
    problem.lambda_bc = 0.0;
    let (shape, points) = small_setup(&problem, 1);
    let params: ParameterVector<f64> = init_parameters(&shape, 2);
    let mut program = LossProgram::new(&problem, &points, &shape, LossMode::Etsonn, 0.1).unwrap();
    let mut anchors =
        TsAnchors::compute(&problem, &shape, &params, program.interior_points(), 1, true).unwrap();
    anchors.resid = Some(Array2::from_elem((program.interior_count(), 1), 2.0));
    program.set_anchors(anchors).unwrap();
    let value = program.evaluate(&params).unwrap();
    assert_eq!(value.main, 4.0);
    assert_eq!(value.total, 4.0);
}

/// With a huge pseudo-time step the implicit loss collapses to the plain
/// residual loss.
#[test]
fn itsonn_approaches_pinn_at_large_dtau() {
    let problem = ProblemSpec::burgers_steady();
    let (shape, points) = small_setup(&problem, 60);
    let theta: ParameterVector<f64> = init_parameters(&shape, 8);

    let pinn = LossProgram::new(&problem, &points, &shape, LossMode::Pinn, 1.0).unwrap();
    let l_pde = pinn.evaluate(&theta).unwrap().main;

    let mut its = LossProgram::new(&problem, &points, &shape, LossMode::Itsonn, 1e6).unwrap();
    let snap: ParameterVector<f64> = init_parameters(&shape, 9);
    let anchors =
        TsAnchors::compute(&problem, &shape, &snap, its.interior_points(), 1, false).unwrap();
    its.set_anchors(anchors).unwrap();
    let l_its = its.evaluate(&theta).unwrap().main;

    assert!(
        (l_its - l_pde).abs() <= 1e-5 * l_pde,
        "L_iTS {l_its} vs L_PDE {l_pde}"
    );
}

/// Weighted terms combine linearly, so gradients superpose.
#[test]
fn boundary_weight_enters_linearly() {
    let base = ProblemSpec::burgers_steady();
    let (shape, points) = small_setup(&base, 20);
    let params: ParameterVector<f64> = init_parameters(&shape, 13);

    let grad_for = |lambda: f64| {
        let mut problem = base.clone();
        problem.lambda_bc = lambda;
        let program = LossProgram::new(&problem, &points, &shape, LossMode::Pinn, 1.0).unwrap();
        program.loss_gradient(&params).unwrap().1.unwrap()
    };
    let g0 = grad_for(0.0);
    let g1 = grad_for(1.0);
    let g2 = grad_for(2.0);
    for i in 0..g0.len() {
        let lhs = g2.as_slice()[i] - g0.as_slice()[i];
        let rhs = 2.0 * (g1.as_slice()[i] - g0.as_slice()[i]);
        assert!(
            (lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()),
            "component {i}: {lhs} vs {rhs}"
        );
    }
}

/// Bit-identical evaluation regardless of how the chunk results are
/// scheduled (fixed chunk order), and across repeated calls.
#[test]
fn evaluation_is_reproducible() {
    let problem = ProblemSpec::allen_cahn();
    let (shape, points) = small_setup(&problem, 700);
    let params: ParameterVector<f64> = init_parameters(&shape, 3);
    let program = LossProgram::new(&problem, &points, &shape, LossMode::Pinn, 1.0).unwrap();
    let a = program.loss_gradient(&params).unwrap();
    let b = program.loss_gradient(&params).unwrap();
    assert_eq!(a.0.total, b.0.total);
    assert_eq!(a.1.unwrap().as_slice(), b.1.unwrap().as_slice());
}

/// Non-finite parameters produce a non-finite loss and no gradient.
#[test]
fn non_finite_loss_withholds_gradient() {
    let problem = ProblemSpec::burgers_steady();
    let (shape, points) = small_setup(&problem, 10);
    let mut params: ParameterVector<f64> = init_parameters(&shape, 0);
    params.as_mut_slice()[0] = f64::INFINITY;
    let program = LossProgram::new(&problem, &points, &shape, LossMode::Pinn, 1.0).unwrap();
    let (value, grad) = program.loss_gradient(&params).unwrap();
    assert!(!value.total.is_finite());
    assert!(grad.is_none());
}
