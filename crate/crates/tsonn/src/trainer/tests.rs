use super::*;
use crate::problems::{sample_points, Sampling};

fn burgers_setup(mesh: usize) -> (ProblemSpec, NetworkShape, PointSet) {
    let problem = ProblemSpec::burgers_steady();
    let shape = NetworkShape::new(1, 1, 2, 8).unwrap();
    let points = sample_points(&problem, &Sampling::Mesh(vec![mesh]), 0).unwrap();
    (problem, shape, points)
}

#[test]
fn label_arithmetic() {
    let labels = LabelField {
        outer_index: 1,
        dtau: 0.1,
        base: ndarray::array![[1.0]],
        resid: ndarray::array![[2.0]],
    };
    let first: f64 = labels.values()[(0, 0)];
    assert!((first - 1.2).abs() < 1e-15);

    // Zero residual: the label is the current value (fixed point).
    let labels = LabelField {
        outer_index: 1,
        dtau: 0.5,
        base: ndarray::array![[0.7], [-0.2]],
        resid: ndarray::array![[0.0], [0.0]],
    };
    assert_eq!(labels.values(), labels.base);
}

#[test]
fn explicit_labels_from_zero_network_equal_bias() {
    let (problem, shape, points) = burgers_setup(33);
    let mut params: ParameterVector<f64> = ParameterVector::zeros(shape.param_len());
    let at = shape.param_len() - 1;
    params.as_mut_slice()[at] = 0.42;
    let snapshot = ParameterSnapshot::new(1, &params);
    let labels = explicit_labels(&snapshot, &points, &problem, &shape, 0.3).unwrap();
    let values = labels.values();
    for i in 0..values.nrows() {
        assert_eq!(values[(i, 0)], 0.42);
    }
}

#[test]
fn table_run_matches_oracle_trajectory() {
    let problem = ProblemSpec::burgers_steady();
    let n = 101;
    let dtau = 1e-4;
    let steps = 50;
    let table = table_explicit_run(&problem, n, dtau, steps).unwrap();
    let h = 2.0 / (n - 1) as f64;
    let u0 = Array1::from_shape_fn(n, |i| -(-1.0 + i as f64 * h));
    let oracle = crate::oracle::explicit_euler_trajectory(&problem, &u0, dtau, steps).unwrap();
    for (k, (a, b)) in table.iter().zip(oracle.iter()).enumerate() {
        for i in 0..n {
            let (x, y) = (a[i], b[i]);
            assert!(
                (x - y).abs() <= 1e-10 * (1.0 + x.abs().max(y.abs())),
                "step {k}, node {i}: {x} vs {y}"
            );
        }
    }
}

#[test]
fn pinn_ignores_the_outer_split() {
    let (problem, shape, points) = burgers_setup(64);
    let run = |outer: usize, inner: usize| {
        let config = TrainConfig::new(LossMode::Pinn, 1.0, inner, outer);
        train(&problem, &shape, points.clone(), &config, None).unwrap()
    };
    let a = run(5, 20);
    let b = run(1, 100);
    assert_eq!(a.history.iterations, b.history.iterations);
    let losses_a: Vec<f64> = a.history.rows.iter().map(|r| r.total).collect();
    let losses_b: Vec<f64> = b.history.rows.iter().map(|r| r.total).collect();
    assert_eq!(losses_a, losses_b, "loss trajectories must be identical");
    assert_eq!(a.params, b.params);
}

#[test]
fn training_is_deterministic() {
    let (problem, shape, points) = burgers_setup(64);
    let mut config = TrainConfig::new(LossMode::Itsonn, 0.1, 10, 3);
    config.seed = 11;
    let a = train(&problem, &shape, points.clone(), &config, None).unwrap();
    let b = train(&problem, &shape, points, &config, None).unwrap();
    assert_eq!(a.params, b.params);
    let la: Vec<f64> = a.history.rows.iter().map(|r| r.total).collect();
    let lb: Vec<f64> = b.history.rows.iter().map(|r| r.total).collect();
    assert_eq!(la, lb);
}

#[test]
fn history_bookkeeping_matches_iterations() {
    let (problem, shape, points) = burgers_setup(40);
    let mut config = TrainConfig::new(LossMode::Itsonn, 0.2, 7, 4);
    config.record_every = 3;
    let reference = crate::problems::reference_field(&problem, &[40]).unwrap();
    let out = train(&problem, &shape, points, &config, Some(&reference)).unwrap();
    assert_eq!(out.history.status, RunStatus::Completed);
    assert_eq!(out.history.iterations, 28);
    assert_eq!(out.history.outer_records.len(), 4);
    // Iteration indices are strictly increasing and boundary rows exist.
    let mut prev = 0;
    for row in &out.history.rows {
        assert!(row.iter > prev || (row.iter == prev && row.inner == config.inner_steps));
        prev = row.iter;
    }
    for rec in &out.history.outer_records {
        assert!(rec.rel_l2.is_some());
        assert!(rec.end_iter == rec.outer * config.inner_steps);
    }
    // Snapshot advance happens at boundaries: rows tagged with outer index.
    assert!(out.history.rows.iter().any(|r| r.outer == 4));
}

#[test]
fn divergence_flag_trips_on_exploding_loss() {
    let (problem, shape, points) = burgers_setup(40);
    let mut config = TrainConfig::new(LossMode::Pinn, 1.0, 50, 2);
    config.optimizer = OptimizerConfig::adam(1e6);
    let out = train(&problem, &shape, points, &config, None).unwrap();
    assert_eq!(out.history.status, RunStatus::Diverged);
    assert!(out.history.divergence_iter.is_some());
    assert!(out.params.len() == shape.param_len(), "params returned for postmortem");
}

#[test]
fn resampling_changes_interior_points_only() {
    let problem = ProblemSpec::cavity(100.0);
    let shape = NetworkShape::new(2, 3, 2, 8).unwrap();
    let sampling = Sampling::UniformRandom {
        interior: 64,
        boundary: 16,
        initial: 0,
    };
    let points = sample_points(&problem, &sampling, 5).unwrap();
    let before = points.interior.clone();
    let boundary_before = points.boundary.clone();
    let mut config = TrainConfig::new(LossMode::Itsonn, 0.5, 2, 3);
    config.resample_on_outer = true;
    let out = train(&problem, &shape, points, &config, None).unwrap();
    assert_ne!(out.points.interior, before);
    assert_eq!(out.points.boundary, boundary_before);

    let points2 = sample_points(&problem, &sampling, 5).unwrap();
    let mut config2 = config.clone();
    config2.resample_on_outer = false;
    let out2 = train(&problem, &shape, points2, &config2, None).unwrap();
    assert_eq!(out2.points.interior, before);
}

#[test]
fn lbfgs_training_descends_on_burgers() {
    let (problem, shape, points) = burgers_setup(64);
    let mut config = TrainConfig::new(LossMode::Itsonn, 0.5, 8, 4);
    config.optimizer = OptimizerConfig::lbfgs();
    let out = train(&problem, &shape, points, &config, None).unwrap();
    assert_eq!(out.history.status, RunStatus::Completed);
    assert!(
        out.history.final_loss < out.history.initial_loss,
        "{} !< {}",
        out.history.final_loss,
        out.history.initial_loss
    );
}

#[test]
fn f32_precision_smoke() {
    let (problem, shape, points) = burgers_setup(32);
    let mut config = TrainConfig::new(LossMode::Itsonn, 0.2, 4, 2);
    config.precision = Precision::F32;
    let out = train(&problem, &shape, points, &config, None).unwrap();
    assert_eq!(out.history.status, RunStatus::Completed);
    assert!(out.history.final_loss.is_finite());
}
