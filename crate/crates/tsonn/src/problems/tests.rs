use super::*;
use ndarray::array;

#[test]
fn cylinder_velocity_reference_points() {
    // Stagnation point, wall top, and the free-stream limit.
    let (u, v) = analytic_cylinder_velocity(-0.5, 0.0, 1.0, 0.5).unwrap();
    assert!((u).abs() < 1e-15 && v.abs() < 1e-15, "stagnation ({u}, {v})");
    let (u, v) = analytic_cylinder_velocity(0.0, 0.5, 1.0, 0.5).unwrap();
    assert!((u - 2.0).abs() < 1e-15 && v.abs() < 1e-15, "wall top ({u}, {v})");
    let (u, v) = analytic_cylinder_velocity(1e6, 0.0, 1.0, 0.5).unwrap();
    assert!((u - 1.0).abs() < 1e-12 && v.abs() < 1e-12, "free stream ({u}, {v})");
    assert!(analytic_cylinder_velocity(0.0, 0.0, 1.0, 0.5).is_err());
}

#[test]
fn exact_potential_satisfies_all_residual_families() {
    let problem = ProblemSpec::laplace_cylinder();
    // Interior ring at r = 2.
    let mut pts = Array2::zeros((16, 2));
    for j in 0..16 {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
        pts[(j, 0)] = 2.0 * theta.cos();
        pts[(j, 1)] = 2.0 * theta.sin();
    }
    let jets = cylinder_potential_jets(&pts, 1.0, 0.5).unwrap();
    let res = pde_residual(&problem, &jets).unwrap();
    for i in 0..16 {
        assert!(res[(i, 0)].abs() < 1e-10, "interior residual {}", res[(i, 0)]);
    }

    // Wall ring.
    let mut wall = Array2::zeros((16, 2));
    let mut normals = Array2::zeros((16, 2));
    for j in 0..16 {
        let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.3) / 16.0;
        wall[(j, 0)] = 0.5 * theta.cos();
        wall[(j, 1)] = 0.5 * theta.sin();
        normals[(j, 0)] = theta.cos();
        normals[(j, 1)] = theta.sin();
    }
    let group = BoundaryGroup {
        kind: BcKind::SlipWall,
        points: wall.clone(),
        normals: Some(normals),
    };
    let jets = cylinder_potential_jets(&wall, 1.0, 0.5).unwrap();
    let res = boundary_residual(&problem, &group, &jets).unwrap();
    for i in 0..16 {
        assert!(res[(i, 0)].abs() < 1e-10, "wall residual {}", res[(i, 0)]);
    }

    // Far ring: deviation from free stream is the domain-truncation scale.
    let mut far = Array2::zeros((16, 2));
    for j in 0..16 {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
        far[(j, 0)] = 15.0 * theta.cos();
        far[(j, 1)] = 15.0 * theta.sin();
    }
    let group = BoundaryGroup {
        kind: BcKind::FarField,
        points: far.clone(),
        normals: None,
    };
    let jets = cylinder_potential_jets(&far, 1.0, 0.5).unwrap();
    let res = boundary_residual(&problem, &group, &jets).unwrap();
    for i in 0..16 {
        let mag = (res[(i, 0)].powi(2) + res[(i, 1)].powi(2)).sqrt();
        assert!(mag <= 1.2e-3, "far-field deviation {mag}");
    }
}

#[test]
fn burgers_constant_field_and_allen_cahn_equilibria() {
    let burgers = ProblemSpec::burgers_steady();
    let mut jets = crate::net::JetBatch::<f64>::zeros(3, 1, 1, 2, vec![(0, 0)]);
    jets.value.column_mut(0).assign(&array![0.4, -1.7, 3.0]);
    let res = pde_residual(&burgers, &jets).unwrap();
    for i in 0..3 {
        assert_eq!(res[(i, 0)], 0.0);
    }

    let ac = ProblemSpec::allen_cahn();
    let mut jets = crate::net::JetBatch::<f64>::zeros(3, 1, 2, 2, vec![(0, 0)]);
    jets.value.column_mut(0).assign(&array![-1.0, 0.0, 1.0]);
    let res = pde_residual(&ac, &jets).unwrap();
    for i in 0..3 {
        assert_eq!(res[(i, 0)], 0.0, "equilibrium {i} not preserved");
    }
}

#[test]
fn cavity_divergence_free_jet_has_zero_continuity_residual() {
    let problem = ProblemSpec::cavity(100.0);
    let n = 10;
    let mut jets = crate::net::JetBatch::<f64>::zeros(n, 3, 2, 2, vec![(0, 0), (1, 1)]);
    let mut rng_state = 1234u64;
    let mut next = || {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
        (rng_state >> 33) as f64 / (1u64 << 31) as f64 - 1.0
    };
    for i in 0..n {
        for o in 0..3 {
            jets.value[(i, o)] = next();
            for k in 0..2 {
                jets.grad[(i, o, k)] = next();
                jets.hess[(i, o, k, k)] = next();
            }
        }
        // Force div u = 0 exactly.
        let ux = jets.grad[(i, 0, 0)];
        jets.grad[(i, 1, 1)] = -ux;
    }
    let res = pde_residual(&problem, &jets).unwrap();
    for i in 0..n {
        assert_eq!(res[(i, 2)], 0.0);
    }
}

#[test]
fn cavity_lid_jet_has_zero_boundary_residual() {
    let problem = ProblemSpec::cavity(100.0);
    let mut targets = Array2::zeros((4, 2));
    targets.column_mut(0).fill(1.0);
    let group = BoundaryGroup {
        kind: BcKind::Dirichlet { targets },
        points: Array2::zeros((4, 2)),
        normals: None,
    };
    let mut jets = crate::net::JetBatch::<f64>::zeros(4, 3, 2, 0, vec![]);
    jets.value.column_mut(0).fill(1.0);
    let res = boundary_residual(&problem, &group, &jets).unwrap();
    assert!(res.iter().all(|&r| r == 0.0));
}

#[test]
fn initial_condition_values_and_residuals() {
    assert_eq!(allen_cahn_initial_condition(0.0), 0.0);
    assert!((allen_cahn_initial_condition(1.0) + 1.0).abs() < 1e-15);
    assert!(allen_cahn_initial_condition(0.5).abs() < 1e-15);

    let ac = ProblemSpec::allen_cahn();
    let points = array![[0.0, 0.0], [0.25, 0.0], [1.0, 0.0]];
    // Network output identically zero -> residual is -g(x).
    let jets = crate::net::JetBatch::<f64>::zeros(3, 1, 2, 0, vec![]);
    let res = initial_residual(&ac, points.view(), &jets).unwrap();
    for i in 0..3 {
        assert_eq!(res[(i, 0)], -allen_cahn_initial_condition(points[(i, 0)]));
    }
    // Exact fit -> zero residual.
    let mut jets = crate::net::JetBatch::<f64>::zeros(3, 1, 2, 0, vec![]);
    for i in 0..3 {
        jets.value[(i, 0)] = allen_cahn_initial_condition(points[(i, 0)]);
    }
    let res = initial_residual(&ac, points.view(), &jets).unwrap();
    assert!(res.iter().all(|&r| r == 0.0));

    // Rejected for steady problems and off-slice points.
    assert!(initial_residual(&ProblemSpec::burgers_steady(), points.view(), &jets).is_err());
    let bad = array![[0.0, 0.1]];
    let jets1 = crate::net::JetBatch::<f64>::zeros(1, 1, 2, 0, vec![]);
    assert!(initial_residual(&ac, bad.view(), &jets1).is_err());
}

#[test]
fn laplace_mesh_counts_and_radii() {
    let problem = ProblemSpec::laplace_cylinder();
    let ps = sample_points(&problem, &Sampling::Mesh(vec![200, 100]), 0).unwrap();
    assert_eq!(ps.interior.nrows(), 20_000);
    for i in 0..ps.interior.nrows() {
        let r = (ps.interior[(i, 0)].powi(2) + ps.interior[(i, 1)].powi(2)).sqrt();
        assert!(r > 0.5 && r < 15.0, "interior node at r = {r}");
    }
    assert_eq!(ps.boundary.len(), 2);
    assert_eq!(ps.boundary[0].points.nrows(), 200);
    assert_eq!(ps.boundary[1].points.nrows(), 200);
    let normals = ps.boundary[0].normals.as_ref().unwrap();
    for i in 0..normals.nrows() {
        let len = (normals[(i, 0)].powi(2) + normals[(i, 1)].powi(2)).sqrt();
        assert!((len - 1.0).abs() < 1e-12);
    }
    // Incompatible dims are rejected.
    assert!(sample_points(&problem, &Sampling::Mesh(vec![200]), 0).is_err());
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let problem = ProblemSpec::cavity(100.0);
    let sampling = Sampling::UniformRandom {
        interior: 500,
        boundary: 40,
        initial: 0,
    };
    let a = sample_points(&problem, &sampling, 9).unwrap();
    let b = sample_points(&problem, &sampling, 9).unwrap();
    assert_eq!(a, b);
    let c = sample_points(&problem, &sampling, 10).unwrap();
    assert_ne!(a, c);
}

#[test]
fn cavity_random_points_are_uniform() {
    let problem = ProblemSpec::cavity(100.0);
    let sampling = Sampling::UniformRandom {
        interior: 20_000,
        boundary: 40,
        initial: 0,
    };
    let ps = sample_points(&problem, &sampling, 3).unwrap();
    let frac = ps
        .interior
        .column(0)
        .iter()
        .filter(|&&x| x <= 0.5)
        .count() as f64
        / 20_000.0;
    assert!((frac - 0.5).abs() < 0.02, "left-half fraction {frac}");
}

#[test]
fn residuals_are_local_under_permutation() {
    let problem = ProblemSpec::burgers_steady();
    let n = 32;
    let mut jets = crate::net::JetBatch::<f64>::zeros(n, 1, 1, 2, vec![(0, 0)]);
    for i in 0..n {
        jets.value[(i, 0)] = (i as f64 * 0.37).sin();
        jets.grad[(i, 0, 0)] = (i as f64 * 0.11).cos();
        jets.hess[(i, 0, 0, 0)] = (i as f64 * 0.05).sin();
    }
    let res = pde_residual(&problem, &jets).unwrap();
    // Reverse the batch; residuals must follow the permutation exactly.
    let mut rev = crate::net::JetBatch::<f64>::zeros(n, 1, 1, 2, vec![(0, 0)]);
    for i in 0..n {
        let s = n - 1 - i;
        rev.value[(i, 0)] = jets.value[(s, 0)];
        rev.grad[(i, 0, 0)] = jets.grad[(s, 0, 0)];
        rev.hess[(i, 0, 0, 0)] = jets.hess[(s, 0, 0, 0)];
    }
    let res_rev = pde_residual(&problem, &rev).unwrap();
    for i in 0..n {
        assert_eq!(res_rev[(i, 0)], res[(n - 1 - i, 0)]);
    }
}

#[test]
fn allen_cahn_counts_match_benchmark_setup() {
    let problem = ProblemSpec::allen_cahn();
    let sampling = Sampling::UniformRandom {
        interior: 1000,
        boundary: 202,
        initial: 257,
    };
    let ps = sample_points(&problem, &sampling, 0).unwrap();
    assert_eq!(ps.interior.nrows(), 1000);
    assert_eq!(ps.initial.nrows(), 257);
    assert_eq!(ps.boundary[0].points.nrows(), 202);
    assert_eq!(ps.boundary[0].residual_count(), 101);
    for p in 0..101 {
        assert_eq!(ps.boundary[0].points[(2 * p, 0)], -1.0);
        assert_eq!(ps.boundary[0].points[(2 * p + 1, 0)], 1.0);
        assert_eq!(
            ps.boundary[0].points[(2 * p, 1)],
            ps.boundary[0].points[(2 * p + 1, 1)]
        );
    }
}

#[test]
fn burgers_reference_passes_through_zero() {
    let problem = ProblemSpec::burgers_steady();
    let reference = reference_field(&problem, &[501]).unwrap();
    let mid = 250;
    assert_eq!(reference.coords[(mid, 0)], 0.0);
    assert!(reference.values[(mid, 0)].abs() < 1e-12);
    assert_eq!(reference.provenance, Provenance::Analytic);
}

#[test]
fn wall_group_without_normals_rejected() {
    let problem = ProblemSpec::laplace_cylinder();
    let group = BoundaryGroup {
        kind: BcKind::SlipWall,
        points: Array2::zeros((3, 2)),
        normals: None,
    };
    let jets = crate::net::JetBatch::<f64>::zeros(3, 1, 2, 1, vec![]);
    assert!(boundary_residual(&problem, &group, &jets).is_err());
}

#[test]
fn pde_residual_validates_jet_order_and_dim() {
    let problem = ProblemSpec::burgers_steady();
    let jets = crate::net::JetBatch::<f64>::zeros(3, 1, 1, 1, vec![]);
    assert!(pde_residual(&problem, &jets).is_err());
    let jets = crate::net::JetBatch::<f64>::zeros(3, 2, 1, 2, vec![(0, 0)]);
    assert!(pde_residual(&problem, &jets).is_err());
}
