use nodal_lab::analytic::{sample, sphere_harmonic, torus_mode, tube_complement_oracle};
use nodal_lab::mesh::{generate_flat_torus, generate_icosphere, normalized_measure};
use nodal_lab::nodal::{
    distance_to_set, domain_mesh, extract_nodal_set, nodal_domains, tube_profile, DistanceOptions, Sources,
    DEFAULT_ZERO_TOL,
};
use nodal_lab::spectral::{assemble, dirichlet_lambda1, smallest_eigenpairs};
use nodal_lab::Error;
use std::f64::consts::PI;

#[test]
fn sphere_degree_one_is_the_height_function() {
    let mesh = generate_icosphere(3).unwrap();
    let field = sample(&sphere_harmonic(1, 0).unwrap(), &mesh).unwrap();
    // unit L2 norm against the probability measure: int z^2 = 1/3
    for (v, &x) in field.iter().enumerate() {
        assert!((x - 3f64.sqrt() * mesh.position(v)[2]).abs() < 1e-12);
    }
}

#[test]
fn torus_rayleigh_quotient() {
    let mesh = generate_flat_torus(128, 128, 1.0, 1.0).unwrap();
    let mode = torus_mode(3, 2, 0.4);
    let field = sample(&mode, &mesh).unwrap();
    let ops = assemble(&mesh).unwrap();
    let q = ops.rayleigh_quotient(&field);
    assert!((q / mode.lambda() - 1.0).abs() < 5e-3, "{q} vs {}", mode.lambda());
}

#[test]
fn sampling_checks_geometry() {
    let torus = generate_flat_torus(8, 8, 1.0, 1.0).unwrap();
    let sphere = generate_icosphere(1).unwrap();
    assert!(matches!(sample(&sphere_harmonic(2, 1).unwrap(), &torus), Err(Error::GeometryMismatch(_))));
    assert!(matches!(sample(&torus_mode(1, 0, 0.0), &sphere), Err(Error::GeometryMismatch(_))));
    let wide = generate_flat_torus(8, 8, 2.0, 1.0).unwrap();
    assert!(matches!(sample(&torus_mode(1, 0, 0.0), &wide), Err(Error::GeometryMismatch(_))));
}

/// Eigenvector `k` (1-based) has at most `k + r - 1` strong nodal domains,
/// `r` the size of its eigenvalue cluster.
fn assert_courant(mesh: &nodal_lab::mesh::TriMesh) {
    let ops = assemble(mesh).unwrap();
    let pairs = smallest_eigenpairs(&ops, 15).unwrap();
    for (i, pair) in pairs.iter().enumerate().skip(1) {
        let cluster = pairs.iter().filter(|p| (p.lambda - pair.lambda).abs() <= 1e-3 * pair.lambda).count();
        let domains = nodal_domains(mesh, &pair.field).unwrap().count();
        assert!(domains <= (i + 1) + cluster - 1, "pair {i}: {domains} domains, cluster {cluster}");
    }
}

#[test]
fn courant_bound_on_sphere_and_torus() {
    assert_courant(&generate_icosphere(3).unwrap());
    assert_courant(&generate_flat_torus(32, 32, 1.0, 1.0).unwrap());
}

#[test]
fn sphere_cluster_converges() {
    let mut errors = Vec::new();
    for depth in 2..=4 {
        let mesh = generate_icosphere(depth).unwrap();
        let pairs = smallest_eigenpairs(&assemble(&mesh).unwrap(), 9).unwrap();
        let err = pairs[1..4]
            .iter()
            .map(|p| (p.lambda - 2.0).abs())
            .chain(pairs[4..9].iter().map(|p| (p.lambda - 6.0).abs() / 3.0))
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn torus_tube_profile_converges() {
    let mode = torus_mode(2, 0, 0.3);
    let oracle = tube_complement_oracle(&mode).unwrap();
    let grid: Vec<f64> = (0..40).map(|i| i as f64 / 300.0).collect();
    let mut gaps = Vec::new();
    for n in [32, 64, 128] {
        let mesh = generate_flat_torus(n, n, 1.0, 1.0).unwrap();
        let field = sample(&mode, &mesh).unwrap();
        let nodal = extract_nodal_set(&mesh, &field, DEFAULT_ZERO_TOL).unwrap();
        let dist = distance_to_set(&mesh, &Sources::Nodal(&nodal), &DistanceOptions::default()).unwrap();
        let profile = tube_profile(&dist, &normalized_measure(&mesh), &grid).unwrap();
        gaps.push(profile.sup_gap(&oracle));
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn nodal_domain_carries_the_eigenvalue() {
    let mode = torus_mode(2, 0, 0.0);
    let target = 16.0 * PI * PI;
    let mut errors = Vec::new();
    for n in [64, 128] {
        let mesh = generate_flat_torus(n, n, 1.0, 1.0).unwrap();
        let field = sample(&mode, &mesh).unwrap();
        let nodal = extract_nodal_set(&mesh, &field, DEFAULT_ZERO_TOL).unwrap();
        let labels = nodal.domains(&mesh);
        assert_eq!(labels.count(), 4);
        let strip = domain_mesh(&mesh, &nodal, &labels, 0).unwrap();
        let l1 = dirichlet_lambda1(&strip.mesh).unwrap();
        errors.push((l1 / target - 1.0).abs());
    }
    assert!(errors[1] < 0.03 && errors[1] < errors[0], "{errors:?}");
}
