//! Discrete Laplace-Beltrami operators and their closed and Dirichlet spectra.
//!
//! The Laplacian is the linear finite element pair `(S, D)`: cotangent
//! stiffness and lumped (diagonal) vertex mass. Eigenvalues follow the
//! geometer's sign, `S phi = lambda D phi` with `lambda >= 0`.

mod eigs;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{lumped_areas, TriMesh};
use crate::sparse::CsrMatrix;
use crate::vec3;

pub use eigs::{generalized_eigenpairs, EigenOptions};

/// Cotangent stiffness and lumped mass of a mesh.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    faces: Vec<[usize; 3]>,
    // weight of face edge k (corner k -> k+1): half the cotangent of the opposite angle
    face_weights: Vec<[f64; 3]>,
}

impl OperatorPair {
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Diagonal of the (unnormalized) lumped mass matrix.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn num_vertices(&self) -> usize {
        self.mass.len()
    }

    /// `phi^T S phi / phi^T D phi`.
    pub fn rayleigh_quotient(&self, field: &[f64]) -> f64 {
        let den: f64 = field.iter().zip(&self.mass).map(|(x, m)| m * x * x).sum();
        self.stiffness.quadratic_form(field) / den
    }
}

/// One discrete eigenpair; `field` has unit `L2(m_g)` norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub field: Vec<f64>,
    /// `||S phi - lambda D phi|| / ||D phi||`.
    pub residual: f64,
}

/// Assembles the cotangent Laplacian and lumped mass.
pub fn assemble(mesh: &TriMesh) -> Result<OperatorPair> {
    let n = mesh.num_vertices();
    let mut triplets = Vec::with_capacity(12 * mesh.num_faces());
    let mut face_weights = Vec::with_capacity(mesh.num_faces());
    for (f, face) in mesh.faces().iter().enumerate() {
        let p = mesh.face_corners(f);
        let twice_area = vec3::norm(vec3::cross(vec3::sub(p[1], p[0]), vec3::sub(p[2], p[0])));
        if !(twice_area > 0.0) {
            return Err(Error::DegenerateFace { face: f, area: 0.5 * twice_area });
        }
        let mut w = [0.0; 3];
        for k in 0..3 {
            // angle at corner k + 2 sits opposite edge (k, k + 1)
            let o = (k + 2) % 3;
            let u = vec3::sub(p[k], p[o]);
            let v = vec3::sub(p[(k + 1) % 3], p[o]);
            w[k] = 0.5 * vec3::dot(u, v) / twice_area;
            let (a, b) = (face[k], face[(k + 1) % 3]);
            triplets.push((a, a, w[k]));
            triplets.push((b, b, w[k]));
            triplets.push((a, b, -w[k]));
            triplets.push((b, a, -w[k]));
        }
        face_weights.push(w);
    }
    Ok(OperatorPair {
        stiffness: CsrMatrix::from_triplets(n, triplets),
        mass: lumped_areas(mesh),
        faces: mesh.faces().to_vec(),
        face_weights,
    })
}

/// The `k` smallest eigenpairs of `(S, D)` in ascending order.
pub fn smallest_eigenpairs(ops: &OperatorPair, k: usize) -> Result<Vec<EigenPair>> {
    if k >= ops.num_vertices() {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs from {} vertices", ops.num_vertices())));
    }
    generalized_eigenpairs(&ops.stiffness, &ops.mass, k, &EigenOptions::default())
}

fn interior_indices(mesh: &TriMesh) -> Result<Vec<usize>> {
    if mesh.is_closed() {
        return Err(Error::InvalidArgument("Dirichlet problem needs a mesh with boundary".into()));
    }
    let boundary = mesh.boundary_vertices();
    let interior: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| !boundary[v]).collect();
    if interior.is_empty() {
        return Err(Error::UnderResolvedDomain);
    }
    Ok(interior)
}

/// The `k` smallest Dirichlet eigenvalues (boundary rows and columns removed).
pub fn dirichlet_eigenvalues(mesh: &TriMesh, k: usize) -> Result<Vec<f64>> {
    let interior = interior_indices(mesh)?;
    if k == 0 || k > interior.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {k} Dirichlet eigenvalues from {} interior vertices",
            interior.len()
        )));
    }
    let ops = assemble(mesh)?;
    let s = ops.stiffness.principal_submatrix(&interior);
    let d: Vec<f64> = interior.iter().map(|&v| ops.mass[v]).collect();
    let pairs = generalized_eigenpairs(&s, &d, k, &EigenOptions::default())?;
    Ok(pairs.into_iter().map(|p| p.lambda).collect())
}

/// First Dirichlet eigenvalue of a mesh with boundary.
pub fn dirichlet_lambda1(mesh: &TriMesh) -> Result<f64> {
    Ok(dirichlet_eigenvalues(mesh, 1)?[0])
}

/// `k`-th (1-based) Dirichlet eigenvalue.
pub fn dirichlet_lambdak(mesh: &TriMesh, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("Dirichlet index is 1-based".into()));
    }
    Ok(dirichlet_eigenvalues(mesh, k)?[k - 1])
}

/// Per-vertex `|grad phi|^2`: exact per-face gradients of the piecewise
/// linear field, averaged to vertices with lumped-area weights.
///
/// The `m_g`-weighted sum of the result equals `phi^T S phi / v_g(M)`.
pub fn dirichlet_energy_density(ops: &OperatorPair, field: &[f64]) -> Result<Vec<f64>> {
    if field.len() != ops.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for {} vertices",
            field.len(),
            ops.num_vertices()
        )));
    }
    let mut acc = vec![0.0; ops.num_vertices()];
    for (face, w) in ops.faces.iter().zip(&ops.face_weights) {
        let mut energy = 0.0;
        for k in 0..3 {
            let d = field[face[k]] - field[face[(k + 1) % 3]];
            energy += w[k] * d * d;
        }
        // energy = area * |grad|^2; each corner receives a third of it
        for &v in face {
            acc[v] += energy.max(0.0) / 3.0;
        }
    }
    Ok(acc.iter().zip(&ops.mass).map(|(e, m)| e / m).collect())
}

/// JSON layout for eigenpair export.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EigenExport {
    pub lambda: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl From<&[EigenPair]> for EigenExport {
    fn from(pairs: &[EigenPair]) -> Self {
        Self {
            lambda: pairs.iter().map(|p| p.lambda).collect(),
            fields: pairs.iter().map(|p| p.field.clone()).collect(),
            residuals: pairs.iter().map(|p| p.residual).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{
        extract_submesh, generate_disk, generate_flat_torus, generate_icosphere, generate_square, generate_strip,
        normalized_measure, Geometry,
    };
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn equilateral_edge_weights() {
        let h = 3f64.sqrt() / 2.0;
        let mesh =
            TriMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]], vec![[0, 1, 2]], Geometry::Planar)
                .unwrap();
        let ops = assemble(&mesh).unwrap();
        let expect = 1.0 / (2.0 * 3f64.sqrt());
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            assert_abs_diff_eq!(-ops.stiffness().get(a, b), expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn torus_grid_is_five_point_stencil() {
        let mesh = generate_flat_torus(6, 6, 1.0, 1.0).unwrap();
        let ops = assemble(&mesh).unwrap();
        let s = ops.stiffness();
        let id = |i: usize, j: usize| (i % 6) + 6 * (j % 6);
        assert_abs_diff_eq!(s.get(id(2, 2), id(2, 2)), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(id(2, 2), id(3, 2)), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(id(2, 2), id(2, 3)), -1.0, epsilon = 1e-12);
        // the shared diagonal faces a right angle on both sides
        assert_abs_diff_eq!(s.get(id(2, 2), id(3, 3)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn operator_invariants_on_closed_meshes() {
        for mesh in [generate_icosphere(3).unwrap(), generate_flat_torus(9, 7, 1.0, 1.3).unwrap()] {
            let ops = assemble(&mesh).unwrap();
            assert!(ops.stiffness().asymmetry() <= 1e-12);
            for r in ops.stiffness().row_sums() {
                assert!(r.abs() <= 1e-10, "row sum {r}");
            }
            assert!(ops.mass().iter().all(|&m| m > 0.0));
        }
    }

    #[test]
    fn closed_mesh_kernel_is_constant() {
        let mesh = generate_icosphere(2).unwrap();
        let pairs = smallest_eigenpairs(&assemble(&mesh).unwrap(), 2).unwrap();
        assert!(pairs[0].lambda.abs() <= 1e-9, "{}", pairs[0].lambda);
        let c = pairs[0].field[0];
        assert!(pairs[0].field.iter().all(|x| (x - c).abs() < 1e-8));
        assert_abs_diff_eq!(c.abs(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn eigenpair_invariants() {
        let mesh = generate_flat_torus(12, 10, 1.0, 0.8).unwrap();
        let ops = assemble(&mesh).unwrap();
        let measure = normalized_measure(&mesh);
        let pairs = smallest_eigenpairs(&ops, 9).unwrap();
        for w in pairs.windows(2) {
            assert!(w[0].lambda <= w[1].lambda);
        }
        for (i, p) in pairs.iter().enumerate() {
            assert!(p.residual <= 1e-8);
            let rq = ops.rayleigh_quotient(&p.field);
            assert!((rq - p.lambda).abs() <= 1e-8 * p.lambda.max(1.0));
            for q in &pairs[..i] {
                let ip: f64 = (0..p.field.len()).map(|v| measure.weight(v) * p.field[v] * q.field[v]).sum();
                assert!(ip.abs() < 1e-8);
            }
            assert_abs_diff_eq!(measure.l2_norm(&p.field), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sphere_first_cluster() {
        let mesh = generate_icosphere(4).unwrap();
        let pairs = smallest_eigenpairs(&assemble(&mesh).unwrap(), 4).unwrap();
        for p in &pairs[1..4] {
            assert!((1.98..=2.02).contains(&p.lambda), "{}", p.lambda);
        }
    }

    #[test]
    fn torus_first_cluster() {
        let mesh = generate_flat_torus(64, 64, 1.0, 1.0).unwrap();
        let pairs = smallest_eigenpairs(&assemble(&mesh).unwrap(), 5).unwrap();
        let exact = 4.0 * PI * PI;
        for p in &pairs[1..5] {
            assert!((p.lambda - exact).abs() <= 0.01 * exact, "{}", p.lambda);
        }
    }

    #[test]
    fn too_many_eigenpairs_requested() {
        let mesh = generate_icosphere(0).unwrap();
        assert!(smallest_eigenpairs(&assemble(&mesh).unwrap(), 12).is_err());
    }

    #[test]
    fn dirichlet_model_values() {
        let disk = generate_disk(5, 1.0).unwrap();
        let j01: f64 = 2.404_825_557_695_773;
        let l1 = dirichlet_lambda1(&disk).unwrap();
        assert!((l1 - j01 * j01).abs() <= 0.02 * j01 * j01, "{l1}");

        let square = generate_square(32, 1.0).unwrap();
        let ls = dirichlet_eigenvalues(&square, 2).unwrap();
        assert!((ls[0] - 2.0 * PI * PI).abs() <= 0.02 * 2.0 * PI * PI, "{}", ls[0]);
        assert!((ls[1] - 5.0 * PI * PI).abs() <= 0.02 * 5.0 * PI * PI, "{}", ls[1]);
        assert_abs_diff_eq!(dirichlet_lambdak(&square, 1).unwrap(), ls[0], epsilon = 1e-9);

        let strip = generate_strip(0.5, 1.0, 16, 32).unwrap();
        let lw = dirichlet_lambda1(&strip).unwrap();
        assert!((lw - 4.0 * PI * PI).abs() <= 0.02 * 4.0 * PI * PI, "{lw}");

        let j11: f64 = 3.831_705_970_207_512;
        let l2 = dirichlet_lambdak(&disk, 2).unwrap();
        assert!((l2 - j11 * j11).abs() <= 0.02 * j11 * j11, "{l2}");
    }

    #[test]
    fn dirichlet_errors() {
        let closed = generate_icosphere(1).unwrap();
        assert!(matches!(dirichlet_lambda1(&closed), Err(Error::InvalidArgument(_))));
        let tri =
            TriMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]], Geometry::Planar)
                .unwrap();
        assert!(matches!(dirichlet_lambda1(&tri), Err(Error::UnderResolvedDomain)));
    }

    #[test]
    fn dirichlet_domain_monotonicity() {
        let square = generate_square(24, 1.0).unwrap();
        let inner: Vec<usize> = (0..square.num_vertices()).filter(|&v| square.position(v)[0] <= 0.75 + 1e-12).collect();
        let sub = extract_submesh(&square, &inner).unwrap().mesh;
        assert!(dirichlet_lambda1(&sub).unwrap() >= dirichlet_lambda1(&square).unwrap() - 1e-9);
    }

    #[test]
    fn energy_density_examples() {
        let square = generate_square(8, 2.0).unwrap();
        let ops = assemble(&square).unwrap();
        let constant = vec![3.0; square.num_vertices()];
        assert!(dirichlet_energy_density(&ops, &constant).unwrap().iter().all(|&e| e == 0.0));
        let x: Vec<f64> = square.positions().iter().map(|p| p[0]).collect();
        for e in dirichlet_energy_density(&ops, &x).unwrap() {
            assert_abs_diff_eq!(e, 1.0, epsilon = 1e-12);
        }

        let torus = generate_flat_torus(64, 64, 1.0, 1.0).unwrap();
        let ops = assemble(&torus).unwrap();
        let m = normalized_measure(&torus);
        let phi: Vec<f64> = torus.positions().iter().map(|p| (2.0 * PI * p[0]).cos()).collect();
        let e = dirichlet_energy_density(&ops, &phi).unwrap();
        let total = m.integrate(&e);
        let rayleigh_numerator = ops.stiffness().quadratic_form(&phi) / m.total_area();
        assert!((total - rayleigh_numerator).abs() <= 1e-8 * rayleigh_numerator);
        assert!((total - 2.0 * PI * PI).abs() <= 0.01 * 2.0 * PI * PI, "{total}");
        assert!(dirichlet_energy_density(&ops, &phi[1..]).is_err());
    }

    #[test]
    fn export_layout() {
        let pairs = vec![EigenPair { lambda: 2.0, field: vec![1.0, -1.0], residual: 1e-12 }];
        let json = serde_json::to_value(EigenExport::from(pairs.as_slice())).unwrap();
        assert_eq!(json["lambda"][0], 2.0);
        assert_eq!(json["fields"][0][1], -1.0);
        assert_eq!(json["residuals"].as_array().unwrap().len(), 1);
    }
}
