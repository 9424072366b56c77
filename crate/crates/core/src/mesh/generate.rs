use std::f64::consts::PI;

use super::{Geometry, TriMesh};
use crate::error::{invalid, Error, Result};
use crate::vec3::{self, Vec3};

/// Deepest icosphere the generators will build.
pub const MAX_ICOSPHERE_DEPTH: u32 = 8;

/// Face-count ceiling shared by all generators and [`refine`].
pub const MAX_FACES: usize = 20 * 4usize.pow(MAX_ICOSPHERE_DEPTH);

fn check_faces(count: usize) -> Result<()> {
    if count > MAX_FACES {
        return Err(Error::ResourceLimit(format!("{count} faces exceeds the limit of {MAX_FACES}")));
    }
    Ok(())
}

fn icosahedron() -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [Vec3; 12] = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let positions = raw.iter().map(|&p| vec3::scale(p, 1.0 / vec3::norm(p))).collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriMesh::new(positions, faces, Geometry::Sphere { radius: 1.0 }).expect("icosahedron is a valid closed mesh")
}

/// Unit icosphere: the icosahedron refined `depth` times with projection.
pub fn generate_icosphere(depth: u32) -> Result<TriMesh> {
    if depth > MAX_ICOSPHERE_DEPTH {
        return Err(Error::ResourceLimit(format!("icosphere depth {depth} exceeds {MAX_ICOSPHERE_DEPTH}")));
    }
    let mut mesh = icosahedron();
    for _ in 0..depth {
        mesh = refine(&mesh)?;
    }
    Ok(mesh)
}

/// Uniform right-triangulated `nx x ny` grid on the flat torus `[0,Lx) x [0,Ly)`.
///
/// Every cell is split along the same diagonal, so with square cells the
/// cotangent Laplacian is exactly the 5-point stencil.
pub fn generate_flat_torus(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<TriMesh> {
    if nx < 3 || ny < 3 {
        return Err(invalid(format!("torus grid needs nx, ny >= 3 (got {nx} x {ny})")));
    }
    if !(lx > 0.0 && ly > 0.0) {
        return Err(invalid("torus periods must be positive"));
    }
    check_faces(2 * nx * ny)?;
    let id = |i: usize, j: usize| (i % nx) + nx * (j % ny);
    let mut positions = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            positions.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    TriMesh::new(positions, faces, Geometry::FlatTorus { lx, ly })
}

/// Disk of the given radius built from `2^depth` concentric rings, ring `i`
/// carrying `6 i` equally spaced vertices.
pub fn generate_disk(depth: u32, radius: f64) -> Result<TriMesh> {
    if !(radius > 0.0) {
        return Err(invalid("disk radius must be positive"));
    }
    if depth > MAX_ICOSPHERE_DEPTH {
        return Err(Error::ResourceLimit(format!("disk depth {depth} exceeds {MAX_ICOSPHERE_DEPTH}")));
    }
    let n = 1usize << depth;
    check_faces(6 * n * n)?;
    let ring_start = |i: usize| if i == 0 { 0 } else { 1 + 3 * i * (i - 1) };
    let mut positions = vec![[0.0, 0.0, 0.0]];
    for i in 1..=n {
        let r = radius * i as f64 / n as f64;
        let count = 6 * i;
        for j in 0..count {
            let theta = 2.0 * PI * j as f64 / count as f64;
            positions.push([r * theta.cos(), r * theta.sin(), 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(6 * n * n);
    for j in 0..6 {
        faces.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for i in 2..=n {
        let (na, nb) = (6 * (i - 1), 6 * i);
        let (sa, sb) = (ring_start(i - 1), ring_start(i));
        let (mut ia, mut ib) = (0usize, 0usize);
        while ia < na || ib < nb {
            // advance along whichever ring has the smaller next angle
            let advance_outer = ia == na || (ib < nb && (ib + 1) * na <= (ia + 1) * nb);
            if advance_outer {
                faces.push([sa + ia % na, sb + ib, sb + (ib + 1) % nb]);
                ib += 1;
            } else {
                faces.push([sa + ia, sb + ib % nb, sa + (ia + 1) % na]);
                ia += 1;
            }
        }
    }
    TriMesh::new(positions, faces, Geometry::Planar)
}

/// Square `[0, side]^2` split into `n x n` cells, each cut along the same diagonal.
pub fn generate_square(n: usize, side: f64) -> Result<TriMesh> {
    if n < 1 || !(side > 0.0) {
        return Err(invalid("square needs n >= 1 and a positive side"));
    }
    check_faces(2 * n * n)?;
    let id = |i: usize, j: usize| i + (n + 1) * j;
    let h = side / n as f64;
    let mut positions = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            positions.push([h * i as f64, h * j as f64, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(positions, faces, Geometry::Planar)
}

/// Periodic strip `[0, width] x (R / length Z)`: two boundary lines at
/// `x = 0` and `x = width`, periodic in `y`.
///
/// It is stored as a sub-region of the flat torus of size `2 width x length`,
/// which is exactly a nodal domain of `cos(pi x / width)` on that torus.
pub fn generate_strip(width: f64, length: f64, n_across: usize, n_along: usize) -> Result<TriMesh> {
    if n_across < 2 || n_along < 3 {
        return Err(invalid("strip needs n_across >= 2 and n_along >= 3"));
    }
    if !(width > 0.0 && length > 0.0) {
        return Err(invalid("strip dimensions must be positive"));
    }
    check_faces(2 * n_across * n_along)?;
    let cols = n_across + 1;
    let id = |i: usize, j: usize| i + cols * (j % n_along);
    let mut positions = Vec::with_capacity(cols * n_along);
    for j in 0..n_along {
        for i in 0..cols {
            positions.push([width * i as f64 / n_across as f64, length * j as f64 / n_along as f64, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * n_across * n_along);
    for j in 0..n_along {
        for i in 0..n_across {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(positions, faces, Geometry::FlatTorus { lx: 2.0 * width, ly: length })
}

/// Uniform 1-to-4 split; midpoints are re-projected on spheres.
pub fn refine(mesh: &TriMesh) -> Result<TriMesh> {
    check_faces(4 * mesh.num_faces())?;
    let nv = mesh.num_vertices();
    let mut positions = mesh.positions().to_vec();
    positions.reserve(mesh.num_edges());
    for &[a, b] in mesh.edges() {
        let mid = vec3::add(mesh.position(a), vec3::scale(mesh.edge_vector(a, b), 0.5));
        let mid = match mesh.geometry() {
            Geometry::Sphere { radius } => vec3::scale(mid, radius / vec3::norm(mid)),
            _ => mesh.wrap(mid),
        };
        positions.push(mid);
    }
    let mut faces = Vec::with_capacity(4 * mesh.num_faces());
    for (f, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let [eab, ebc, eca] = mesh.face_edges(f);
        let (mab, mbc, mca) = (nv + eab, nv + ebc, nv + eca);
        faces.push([a, mab, mca]);
        faces.push([b, mbc, mab]);
        faces.push([c, mca, mbc]);
        faces.push([mab, mbc, mca]);
    }
    TriMesh::new(positions, faces, mesh.geometry())
}
