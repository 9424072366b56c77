//! Triangle meshes for the model surfaces and their normalized volume measure.
//!
//! A [`TriMesh`] is an immutable indexed triangle list plus the derived edge
//! topology. Flat tori store 2D coordinates in a fundamental domain and every
//! edge vector is taken in the quotient metric (minimal periodic image), so
//! distances and areas never see the embedding.

mod generate;
pub mod io;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

pub use generate::{
    generate_disk, generate_flat_torus, generate_icosphere, generate_square, generate_strip, refine, MAX_FACES,
    MAX_ICOSPHERE_DEPTH,
};

/// How vertex coordinates relate to the metric of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "kebab-case")]
pub enum Geometry {
    /// Vertices on a round sphere centred at the origin; refinement re-projects.
    Sphere { radius: f64 },
    /// Generic polyhedral surface in 3D.
    #[serde(rename = "embedded-3d")]
    Embedded,
    /// Periodic rectangle `[0, Lx) x [0, Ly)` with the quotient metric.
    FlatTorus {
        #[serde(rename = "Lx")]
        lx: f64,
        #[serde(rename = "Ly")]
        ly: f64,
    },
    /// Planar mesh (z = 0), typically with boundary.
    #[serde(rename = "planar-with-boundary")]
    Planar,
}

const NO_FACE: usize = usize::MAX;

/// Compressed adjacency lists.
#[derive(Debug, Clone, Default)]
struct Adjacency {
    offsets: Vec<usize>,
    items: Vec<usize>,
}

impl Adjacency {
    fn build(n: usize, pairs: impl Iterator<Item = (usize, usize)> + Clone) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for (a, _) in pairs.clone() {
            offsets[a + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut items = vec![0usize; offsets[n]];
        for (a, b) in pairs {
            items[fill[a]] = b;
            fill[a] += 1;
        }
        for i in 0..n {
            items[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Self { offsets, items }
    }

    fn get(&self, i: usize) -> &[usize] {
        &self.items[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Indexed triangle mesh with derived edge topology.
#[derive(Debug, Clone)]
pub struct TriMesh {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    geometry: Geometry,
    edges: Vec<[usize; 2]>,
    edge_faces: Vec<[usize; 2]>,
    face_edges: Vec<[usize; 3]>,
    face_areas: Vec<f64>,
    boundary_edges: Vec<usize>,
    vertex_faces: Adjacency,
    neighbors: Adjacency,
}

impl TriMesh {
    /// Builds a mesh and validates it: indices in range, every edge shared by
    /// at most two faces with opposite orientation, all face areas positive.
    pub fn new(positions: Vec<Vec3>, faces: Vec<[usize; 3]>, geometry: Geometry) -> Result<Self> {
        let nv = positions.len();
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        if let Some(i) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} has a non-finite coordinate")));
        }
        if let Geometry::FlatTorus { lx, ly } = geometry {
            if !(lx > 0.0 && ly > 0.0) {
                return Err(Error::InvalidMesh("torus periods must be positive".into()));
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 2);
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(faces.len() * 2);
        let mut edge_faces: Vec<[usize; 2]> = Vec::with_capacity(faces.len() * 2);
        // forward[e] is true when the first incident face traverses the edge low -> high
        let mut forward: Vec<bool> = Vec::with_capacity(faces.len() * 2);
        let mut face_edges = Vec::with_capacity(faces.len());

        for (f, face) in faces.iter().enumerate() {
            if face.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("face {f} references a missing vertex")));
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::InvalidMesh(format!("face {f} repeats a vertex")));
            }
            let mut fe = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let dir = a < b;
                match lookup.get(&key) {
                    None => {
                        let id = edges.len();
                        lookup.insert(key, id);
                        edges.push([key.0, key.1]);
                        edge_faces.push([f, NO_FACE]);
                        forward.push(dir);
                        fe[k] = id;
                    }
                    Some(&id) => {
                        if edge_faces[id][1] != NO_FACE {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({}, {}) has more than two faces",
                                key.0, key.1
                            )));
                        }
                        if forward[id] == dir {
                            return Err(Error::InvalidMesh(format!(
                                "inconsistent orientation across edge ({}, {})",
                                key.0, key.1
                            )));
                        }
                        edge_faces[id][1] = f;
                        fe[k] = id;
                    }
                }
            }
            face_edges.push(fe);
        }

        let boundary_edges = (0..edges.len()).filter(|&e| edge_faces[e][1] == NO_FACE).collect();
        let vertex_faces =
            Adjacency::build(nv, faces.iter().enumerate().flat_map(|(f, t)| t.iter().map(move |&v| (v, f))));
        let neighbors = Adjacency::build(nv, edges.iter().flat_map(|&[a, b]| [(a, b), (b, a)]));

        let mut mesh = Self {
            positions,
            faces,
            geometry,
            edges,
            edge_faces,
            face_edges,
            face_areas: Vec::new(),
            boundary_edges,
            vertex_faces,
            neighbors,
        };
        let mut areas = Vec::with_capacity(mesh.faces.len());
        for f in 0..mesh.faces.len() {
            let [p0, p1, p2] = mesh.face_corners(f);
            let e1 = vec3::sub(p1, p0);
            let e2 = vec3::sub(p2, p0);
            let area = 0.5 * vec3::norm(vec3::cross(e1, e2));
            let scale = vec3::dot(e1, e1).max(vec3::dot(e2, e2));
            if !(area > 1e-14 * scale) {
                return Err(Error::DegenerateFace { face: f, area });
            }
            areas.push(area);
        }
        mesh.face_areas = areas;
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Edges as `[low, high]` vertex pairs, numbered in order of first appearance.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Incident faces of an edge; the second is `None` on the boundary.
    pub fn edge_faces(&self, e: usize) -> (usize, Option<usize>) {
        let [a, b] = self.edge_faces[e];
        (a, (b != NO_FACE).then_some(b))
    }

    /// Edge ids of a face; entry `k` joins corners `k` and `k + 1`.
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges.is_empty()
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// Unnormalized area `v_g(M)`.
    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        self.vertex_faces.get(v)
    }

    /// Sorted neighbour vertices of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.neighbors.get(v)
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let (lo, hi) = (a.min(b), a.max(b));
        self.vertex_faces(lo)
            .iter()
            .find_map(|&f| self.face_edges[f].iter().copied().find(|&e| self.edges[e] == [lo, hi]))
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Number of connected boundary curves.
    pub fn boundary_loops(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.num_vertices()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &e in &self.boundary_edges {
            let [a, b] = self.edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut roots: Vec<usize> = self.boundary_edges.iter().map(|&e| find(&mut parent, self.edges[e][0])).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Marks vertices incident to a boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut mark = vec![false; self.num_vertices()];
        for &e in &self.boundary_edges {
            let [a, b] = self.edges[e];
            mark[a] = true;
            mark[b] = true;
        }
        mark
    }

    /// Vector from vertex `a` to vertex `b` in the surface metric.
    pub fn edge_vector(&self, a: usize, b: usize) -> Vec3 {
        self.displacement(self.positions[a], self.positions[b])
    }

    /// Displacement `q - p`, reduced to the minimal periodic image on tori.
    pub fn displacement(&self, p: Vec3, q: Vec3) -> Vec3 {
        let mut d = vec3::sub(q, p);
        if let Geometry::FlatTorus { lx, ly } = self.geometry {
            d[0] -= lx * (d[0] / lx).round();
            d[1] -= ly * (d[1] / ly).round();
        }
        d
    }

    /// Maps a point back into the fundamental domain (identity off the torus).
    pub fn wrap(&self, mut p: Vec3) -> Vec3 {
        if let Geometry::FlatTorus { lx, ly } = self.geometry {
            p[0] = p[0].rem_euclid(lx);
            p[1] = p[1].rem_euclid(ly);
        }
        p
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        vec3::norm(self.edge_vector(a, b))
    }

    /// Mean edge length, the mesh size `h` used in discretization allowances.
    pub fn mean_edge_length(&self) -> f64 {
        let total: f64 = (0..self.num_edges()).map(|e| self.edge_length(e)).sum();
        total / self.num_edges() as f64
    }

    /// Face corners unwrapped around the first corner, so that differences of
    /// the returned points are true edge vectors even across a torus seam.
    pub fn face_corners(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        let p0 = self.positions[a];
        [p0, vec3::add(p0, self.edge_vector(a, b)), vec3::add(p0, self.edge_vector(a, c))]
    }
}

/// Lumped probability measure `m_g = v_g / v_g(M)` on the vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeMeasure {
    weights: Vec<f64>,
    total_area: f64,
}

impl VolumeMeasure {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    /// The unnormalized `v_g(M)`.
    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn measure_of(&self, vertices: impl IntoIterator<Item = usize>) -> f64 {
        vertices.into_iter().map(|v| self.weights[v]).sum()
    }

    pub fn measure_of_mask(&self, mask: &[bool]) -> f64 {
        self.weights.iter().zip(mask).filter(|(_, &m)| m).map(|(w, _)| w).sum()
    }

    /// `m_g`-weighted mean of `f(v)`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, x)| w * x).sum()
    }

    /// `L2(m_g)` norm of a per-vertex field.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, x)| w * x * x).sum::<f64>().sqrt()
    }
}

/// Lumped vertex areas: one third of the incident face areas.
pub fn lumped_areas(mesh: &TriMesh) -> Vec<f64> {
    let mut areas = vec![0.0; mesh.num_vertices()];
    for (face, &a) in mesh.faces().iter().zip(mesh.face_areas()) {
        for &v in face {
            areas[v] += a / 3.0;
        }
    }
    areas
}

/// Normalized lumped measure with total mass one.
pub fn normalized_measure(mesh: &TriMesh) -> VolumeMeasure {
    let areas = lumped_areas(mesh);
    let total_area = mesh.total_area();
    let mut weights: Vec<f64> = areas.iter().map(|a| a / total_area).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    VolumeMeasure { weights, total_area }
}

/// A mesh induced by a vertex subset, with the map back to parent vertices.
#[derive(Debug, Clone)]
pub struct Submesh {
    pub mesh: TriMesh,
    /// `parent_vertex[i]` is the parent id of submesh vertex `i`.
    pub parent_vertex: Vec<usize>,
}

/// Keeps the faces whose three vertices lie in `vertex_subset`.
pub fn extract_submesh(mesh: &TriMesh, vertex_subset: &[usize]) -> Result<Submesh> {
    let mut mask = vec![false; mesh.num_vertices()];
    for &v in vertex_subset {
        if v >= mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
        }
        mask[v] = true;
    }
    extract_submesh_mask(mesh, &mask)
}

/// Mask form of [`extract_submesh`].
pub fn extract_submesh_mask(mesh: &TriMesh, mask: &[bool]) -> Result<Submesh> {
    let kept: Vec<[usize; 3]> = mesh.faces().iter().copied().filter(|f| f.iter().all(|&v| mask[v])).collect();
    if kept.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let mut used = vec![false; mesh.num_vertices()];
    for f in &kept {
        for &v in f {
            used[v] = true;
        }
    }
    let mut new_id = vec![usize::MAX; mesh.num_vertices()];
    let mut parent_vertex = Vec::new();
    for v in 0..mesh.num_vertices() {
        if used[v] {
            new_id[v] = parent_vertex.len();
            parent_vertex.push(v);
        }
    }
    let positions = parent_vertex.iter().map(|&v| mesh.position(v)).collect();
    let faces = kept.iter().map(|f| [new_id[f[0]], new_id[f[1]], new_id[f[2]]]).collect();
    let sub = TriMesh::new(positions, faces, mesh.geometry())?;
    Ok(Submesh { mesh: sub, parent_vertex })
}
