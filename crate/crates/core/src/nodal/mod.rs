//! Nodal sets, nodal domains, distance fields, and tube-complement profiles.

mod distance;
mod profile;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::mesh::{Geometry, TriMesh};
use crate::vec3::{self, Vec3};

pub use distance::{distance_to_set, DistanceEngine, DistanceField, DistanceOptions, Sources};
pub use profile::{boundary_distance_profile, default_r_grid, tube_profile, ExactProfile, TubeProfile};

/// Default relative tolerance below which vertex values count as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// A sign change of the field along a mesh edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub edge: usize,
    /// Interpolation parameter from the lower to the higher edge endpoint.
    pub t: f64,
    pub position: Vec3,
}

/// A point of the discrete nodal set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodalPoint {
    Vertex(usize),
    Crossing(usize),
}

/// A straight piece of the nodal set inside one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub face: usize,
    pub ends: [NodalPoint; 2],
}

/// Piecewise linear zero set of a per-vertex field.
#[derive(Debug, Clone)]
pub struct NodalSet {
    crossings: Vec<Crossing>,
    zero_vertices: Vec<usize>,
    segments: Vec<Segment>,
    edge_crossing: Vec<Option<usize>>,
    signs: Vec<i8>,
}

fn snapped_signs(field: &[f64], zero_tol: f64) -> Result<Vec<i8>> {
    if field.iter().any(|x| !x.is_finite()) {
        return Err(invalid("field has non-finite values"));
    }
    let peak = field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return Err(Error::DegenerateField);
    }
    let cut = zero_tol * peak;
    Ok(field
        .iter()
        .map(|&x| {
            if x.abs() <= cut {
                0
            } else if x > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// Extracts crossings, zero vertices, and per-face segments.
pub fn extract_nodal_set(mesh: &TriMesh, field: &[f64], zero_tol: f64) -> Result<NodalSet> {
    if field.len() != mesh.num_vertices() {
        return Err(invalid(format!("field has {} values for {} vertices", field.len(), mesh.num_vertices())));
    }
    let signs = snapped_signs(field, zero_tol)?;
    let zero_vertices: Vec<usize> = (0..field.len()).filter(|&v| signs[v] == 0).collect();

    let mut crossings = Vec::new();
    let mut edge_crossing = vec![None; mesh.num_edges()];
    for (e, &[u, v]) in mesh.edges().iter().enumerate() {
        if signs[u] * signs[v] == -1 {
            let t = field[u] / (field[u] - field[v]);
            let p = vec3::add(mesh.position(u), vec3::scale(mesh.edge_vector(u, v), t));
            edge_crossing[e] = Some(crossings.len());
            crossings.push(Crossing { edge: e, t, position: mesh.wrap(p) });
        }
    }

    let mut seen: BTreeSet<[NodalPoint; 2]> = BTreeSet::new();
    let mut segments = Vec::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        let mut points = Vec::with_capacity(3);
        for k in 0..3 {
            if signs[face[k]] == 0 {
                points.push(NodalPoint::Vertex(face[k]));
            }
            if let Some(c) = edge_crossing[mesh.face_edges(f)[k]] {
                points.push(NodalPoint::Crossing(c));
            }
        }
        let pairs: Vec<[NodalPoint; 2]> = match points.len() {
            2 => vec![[points[0], points[1]]],
            // a face lying inside the zero set contributes its edges
            3 => vec![[points[0], points[1]], [points[1], points[2]], [points[0], points[2]]],
            _ => Vec::new(),
        };
        for mut ends in pairs {
            ends.sort();
            if seen.insert(ends) {
                segments.push(Segment { face: f, ends });
            }
        }
    }
    Ok(NodalSet { crossings, zero_vertices, segments, edge_crossing, signs })
}

impl NodalSet {
    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    pub fn zero_vertices(&self) -> &[usize] {
        &self.zero_vertices
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn crossing_on_edge(&self, e: usize) -> Option<usize> {
        self.edge_crossing[e]
    }

    /// Snapped vertex signs (-1, 0, +1).
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn is_empty(&self) -> bool {
        self.crossings.is_empty() && self.zero_vertices.is_empty()
    }

    /// All nodal points: zero vertices, then crossings.
    pub fn points(&self) -> Vec<NodalPoint> {
        let mut out: Vec<NodalPoint> = self.zero_vertices.iter().map(|&v| NodalPoint::Vertex(v)).collect();
        out.extend((0..self.crossings.len()).map(NodalPoint::Crossing));
        out
    }

    pub fn position(&self, mesh: &TriMesh, p: NodalPoint) -> Vec3 {
        match p {
            NodalPoint::Vertex(v) => mesh.position(v),
            NodalPoint::Crossing(c) => self.crossings[c].position,
        }
    }

    /// Position of a nodal point in the unwrapped frame of face `f`, which
    /// must contain it.
    pub fn position_in_face(&self, mesh: &TriMesh, f: usize, p: NodalPoint) -> Vec3 {
        let corners = mesh.face_corners(f);
        let face = mesh.faces()[f];
        match p {
            NodalPoint::Vertex(v) => {
                let k = face.iter().position(|&x| x == v).expect("vertex lies on face");
                corners[k]
            }
            NodalPoint::Crossing(c) => {
                let crossing = self.crossings[c];
                let [lo, _] = mesh.edges()[crossing.edge];
                let k = mesh.face_edges(f).iter().position(|&e| e == crossing.edge).expect("edge lies on face");
                let (a, b) = (corners[k], corners[(k + 1) % 3]);
                if face[k] == lo {
                    vec3::lerp(a, b, crossing.t)
                } else {
                    vec3::lerp(b, a, crossing.t)
                }
            }
        }
    }

    /// Line-segment soup for export.
    pub fn export(&self, mesh: &TriMesh) -> NodalExport {
        NodalExport {
            segments: self
                .segments
                .iter()
                .map(|s| [self.position(mesh, s.ends[0]), self.position(mesh, s.ends[1])])
                .collect(),
            zero_vertices: self.zero_vertices.clone(),
            crossings: self.crossings.len(),
        }
    }
}

/// JSON layout of an exported nodal set.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NodalExport {
    pub segments: Vec<[Vec3; 2]>,
    pub zero_vertices: Vec<usize>,
    pub crossings: usize,
}

/// Connected components of the positive and negative vertex sets.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainLabeling {
    labels: Vec<Option<usize>>,
    signs: Vec<i8>,
}

impl DomainLabeling {
    /// Domain of each vertex; zero vertices have none.
    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    /// Sign of each domain.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn count(&self) -> usize {
        self.signs.len()
    }

    pub fn members(&self, domain: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| self.labels[v] == Some(domain)).collect()
    }
}

/// Labels nodal domains, numbered by their lowest vertex.
pub fn nodal_domains(mesh: &TriMesh, field: &[f64]) -> Result<DomainLabeling> {
    if field.len() != mesh.num_vertices() {
        return Err(invalid("field length does not match the mesh"));
    }
    let signs = snapped_signs(field, DEFAULT_ZERO_TOL)?;
    Ok(label_domains(mesh, &signs))
}

fn label_domains(mesh: &TriMesh, vertex_signs: &[i8]) -> DomainLabeling {
    let n = mesh.num_vertices();
    let mut labels = vec![None; n];
    let mut signs = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if vertex_signs[start] == 0 || labels[start].is_some() {
            continue;
        }
        let id = signs.len();
        signs.push(vertex_signs[start]);
        labels[start] = Some(id);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &w in mesh.neighbors(u) {
                if labels[w].is_none() && vertex_signs[w] == vertex_signs[start] {
                    labels[w] = Some(id);
                    queue.push_back(w);
                }
            }
        }
    }
    DomainLabeling { labels, signs }
}

impl NodalSet {
    /// Domain labeling consistent with this set's zero snapping.
    pub fn domains(&self, mesh: &TriMesh) -> DomainLabeling {
        label_domains(mesh, &self.signs)
    }
}

/// A nodal domain cut out of the mesh along the nodal set.
#[derive(Debug, Clone)]
pub struct DomainMesh {
    pub mesh: TriMesh,
    /// Parent vertex of each domain-mesh vertex; `None` for inserted crossings.
    pub parent_vertex: Vec<Option<usize>>,
}

/// Clips the mesh to one nodal domain, inserting the crossing points so the
/// domain boundary follows the piecewise linear nodal set.
pub fn domain_mesh(mesh: &TriMesh, nodal: &NodalSet, labeling: &DomainLabeling, domain: usize) -> Result<DomainMesh> {
    if domain >= labeling.count() {
        return Err(invalid(format!("domain {domain} of {}", labeling.count())));
    }
    let inside = |v: usize| labeling.label(v) == Some(domain);
    let mut ids: std::collections::BTreeMap<NodalPoint, usize> = Default::default();
    let mut positions: Vec<Vec3> = Vec::new();
    let mut parent_vertex = Vec::new();
    let mut id_of = |key: NodalPoint, pos: Vec3, parent: Option<usize>| -> usize {
        *ids.entry(key).or_insert_with(|| {
            positions.push(pos);
            parent_vertex.push(parent);
            positions.len() - 1
        })
    };

    let mut faces = Vec::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        if !face.iter().any(|&v| inside(v)) {
            continue;
        }
        let corners = mesh.face_corners(f);
        // polygon of (id, unwrapped position)
        let mut poly: Vec<(usize, Vec3)> = Vec::with_capacity(4);
        for k in 0..3 {
            let v = face[k];
            if inside(v) || nodal.signs[v] == 0 {
                poly.push((id_of(NodalPoint::Vertex(v), mesh.position(v), Some(v)), corners[k]));
            }
            if let Some(c) = nodal.edge_crossing[mesh.face_edges(f)[k]] {
                let p = nodal.position_in_face(mesh, f, NodalPoint::Crossing(c));
                let key = NodalPoint::Crossing(c);
                poly.push((id_of(key, nodal.crossings[c].position, None), p));
            }
        }
        let tris: Vec<[usize; 3]> = match poly.len() {
            3 => vec![[0, 1, 2]],
            4 => {
                let d02 = vec3::norm(vec3::sub(poly[2].1, poly[0].1));
                let d13 = vec3::norm(vec3::sub(poly[3].1, poly[1].1));
                if d02 <= d13 {
                    vec![[0, 1, 2], [0, 2, 3]]
                } else {
                    vec![[0, 1, 3], [1, 2, 3]]
                }
            }
            _ => Vec::new(),
        };
        for t in tris {
            let (a, b, c) = (poly[t[0]].1, poly[t[1]].1, poly[t[2]].1);
            let e1 = vec3::sub(b, a);
            let e2 = vec3::sub(c, a);
            let area = 0.5 * vec3::norm(vec3::cross(e1, e2));
            // slivers from crossings next to a vertex carry no measure
            if area > 1e-12 * vec3::dot(e1, e1).max(vec3::dot(e2, e2)) {
                faces.push([poly[t[0]].0, poly[t[1]].0, poly[t[2]].0]);
            }
        }
    }
    if faces.is_empty() {
        return Err(Error::EmptyDomain);
    }
    // drop vertices only referenced by discarded slivers
    let mut used = vec![false; positions.len()];
    for f in &faces {
        for &v in f {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; positions.len()];
    let mut kept_pos = Vec::new();
    let mut kept_parent = Vec::new();
    for i in 0..positions.len() {
        if used[i] {
            remap[i] = kept_pos.len();
            kept_pos.push(positions[i]);
            kept_parent.push(parent_vertex[i]);
        }
    }
    let faces = faces.iter().map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]]).collect();
    let geometry = match mesh.geometry() {
        Geometry::Sphere { .. } => Geometry::Embedded,
        g => g,
    };
    Ok(DomainMesh { mesh: TriMesh::new(kept_pos, faces, geometry)?, parent_vertex: kept_parent })
}
