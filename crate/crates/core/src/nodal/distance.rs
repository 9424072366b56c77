//! Geodesic distance fields on triangle meshes.
//!
//! Two engines are available. `FastMarching` propagates a front through
//! triangles with a planar-front update, falling back to edge
//! updates; sources are seeded with their exact in-face distances. `Graph`
//! runs Dijkstra on the vertex graph augmented with the nodal crossing
//! points. Both are deterministic; fast marching is never larger than the
//! graph distance on the same sources.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{NodalPoint, NodalSet};
use crate::error::{invalid, Result};
use crate::mesh::TriMesh;
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceEngine {
    #[default]
    FastMarching,
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceOptions {
    pub engine: DistanceEngine,
    /// Propagation stops beyond this distance; farther vertices read `inf`.
    pub cutoff: f64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self { engine: DistanceEngine::default(), cutoff: f64::INFINITY }
    }
}

/// What distances are measured from.
#[derive(Debug, Clone, Copy)]
pub enum Sources<'a> {
    Nodal(&'a NodalSet),
    Boundary,
    Vertices(&'a [usize]),
    /// A single point of a nodal set.
    Point(&'a NodalSet, NodalPoint),
}

/// Per-vertex distance to a source set.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    values: Vec<f64>,
}

impl DistanceField {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, v: usize) -> f64 {
        self.values[v]
    }

    /// Largest finite distance.
    pub fn max(&self) -> f64 {
        self.values.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max)
    }

    /// Vertices with distance at most `r`.
    pub fn within(&self, r: f64) -> Vec<usize> {
        (0..self.values.len()).filter(|&v| self.values[v] <= r).collect()
    }

    /// Largest `|d(u) - d(v)| - length(u, v)` over edges with finite ends.
    pub fn lipschitz_excess(&self, mesh: &TriMesh) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (e, &[u, v]) in mesh.edges().iter().enumerate() {
            let (a, b) = (self.values[u], self.values[v]);
            if a.is_finite() && b.is_finite() {
                worst = worst.max((a - b).abs() - mesh.edge_length(e));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Distance from `sources` to every vertex.
pub fn distance_to_set(mesh: &TriMesh, sources: &Sources, opts: &DistanceOptions) -> Result<DistanceField> {
    let values = match opts.engine {
        DistanceEngine::FastMarching => fast_marching(mesh, &seeds(mesh, sources)?, opts.cutoff),
        DistanceEngine::Graph => graph_dijkstra(mesh, sources, opts.cutoff)?,
    };
    Ok(DistanceField { values })
}

fn seed(seeds: &mut Vec<(usize, f64)>, v: usize, d: f64) {
    seeds.push((v, d));
}

/// Exact in-face distances from the sources to nearby vertices.
fn seeds(mesh: &TriMesh, sources: &Sources) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    match *sources {
        Sources::Nodal(set) => {
            if set.is_empty() {
                return Err(invalid("empty source set"));
            }
            for &v in set.zero_vertices() {
                seed(&mut out, v, 0.0);
            }
            for s in set.segments() {
                let a = set.position_in_face(mesh, s.face, s.ends[0]);
                let b = set.position_in_face(mesh, s.face, s.ends[1]);
                let corners = mesh.face_corners(s.face);
                for (k, &v) in mesh.faces()[s.face].iter().enumerate() {
                    seed(&mut out, v, vec3::point_segment_distance(corners[k], a, b));
                }
            }
            for c in 0..set.crossings().len() {
                point_seeds(mesh, set, NodalPoint::Crossing(c), &mut out);
            }
        }
        Sources::Boundary => {
            if mesh.is_closed() {
                return Err(invalid("closed mesh has no boundary"));
            }
            for &e in mesh.boundary_edges() {
                let (f, _) = mesh.edge_faces(e);
                let corners = mesh.face_corners(f);
                let face = mesh.faces()[f];
                let [lo, hi] = mesh.edges()[e];
                let at = |v: usize| corners[face.iter().position(|&x| x == v).unwrap()];
                let (a, b) = (at(lo), at(hi));
                for (k, &v) in face.iter().enumerate() {
                    seed(&mut out, v, vec3::point_segment_distance(corners[k], a, b));
                }
            }
        }
        Sources::Vertices(list) => {
            if list.is_empty() {
                return Err(invalid("empty source set"));
            }
            for &v in list {
                if v >= mesh.num_vertices() {
                    return Err(invalid(format!("source vertex {v} out of range")));
                }
                seed(&mut out, v, 0.0);
            }
        }
        Sources::Point(set, p) => point_seeds(mesh, set, p, &mut out),
    }
    Ok(out)
}

fn point_seeds(mesh: &TriMesh, set: &NodalSet, p: NodalPoint, out: &mut Vec<(usize, f64)>) {
    match p {
        NodalPoint::Vertex(v) => seed(out, v, 0.0),
        NodalPoint::Crossing(c) => {
            let e = set.crossings()[c].edge;
            let (f0, f1) = mesh.edge_faces(e);
            for f in std::iter::once(f0).chain(f1) {
                let x = set.position_in_face(mesh, f, p);
                let corners = mesh.face_corners(f);
                for (k, &v) in mesh.faces()[f].iter().enumerate() {
                    seed(out, v, vec3::norm(vec3::sub(corners[k], x)));
                }
            }
        }
    }
}

/// Arrival time at `c` of a planar front through `a` and `b` with arrival
/// times `da` and `db`, when its characteristic through `c` crosses `ab`.
fn triangle_update(a: Vec3, da: f64, b: Vec3, db: f64, c: Vec3) -> Option<f64> {
    let ab = vec3::sub(b, a);
    let len = vec3::norm(ab);
    let nx = (db - da) / len;
    if nx.abs() >= 1.0 {
        return None;
    }
    let ny = (1.0 - nx * nx).sqrt();
    let e1 = vec3::scale(ab, 1.0 / len);
    let ac = vec3::sub(c, a);
    let xc = vec3::dot(ac, e1);
    let yc = vec3::norm(vec3::sub(ac, vec3::scale(e1, xc)));
    if yc <= 0.0 {
        return None;
    }
    let foot = xc - nx * yc / ny;
    if !(0.0..=len).contains(&foot) {
        return None;
    }
    let t = da + nx * xc + ny * yc;
    // causality: the front reaches c after both a and b
    (t >= da.max(db)).then_some(t)
}

fn fast_marching(mesh: &TriMesh, seeds: &[(usize, f64)], cutoff: f64) -> Vec<f64> {
    let n = mesh.num_vertices();
    let mut d = vec![f64::INFINITY; n];
    let mut fixed = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &(v, s) in seeds {
        if s < d[v] {
            d[v] = s;
            heap.push(Reverse(Key(s, v)));
        }
    }
    while let Some(Reverse(Key(dv, v))) = heap.pop() {
        if fixed[v] || dv > d[v] {
            continue;
        }
        if dv > cutoff {
            break;
        }
        fixed[v] = true;
        for &f in mesh.vertex_faces(v) {
            let face = mesh.faces()[f];
            let corners = mesh.face_corners(f);
            let kv = face.iter().position(|&x| x == v).unwrap();
            for j in 1..3 {
                let kw = (kv + j) % 3;
                let ko = (kv + 3 - j) % 3;
                let w = face[kw];
                if fixed[w] {
                    continue;
                }
                let mut cand = dv + vec3::norm(vec3::sub(corners[kw], corners[kv]));
                let o = face[ko];
                // two exact sources joined by an edge need not span a source segment
                if fixed[o] && (dv > 0.0 || d[o] > 0.0) {
                    if let Some(t) = triangle_update(corners[kv], dv, corners[ko], d[o], corners[kw]) {
                        cand = cand.min(t);
                    }
                }
                if cand < d[w] {
                    d[w] = cand;
                    heap.push(Reverse(Key(cand, w)));
                }
            }
        }
    }
    for v in 0..n {
        if !fixed[v] {
            d[v] = f64::INFINITY;
        }
    }
    d
}

fn graph_dijkstra(mesh: &TriMesh, sources: &Sources, cutoff: f64) -> Result<Vec<f64>> {
    let n = mesh.num_vertices();
    let set = match *sources {
        Sources::Nodal(s) | Sources::Point(s, _) => Some(s),
        _ => None,
    };
    let nc = set.map_or(0, |s| s.crossings().len());
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + nc];
    let mut link = |a: usize, b: usize, w: f64| {
        adj[a].push((b, w));
        adj[b].push((a, w));
    };
    for (e, &[u, v]) in mesh.edges().iter().enumerate() {
        let len = mesh.edge_length(e);
        match set.and_then(|s| s.crossing_on_edge(e)) {
            Some(c) => {
                let t = set.unwrap().crossings()[c].t;
                link(u, n + c, t * len);
                link(n + c, v, (1.0 - t) * len);
            }
            None => link(u, v, len),
        }
    }
    if let Some(s) = set {
        for f in 0..mesh.num_faces() {
            let face = mesh.faces()[f];
            let corners = mesh.face_corners(f);
            for (k, &e) in mesh.face_edges(f).iter().enumerate() {
                if let Some(c) = s.crossing_on_edge(e) {
                    let x = s.position_in_face(mesh, f, NodalPoint::Crossing(c));
                    let opposite = (k + 2) % 3;
                    link(n + c, face[opposite], vec3::norm(vec3::sub(corners[opposite], x)));
                }
            }
        }
    }

    let mut start: Vec<usize> = Vec::new();
    match *sources {
        Sources::Nodal(s) => {
            if s.is_empty() {
                return Err(invalid("empty source set"));
            }
            start.extend(s.zero_vertices());
            start.extend((0..nc).map(|c| n + c));
        }
        Sources::Boundary => {
            if mesh.is_closed() {
                return Err(invalid("closed mesh has no boundary"));
            }
            let b = mesh.boundary_vertices();
            start.extend((0..n).filter(|&v| b[v]));
        }
        Sources::Vertices(list) => {
            if list.is_empty() {
                return Err(invalid("empty source set"));
            }
            start.extend(list);
        }
        Sources::Point(_, NodalPoint::Vertex(v)) => start.push(v),
        Sources::Point(_, NodalPoint::Crossing(c)) => start.push(n + c),
    }

    let mut d = vec![f64::INFINITY; n + nc];
    let mut heap = BinaryHeap::new();
    for &s in &start {
        d[s] = 0.0;
        heap.push(Reverse(Key(0.0, s)));
    }
    let mut done = vec![false; n + nc];
    while let Some(Reverse(Key(du, u))) = heap.pop() {
        if done[u] || du > d[u] {
            continue;
        }
        if du > cutoff {
            break;
        }
        done[u] = true;
        for &(w, len) in &adj[u] {
            let cand = du + len;
            if cand < d[w] {
                d[w] = cand;
                heap.push(Reverse(Key(cand, w)));
            }
        }
    }
    d.truncate(n);
    for v in 0..n {
        if !done[v] {
            d[v] = f64::INFINITY;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_flat_torus, generate_icosphere, generate_square};
    use crate::nodal::{extract_nodal_set, DEFAULT_ZERO_TOL};
    use std::f64::consts::PI;

    #[test]
    fn planar_update_is_exact_for_plane_waves() {
        let n = [0.6, 0.8, 0.0];
        let dist = |p: Vec3| vec3::dot(p, n) + 2.0;
        let (a, b, c) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.8, 0.4, 0.0]);
        let t = triangle_update(a, dist(a), b, dist(b), c).unwrap();
        assert!((t - dist(c)).abs() < 1e-14);
        // characteristic misses the edge
        let far = [3.0, 0.2, 0.0];
        assert!(triangle_update(a, dist(a), b, dist(b), far).is_none());
    }

    #[test]
    fn source_vertex_is_zero() {
        let mesh = generate_icosphere(2).unwrap();
        for engine in [DistanceEngine::FastMarching, DistanceEngine::Graph] {
            let opts = DistanceOptions { engine, ..Default::default() };
            let d = distance_to_set(&mesh, &Sources::Vertices(&[7]), &opts).unwrap();
            assert_eq!(d.get(7), 0.0);
            assert!(d.values().iter().all(|x| x.is_finite() && *x >= 0.0));
            assert!(d.lipschitz_excess(&mesh) <= 1e-9);
        }
    }

    #[test]
    fn sphere_equator_distance() {
        let mesh = generate_icosphere(5).unwrap();
        let field: Vec<f64> = mesh.positions().iter().map(|p| p[2]).collect();
        let set = extract_nodal_set(&mesh, &field, DEFAULT_ZERO_TOL).unwrap();
        let fmm = distance_to_set(&mesh, &Sources::Nodal(&set), &DistanceOptions::default()).unwrap();
        let graph = distance_to_set(
            &mesh,
            &Sources::Nodal(&set),
            &DistanceOptions { engine: DistanceEngine::Graph, ..Default::default() },
        )
        .unwrap();
        let h = mesh.mean_edge_length();
        for (v, p) in mesh.positions().iter().enumerate() {
            let exact = p[2].clamp(-1.0, 1.0).asin().abs();
            assert!((fmm.get(v) - exact).abs() <= 0.02 * exact + h, "{v}");
            assert!((graph.get(v) - exact).abs() <= 0.1 * exact + h, "{v}");
            assert!(fmm.get(v) <= graph.get(v) + 1e-12);
        }
        assert!(fmm.lipschitz_excess(&mesh) <= 1e-9);
        assert!(graph.lipschitz_excess(&mesh) <= 1e-9);
    }

    #[test]
    fn torus_parallel_lines() {
        let mesh = generate_flat_torus(60, 60, 1.0, 1.0).unwrap();
        let field: Vec<f64> = mesh.positions().iter().map(|p| (2.0 * PI * p[0]).cos()).collect();
        let set = extract_nodal_set(&mesh, &field, DEFAULT_ZERO_TOL).unwrap();
        let d = distance_to_set(&mesh, &Sources::Nodal(&set), &DistanceOptions::default()).unwrap();
        for (v, p) in mesh.positions().iter().enumerate() {
            let exact = (p[0] - 0.25).abs().min((p[0] - 0.75).abs());
            assert!((d.get(v) - exact).abs() < 1e-6, "{v}: {} vs {exact}", d.get(v));
        }
    }

    #[test]
    fn square_boundary_distance() {
        let mesh = generate_square(32, 1.0).unwrap();
        let d = distance_to_set(&mesh, &Sources::Boundary, &DistanceOptions::default()).unwrap();
        // fronts from two sides meet on the diagonals, where the planar
        // update undershoots by a bounded fraction of h
        let h = mesh.mean_edge_length();
        for (v, p) in mesh.positions().iter().enumerate() {
            let exact = p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1]);
            assert!((d.get(v) - exact).abs() < 0.4 * h, "{v}: {} vs {exact}", d.get(v));
        }
        let closed = generate_icosphere(1).unwrap();
        assert!(distance_to_set(&closed, &Sources::Boundary, &DistanceOptions::default()).is_err());
        assert!(distance_to_set(&closed, &Sources::Vertices(&[]), &DistanceOptions::default()).is_err());
    }

    #[test]
    fn cutoff_limits_propagation() {
        let mesh = generate_flat_torus(40, 40, 1.0, 1.0).unwrap();
        let full = distance_to_set(&mesh, &Sources::Vertices(&[0]), &DistanceOptions::default()).unwrap();
        let opts = DistanceOptions { cutoff: 0.2, ..Default::default() };
        let local = distance_to_set(&mesh, &Sources::Vertices(&[0]), &opts).unwrap();
        for v in 0..mesh.num_vertices() {
            if full.get(v) <= 0.2 {
                assert_eq!(local.get(v), full.get(v));
            } else {
                assert!(local.get(v).is_infinite());
            }
        }
        // point-source front on a flat grid stays close to Euclidean
        let h = mesh.mean_edge_length();
        for (v, p) in mesh.positions().iter().enumerate() {
            let dx = p[0].min(1.0 - p[0]);
            let dy = p[1].min(1.0 - p[1]);
            let exact = dx.hypot(dy);
            assert!((full.get(v) - exact).abs() <= 0.05 * exact + h, "{v}");
        }
    }
}
