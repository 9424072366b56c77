//! The good set `Omega`: a maximal disjoint ball packing along the nodal
//! set, filtered by local Dirichlet energy.

use crate::error::{invalid, Error, Result};
use crate::mesh::{TriMesh, VolumeMeasure};
use crate::nodal::{distance_to_set, DistanceEngine, DistanceOptions, NodalPoint, NodalSet, Sources};
use crate::spectral::{assemble, dirichlet_energy_density};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoodSetParams {
    /// `R = c_ball / sqrt(lambda)`.
    pub c_ball: f64,
    /// `tau = c_thresh (lambda / xi) ||phi||_2^2`.
    pub c_thresh: f64,
    /// Lower bound on Ricci curvature of the model.
    pub ricci_lower_bound: f64,
    pub dimension: usize,
    /// Overrides the guard derived from the other fields.
    pub lambda_guard: Option<f64>,
    pub engine: DistanceEngine,
}

impl Default for GoodSetParams {
    fn default() -> Self {
        Self {
            c_ball: std::f64::consts::FRAC_PI_2,
            c_thresh: 8.0,
            ricci_lower_bound: 0.0,
            dimension: 2,
            lambda_guard: None,
            engine: DistanceEngine::default(),
        }
    }
}

/// Smallest admissible eigenvalue.
///
/// For `Ric >= -(n-1) kappa` the guard is `kappa * max((10 c_ball)^2, n-1)`.
/// Rescaling the metric moves `kappa` and `lambda` together, so models with
/// nonnegative curvature have no guard.
pub fn lambda_guard(params: &GoodSetParams) -> f64 {
    if let Some(g) = params.lambda_guard {
        return g;
    }
    let n1 = params.dimension.saturating_sub(1).max(1) as f64;
    let kappa = (-params.ricci_lower_bound / n1).max(0.0);
    kappa * (10.0 * params.c_ball).powi(2).max(n1)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OmegaConstruction {
    pub params: GoodSetParams,
    pub lambda: f64,
    pub xi: f64,
    pub lambda_guard: f64,
    /// Ball radius `R`.
    pub radius: f64,
    /// Radius actually used for energy averages: `min(20R, diam/4)`.
    pub energy_radius: f64,
    pub centers: Vec<NodalPoint>,
    pub center_positions: Vec<[f64; 3]>,
    /// Mean of `|grad phi|^2` over each energy ball.
    pub energies: Vec<f64>,
    pub threshold: f64,
    /// `true` for centers in `J`.
    pub in_j: Vec<bool>,
    /// Vertex masks of `Omega` and `Omega'`.
    pub omega: Vec<bool>,
    pub omega_prime: Vec<bool>,
    pub omega_measure: f64,
    pub omega_prime_measure: f64,
    /// Most energy balls sharing one vertex.
    pub multiplicity: usize,
    /// `m(Omega') <= xi`.
    pub markov_holds: bool,
    /// Every vertex within `R` of the nodal set lies in `Omega` or `Omega'`.
    pub covers_nodal_tube: bool,
    /// Largest `|phi| / (sqrt(lambda/xi) ||phi||_2 d)` over `Omega`.
    pub inclusion_constant: f64,
    pub warnings: Vec<String>,
}

fn lexicographic(a: [f64; 3], b: [f64; 3]) -> Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2]))
}

/// Distance value at a nodal point, read off a vertex field.
fn at_point(mesh: &TriMesh, nodal: &NodalSet, values: &[f64], p: NodalPoint) -> f64 {
    match p {
        NodalPoint::Vertex(v) => values[v],
        NodalPoint::Crossing(c) => {
            let crossing = nodal.crossings()[c];
            let [lo, hi] = mesh.edges()[crossing.edge];
            (1.0 - crossing.t) * values[lo] + crossing.t * values[hi]
        }
    }
}

fn diameter_estimate(mesh: &TriMesh, opts: &DistanceOptions) -> Result<f64> {
    let first = distance_to_set(mesh, &Sources::Vertices(&[0]), opts)?;
    let far =
        (0..mesh.num_vertices()).max_by(|&a, &b| first.get(a).total_cmp(&first.get(b)).then(b.cmp(&a))).unwrap_or(0);
    Ok(distance_to_set(mesh, &Sources::Vertices(&[far]), opts)?.max())
}

pub fn construct_good_set(
    mesh: &TriMesh,
    measure: &VolumeMeasure,
    field: &[f64],
    nodal: &NodalSet,
    lambda: f64,
    xi: f64,
    params: &GoodSetParams,
) -> Result<OmegaConstruction> {
    let n = mesh.num_vertices();
    if field.len() != n || measure.weights().len() != n {
        return Err(invalid("field, measure and mesh sizes differ"));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(invalid(format!("xi = {xi} outside (0, 1)")));
    }
    if !(lambda > 0.0) || !(params.c_ball > 0.0) || !(params.c_thresh > 0.0) {
        return Err(invalid("lambda, c_ball and c_thresh must be positive"));
    }
    if nodal.is_empty() {
        return Err(Error::EmptyNodalSet);
    }
    let guard = lambda_guard(params);
    if lambda < guard {
        return Err(Error::BelowGuard { lambda, guard });
    }
    let norm = measure.l2_norm(field);
    if norm == 0.0 {
        return Err(Error::DegenerateField);
    }

    let opts = DistanceOptions { engine: params.engine, cutoff: f64::INFINITY };
    let radius = params.c_ball / lambda.sqrt();
    let mut warnings = Vec::new();
    let quarter = diameter_estimate(mesh, &opts)? / 4.0;
    let energy_radius = if 20.0 * radius > quarter {
        warnings.push(format!("energy balls clamped from 20R = {} to diam/4 = {quarter}", 20.0 * radius));
        quarter
    } else {
        20.0 * radius
    };

    let mut candidates: Vec<(NodalPoint, [f64; 3])> =
        nodal.points().into_iter().map(|p| (p, nodal.position(mesh, p))).collect();
    candidates.sort_by(|a, b| lexicographic(a.1, b.1).then(a.0.cmp(&b.0)));

    let ball_opts = DistanceOptions { engine: params.engine, cutoff: (3.0 * radius).max(energy_radius) };
    let mut to_centers = vec![f64::INFINITY; n];
    let mut centers = Vec::new();
    let mut center_positions = Vec::new();
    let mut triple_balls: Vec<Vec<usize>> = Vec::new();
    let mut energy_balls: Vec<Vec<usize>> = Vec::new();
    for (p, pos) in candidates {
        if at_point(mesh, nodal, &to_centers, p) <= 2.0 * radius {
            continue;
        }
        let d = distance_to_set(mesh, &Sources::Point(nodal, p), &ball_opts)?;
        for (t, &x) in to_centers.iter_mut().zip(d.values()) {
            *t = t.min(x);
        }
        triple_balls.push(d.within(3.0 * radius));
        energy_balls.push(d.within(energy_radius));
        centers.push(p);
        center_positions.push(pos);
    }

    let ops = assemble(mesh)?;
    let density = dirichlet_energy_density(&ops, field)?;
    let energies: Vec<f64> = energy_balls
        .iter()
        .map(|ball| {
            let mass: f64 = ball.iter().map(|&v| measure.weight(v)).sum();
            let e: f64 = ball.iter().map(|&v| measure.weight(v) * density[v]).sum();
            if mass > 0.0 {
                e / mass
            } else {
                0.0
            }
        })
        .collect();
    let mut cover = vec![0usize; n];
    for ball in &energy_balls {
        for &v in ball {
            cover[v] += 1;
        }
    }
    let multiplicity = cover.into_iter().max().unwrap_or(0);

    let threshold = params.c_thresh * (lambda / xi) * norm * norm;
    let in_j: Vec<bool> = energies.iter().map(|&e| e <= threshold).collect();
    let mut omega = vec![false; n];
    let mut omega_prime = vec![false; n];
    for (ball, &good) in triple_balls.iter().zip(&in_j) {
        let mask = if good { &mut omega } else { &mut omega_prime };
        for &v in ball {
            mask[v] = true;
        }
    }
    let omega_measure = measure.measure_of_mask(&omega);
    let omega_prime_measure = measure.measure_of_mask(&omega_prime);

    let to_nodal = distance_to_set(mesh, &Sources::Nodal(nodal), &opts)?;
    let covers_nodal_tube = (0..n).all(|v| to_nodal.get(v) > radius || omega[v] || omega_prime[v]);
    let scale = (lambda / xi).sqrt() * norm;
    let inclusion_constant = (0..n)
        .filter(|&v| omega[v] && to_nodal.get(v) > 0.0)
        .map(|v| field[v].abs() / (scale * to_nodal.get(v)))
        .fold(0.0, f64::max);

    Ok(OmegaConstruction {
        params: *params,
        lambda,
        xi,
        lambda_guard: guard,
        radius,
        energy_radius,
        centers,
        center_positions,
        energies,
        threshold,
        in_j,
        omega,
        omega_prime,
        omega_measure,
        omega_prime_measure,
        multiplicity,
        markov_holds: omega_prime_measure <= xi,
        covers_nodal_tube,
        inclusion_constant,
        warnings,
    })
}
