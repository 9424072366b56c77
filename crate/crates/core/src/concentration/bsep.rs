//! Boundary separation distance: quantiles for one set, greedy packings
//! for several.

use super::{positive, CheckRecord, CheckReport};
use crate::error::{invalid, Result};
use crate::mesh::{TriMesh, VolumeMeasure};
use crate::nodal::{distance_to_set, DistanceField, DistanceOptions, Sources, TubeProfile};
use crate::spectral::dirichlet_lambdak;
use serde::Serialize;

const BISECTION_STEPS: usize = 24;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BsepOutcome {
    pub value: f64,
    pub bound: f64,
    pub record: CheckRecord,
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("eta = {eta} outside (0, 1)")))
    }
}

impl BsepOutcome {
    /// Compares a separation `value` with `(1 - ln eta) / sqrt(lambda_1^D)`.
    pub fn new(value: f64, eta: f64, lambda1d: f64, tol: f64) -> Result<Self> {
        check_eta(eta)?;
        positive("lambda", lambda1d)?;
        let bound = (1.0 - eta.ln()) / lambda1d.sqrt();
        Ok(Self { value, bound, record: CheckRecord::new(eta, value, bound, tol) })
    }
}

/// `sup{r on the grid : mu(r) >= eta}` for a boundary distance profile.
pub fn bsep_k1(profile: &TubeProfile, eta: f64, lambda1d: f64, tol: f64) -> Result<BsepOutcome> {
    check_eta(eta)?;
    let value = profile.r().iter().zip(profile.mu()).filter(|(_, &mu)| mu >= eta).map(|(&r, _)| r).fold(0.0, f64::max);
    BsepOutcome::new(value, eta, lambda1d, tol)
}

/// [`bsep_k1`] over several `eta`, one record each.
pub fn check_bsep(profile: &TubeProfile, etas: &[f64], lambda1d: f64, tol: f64) -> Result<CheckReport> {
    let records =
        etas.iter().map(|&eta| bsep_k1(profile, eta, lambda1d, tol).map(|o| o.record)).collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::new("bsep", Some(lambda1d), tol, records))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BsepCandidate {
    /// Separation of the packing: least distance between two sets or from a
    /// set to the boundary. Zero when no packing was found.
    pub value: f64,
    pub lambda_k: f64,
    pub bound: f64,
    pub record: CheckRecord,
    /// Vertex sets of the best packing.
    pub sets: Vec<Vec<usize>>,
}

struct Packing {
    sets: Vec<Vec<usize>>,
    separation: f64,
}

/// Greedy packing with every set kept at least `gap` from the boundary and
/// from the sets placed before it.
fn pack(
    mesh: &TriMesh,
    measure: &VolumeMeasure,
    opts: &DistanceOptions,
    boundary: &DistanceField,
    etas: &[f64],
    gap: f64,
) -> Result<Option<Packing>> {
    let n = mesh.num_vertices();
    let mut avail: Vec<bool> = boundary.values().iter().map(|&d| d >= gap).collect();
    // distance to the nearest placed set, or to the boundary
    let mut clearance: Vec<f64> = boundary.values().to_vec();
    let mut sets = Vec::with_capacity(etas.len());
    let mut fields: Vec<DistanceField> = Vec::with_capacity(etas.len());
    for &eta in etas {
        if measure.measure_of_mask(&avail) < eta {
            return Ok(None);
        }
        let seed = (0..n)
            .filter(|&v| avail[v])
            .max_by(|&a, &b| clearance[a].total_cmp(&clearance[b]).then(b.cmp(&a)))
            .expect("available set is nonempty");
        let from_seed = distance_to_set(mesh, &Sources::Vertices(&[seed]), opts)?;
        let mut order: Vec<usize> = (0..n).filter(|&v| avail[v]).collect();
        order.sort_by(|&a, &b| from_seed.get(a).total_cmp(&from_seed.get(b)).then(a.cmp(&b)));
        let mut set = Vec::new();
        let mut mass = 0.0;
        for v in order {
            if mass >= eta {
                break;
            }
            set.push(v);
            mass += measure.weight(v);
        }
        if mass < eta {
            return Ok(None);
        }
        set.sort_unstable();
        let field = distance_to_set(mesh, &Sources::Vertices(&set), opts)?;
        for v in 0..n {
            let d = field.get(v);
            if d < gap {
                avail[v] = false;
            }
            clearance[v] = clearance[v].min(d);
        }
        sets.push(set);
        fields.push(field);
    }
    let mut separation = f64::INFINITY;
    for (a, set) in sets.iter().enumerate() {
        for &v in set {
            separation = separation.min(boundary.get(v));
        }
        for (b, other) in sets.iter().enumerate() {
            if a != b {
                for &v in other {
                    separation = separation.min(fields[a].get(v));
                }
            }
        }
    }
    Ok(Some(Packing { sets, separation }))
}

/// Lower bound on the separation distance of `k = etas.len()` sets of
/// measures `etas`, checked against `2 / sqrt(lambda_k^D min eta)`.
///
/// Bisects on the required gap and keeps the best greedy packing found.
pub fn bsep_k_candidate(
    mesh: &TriMesh,
    measure: &VolumeMeasure,
    opts: &DistanceOptions,
    etas: &[f64],
    tol: f64,
) -> Result<BsepCandidate> {
    if etas.is_empty() {
        return Err(invalid("need at least one eta"));
    }
    for &eta in etas {
        check_eta(eta)?;
    }
    if etas.iter().sum::<f64>() >= 1.0 {
        return Err(invalid("etas must sum to less than one"));
    }
    let lambda_k = dirichlet_lambdak(mesh, etas.len())?;
    let boundary = distance_to_set(mesh, &Sources::Boundary, opts)?;

    let mut best: Option<Packing> = None;
    let mut keep = |p: Packing| {
        if best.as_ref().is_none_or(|b| p.separation > b.separation) {
            best = Some(p);
        }
    };
    let (mut lo, mut hi) = (0.0, boundary.max());
    match pack(mesh, measure, opts, &boundary, etas, lo)? {
        Some(p) => keep(p),
        None => hi = lo,
    }
    for _ in 0..BISECTION_STEPS {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match pack(mesh, measure, opts, &boundary, etas, mid)? {
            Some(p) => {
                keep(p);
                lo = mid;
            }
            None => hi = mid,
        }
    }

    let (value, sets) = match best {
        Some(p) => (p.separation.max(0.0), p.sets),
        None => (0.0, Vec::new()),
    };
    let min_eta = etas.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = 2.0 / (lambda_k * min_eta).sqrt();
    Ok(BsepCandidate { value, lambda_k, bound, record: CheckRecord::new(etas.len() as f64, value, bound, tol), sets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{boundary_oracle, BoundaryShape};
    use crate::mesh::{generate_square, normalized_measure};
    use crate::nodal::{default_r_grid, ExactProfile};

    #[test]
    fn quantile_examples() {
        let (disk, l1) = boundary_oracle(BoundaryShape::Disk { radius: 1.0 }).unwrap();
        let out = BsepOutcome::new(disk.quantile(0.25).unwrap(), 0.25, l1, 0.0).unwrap();
        assert!((out.value - 0.5).abs() < 1e-9);
        assert!((out.bound - 0.9925).abs() < 1e-3);
        assert!((out.bound - 0.992_294_161_830).abs() < 1e-10);
        assert!(out.record.pass);

        let (strip, l1) = boundary_oracle(BoundaryShape::Strip { width: 1.0 }).unwrap();
        let out = BsepOutcome::new(strip.quantile(0.5).unwrap(), 0.5, l1, 0.0).unwrap();
        assert!((out.value - 0.25).abs() < 1e-9);
        assert!((out.bound - 0.5389).abs() < 1e-4);

        let grid = default_r_grid(l1).unwrap();
        let p = TubeProfile::from_oracle(&strip, &grid).unwrap();
        let g = bsep_k1(&p, 0.5, l1, 0.0).unwrap();
        assert!(g.value <= 0.25 && g.value > 0.25 - grid[1]);
        assert!(bsep_k1(&p, 1.0, l1, 0.0).is_err());
        assert!(bsep_k1(&p, 0.999, l1, 0.0).unwrap().value < grid[1]);
    }

    #[test]
    fn square_packings_respect_the_eigenvalue_bound() {
        let mesh = generate_square(32, 1.0).unwrap();
        let m = normalized_measure(&mesh);
        let opts = DistanceOptions::default();
        let h = mesh.mean_edge_length();

        let one = bsep_k_candidate(&mesh, &m, &opts, &[0.25], h).unwrap();
        let dist = distance_to_set(&mesh, &Sources::Boundary, &opts).unwrap();
        let exact = ExactProfile::new(&dist, &m).unwrap();
        assert!(one.value <= exact.quantile(0.25) + 1e-12);
        assert!(one.value > 0.2, "{}", one.value);

        let two = bsep_k_candidate(&mesh, &m, &opts, &[0.1, 0.1], h).unwrap();
        assert_eq!(two.sets.len(), 2);
        assert!(two.value > 0.0 && two.record.pass, "{two:?}");
        assert!((two.bound - 2.0 / (5.0 * std::f64::consts::PI.powi(2) * 0.1).sqrt()).abs() < 0.02);
        for (set, eta) in two.sets.iter().zip([0.1, 0.1]) {
            assert!(m.measure_of(set.iter().copied()) >= eta);
        }
    }

    #[test]
    fn oversized_requests_give_zero() {
        let mesh = generate_square(16, 1.0).unwrap();
        let m = normalized_measure(&mesh);
        let c = bsep_k_candidate(&mesh, &m, &DistanceOptions::default(), &[0.5, 0.49], 0.0).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.record.pass);
        assert!(bsep_k_candidate(&mesh, &m, &DistanceOptions::default(), &[0.6, 0.5], 0.0).is_err());
    }
}
