//! Tube-complement profiles `mu(r) = m_g({d > r})`.

use super::distance::{distance_to_set, DistanceField, DistanceOptions, Sources};
use crate::analytic::OracleCurve;
use crate::error::{invalid, Error, Result};
use crate::mesh::{TriMesh, VolumeMeasure};

/// Points in the default radius grid.
pub const DEFAULT_GRID_POINTS: usize = 60;

/// `60` points from `0` to `1.2 * 5 / sqrt(lambda)`.
pub fn default_r_grid(lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda = {lambda} must be positive")));
    }
    let top = 1.2 * 5.0 / lambda.sqrt();
    let last = (DEFAULT_GRID_POINTS - 1) as f64;
    Ok((0..DEFAULT_GRID_POINTS).map(|i| top * i as f64 / last).collect())
}

/// Distances sorted ascending with suffix sums of their weights, so that
/// `mu(r)` is available at any `r`.
#[derive(Debug, Clone)]
pub struct ExactProfile {
    distances: Vec<f64>,
    // suffix[i] = total weight of entries i..
    suffix: Vec<f64>,
}

impl ExactProfile {
    pub fn new(dist: &DistanceField, measure: &VolumeMeasure) -> Result<Self> {
        Self::from_parts(dist.values(), measure.weights())
    }

    /// Builds from parallel slices of distances and weights.
    pub fn from_parts(distances: &[f64], weights: &[f64]) -> Result<Self> {
        if distances.len() != weights.len() {
            return Err(invalid("distance and measure sizes differ"));
        }
        let mut order: Vec<usize> = (0..distances.len()).collect();
        order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&i| distances[i]).collect();
        let mut suffix = vec![0.0; order.len() + 1];
        for k in (0..order.len()).rev() {
            suffix[k] = suffix[k + 1] + weights[order[k]];
        }
        Ok(Self { distances: sorted, suffix })
    }

    /// Weight of `{d > r}`.
    pub fn eval(&self, r: f64) -> f64 {
        let k = self.distances.partition_point(|&d| d <= r);
        self.suffix[k]
    }

    /// Sorted distinct finite distances: the jump points of `mu`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.distances.iter().copied().filter(|d| d.is_finite()).collect();
        out.dedup();
        out
    }

    /// `sup{r : mu(r) >= eta}` over all real `r`, or `0` when even `mu(0-)`
    /// falls short.
    pub fn quantile(&self, eta: f64) -> f64 {
        // mu(r) for r just below distances[k] is suffix[k]
        let mut best = 0.0;
        for (k, &d) in self.distances.iter().enumerate() {
            if d.is_finite() && self.suffix[k] >= eta {
                best = d;
            }
        }
        best
    }

    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max)
    }
}

/// `mu` sampled on a radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeProfile {
    r: Vec<f64>,
    mu: Vec<f64>,
}

fn check_grid(r_grid: &[f64]) -> Result<()> {
    if r_grid.is_empty() {
        return Err(invalid("empty radius grid"));
    }
    if r_grid.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(invalid("radius grid needs finite nonnegative values"));
    }
    if r_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("radius grid must be sorted ascending"));
    }
    Ok(())
}

pub fn tube_profile(dist: &DistanceField, measure: &VolumeMeasure, r_grid: &[f64]) -> Result<TubeProfile> {
    check_grid(r_grid)?;
    let exact = ExactProfile::new(dist, measure)?;
    Ok(TubeProfile { r: r_grid.to_vec(), mu: r_grid.iter().map(|&r| exact.eval(r)).collect() })
}

/// Profile of the distance to the boundary.
pub fn boundary_distance_profile(
    mesh: &TriMesh,
    measure: &VolumeMeasure,
    r_grid: &[f64],
    opts: &DistanceOptions,
) -> Result<TubeProfile> {
    check_grid(r_grid)?;
    let dist = distance_to_set(mesh, &Sources::Boundary, opts)?;
    tube_profile(&dist, measure, r_grid)
}

impl TubeProfile {
    pub fn new(r: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        check_grid(&r)?;
        if r.len() != mu.len() {
            return Err(invalid("profile columns differ in length"));
        }
        Ok(Self { r, mu })
    }

    /// Samples an exact curve on a grid.
    pub fn from_oracle(curve: &OracleCurve, r_grid: &[f64]) -> Result<Self> {
        check_grid(r_grid)?;
        Ok(Self { r: r_grid.to_vec(), mu: r_grid.iter().map(|&r| curve.eval(r)).collect() })
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Value at a grid abscissa (matched to a relative `1e-9`).
    pub fn at(&self, r: f64) -> Result<f64> {
        let scale = self.r.last().copied().unwrap_or(1.0).max(1e-300);
        self.r.iter().position(|&x| (x - r).abs() <= 1e-9 * scale).map(|i| self.mu[i]).ok_or(Error::GridRange(r))
    }

    /// Largest `|mu(r) - oracle(r)|` over the grid.
    pub fn sup_gap(&self, curve: &OracleCurve) -> f64 {
        self.r.iter().zip(&self.mu).map(|(&r, &m)| (m - curve.eval(r)).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,mu\n");
        for (r, m) in self.r.iter().zip(&self.mu) {
            out.push_str(&format!("{r},{m}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{boundary_oracle, BoundaryShape};
    use crate::mesh::{generate_disk, generate_square, normalized_measure};
    use proptest::prelude::*;

    #[test]
    fn default_grid_shape() {
        let g = default_r_grid(4.0).unwrap();
        assert_eq!(g.len(), 60);
        assert_eq!(g[0], 0.0);
        assert!((g[59] - 3.0).abs() < 1e-15);
        assert!(default_r_grid(0.0).is_err());
    }

    #[test]
    fn exact_profile_counts_strictly_farther() {
        let p = ExactProfile::from_parts(&[0.0, 0.5, 0.5, 1.0], &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((p.eval(0.0) - 0.9).abs() < 1e-15);
        assert!((p.eval(0.5) - 0.4).abs() < 1e-15);
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.breakpoints(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn grid_lookup() {
        let t = TubeProfile::new(vec![0.0, 0.1, 0.2], vec![1.0, 0.5, 0.0]).unwrap();
        assert_eq!(t.at(0.1).unwrap(), 0.5);
        assert!(matches!(t.at(0.15), Err(Error::GridRange(_))));
        assert!(TubeProfile::new(vec![0.2, 0.1], vec![0.0, 0.0]).is_err());
        assert_eq!(t.to_csv(), "r,mu\n0,1\n0.1,0.5\n0.2,0\n");
    }

    #[test]
    fn boundary_profiles_match_oracles() {
        let opts = DistanceOptions::default();
        let disk = generate_disk(5, 1.0).unwrap();
        let m = normalized_measure(&disk);
        let p = boundary_distance_profile(&disk, &m, &[0.0, 0.5], &opts).unwrap();
        assert!((p.mu()[1] - 0.25).abs() <= 0.02, "{}", p.mu()[1]);
        assert!(p.mu()[0] > 0.9);

        // vertices tied at d = r drop half a cell along the perimeter
        let square = generate_square(64, 1.0).unwrap();
        let m = normalized_measure(&square);
        let p = boundary_distance_profile(&square, &m, &[0.25], &opts).unwrap();
        assert!((p.mu()[0] - 0.25).abs() <= 0.02, "{}", p.mu()[0]);
        let (oracle, _) = boundary_oracle(BoundaryShape::Square { side: 1.0 }).unwrap();
        let grid: Vec<f64> = (0..30).map(|i| i as f64 / 60.0).collect();
        let full = boundary_distance_profile(&square, &m, &grid, &opts).unwrap();
        assert!(full.sup_gap(&oracle) < 0.05);
    }

    proptest! {
        #[test]
        fn profile_is_monotone(
            d in prop::collection::vec(0.0f64..2.0, 1..60),
            grid_raw in prop::collection::vec(0.0f64..2.5, 1..30),
        ) {
            let w = vec![1.0 / d.len() as f64; d.len()];
            let mut grid = grid_raw;
            grid.sort_by(f64::total_cmp);
            let exact = ExactProfile::from_parts(&d, &w).unwrap();
            let mu: Vec<f64> = grid.iter().map(|&r| exact.eval(r)).collect();
            for win in mu.windows(2) {
                prop_assert!(win[1] <= win[0]);
            }
            let top = d.iter().copied().fold(0.0, f64::max);
            prop_assert_eq!(exact.eval(top), 0.0);
            let positive: f64 = d.iter().zip(&w).filter(|(x, _)| **x > 0.0).map(|(_, w)| w).sum();
            prop_assert!((exact.eval(0.0) - positive).abs() < 1e-12);
        }
    }
}
