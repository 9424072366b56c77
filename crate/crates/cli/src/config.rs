//! Experiment configuration: a JSON file whose fields command-line flags
//! override.

use anyhow::{bail, Context, Result};
use nodal_lab::analytic::{AnalyticMode, BoundaryShape};
use nodal_lab::concentration::GoodSetParams;
use nodal_lab::mesh::{
    generate_disk, generate_flat_torus, generate_icosphere, generate_square, generate_strip, TriMesh,
};
use nodal_lab::nodal::{DistanceEngine, DistanceOptions};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Icosphere,
    Torus,
    Disk,
    Square,
    Strip,
}

/// Mesh family plus resolution. `depth` is the refinement level; grid
/// shapes derive their cell count from it unless `n` is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub shape: Shape,
    pub depth: u32,
    pub n: Option<usize>,
    pub radius: f64,
    pub side: f64,
    pub width: f64,
    pub length: f64,
    pub lx: f64,
    pub ly: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            shape: Shape::Disk,
            depth: 5,
            n: None,
            radius: 1.0,
            side: 1.0,
            width: 1.0,
            length: 1.0,
            lx: 1.0,
            ly: 1.0,
        }
    }
}

impl ModelSpec {
    pub fn new(shape: Shape, depth: u32) -> Self {
        Self { shape, depth, ..Self::default() }
    }

    /// Cells per side for grid shapes: torus `4 * 2^depth` (128 at depth 5),
    /// square `2 * 2^depth`, strip `2^depth` across.
    pub fn cells(&self) -> usize {
        let scale = 1usize << self.depth.min(12);
        self.n.unwrap_or(match self.shape {
            Shape::Torus => 4 * scale,
            Shape::Square => 2 * scale,
            _ => scale,
        })
    }

    pub fn build(&self) -> Result<TriMesh> {
        let n = self.cells();
        Ok(match self.shape {
            Shape::Icosphere => generate_icosphere(self.depth)?,
            Shape::Torus => generate_flat_torus(n, n, self.lx, self.ly)?,
            Shape::Disk => generate_disk(self.depth, self.radius)?,
            Shape::Square => generate_square(n, self.side)?,
            Shape::Strip => generate_strip(self.width, self.length, n, n.max(3))?,
        })
    }

    /// Model carrying an analytic mode at this resolution.
    pub fn for_mode(mode: &AnalyticMode, depth: u32) -> Self {
        match *mode {
            AnalyticMode::Sphere { .. } => Self::new(Shape::Icosphere, depth),
            AnalyticMode::Torus { lx, ly, .. } => Self { lx, ly, ..Self::new(Shape::Torus, depth) },
        }
    }

    pub fn boundary_shape(&self) -> Result<BoundaryShape> {
        Ok(match self.shape {
            Shape::Disk => BoundaryShape::Disk { radius: self.radius },
            Shape::Square => BoundaryShape::Square { side: self.side },
            Shape::Strip => BoundaryShape::Strip { width: self.width },
            other => bail!("{other:?} has no boundary"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    /// Exact curves, zero tolerance.
    Oracle,
    /// Mesh profiles with the discretization allowance.
    #[default]
    Discrete,
}

/// Everything a check or suite needs. Written back into reports with all
/// defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub mode: String,
    pub tier: Tier,
    pub engine: DistanceEngine,
    pub etas: Vec<f64>,
    /// Number of separated sets for separation checks.
    pub k: usize,
    pub xi: f64,
    /// Tail constant; fitted from the data when absent.
    pub c: Option<f64>,
    pub p_list: Vec<f64>,
    /// Radii for the Chebyshev baseline.
    pub r: Vec<f64>,
    pub good_set: GoodSetParams,
    pub levels: Vec<u32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            mode: "sphere:l=5,m=0".into(),
            tier: Tier::default(),
            engine: DistanceEngine::default(),
            etas: vec![0.25],
            k: 1,
            xi: 0.1,
            c: None,
            p_list: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            r: vec![0.5, 0.9],
            good_set: GoodSetParams::default(),
            levels: vec![3, 4, 5],
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for &eta in &self.etas {
            if !(eta > 0.0 && eta < 1.0) {
                bail!("eta = {eta} outside (0, 1)");
            }
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            bail!("xi = {} outside (0, 1)", self.xi);
        }
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        if self.p_list.iter().any(|&p| !(p >= 1.0)) {
            bail!("moments need p >= 1");
        }
        if self.r.iter().any(|&r| !(r > 0.0)) {
            bail!("Chebyshev radii must be positive");
        }
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
        if !sorted(&self.p_list) || !sorted(&self.r) || !self.levels.windows(2).all(|w| w[0] < w[1]) {
            bail!("grids and levels must be sorted ascending");
        }
        Ok(())
    }

    pub fn analytic_mode(&self) -> Result<AnalyticMode> {
        self.mode.parse().with_context(|| format!("mode {:?}", self.mode))
    }

    pub fn distance(&self) -> DistanceOptions {
        DistanceOptions { engine: self.engine, ..DistanceOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes_follow_depth() {
        assert_eq!(ModelSpec::new(Shape::Torus, 5).cells(), 128);
        assert_eq!(ModelSpec::new(Shape::Torus, 3).cells(), 32);
        assert_eq!(ModelSpec::new(Shape::Square, 5).cells(), 64);
        let fixed = ModelSpec { n: Some(10), ..ModelSpec::new(Shape::Square, 5) };
        assert_eq!(fixed.cells(), 10);
    }

    #[test]
    fn config_round_trip_and_rejections() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
        let partial: ExperimentConfig = serde_json::from_str(r#"{"xi": 0.3, "model": {"shape": "square"}}"#).unwrap();
        assert_eq!(partial.xi, 0.3);
        assert_eq!(partial.model.depth, 5);
        let bad = ExperimentConfig { etas: vec![1.5], ..cfg };
        assert!(bad.validate().is_err());
    }
}
