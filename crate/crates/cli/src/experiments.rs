//! Pipelines from a model description to check reports.

use crate::config::ModelSpec;
use anyhow::{bail, Result};
use nodal_lab::analytic::{boundary_oracle, sample, tube_complement_oracle, AnalyticMode, OracleCurve};
use nodal_lab::concentration::{
    bsep_k1, bsep_k_candidate, chebyshev_tail, check_boundary_decay, check_iteration_inequality,
    check_nodal_concentration, check_restricted_lp, check_restricted_tail, construct_good_set, iteration_pairs, tol_h,
    BsepCandidate, BsepOutcome, CheckRecord, CheckReport, GoodSetParams, OmegaConstruction,
};
use nodal_lab::mesh::{normalized_measure, TriMesh, VolumeMeasure};
use nodal_lab::nodal::{
    default_r_grid, distance_to_set, extract_nodal_set, tube_profile, DistanceOptions, NodalSet, Sources, TubeProfile,
    DEFAULT_ZERO_TOL,
};
use nodal_lab::spectral::dirichlet_lambda1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Radius pairs on a 20 x 10 grid.
pub const ITERATION_STEPS: (usize, usize) = (20, 10);

/// An analytic mode sampled on a mesh, with its nodal set.
pub struct SampledMode {
    pub mode: AnalyticMode,
    pub spec: ModelSpec,
    pub mesh: TriMesh,
    pub measure: VolumeMeasure,
    pub field: Vec<f64>,
    pub nodal: NodalSet,
}

impl SampledMode {
    pub fn new(mode: &AnalyticMode, depth: u32) -> Result<Self> {
        let spec = ModelSpec::for_mode(mode, depth);
        let mesh = spec.build()?;
        let field = sample(mode, &mesh)?;
        let nodal = extract_nodal_set(&mesh, &field, DEFAULT_ZERO_TOL)?;
        let measure = normalized_measure(&mesh);
        Ok(Self { mode: *mode, spec, mesh, measure, field, nodal })
    }

    pub fn h(&self) -> f64 {
        self.mesh.mean_edge_length()
    }
}

fn label(mode: &AnalyticMode) -> String {
    mode.to_string()
}

/// Nodal concentration on the exact tube curve, zero tolerance.
pub fn nodal_tube_oracle(mode: &AnalyticMode) -> Result<CheckReport> {
    let curve = tube_complement_oracle(mode)?;
    let profile = TubeProfile::from_oracle(&curve, &default_r_grid(mode.lambda())?)?;
    let mut report = check_nodal_concentration(&profile, mode.lambda(), 0.0)?;
    report.check = format!("nodal-tube oracle {}", label(mode));
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteTube {
    pub report: CheckReport,
    /// Largest grid deviation from the exact curve.
    pub sup_gap: f64,
    /// Largest distance to the nodal set.
    pub max_distance: f64,
}

/// Nodal concentration on a mesh profile with allowance `2 h sqrt(lambda)`.
pub fn nodal_tube_discrete(mode: &AnalyticMode, depth: u32, opts: &DistanceOptions) -> Result<DiscreteTube> {
    let s = SampledMode::new(mode, depth)?;
    let lambda = mode.lambda();
    let dist = distance_to_set(&s.mesh, &Sources::Nodal(&s.nodal), opts)?;
    let profile = tube_profile(&dist, &s.measure, &default_r_grid(lambda)?)?;
    let sup_gap = profile.sup_gap(&tube_complement_oracle(mode)?);
    let mut report = check_nodal_concentration(&profile, lambda, tol_h(s.h(), lambda))?.with_mesh(s.h(), depth);
    report.check = format!("nodal-tube {}", label(mode));
    Ok(DiscreteTube { report, sup_gap, max_distance: dist.max() })
}

/// Decay, iteration and separation checks on one domain with boundary.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryChecks {
    /// Eigenvalue used in the bounds: measured on the mesh, exact on the
    /// oracle tier.
    pub lambda1d: f64,
    pub lambda1d_exact: f64,
    pub decay: CheckReport,
    pub iteration: CheckReport,
    pub bsep: CheckReport,
}

impl BoundaryChecks {
    pub fn reports(&self) -> [&CheckReport; 3] {
        [&self.decay, &self.iteration, &self.bsep]
    }

    pub fn pass_all(&self) -> bool {
        self.reports().iter().all(|r| r.pass_all)
    }
}

fn boundary_reports(
    profile: &TubeProfile,
    lambda1d: f64,
    lambda1d_exact: f64,
    tol: f64,
    bsep: Vec<BsepOutcome>,
    bsep_tol: f64,
    name: &str,
) -> Result<BoundaryChecks> {
    let grid = profile.r();
    let pairs = iteration_pairs(grid, ITERATION_STEPS.0, ITERATION_STEPS.1)?;
    let mut decay = check_boundary_decay(profile, lambda1d, tol)?;
    let mut iteration = check_iteration_inequality(profile, lambda1d, &pairs, tol)?;
    let mut sep = CheckReport::new("bsep", Some(lambda1d), bsep_tol, bsep.into_iter().map(|b| b.record).collect());
    decay.check = format!("boundary {name}");
    iteration.check = format!("iteration {name}");
    sep.check = format!("bsep {name}");
    Ok(BoundaryChecks { lambda1d, lambda1d_exact, decay, iteration, bsep: sep })
}

pub fn boundary_oracle_checks(spec: &ModelSpec, etas: &[f64]) -> Result<BoundaryChecks> {
    let (curve, l1) = boundary_oracle(spec.boundary_shape()?)?;
    let profile = TubeProfile::from_oracle(&curve, &default_r_grid(l1)?)?;
    let bsep =
        etas.iter().map(|&eta| BsepOutcome::new(curve.quantile(eta)?, eta, l1, 0.0)).collect::<Result<Vec<_>, _>>()?;
    boundary_reports(&profile, l1, l1, 0.0, bsep, 0.0, &format!("oracle {:?}", spec.shape).to_lowercase())
}

pub fn boundary_discrete_checks(spec: &ModelSpec, etas: &[f64], opts: &DistanceOptions) -> Result<BoundaryChecks> {
    let (_, exact) = boundary_oracle(spec.boundary_shape()?)?;
    let mesh = spec.build()?;
    let measure = normalized_measure(&mesh);
    let l1 = dirichlet_lambda1(&mesh)?;
    let h = mesh.mean_edge_length();
    let dist = distance_to_set(&mesh, &Sources::Boundary, opts)?;
    let profile = tube_profile(&dist, &measure, &default_r_grid(l1)?)?;
    let bsep = etas.iter().map(|&eta| bsep_k1(&profile, eta, l1, h)).collect::<Result<Vec<_>, _>>()?;
    let mut out =
        boundary_reports(&profile, l1, exact, tol_h(h, l1), bsep, h, &format!("{:?}", spec.shape).to_lowercase())?;
    out.decay = out.decay.with_mesh(h, spec.depth);
    out.iteration = out.iteration.with_mesh(h, spec.depth);
    out.bsep = out.bsep.with_mesh(h, spec.depth);
    Ok(out)
}

/// Greedy separated packings, one per list of set measures.
pub fn bsep_candidates(spec: &ModelSpec, families: &[Vec<f64>], opts: &DistanceOptions) -> Result<Vec<BsepCandidate>> {
    let mesh = spec.build()?;
    let measure = normalized_measure(&mesh);
    let h = mesh.mean_edge_length();
    families.iter().map(|etas| Ok(bsep_k_candidate(&mesh, &measure, opts, etas, h)?)).collect()
}

pub fn bsep_candidate_report(cands: &[BsepCandidate], h: f64) -> CheckReport {
    CheckReport::new("bsep-k", None, h, cands.iter().map(|c| c.record.clone()).collect())
}

/// The good-set construction without its vertex masks.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaSummary {
    pub params: GoodSetParams,
    pub lambda: f64,
    pub xi: f64,
    pub lambda_guard: f64,
    pub radius: f64,
    pub energy_radius: f64,
    pub centers: usize,
    pub threshold: f64,
    pub kept: usize,
    pub omega_measure: f64,
    pub omega_prime_measure: f64,
    pub multiplicity: usize,
    pub markov_holds: bool,
    pub covers_nodal_tube: bool,
    pub inclusion_constant: f64,
    pub warnings: Vec<String>,
}

impl From<&OmegaConstruction> for OmegaSummary {
    fn from(c: &OmegaConstruction) -> Self {
        Self {
            params: c.params,
            lambda: c.lambda,
            xi: c.xi,
            lambda_guard: c.lambda_guard,
            radius: c.radius,
            energy_radius: c.energy_radius,
            centers: c.centers.len(),
            threshold: c.threshold,
            kept: c.in_j.iter().filter(|&&j| j).count(),
            omega_measure: c.omega_measure,
            omega_prime_measure: c.omega_prime_measure,
            multiplicity: c.multiplicity,
            markov_holds: c.markov_holds,
            covers_nodal_tube: c.covers_nodal_tube,
            inclusion_constant: c.inclusion_constant,
            warnings: c.warnings.clone(),
        }
    }
}

/// Good set, restricted tail with the fitted constant, and moments.
#[derive(Debug, Clone, Serialize)]
pub struct GoodSetRun {
    pub mode: String,
    pub omega: OmegaSummary,
    /// `m(Omega) >= 1 - xi`, with the inclusion constant as fitted value.
    pub coverage: CheckReport,
    pub tail: CheckReport,
    pub lp: CheckReport,
}

impl GoodSetRun {
    pub fn reports(&self) -> [&CheckReport; 3] {
        [&self.coverage, &self.tail, &self.lp]
    }
}

/// Radius grid for tails: 60 points up to `1.2 max |phi|`.
pub fn tail_grid(field: &[f64]) -> Vec<f64> {
    let peak = field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (0..60).map(|i| 1.2 * peak * i as f64 / 59.0).collect()
}

pub fn good_set_run(
    mode: &AnalyticMode,
    depth: u32,
    xi: f64,
    params: &GoodSetParams,
    c: Option<f64>,
    p_list: &[f64],
) -> Result<(GoodSetRun, OmegaConstruction)> {
    let s = SampledMode::new(mode, depth)?;
    let params = GoodSetParams { ricci_lower_bound: mode.ricci_lower_bound(), ..*params };
    let omega = construct_good_set(&s.mesh, &s.measure, &s.field, &s.nodal, mode.lambda(), xi, &params)?;
    let h = s.h();
    let mut coverage = CheckReport::new(
        &format!("good-set {}", label(mode)),
        Some(mode.lambda()),
        0.0,
        vec![CheckRecord::new(xi, 1.0 - xi, omega.omega_measure, 0.0)],
    )
    .with_mesh(h, depth)
    .with_fitted(omega.inclusion_constant);
    coverage.constant = Some(params.c_ball);

    let grid = tail_grid(&s.field);
    let c = match c {
        Some(c) => c,
        None => {
            let probe = check_restricted_tail(&s.field, &omega.omega, &s.measure, xi, 1.0, &grid)?;
            match probe.fitted_constant {
                Some(c) => c,
                None => bail!("tail of {mode} leaves the constant unconstrained"),
            }
        }
    };
    let mut tail = check_restricted_tail(&s.field, &omega.omega, &s.measure, xi, c, &grid)?.with_mesh(h, depth);
    tail.check = format!("tail {}", label(mode));
    tail.lambda = Some(mode.lambda());
    let mut lp = check_restricted_lp(&s.field, &omega.omega, &s.measure, p_list, xi, c)?.with_mesh(h, depth);
    lp.check = format!("lp {}", label(mode));
    lp.lambda = Some(mode.lambda());
    let run = GoodSetRun { mode: label(mode), omega: OmegaSummary::from(&omega), coverage, tail, lp };
    Ok((run, omega))
}

/// Chebyshev baseline on random fields and radii, zero tolerance.
pub fn chebyshev_probes(spec: &ModelSpec, probes: usize, seed: u64) -> Result<CheckReport> {
    let mesh = spec.build()?;
    let measure = normalized_measure(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(probes);
    for _ in 0..probes {
        let scale = rng.random_range(0.1..3.0);
        let field: Vec<f64> = (0..mesh.num_vertices()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let r = rng.random_range(1e-3..2.0 * scale);
        let (lhs, rhs) = chebyshev_tail(&field, &measure, r)?;
        records.push(CheckRecord::new(r, lhs, rhs, 0.0));
    }
    Ok(CheckReport::new("chebyshev", None, 0.0, records))
}

/// Chebyshev baseline for one sampled mode.
pub fn chebyshev_mode(mode: &AnalyticMode, depth: u32, radii: &[f64]) -> Result<CheckReport> {
    let s = SampledMode::new(mode, depth)?;
    let records = radii
        .iter()
        .map(|&r| chebyshev_tail(&s.field, &s.measure, r).map(|(l, rhs)| CheckRecord::new(r, l, rhs, 0.0)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = CheckReport::new(&format!("chebyshev {}", label(mode)), Some(mode.lambda()), 0.0, records);
    report = report.with_mesh(s.h(), depth);
    Ok(report)
}

/// `sqrt(lambda) * sup d` on the exact tube curve.
pub fn density_constant_oracle(mode: &AnalyticMode) -> Result<(f64, f64)> {
    let curve: OracleCurve = tube_complement_oracle(mode)?;
    Ok((curve.support_radius(), mode.lambda()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nodal_lab::analytic::torus_mode;

    #[test]
    fn torus_tube_runs_on_small_mesh() {
        let out = nodal_tube_discrete(&torus_mode(1, 0, 0.0), 2, &DistanceOptions::default()).unwrap();
        assert!(out.report.pass_all);
        assert_eq!(out.report.records.len(), 60);
        assert!(out.report.mesh.is_some());
    }

    #[test]
    fn chebyshev_probes_are_deterministic() {
        let spec = ModelSpec::new(crate::config::Shape::Torus, 1);
        let a = chebyshev_probes(&spec, 10, 7).unwrap();
        let b = chebyshev_probes(&spec, 10, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.pass_all);
    }
}
