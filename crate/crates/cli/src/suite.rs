//! Named groups of checks. Entries run concurrently and are reported in
//! definition order.

use crate::config::{ExperimentConfig, ModelSpec, Shape};
use crate::experiments::{
    boundary_discrete_checks, boundary_oracle_checks, bsep_candidate_report, bsep_candidates, chebyshev_probes,
    good_set_run, nodal_tube_discrete, nodal_tube_oracle, OmegaSummary,
};
use anyhow::{bail, Result};
use nodal_lab::analytic::{sphere_harmonic, torus_mode, AnalyticMode};
use nodal_lab::concentration::{CheckRecord, CheckReport};
use rayon::prelude::*;
use serde::Serialize;

pub const SUITES: [&str; 3] = ["core", "good-set", "convergence"];
pub const TORUS_WAVENUMBERS: [i32; 4] = [1, 2, 3, 5];
pub const SPHERE_DEGREES: [u32; 4] = [1, 3, 5, 8];
pub const BSEP_ETAS: [f64; 5] = [0.05, 0.1, 0.25, 0.5, 0.9];
pub const GOOD_SET_WAVENUMBERS: [i32; 3] = [2, 3, 5];
pub const GOOD_SET_XIS: [f64; 2] = [0.1, 0.3];
pub const CHEBYSHEV_PROBES: usize = 100;
pub const CHEBYSHEV_SEED: u64 = 0x5eed;

/// Torus modes `cos(2 pi k x)` and zonal sphere modes.
pub fn core_modes() -> Vec<AnalyticMode> {
    let mut out: Vec<AnalyticMode> = TORUS_WAVENUMBERS.iter().map(|&k| torus_mode(k, 0, 0.0)).collect();
    out.extend(SPHERE_DEGREES.iter().map(|&l| sphere_harmonic(l, 0).expect("degree in range")));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub name: String,
    pub report: CheckReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaSummary>,
}

impl SuiteEntry {
    fn plain(report: CheckReport) -> Self {
        Self { name: report.check.clone(), report, omega: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub model: String,
    pub level: u32,
    pub h: f64,
    pub sup_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub config: ExperimentConfig,
    pub entries: Vec<SuiteEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub convergence: Vec<ConvergenceRow>,
    pub pass_all: bool,
}

impl SuiteReport {
    pub fn convergence_csv(&self) -> String {
        let mut out = String::from("model,level,h,sup_gap\n");
        for row in &self.convergence {
            out.push_str(&format!("{},{},{},{}\n", row.model, row.level, row.h, row.sup_gap));
        }
        out
    }

    /// Entries that failed, by name.
    pub fn failures(&self) -> Vec<&str> {
        self.entries.iter().filter(|e| !e.report.pass_all).map(|e| e.name.as_str()).collect()
    }
}

enum Job {
    TubeOracle(AnalyticMode),
    TubeDiscrete(AnalyticMode, u32),
    BoundaryOracle(Shape),
    BoundaryDiscrete(Shape, u32),
    Packings(u32),
    GoodSet(AnalyticMode, f64, u32),
    Chebyshev,
    Ladder(AnalyticMode, Vec<u32>),
}

struct JobOutput {
    entries: Vec<SuiteEntry>,
    rows: Vec<ConvergenceRow>,
}

impl From<Vec<SuiteEntry>> for JobOutput {
    fn from(entries: Vec<SuiteEntry>) -> Self {
        Self { entries, rows: Vec::new() }
    }
}

fn run_job(job: &Job, cfg: &ExperimentConfig) -> Result<JobOutput> {
    let opts = cfg.distance();
    Ok(match job {
        Job::TubeOracle(mode) => vec![SuiteEntry::plain(nodal_tube_oracle(mode)?)].into(),
        Job::TubeDiscrete(mode, depth) => {
            vec![SuiteEntry::plain(nodal_tube_discrete(mode, *depth, &opts)?.report)].into()
        }
        Job::BoundaryOracle(shape) => {
            let checks = boundary_oracle_checks(&ModelSpec::new(*shape, 0), &BSEP_ETAS)?;
            checks.reports().into_iter().cloned().map(SuiteEntry::plain).collect::<Vec<_>>().into()
        }
        Job::BoundaryDiscrete(shape, depth) => {
            let checks = boundary_discrete_checks(&ModelSpec::new(*shape, *depth), &BSEP_ETAS, &opts)?;
            checks.reports().into_iter().cloned().map(SuiteEntry::plain).collect::<Vec<_>>().into()
        }
        Job::Packings(depth) => {
            let spec = ModelSpec::new(Shape::Square, *depth);
            let families = vec![vec![0.1], vec![0.1, 0.1], vec![0.1, 0.1, 0.1]];
            let cands = bsep_candidates(&spec, &families, &opts)?;
            let h = spec.build()?.mean_edge_length();
            let mut report = bsep_candidate_report(&cands, h).with_mesh(h, *depth);
            report.check = "bsep-k square".into();
            vec![SuiteEntry::plain(report)].into()
        }
        Job::GoodSet(mode, xi, depth) => {
            let params = nodal_lab::concentration::GoodSetParams { engine: cfg.engine, ..cfg.good_set };
            let (run, _) = good_set_run(mode, *depth, *xi, &params, cfg.c, &cfg.p_list)?;
            let tag = format!(" xi={xi}");
            let mut entries = Vec::new();
            for (i, report) in run.reports().into_iter().enumerate() {
                let mut report = report.clone();
                report.check.push_str(&tag);
                let omega = (i == 0).then(|| run.omega.clone());
                entries.push(SuiteEntry { name: report.check.clone(), report, omega });
            }
            entries.into()
        }
        Job::Chebyshev => {
            let mut report = chebyshev_probes(&ModelSpec::new(Shape::Torus, 3), CHEBYSHEV_PROBES, CHEBYSHEV_SEED)?;
            report.check = "chebyshev random probes".into();
            vec![SuiteEntry::plain(report)].into()
        }
        Job::Ladder(mode, levels) => {
            let mut rows = Vec::new();
            for &level in levels {
                let out = nodal_tube_discrete(mode, level, &opts)?;
                let h = out.report.mesh.map(|m| m.h).unwrap_or(f64::NAN);
                rows.push(ConvergenceRow { model: mode.to_string(), level, h, sup_gap: out.sup_gap });
            }
            // each level must beat the one before it
            let records =
                rows.windows(2).map(|w| CheckRecord::new(w[1].level as f64, w[1].sup_gap, w[0].sup_gap, 0.0)).collect();
            let mut report = CheckReport::new(&format!("sup-gap ladder {mode}"), Some(mode.lambda()), 0.0, records);
            if let Some(last) = rows.last() {
                report = report.with_mesh(last.h, last.level);
            }
            JobOutput { entries: vec![SuiteEntry::plain(report)], rows }
        }
    })
}

fn jobs_for(name: &str, cfg: &ExperimentConfig) -> Result<Vec<Job>> {
    let depth = cfg.levels.last().copied().unwrap_or(cfg.model.depth);
    let boundary = [Shape::Disk, Shape::Square, Shape::Strip];
    Ok(match name {
        "core" => {
            let mut jobs: Vec<Job> = core_modes().into_iter().map(Job::TubeOracle).collect();
            jobs.extend(core_modes().into_iter().map(|m| Job::TubeDiscrete(m, depth)));
            jobs.extend(boundary.iter().map(|&s| Job::BoundaryOracle(s)));
            jobs.extend(boundary.iter().map(|&s| Job::BoundaryDiscrete(s, depth)));
            jobs.push(Job::Packings(depth));
            jobs
        }
        "good-set" => {
            let mut jobs = Vec::new();
            for &k in &GOOD_SET_WAVENUMBERS {
                for &xi in &GOOD_SET_XIS {
                    jobs.push(Job::GoodSet(torus_mode(k, 0, 0.0), xi, depth));
                }
            }
            jobs.push(Job::Chebyshev);
            jobs
        }
        "convergence" => core_modes().into_iter().map(|m| Job::Ladder(m, cfg.levels.clone())).collect(),
        other => bail!("unknown suite {other:?}; expected one of {SUITES:?}"),
    })
}

pub fn run_suite(name: &str, cfg: &ExperimentConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let jobs = jobs_for(name, cfg)?;
    let outputs: Vec<JobOutput> = jobs.par_iter().map(|job| run_job(job, cfg)).collect::<Result<_>>()?;
    let mut entries = Vec::new();
    let mut convergence = Vec::new();
    for out in outputs {
        entries.extend(out.entries);
        convergence.extend(out.rows);
    }
    let pass_all = entries.iter().all(|e| e.report.pass_all);
    Ok(SuiteReport { suite: name.to_string(), config: cfg.clone(), entries, convergence, pass_all })
}
