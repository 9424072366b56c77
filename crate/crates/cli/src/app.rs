//! Command-line surface and dispatch.

use crate::config::{ExperimentConfig, ModelSpec, Shape, Tier};
use crate::experiments::{
    boundary_discrete_checks, boundary_oracle_checks, bsep_candidate_report, bsep_candidates, chebyshev_mode,
    density_constant_oracle, good_set_run, nodal_tube_discrete, nodal_tube_oracle, SampledMode,
};
use crate::suite::run_suite;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nodal_lab::analytic::AnalyticMode;
use nodal_lab::concentration::{fit_empirical_constant, CheckReport, FitInput, FitTarget};
use nodal_lab::mesh::io::{load_mesh, save_mesh};
use nodal_lab::nodal::{distance_to_set, extract_nodal_set, DistanceEngine, Sources, DEFAULT_ZERO_TOL};
use nodal_lab::spectral::{assemble, dirichlet_eigenvalues, smallest_eigenpairs, EigenExport};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "nodal-lab", version, about = "Eigenfunction concentration experiments on model surfaces")]
pub struct Cli {
    /// Worker threads for suites (defaults to all cores).
    #[arg(long, global = true, env = "NODAL_LAB_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a mesh and write it as OFF.
    Gen(GenArgs),
    /// Smallest eigenpairs of a mesh.
    Eig(EigArgs),
    /// Nodal set and nodal domains of a field.
    Nodal(NodalArgs),
    /// Run one inequality check.
    Check {
        #[arg(value_enum)]
        check: CheckName,
        #[command(flatten)]
        args: ExperimentArgs,
    },
    /// Run a named group of checks.
    Suite {
        name: String,
        #[command(flatten)]
        args: ExperimentArgs,
        /// Directory for `<suite>.json` (stdout when absent).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Fit an empirical constant.
    Fit {
        #[arg(long, value_enum)]
        target: FitTargetArg,
        #[command(flatten)]
        args: ExperimentArgs,
        /// Report files holding tail reports: a single report, a check output
        /// or a suite output. Only for `tail-c`.
        #[arg(long = "report")]
        reports: Vec<PathBuf>,
        /// Modes to fit over; repeatable.
        #[arg(long = "fit-mode")]
        modes: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckName {
    NodalTube,
    Boundary,
    Iteration,
    Bsep,
    GoodSet,
    Tail,
    Lp,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitTargetArg {
    TailC,
    InclusionC,
    DensityC,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub shape: Shape,
    #[arg(long, default_value_t = 4)]
    pub depth: u32,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0)]
    pub side: f64,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lx: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ly: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Zero boundary values; exports eigenvalues only.
    #[arg(long)]
    pub dirichlet: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NodalArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Analytic mode sampled on the mesh.
    #[arg(long, conflicts_with = "eig")]
    pub mode: Option<String>,
    /// Eigenpair JSON written by `eig`.
    #[arg(long, requires = "index")]
    pub eig: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flags shared by checks, suites and fits. Each one overrides the config
/// file.
#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub shape: Option<Shape>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, value_enum)]
    pub tier: Option<Tier>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    #[arg(long)]
    pub c_ball: Option<f64>,
    #[arg(long)]
    pub c_thresh: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<u32>>,
    /// Report path; a CSV mirror is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    FastMarching,
    Graph,
}

impl ExperimentArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(shape) = self.shape {
            cfg.model.shape = shape;
        }
        if let Some(depth) = self.depth {
            cfg.model.depth = depth;
        }
        if self.n.is_some() {
            cfg.model.n = self.n;
        }
        if let Some(mode) = &self.mode {
            cfg.mode = mode.clone();
        }
        if let Some(tier) = self.tier {
            cfg.tier = tier;
        }
        if let Some(engine) = self.engine {
            cfg.engine = match engine {
                EngineArg::FastMarching => DistanceEngine::FastMarching,
                EngineArg::Graph => DistanceEngine::Graph,
            };
        }
        if let Some(eta) = &self.eta {
            cfg.etas = eta.clone();
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(xi) = self.xi {
            cfg.xi = xi;
        }
        if self.c.is_some() {
            cfg.c = self.c;
        }
        if let Some(p) = &self.p {
            cfg.p_list = p.clone();
        }
        if let Some(r) = &self.r {
            cfg.r = r.clone();
        }
        if let Some(c) = self.c_ball {
            cfg.good_set.c_ball = c;
        }
        if let Some(c) = self.c_thresh {
            cfg.good_set.c_thresh = c;
        }
        if let Some(levels) = &self.levels {
            cfg.levels = levels.clone();
        }
        cfg.good_set.engine = cfg.engine;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, json: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display())),
        None => stdout_line(json),
    }
}

/// Writes to stdout; a closed pipe downstream is not an error.
fn stdout_line(text: &str) -> Result<()> {
    use std::io::Write;
    let mut lock = std::io::stdout().lock();
    match writeln!(lock, "{text}").and_then(|()| lock.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Check output: the config with defaults filled in, and its reports.
#[derive(Serialize)]
struct CheckOutput<'a, T: Serialize> {
    check: &'a str,
    config: &'a ExperimentConfig,
    pass_all: bool,
    reports: Vec<&'a CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<T>,
}

fn write_check<T: Serialize>(
    name: &str,
    cfg: &ExperimentConfig,
    reports: Vec<&CheckReport>,
    details: Option<T>,
    out: Option<&Path>,
) -> Result<bool> {
    let pass_all = reports.iter().all(|r| r.pass_all);
    let doc = CheckOutput { check: name, config: cfg, pass_all, reports: reports.clone(), details };
    emit(out, &to_json(&doc)?)?;
    if let Some(path) = out {
        let csv: String = reports.iter().map(|r| r.to_csv()).collect::<Vec<_>>().join("\n");
        std::fs::write(path.with_extension("csv"), csv)?;
    }
    Ok(pass_all)
}

fn require_mode(cfg: &ExperimentConfig) -> Result<AnalyticMode> {
    cfg.analytic_mode()
}

fn run_check(check: CheckName, args: &ExperimentArgs) -> Result<bool> {
    let cfg = args.resolve()?;
    let out = args.out.as_deref();
    let opts = cfg.distance();
    let depth = cfg.model.depth;
    let name = check.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let none: Option<()> = None;
    match check {
        CheckName::NodalTube => {
            let mode = require_mode(&cfg)?;
            match cfg.tier {
                Tier::Oracle => write_check(&name, &cfg, vec![&nodal_tube_oracle(&mode)?], none, out),
                Tier::Discrete => {
                    let t = nodal_tube_discrete(&mode, depth, &opts)?;
                    write_check(&name, &cfg, vec![&t.report], Some(serde_json::json!({"sup_gap": t.sup_gap})), out)
                }
            }
        }
        CheckName::Boundary | CheckName::Iteration | CheckName::Bsep => {
            if check == CheckName::Bsep && cfg.k > 1 {
                let etas = if cfg.etas.len() == cfg.k { cfg.etas.clone() } else { vec![cfg.etas[0]; cfg.k] };
                let spec = cfg.model;
                let cands = bsep_candidates(&spec, &[etas], &opts)?;
                let h = spec.build()?.mean_edge_length();
                let report = bsep_candidate_report(&cands, h).with_mesh(h, depth);
                let sets: Vec<usize> = cands[0].sets.iter().map(Vec::len).collect();
                let details = serde_json::json!({"lambda_k": cands[0].lambda_k, "set_sizes": sets});
                return write_check(&name, &cfg, vec![&report], Some(details), out);
            }
            let checks = match cfg.tier {
                Tier::Oracle => boundary_oracle_checks(&cfg.model, &cfg.etas)?,
                Tier::Discrete => boundary_discrete_checks(&cfg.model, &cfg.etas, &opts)?,
            };
            let report = match check {
                CheckName::Boundary => &checks.decay,
                CheckName::Iteration => &checks.iteration,
                _ => &checks.bsep,
            };
            let details = serde_json::json!({"lambda1d": checks.lambda1d, "lambda1d_exact": checks.lambda1d_exact});
            write_check(&name, &cfg, vec![report], Some(details), out)
        }
        CheckName::GoodSet | CheckName::Tail | CheckName::Lp => {
            let mode = require_mode(&cfg)?;
            let (run, _) = good_set_run(&mode, depth, cfg.xi, &cfg.good_set, cfg.c, &cfg.p_list)?;
            let report = match check {
                CheckName::GoodSet => &run.coverage,
                CheckName::Tail => &run.tail,
                _ => &run.lp,
            };
            write_check(&name, &cfg, vec![report], Some(&run.omega), out)
        }
        CheckName::Chebyshev => {
            let mode = require_mode(&cfg)?;
            write_check(&name, &cfg, vec![&chebyshev_mode(&mode, depth, &cfg.r)?], none, out)
        }
    }
}

#[derive(Serialize)]
struct FitOutput<'a> {
    target: FitTarget,
    value: f64,
    inputs: Vec<String>,
    config: &'a ExperimentConfig,
}

fn run_fit(target: FitTargetArg, args: &ExperimentArgs, reports: &[PathBuf], modes: &[String]) -> Result<bool> {
    let cfg = args.resolve()?;
    let modes: Vec<AnalyticMode> = if modes.is_empty() {
        vec![cfg.analytic_mode()?]
    } else {
        modes.iter().map(|m| m.parse().with_context(|| format!("mode {m:?}"))).collect::<Result<_>>()?
    };
    let (target, value, inputs) = match target {
        FitTargetArg::TailC => {
            if reports.is_empty() {
                bail!("tail-c needs at least one --report");
            }
            let mut loaded = Vec::new();
            for p in reports {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let value: serde_json::Value =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
                let found = tail_reports(&value).with_context(|| format!("reading reports in {}", p.display()))?;
                if found.is_empty() {
                    bail!("{} holds no tail report", p.display());
                }
                loaded.extend(found);
            }
            let value = fit_empirical_constant(&FitInput::Reports(&loaded), FitTarget::TailC)?;
            (FitTarget::TailC, value, reports.iter().map(|p| p.display().to_string()).collect())
        }
        _ if !reports.is_empty() => bail!("--report only applies to tail-c"),
        FitTargetArg::InclusionC => {
            let mut cs = Vec::new();
            for mode in &modes {
                cs.push(good_set_run(mode, cfg.model.depth, cfg.xi, &cfg.good_set, cfg.c, &cfg.p_list)?.1);
            }
            let value = fit_empirical_constant(&FitInput::Constructions(&cs), FitTarget::InclusionC)?;
            (FitTarget::InclusionC, value, modes.iter().map(|m| m.to_string()).collect())
        }
        FitTargetArg::DensityC => {
            let mut ds = Vec::new();
            for mode in &modes {
                ds.push(match cfg.tier {
                    Tier::Oracle => density_constant_oracle(mode)?,
                    Tier::Discrete => {
                        let s = SampledMode::new(mode, cfg.model.depth)?;
                        let d = distance_to_set(&s.mesh, &Sources::Nodal(&s.nodal), &cfg.distance())?;
                        (d.max(), mode.lambda())
                    }
                });
            }
            let value = fit_empirical_constant(&FitInput::Densities(&ds), FitTarget::DensityC)?;
            (FitTarget::DensityC, value, modes.iter().map(|m| m.to_string()).collect())
        }
    };
    emit(args.out.as_deref(), &to_json(&FitOutput { target, value, inputs, config: &cfg })?)?;
    Ok(true)
}

/// Tail reports in a bare report, a check output or a suite output.
fn tail_reports(value: &serde_json::Value) -> Result<Vec<CheckReport>> {
    let candidates: Vec<&serde_json::Value> = if let Some(list) = value.get("reports").and_then(|r| r.as_array()) {
        list.iter().collect()
    } else if let Some(list) = value.get("entries").and_then(|e| e.as_array()) {
        list.iter().filter_map(|e| e.get("report")).collect()
    } else if value.get("check").is_some() {
        vec![value]
    } else {
        bail!("expected a report, a check output or a suite output");
    };
    candidates
        .into_iter()
        .filter(|r| r.get("check").and_then(|c| c.as_str()).is_some_and(|c| c.starts_with("tail")))
        .map(|r| Ok(serde_json::from_value(r.clone())?))
        .collect()
}

#[derive(Serialize)]
struct MeshSummary {
    path: String,
    vertices: usize,
    faces: usize,
    boundary_loops: usize,
    euler_characteristic: i64,
}

fn run_gen(a: &GenArgs) -> Result<bool> {
    let spec = ModelSpec {
        shape: a.shape,
        depth: a.depth,
        n: a.n,
        radius: a.radius,
        side: a.side,
        width: a.width,
        length: a.length,
        lx: a.lx,
        ly: a.ly,
    };
    let mesh = spec.build()?;
    save_mesh(&mesh, &a.out)?;
    let summary = MeshSummary {
        path: a.out.display().to_string(),
        vertices: mesh.num_vertices(),
        faces: mesh.num_faces(),
        boundary_loops: mesh.boundary_loops(),
        euler_characteristic: mesh.euler_characteristic(),
    };
    stdout_line(&to_json(&summary)?)?;
    Ok(true)
}

fn run_eig(a: &EigArgs) -> Result<bool> {
    let mesh = load_mesh(&a.mesh)?;
    let export = if a.dirichlet {
        let lambda = dirichlet_eigenvalues(&mesh, a.k)?;
        EigenExport { lambda, fields: Vec::new(), residuals: Vec::new() }
    } else {
        let pairs = smallest_eigenpairs(&assemble(&mesh)?, a.k)?;
        EigenExport::from(pairs.as_slice())
    };
    emit(a.out.as_deref(), &serde_json::to_string(&export)?)?;
    Ok(true)
}

#[derive(Serialize)]
struct NodalOutput {
    domains: usize,
    #[serde(flatten)]
    nodal: nodal_lab::nodal::NodalExport,
}

fn run_nodal(a: &NodalArgs) -> Result<bool> {
    let mesh = load_mesh(&a.mesh)?;
    let field = match (&a.mode, &a.eig, a.index) {
        (Some(mode), _, _) => {
            let mode: AnalyticMode = mode.parse()?;
            nodal_lab::analytic::sample(&mode, &mesh)?
        }
        (None, Some(path), Some(i)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let export: EigenExport = serde_json::from_str(&text)?;
            match export.fields.get(i) {
                Some(f) => f.clone(),
                None => bail!("eigenpair file has {} fields, asked for index {i}", export.fields.len()),
            }
        }
        _ => bail!("nodal needs --mode or --eig with --index"),
    };
    let nodal = extract_nodal_set(&mesh, &field, DEFAULT_ZERO_TOL)?;
    let out = NodalOutput { domains: nodal.domains(&mesh).count(), nodal: nodal.export(&mesh) };
    emit(a.out.as_deref(), &serde_json::to_string(&out)?)?;
    Ok(true)
}

fn run_suite_cmd(name: &str, args: &ExperimentArgs, out_dir: Option<&Path>) -> Result<bool> {
    let cfg = args.resolve()?;
    let report = run_suite(name, &cfg)?;
    let json = to_json(&report)?;
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{name}.json")), format!("{json}\n"))?;
            if !report.convergence.is_empty() {
                std::fs::write(dir.join(format!("{name}.csv")), report.convergence_csv())?;
            }
        }
        None => stdout_line(&json)?,
    }
    for failed in report.failures() {
        eprintln!("violation: {failed}");
    }
    Ok(report.pass_all)
}

/// Runs a parsed command. `Ok(false)` means an inequality was violated.
pub fn run(cli: Cli) -> Result<bool> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Eig(a) => run_eig(a),
        Command::Nodal(a) => run_nodal(a),
        Command::Check { check, args } => run_check(*check, args),
        Command::Suite { name, args, out_dir } => run_suite_cmd(name, args, out_dir.as_deref()),
        Command::Fit { target, args, reports, modes } => run_fit(*target, args, reports, modes),
    })
}
