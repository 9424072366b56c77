//! Inequality checks against measured profiles and fields.
//!
//! Every check produces a [`CheckReport`] of pointwise records. A record
//! passes when `lhs <= rhs + tol_h`.

mod bsep;
mod omega;
mod tail;

pub use bsep::{bsep_k1, bsep_k_candidate, check_bsep, BsepCandidate, BsepOutcome};
pub use omega::{construct_good_set, lambda_guard, GoodSetParams, OmegaConstruction};
pub use tail::{
    chebyshev_tail, check_restricted_lp, check_restricted_tail, fit_empirical_constant, lp_cavalieri_bound,
    lp_closed_form_bound, FitInput, FitTarget,
};

use crate::error::{invalid, Result};
use crate::nodal::TubeProfile;
use serde::{Deserialize, Serialize};

/// Multiplier in the default allowance `KAPPA * h * sqrt(lambda)`.
pub const TOL_KAPPA: f64 = 2.0;

/// Discretization allowance for a mesh with mean edge length `h`.
pub fn tol_h(h: f64, lambda: f64) -> f64 {
    TOL_KAPPA * h * lambda.max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    /// Abscissa: `r`, `p` or `eta`; for iteration pairs the `r` part.
    pub x: f64,
    /// Second abscissa of an `(r, eps)` pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    /// Secondary bound carried alongside `rhs` (the integrated tail bound
    /// for moment checks).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_alt: Option<f64>,
}

impl CheckRecord {
    pub fn new(x: f64, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Self { x, eps: None, lhs, rhs, slack, pass: slack >= -tol, rhs_alt: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshInfo {
    pub h: f64,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    /// `None` for checks that involve no eigenvalue.
    pub lambda: Option<f64>,
    /// `None` for checks on exact oracle curves.
    pub mesh: Option<MeshInfo>,
    pub tol_h: f64,
    pub records: Vec<CheckRecord>,
    /// Constant supplied to the bound, if any.
    pub constant: Option<f64>,
    pub fitted_constant: Option<f64>,
    /// Largest `lhs - rhs` over the records, floored at zero.
    pub max_violation: f64,
    pub pass_all: bool,
}

impl CheckReport {
    pub fn new(check: &str, lambda: Option<f64>, tol_h: f64, records: Vec<CheckRecord>) -> Self {
        let max_violation = records.iter().map(|r| -r.slack).fold(0.0, f64::max);
        let pass_all = records.iter().all(|r| r.pass);
        Self {
            check: check.to_string(),
            lambda,
            mesh: None,
            tol_h,
            records,
            constant: None,
            fitted_constant: None,
            max_violation,
            pass_all,
        }
    }

    pub fn with_mesh(mut self, h: f64, depth: u32) -> Self {
        self.mesh = Some(MeshInfo { h, depth });
        self
    }

    pub fn with_fitted(mut self, c: f64) -> Self {
        self.fitted_constant = Some(c);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns `x,lhs,rhs,slack,pass`, plus `eps` when any record has one.
    pub fn to_csv(&self) -> String {
        let with_eps = self.records.iter().any(|r| r.eps.is_some());
        let mut out = String::from("x,lhs,rhs,slack,pass");
        if with_eps {
            out.push_str(",eps");
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{},{},{},{}", r.x, r.lhs, r.rhs, r.slack, r.pass));
            if with_eps {
                out.push_str(&format!(",{}", r.eps.map(|e| e.to_string()).unwrap_or_default()));
            }
            out.push('\n');
        }
        out
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be positive")))
    }
}

fn exp_bound_report(check: &str, profile: &TubeProfile, lambda: f64, tol: f64) -> Result<CheckReport> {
    positive("lambda", lambda)?;
    let s = lambda.sqrt();
    let records = profile
        .r()
        .iter()
        .zip(profile.mu())
        .map(|(&r, &mu)| CheckRecord::new(r, mu, (1.0 - s * r).exp(), tol))
        .collect();
    Ok(CheckReport::new(check, Some(lambda), tol, records))
}

/// `mu(r) <= exp(1 - sqrt(lambda) r)` for a nodal tube profile.
pub fn check_nodal_concentration(profile: &TubeProfile, lambda: f64, tol_h: f64) -> Result<CheckReport> {
    exp_bound_report("nodal-tube", profile, lambda, tol_h)
}

/// `mu(r) <= exp(1 - sqrt(lambda_1^D) r)` for a boundary distance profile.
pub fn check_boundary_decay(profile: &TubeProfile, lambda1d: f64, tol_h: f64) -> Result<CheckReport> {
    exp_bound_report("boundary", profile, lambda1d, tol_h)
}

/// Pairs `(i * delta, j * delta)` for `i <= nr`, `j <= ne`, with `delta`
/// the spacing of a uniform grid. Both parts are read back from the grid so
/// that `r + eps` lands on a grid point.
pub fn iteration_pairs(grid: &[f64], nr: usize, ne: usize) -> Result<Vec<(f64, f64)>> {
    if nr + ne >= grid.len() {
        return Err(invalid(format!("{} grid points cannot hold {nr} + {ne} steps", grid.len())));
    }
    let mut out = Vec::with_capacity(nr * ne);
    for i in 1..=nr {
        for j in 1..=ne {
            out.push((grid[i], grid[j]));
        }
    }
    Ok(out)
}

/// `(1 + eps^2 lambda_1^D) mu(r + eps) <= mu(r)` for each pair.
pub fn check_iteration_inequality(
    profile: &TubeProfile,
    lambda1d: f64,
    pairs: &[(f64, f64)],
    tol_h: f64,
) -> Result<CheckReport> {
    positive("lambda", lambda1d)?;
    let mut records = Vec::with_capacity(pairs.len());
    for &(r, eps) in pairs {
        if !(r > 0.0 && eps > 0.0) {
            return Err(invalid(format!("pair ({r}, {eps}) needs positive entries")));
        }
        let lhs = (1.0 + eps * eps * lambda1d) * profile.at(r + eps)?;
        let mut rec = CheckRecord::new(r, lhs, profile.at(r)?, tol_h);
        rec.eps = Some(eps);
        records.push(rec);
    }
    Ok(CheckReport::new("iteration", Some(lambda1d), tol_h, records))
}
