//! Restricted tails and moments over a good set, the Chebyshev baseline, and
//! constant fits.

use super::{positive, CheckRecord, CheckReport, OmegaConstruction};
use crate::error::{invalid, Error, Result};
use crate::mesh::VolumeMeasure;
use crate::nodal::ExactProfile;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};
use std::f64::consts::E;

/// Relative slack allowed when comparing the two moment bounds.
const BOUND_ROUNDING: f64 = 1e-12;

fn check_sizes(field: &[f64], measure: &VolumeMeasure, omega: Option<&[bool]>) -> Result<()> {
    let n = measure.weights().len();
    if field.len() != n || omega.is_some_and(|o| o.len() != n) {
        return Err(invalid("field, set and measure sizes differ"));
    }
    Ok(())
}

fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("xi = {xi} outside (0, 1]")))
    }
}

fn field_norm(field: &[f64], measure: &VolumeMeasure) -> Result<f64> {
    let norm = measure.l2_norm(field);
    if norm > 0.0 {
        Ok(norm)
    } else {
        Err(Error::DegenerateField)
    }
}

/// `|phi|` with the measure restricted to `omega`.
fn restricted_profile(field: &[f64], omega: &[bool], measure: &VolumeMeasure) -> Result<ExactProfile> {
    let abs: Vec<f64> = field.iter().map(|x| x.abs()).collect();
    let w: Vec<f64> = measure.weights().iter().zip(omega).map(|(&w, &m)| if m { w } else { 0.0 }).collect();
    ExactProfile::from_parts(&abs, &w)
}

/// Largest `C` with `m(Omega ∩ {|phi| > r}) <= exp(1 - C sqrt(xi) r / ||phi||_2)`
/// for every `r >= 0`, or `None` when no level constrains it.
///
/// The tail is a right-continuous step function, so only the left limits at
/// its jumps matter: `m(Omega ∩ {|phi| >= a})` at each level `a > 0`.
fn tail_constant(profile: &ExactProfile, xi: f64, norm: f64) -> Option<f64> {
    let mut best = f64::INFINITY;
    for a in profile.breakpoints() {
        if a <= 0.0 {
            continue;
        }
        let below = profile.eval(a.next_down());
        if below > 0.0 {
            best = best.min((1.0 - below.ln()) * norm / (xi.sqrt() * a));
        }
    }
    best.is_finite().then_some(best)
}

/// `m(Omega ∩ {|phi| > r}) <= exp(1 - C sqrt(xi) r / ||phi||_2)` on a radius
/// grid. The fitted constant is the largest `C` valid at every `r`.
pub fn check_restricted_tail(
    field: &[f64],
    omega: &[bool],
    measure: &VolumeMeasure,
    xi: f64,
    c: f64,
    r_grid: &[f64],
) -> Result<CheckReport> {
    check_sizes(field, measure, Some(omega))?;
    check_xi(xi)?;
    positive("C", c)?;
    let norm = field_norm(field, measure)?;
    let profile = restricted_profile(field, omega, measure)?;
    let k = c * xi.sqrt() / norm;
    let records = r_grid.iter().map(|&r| CheckRecord::new(r, profile.eval(r), (1.0 - k * r).exp(), 0.0)).collect();
    let mut report = CheckReport::new("tail", None, 0.0, records);
    report.constant = Some(c);
    report.fitted_constant = tail_constant(&profile, xi, norm);
    Ok(report)
}

/// `(m({|phi| > r}), ||phi||_2^2 / r^2)`.
///
/// Both sums run over the vertices in the same order and each term of the
/// left is at most the matching term on the right, so the inequality holds
/// in floating point as well.
pub fn chebyshev_tail(field: &[f64], measure: &VolumeMeasure, r: f64) -> Result<(f64, f64)> {
    check_sizes(field, measure, None)?;
    positive("r", r)?;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (&w, &x) in measure.weights().iter().zip(field) {
        lhs += if x.abs() > r { w } else { 0.0 };
        rhs += w * (x * x / (r * r));
    }
    Ok((lhs, rhs))
}

/// `e Gamma(p+1)^(1/p) ||phi||_2 / (C sqrt(xi))`.
pub fn lp_closed_form_bound(p: f64, norm: f64, xi: f64, c: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid(format!("p = {p} must be at least 1")));
    }
    Ok(E * (ln_gamma(p + 1.0) / p).exp() * norm / (c * xi.sqrt()))
}

/// Moment bound from integrating `p r^(p-1) min(m(Omega), e^(1 - a r))` with
/// `a = C sqrt(xi) / ||phi||_2`.
///
/// Scaled by `a`, the integral is `m x0^p + e Gamma(p+1) Q(p, x0)` where
/// `x0 = 1 - ln m(Omega)` and `Q` is the upper regularized gamma function.
pub fn lp_cavalieri_bound(p: f64, norm: f64, xi: f64, c: f64, omega_measure: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid(format!("p = {p} must be at least 1")));
    }
    if omega_measure <= 0.0 {
        return Ok(0.0);
    }
    let m = omega_measure.min(1.0);
    let x0 = 1.0 - m.ln();
    let integral = m * x0.powf(p) + E * (ln_gamma(p + 1.0)).exp() * gamma_ur(p, x0);
    Ok(integral.powf(1.0 / p) * norm / (c * xi.sqrt()))
}

/// `(int_Omega |phi|^p)^(1/p)` against the closed-form bound, with the
/// integrated bound in `rhs_alt`. A record also fails if `rhs_alt > rhs`.
pub fn check_restricted_lp(
    field: &[f64],
    omega: &[bool],
    measure: &VolumeMeasure,
    p_list: &[f64],
    xi: f64,
    c: f64,
) -> Result<CheckReport> {
    check_sizes(field, measure, Some(omega))?;
    check_xi(xi)?;
    positive("C", c)?;
    let norm = field_norm(field, measure)?;
    let m_omega = measure.measure_of_mask(omega);
    let mut records = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let rhs = lp_closed_form_bound(p, norm, xi, c)?;
        let alt = lp_cavalieri_bound(p, norm, xi, c, m_omega)?;
        let moment: f64 = measure
            .weights()
            .iter()
            .zip(field)
            .zip(omega)
            .filter(|(_, &m)| m)
            .map(|((&w, &x), _)| w * x.abs().powf(p))
            .sum();
        let mut rec = CheckRecord::new(p, moment.powf(1.0 / p), rhs, 0.0);
        rec.rhs_alt = Some(alt);
        rec.pass &= alt <= rhs * (1.0 + BOUND_ROUNDING);
        records.push(rec);
    }
    let mut report = CheckReport::new("lp", None, 0.0, records);
    report.constant = Some(c);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitTarget {
    /// Tail constant `C`: the smallest value any record allows.
    TailC,
    /// Inclusion constant: the largest measured value.
    InclusionC,
    /// Density constant `c` in `R = c / sqrt(lambda)`: the largest value.
    DensityC,
}

pub enum FitInput<'a> {
    /// Tail reports carrying the constant they were run with.
    Reports(&'a [CheckReport]),
    Constructions(&'a [OmegaConstruction]),
    /// `(largest distance to the nodal set, lambda)` per field.
    Densities(&'a [(f64, f64)]),
}

/// Extremal constant making every supplied inequality hold, with equality
/// at the binding input.
pub fn fit_empirical_constant(input: &FitInput, target: FitTarget) -> Result<f64> {
    let fitted = match (target, input) {
        (FitTarget::TailC, FitInput::Reports(reports)) => {
            if reports.is_empty() {
                return Err(invalid("no reports to fit"));
            }
            let mut best = f64::INFINITY;
            for report in reports.iter() {
                let c = report.constant.ok_or_else(|| invalid(format!("{} report has no constant", report.check)))?;
                for rec in &report.records {
                    // rhs = exp(1 - k r) with k proportional to the constant
                    if rec.lhs > 0.0 && rec.rhs < E {
                        best = best.min(c * (1.0 - rec.lhs.ln()) / (1.0 - rec.rhs.ln()));
                    }
                }
            }
            best
        }
        (FitTarget::InclusionC, FitInput::Constructions(cs)) => {
            if cs.is_empty() {
                return Err(invalid("no constructions to fit"));
            }
            cs.iter().map(|c| c.inclusion_constant).fold(0.0, f64::max)
        }
        (FitTarget::DensityC, FitInput::Densities(ds)) => {
            if ds.is_empty() {
                return Err(invalid("no densities to fit"));
            }
            ds.iter().map(|&(d, lambda)| d * lambda.sqrt()).fold(0.0, f64::max)
        }
        _ => return Err(invalid(format!("input kind does not match target {target:?}"))),
    };
    if fitted.is_finite() {
        Ok(fitted)
    } else {
        Err(invalid("no input constrains the constant"))
    }
}
