//! Closed-form eigenfunctions on the round sphere and flat tori, and exact
//! tube-complement measures for modes whose nodal sets are parallel lines or
//! latitude circles.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::mesh::{Geometry, TriMesh};
use crate::vec3::Vec3;

/// Largest supported spherical harmonic degree.
pub const MAX_DEGREE: u32 = 60;

/// First zero of the Bessel function `J_0`.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// A Laplace eigenfunction known in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticMode {
    /// Real spherical harmonic on the unit sphere, unit `L2(m_g)` norm.
    Sphere { l: u32, m: i32 },
    /// `cos(2 pi (kx x / lx + ky y / ly) + phase)` on the flat torus.
    Torus { kx: i32, ky: i32, phase: f64, lx: f64, ly: f64 },
}

pub fn sphere_harmonic(l: u32, m: i32) -> Result<AnalyticMode> {
    if m.unsigned_abs() > l {
        return Err(invalid(format!("|m| = {} exceeds l = {l}", m.unsigned_abs())));
    }
    if l > MAX_DEGREE {
        return Err(Error::ResourceLimit(format!("degree {l} above {MAX_DEGREE}")));
    }
    Ok(AnalyticMode::Sphere { l, m })
}

/// Torus mode on the unit square torus.
pub fn torus_mode(kx: i32, ky: i32, phase: f64) -> AnalyticMode {
    AnalyticMode::Torus { kx, ky, phase, lx: 1.0, ly: 1.0 }
}

pub fn torus_mode_on(kx: i32, ky: i32, phase: f64, lx: f64, ly: f64) -> Result<AnalyticMode> {
    if !(lx > 0.0 && ly > 0.0) {
        return Err(invalid("torus periods must be positive"));
    }
    Ok(AnalyticMode::Torus { kx, ky, phase, lx, ly })
}

impl AnalyticMode {
    pub fn lambda(&self) -> f64 {
        match *self {
            AnalyticMode::Sphere { l, .. } => (l * (l + 1)) as f64,
            AnalyticMode::Torus { .. } => {
                let k = self.wavenumber();
                4.0 * PI * PI * k * k
            }
        }
    }

    /// Lower Ricci bound of the model surface.
    pub fn ricci_lower_bound(&self) -> f64 {
        match self {
            AnalyticMode::Sphere { .. } => 1.0,
            AnalyticMode::Torus { .. } => 0.0,
        }
    }

    // |k| = sqrt((kx/lx)^2 + (ky/ly)^2), the inverse spatial period
    fn wavenumber(&self) -> f64 {
        match *self {
            AnalyticMode::Torus { kx, ky, lx, ly, .. } => (kx as f64 / lx).hypot(ky as f64 / ly),
            AnalyticMode::Sphere { .. } => f64::NAN,
        }
    }

    /// Value at a point; sphere points are projected radially.
    pub fn eval(&self, p: Vec3) -> f64 {
        match *self {
            AnalyticMode::Sphere { l, m } => {
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                let x = (p[2] / r).clamp(-1.0, 1.0);
                let azimuth = p[1].atan2(p[0]);
                let am = m.unsigned_abs();
                let radial = sphere_norm(l, am) * associated_legendre(l, am, x);
                match m.signum() {
                    0 => radial,
                    1 => radial * (am as f64 * azimuth).cos(),
                    _ => radial * (am as f64 * azimuth).sin(),
                }
            }
            AnalyticMode::Torus { kx, ky, phase, lx, ly } => {
                (2.0 * PI * (kx as f64 * p[0] / lx + ky as f64 * p[1] / ly) + phase).cos()
            }
        }
    }

    /// Exact `L2(m_g)` norm.
    pub fn l2_norm(&self) -> f64 {
        match *self {
            AnalyticMode::Sphere { .. } => 1.0,
            AnalyticMode::Torus { kx: 0, ky: 0, phase, .. } => phase.cos().abs(),
            AnalyticMode::Torus { .. } => std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

// sqrt((2l+1) (l-m)!/(l+m)!), doubled in square for m != 0
fn sphere_norm(l: u32, m: u32) -> f64 {
    let mut ratio = 1.0;
    for j in (l - m + 1)..=(l + m) {
        ratio /= j as f64;
    }
    let base = (2 * l + 1) as f64 * ratio;
    if m == 0 {
        base.sqrt()
    } else {
        (2.0 * base).sqrt()
    }
}

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre(l: u32, x: f64) -> f64 {
    legendre_with_derivative(l, x).0
}

fn legendre_with_derivative(l: u32, x: f64) -> (f64, f64) {
    if l == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for n in 2..=l {
        let n = n as f64;
        let p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
        p0 = p1;
        p1 = p2;
    }
    let l = l as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint derivative l(l+1)/2 * x^(l+1)
        0.5 * l * (l + 1.0) * x.signum().powi(l as i32 + 1)
    } else {
        l * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// Associated Legendre function without the Condon-Shortley phase.
pub fn associated_legendre(l: u32, m: u32, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for i in 0..m {
        pmm *= (2 * i + 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    for n in (m + 2)..=l {
        let p = (x * (2 * n - 1) as f64 * pm1 - (n + m - 1) as f64 * pmm) / (n - m) as f64;
        pmm = pm1;
        pm1 = p;
    }
    pm1
}

/// The `l` zeros of `P_l` in ascending order, by Newton iteration.
pub fn legendre_zeros(l: u32) -> Vec<f64> {
    let mut zeros: Vec<f64> = (1..=l)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (l as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(l, x);
                let step = p / dp;
                x -= step;
                if step.abs() <= 1e-15 {
                    break;
                }
            }
            x
        })
        .collect();
    zeros.sort_by(f64::total_cmp);
    zeros
}

/// Evaluates `mode` at every vertex.
pub fn sample(mode: &AnalyticMode, mesh: &TriMesh) -> Result<Vec<f64>> {
    match (mode, mesh.geometry()) {
        (AnalyticMode::Sphere { .. }, Geometry::Sphere { radius }) if (radius - 1.0).abs() < 1e-12 => {}
        (AnalyticMode::Torus { lx, ly, .. }, Geometry::FlatTorus { lx: mx, ly: my })
            if (lx - mx).abs() <= 1e-12 * mx && (ly - my).abs() <= 1e-12 * my => {}
        (mode, geometry) => return Err(Error::GeometryMismatch(format!("{mode} cannot be sampled on {geometry:?}"))),
    }
    Ok(mesh.positions().iter().map(|&p| mode.eval(p)).collect())
}

#[derive(Debug, Clone, PartialEq)]
enum Curve {
    // 1 - 4 |k| r
    Lines { wavenumber: f64 },
    // colatitudes of the nodal circles, ascending
    Latitudes { theta: Vec<f64> },
    Disk { radius: f64 },
    Square { side: f64 },
    Strip { width: f64 },
}

/// An exact tube-complement measure `r -> m_g(M \ B_r(A))`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCurve {
    description: String,
    curve: Curve,
}

impl OracleCurve {
    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match &self.curve {
            Curve::Lines { wavenumber } => (1.0 - 4.0 * wavenumber * r).max(0.0),
            Curve::Latitudes { theta } => {
                // bands of colatitude at distance > r from every nodal circle
                let mut total = 0.0;
                let mut lo = 0.0;
                for (i, &t) in theta.iter().enumerate() {
                    let a = if i == 0 { lo } else { lo + r };
                    let b = t - r;
                    if b > a {
                        total += a.cos() - b.cos();
                    }
                    lo = t;
                }
                let a = lo + r;
                if PI > a {
                    total += a.cos() + 1.0;
                }
                0.5 * total
            }
            Curve::Disk { radius } => (1.0 - r / radius).max(0.0).powi(2),
            Curve::Square { side } => (1.0 - 2.0 * r / side).max(0.0).powi(2),
            Curve::Strip { width } => (1.0 - 2.0 * r / width).max(0.0),
        }
    }

    /// Smallest `r` with `mu(r) = 0`: the largest distance to the set.
    pub fn support_radius(&self) -> f64 {
        match &self.curve {
            Curve::Lines { wavenumber } => 0.25 / wavenumber,
            Curve::Latitudes { theta } => {
                let mut gap = theta[0].max(PI - theta[theta.len() - 1]);
                for w in theta.windows(2) {
                    gap = gap.max(0.5 * (w[1] - w[0]));
                }
                gap
            }
            Curve::Disk { radius } => *radius,
            Curve::Square { side } => 0.5 * side,
            Curve::Strip { width } => 0.5 * width,
        }
    }

    /// `sup { r : mu(r) >= eta }` for `eta` in `(0, 1)`.
    pub fn quantile(&self, eta: f64) -> Result<f64> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(invalid(format!("eta = {eta} outside (0, 1)")));
        }
        let (mut lo, mut hi) = (0.0, self.support_radius());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) >= eta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// Exact tube-complement measure around the nodal set of `mode`.
pub fn tube_complement_oracle(mode: &AnalyticMode) -> Result<OracleCurve> {
    match *mode {
        AnalyticMode::Torus { kx, ky, .. } if (kx, ky) != (0, 0) => Ok(OracleCurve {
            description: format!("parallel nodal lines of {mode}"),
            curve: Curve::Lines { wavenumber: mode.wavenumber() },
        }),
        AnalyticMode::Sphere { l, m: 0 } if l > 0 => {
            let mut theta: Vec<f64> = legendre_zeros(l).iter().map(|x| x.acos()).collect();
            theta.sort_by(f64::total_cmp);
            Ok(OracleCurve { description: format!("nodal latitudes of {mode}"), curve: Curve::Latitudes { theta } })
        }
        _ => Err(Error::UnsupportedOracle(format!("{mode}"))),
    }
}

/// Planar domains with a closed-form boundary profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryShape {
    Disk {
        radius: f64,
    },
    Square {
        side: f64,
    },
    /// Periodic strip of the given width; its length does not matter.
    Strip {
        width: f64,
    },
}

/// `r -> m_g(M \ B_r(boundary))` and the exact first Dirichlet eigenvalue.
pub fn boundary_oracle(shape: BoundaryShape) -> Result<(OracleCurve, f64)> {
    let (size, curve, lambda) = match shape {
        BoundaryShape::Disk { radius } => (radius, Curve::Disk { radius }, (BESSEL_J0_FIRST_ZERO / radius).powi(2)),
        BoundaryShape::Square { side } => (side, Curve::Square { side }, 2.0 * (PI / side).powi(2)),
        BoundaryShape::Strip { width } => (width, Curve::Strip { width }, (PI / width).powi(2)),
    };
    if !(size > 0.0) {
        return Err(invalid(format!("{shape:?} needs a positive size")));
    }
    Ok((OracleCurve { description: format!("{shape:?} boundary profile"), curve }, lambda))
}

impl fmt::Display for AnalyticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AnalyticMode::Sphere { l, m } => write!(f, "sphere:l={l},m={m}"),
            AnalyticMode::Torus { kx, ky, phase, lx, ly } => {
                write!(f, "torus:kx={kx},ky={ky},phase={phase}")?;
                if lx != 1.0 || ly != 1.0 {
                    write!(f, ",lx={lx},ly={ly}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for AnalyticMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (surface, rest) =
            s.split_once(':').ok_or_else(|| Error::Parse(format!("mode {s:?} lacks a surface prefix")))?;
        let mut keys: Vec<(&str, &str)> = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let kv = item.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, found {item:?}")))?;
            keys.push((kv.0.trim(), kv.1.trim()));
        }
        let get = |name: &str| keys.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
        fn num<T: FromStr>(name: &str, v: Option<&str>, default: Option<T>) -> Result<T> {
            match (v, default) {
                (Some(v), _) => v.parse().map_err(|_| Error::Parse(format!("bad value for {name}: {v:?}"))),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::Parse(format!("missing {name}"))),
            }
        }
        let allowed: &[&str] = match surface {
            "sphere" => &["l", "m"],
            "torus" => &["kx", "ky", "phase", "lx", "ly"],
            other => return Err(Error::Parse(format!("unknown surface {other:?}"))),
        };
        if let Some((k, _)) = keys.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(Error::Parse(format!("unknown key {k:?} for {surface}")));
        }
        match surface {
            "sphere" => sphere_harmonic(num("l", get("l"), None)?, num("m", get("m"), Some(0))?),
            _ => torus_mode_on(
                num("kx", get("kx"), Some(0))?,
                num("ky", get("ky"), Some(0))?,
                num("phase", get("phase"), Some(0.0))?,
                num("lx", get("lx"), Some(1.0))?,
                num("ly", get("ly"), Some(1.0))?,
            ),
        }
    }
}
