//! Rotationally symmetric ambient geometry `ds² = dr² + φ(r)² dΩ²`.
//!
//! A [`WarpProfile`] carries the warp factor φ and its derivative. The
//! hyperbolic profile additionally has a conformal chart, the Poincaré ball,
//! used by the chart-level oracle and by the mesh code; [`Chart`] exposes the
//! pieces of that chart (and of the flat chart for φ(r) = r) that meshes need.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

/// Below this radius the built-in log-derivatives switch to series.
pub const SERIES_CUTOFF: f64 = 1e-4;

/// Step used to estimate φ'(0) for tabulated profiles.
const ORIGIN_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Euclidean,
    Hyperbolic,
    Spherical,
    Tabulated,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProfileKind::Euclidean => "euclidean",
            ProfileKind::Hyperbolic => "hyperbolic",
            ProfileKind::Spherical => "spherical",
            ProfileKind::Tabulated => "tabulated",
        };
        f.write_str(s)
    }
}

/// Warp factor of a rotationally symmetric metric.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpProfile {
    kind: ProfileKind,
    domain_end: f64,
    table: Option<MonotoneCubic>,
}

impl WarpProfile {
    /// φ(r) = r.
    pub fn euclidean() -> Self {
        Self {
            kind: ProfileKind::Euclidean,
            domain_end: f64::INFINITY,
            table: None,
        }
    }

    /// φ(r) = sinh r.
    pub fn hyperbolic() -> Self {
        Self {
            kind: ProfileKind::Hyperbolic,
            domain_end: f64::INFINITY,
            table: None,
        }
    }

    /// φ(r) = sin r on (0, domain_end], with domain_end ≤ π/2 so that φ' ≥ 0.
    pub fn spherical(domain_end: f64) -> Result<Self> {
        if !(domain_end > 0.0) || domain_end > FRAC_PI_2 {
            return Err(Error::InvalidProfile(format!(
                "spherical domain end {domain_end} must lie in (0, π/2]: \
                 φ' = cos r turns negative beyond π/2"
            )));
        }
        Ok(Self {
            kind: ProfileKind::Spherical,
            domain_end,
            table: None,
        })
    }

    /// Tabulated profile from `(r, φ)` samples, interpolated by a monotone cubic.
    ///
    /// Needs at least 8 samples with strictly increasing r starting in
    /// [0, 1e-3), positive nondecreasing φ for r > 0, and φ(0) = 0 when r = 0
    /// is sampled. A missing origin sample is filled with (0, 0).
    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 8 {
            return Err(Error::InvalidProfile(format!(
                "tabulated profile needs at least 8 samples, got {}",
                samples.len()
            )));
        }
        if samples
            .iter()
            .any(|(r, p)| !r.is_finite() || !p.is_finite())
        {
            return Err(Error::InvalidProfile("non-finite sample".into()));
        }
        let first_r = samples[0].0;
        if !(0.0..1e-3).contains(&first_r) {
            return Err(Error::InvalidProfile(format!(
                "first sample radius {first_r} must lie in [0, 1e-3)"
            )));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidProfile(format!(
                    "radii must be strictly increasing (sample {})",
                    i + 1
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidProfile(format!(
                    "φ decreases between r = {} and r = {}: φ' < 0 on the sample grid \
                     violates the φ' ≥ 0 domain restriction",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(r, p) in samples {
            if r > 0.0 && p <= 0.0 {
                return Err(Error::InvalidProfile(format!(
                    "φ({r}) = {p} is not positive"
                )));
            }
        }
        if first_r == 0.0 && samples[0].1 != 0.0 {
            return Err(Error::InvalidProfile(format!(
                "φ(0) = {} but the warp factor must vanish at the center",
                samples[0].1
            )));
        }

        let mut xs = Vec::with_capacity(samples.len() + 1);
        let mut ys = Vec::with_capacity(samples.len() + 1);
        if first_r > 0.0 {
            xs.push(0.0);
            ys.push(0.0);
        }
        xs.extend(samples.iter().map(|s| s.0));
        ys.extend(samples.iter().map(|s| s.1));
        let table = MonotoneCubic::new(xs, ys);

        for &x in table.knots() {
            let slope = table.eval(x).1;
            if slope < 0.0 {
                return Err(Error::InvalidProfile(format!(
                    "interpolated φ'({x}) = {slope} < 0"
                )));
            }
        }
        let domain_end = *table.knots().last().expect("non-empty table");
        let profile = Self {
            kind: ProfileKind::Tabulated,
            domain_end,
            table: Some(table),
        };
        let slope0 = profile.phi_prime_at_zero();
        if !(slope0 > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "estimated φ'(0) = {slope0} must be positive"
            )));
        }
        Ok(profile)
    }

    /// Parses the two-column `r phi` text format ('#' starts a comment).
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::InvalidProfile(format!(
                    "line {}: expected two columns \"r phi\"",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidProfile(format!("line {}: {e}", lineno + 1)))
            };
            samples.push((parse(cols[0])?, parse(cols[1])?));
        }
        Self::tabulated(&samples)
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    /// Knots of a tabulated profile (including an inserted origin).
    pub fn knots(&self) -> Option<&[f64]> {
        self.table.as_ref().map(|t| t.knots())
    }

    /// φ(r). Not domain checked, so finite-difference stencils may step past
    /// an admissible endpoint.
    pub fn phi(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Euclidean => r,
            ProfileKind::Hyperbolic => r.sinh(),
            ProfileKind::Spherical => r.sin(),
            ProfileKind::Tabulated => self.table().eval(r).0,
        }
    }

    /// φ'(r), not domain checked.
    pub fn phi_prime(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Euclidean => 1.0,
            ProfileKind::Hyperbolic => r.cosh(),
            ProfileKind::Spherical => r.cos(),
            ProfileKind::Tabulated => self.table().eval(r).1,
        }
    }

    /// φ'(0); a forward difference at 1e-6 for tabulated profiles.
    pub fn phi_prime_at_zero(&self) -> f64 {
        match self.kind {
            ProfileKind::Tabulated => (self.phi(ORIGIN_FD_STEP) - self.phi(0.0)) / ORIGIN_FD_STEP,
            _ => 1.0,
        }
    }

    pub fn check_radius(&self, r: f64) -> Result<()> {
        if r > 0.0 && r <= self.domain_end {
            Ok(())
        } else {
            Err(Error::Domain {
                r,
                upper: self.domain_end,
            })
        }
    }

    /// φ'(r)/φ(r), the principal curvature of the level sphere of radius r.
    pub fn log_derivative(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.log_derivative_unchecked(r))
    }

    pub(crate) fn log_derivative_unchecked(&self, r: f64) -> f64 {
        let small = r < SERIES_CUTOFF;
        match self.kind {
            ProfileKind::Euclidean => 1.0 / r,
            ProfileKind::Hyperbolic if small => {
                let r2 = r * r;
                1.0 / r + r / 3.0 - r * r2 / 45.0
            }
            ProfileKind::Hyperbolic => 1.0 / r.tanh(),
            ProfileKind::Spherical if small => {
                let r2 = r * r;
                1.0 / r - r / 3.0 - r * r2 / 45.0
            }
            ProfileKind::Spherical => r.cos() / r.sin(),
            ProfileKind::Tabulated => {
                let (p, dp) = self.table().eval(r);
                dp / p
            }
        }
    }

    fn table(&self) -> &MonotoneCubic {
        self.table
            .as_ref()
            .expect("tabulated profile carries a table")
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self.kind {
            ProfileKind::Spherical => format!("spherical(domain_end={})", self.domain_end),
            ProfileKind::Tabulated => format!("tabulated({} knots)", self.table().knots().len()),
            k => k.to_string(),
        }
    }
}

/// Geodesic polar coordinates about the center p.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarPoint {
    r: f64,
    theta: DVector<f64>,
}

impl PolarPoint {
    pub fn new(r: f64, theta: DVector<f64>) -> Result<Self> {
        if !(r > 0.0) || r.is_nan() {
            return Err(Error::Domain {
                r,
                upper: f64::INFINITY,
            });
        }
        let norm = theta.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "direction must be a unit vector, |theta| = {norm}"
            )));
        }
        Ok(Self { r, theta })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// Euclidean coordinates in the Poincaré ball model of hyperbolic space.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    x: DVector<f64>,
}

impl BallPoint {
    pub fn new(x: DVector<f64>) -> Result<Self> {
        let norm = x.norm();
        if !(norm < 1.0) {
            return Err(Error::OutsideBall { norm });
        }
        Ok(Self { x })
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// λ(x) = 2/(1−|x|²); the metric is λ² times the Euclidean one.
    pub fn conformal_factor(&self) -> f64 {
        2.0 / (1.0 - self.x.norm_squared())
    }
}

pub fn polar_from_ball(x: &BallPoint) -> Result<PolarPoint> {
    let norm = x.coords().norm();
    if norm == 0.0 {
        return Err(Error::CenterSingularity);
    }
    Ok(PolarPoint {
        r: 2.0 * norm.atanh(),
        theta: x.coords() / norm,
    })
}

pub fn ball_from_polar(q: &PolarPoint) -> Result<BallPoint> {
    if !q.r.is_finite() {
        return Err(Error::Domain {
            r: q.r,
            upper: f64::INFINITY,
        });
    }
    BallPoint::new(q.theta() * (0.5 * q.r).tanh())
}

/// Connection coefficients Γ^k_ij of a chart, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffels {
    n: usize,
    data: Vec<f64>,
}

impl Christoffels {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Γ^k_{ij}.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }
}

/// Γ^k_ij = δ_ik ∂_j u + δ_jk ∂_i u − δ_ij ∂_k u for g = e^{2u} δ with
/// u = log(2/(1−|x|²)).
pub fn chart_christoffels(x: &BallPoint) -> Christoffels {
    let n = x.dim();
    let c = x.coords();
    let denom = 1.0 - c.norm_squared();
    let du: Vec<f64> = c.iter().map(|xi| 2.0 * xi / denom).collect();
    let mut data = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut g = 0.0;
                if i == k {
                    g += du[j];
                }
                if j == k {
                    g += du[i];
                }
                if i == j {
                    g -= du[k];
                }
                data[(k * n + i) * n + j] = g;
            }
        }
    }
    Christoffels { n, data }
}

/// Conformally flat chart carrying a discrete surface: the Poincaré ball for
/// the hyperbolic profile, the identity chart for the Euclidean one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    #[default]
    PoincareBall,
    Euclidean,
}

impl Chart {
    /// Conformal factor λ given |x|².
    #[inline]
    pub fn conformal_factor(self, norm_sq: f64) -> f64 {
        match self {
            Chart::PoincareBall => 2.0 / (1.0 - norm_sq),
            Chart::Euclidean => 1.0,
        }
    }

    /// Gradient of λ² with respect to x, given x and |x|².
    #[inline]
    pub fn metric_density_gradient_scale(self, norm_sq: f64) -> f64 {
        match self {
            // λ² = 4 (1−|x|²)^{-2}; ∇λ² = 16 x (1−|x|²)^{-3}
            Chart::PoincareBall => 16.0 / (1.0 - norm_sq).powi(3),
            Chart::Euclidean => 0.0,
        }
    }

    /// Geodesic distance to the center from the chart norm |x|.
    pub fn radius_from_norm(self, norm: f64) -> f64 {
        match self {
            Chart::PoincareBall => 2.0 * norm.atanh(),
            Chart::Euclidean => norm,
        }
    }

    /// Chart norm of the geodesic sphere of radius r.
    pub fn norm_from_radius(self, r: f64) -> f64 {
        match self {
            Chart::PoincareBall => (0.5 * r).tanh(),
            Chart::Euclidean => r,
        }
    }

    /// Whether points of this norm are representable.
    pub fn contains_norm(self, norm: f64) -> bool {
        match self {
            Chart::PoincareBall => norm < 1.0,
            Chart::Euclidean => norm.is_finite(),
        }
    }

    pub fn for_profile(profile: &WarpProfile) -> Option<Chart> {
        match profile.kind() {
            ProfileKind::Hyperbolic => Some(Chart::PoincareBall),
            ProfileKind::Euclidean => Some(Chart::Euclidean),
            _ => None,
        }
    }

    pub fn profile(self) -> WarpProfile {
        match self {
            Chart::PoincareBall => WarpProfile::hyperbolic(),
            Chart::Euclidean => WarpProfile::euclidean(),
        }
    }
}
