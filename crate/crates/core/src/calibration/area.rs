//! Unit-sphere areas and areas of totally geodesic disks through the center.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_piecewise, Tolerance};
use crate::warp::{ProfileKind, WarpProfile};

/// Area of the unit m-sphere, 2π^{(m+1)/2}/Γ((m+1)/2).
///
/// Uses the recurrence ω_m = 2π ω_{m−2}/(m−1) from ω_0 = 2, ω_1 = 2π, which is
/// exact in the Γ-function sense for integer m.
pub fn unit_sphere_area(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI * unit_sphere_area(m - 2) / (m as f64 - 1.0),
    }
}

/// ∫_a^b φ(ρ)^{k−1} dρ in closed form, when one is known for the profile.
pub fn phi_power_integral_closed_form(
    profile: &WarpProfile,
    k: usize,
    a: f64,
    b: f64,
) -> Option<f64> {
    let d = b - a;
    if k == 1 {
        return Some(d);
    }
    match (profile.kind(), k) {
        (ProfileKind::Euclidean, _) => {
            let k32 = k as i32;
            Some((b.powi(k32) - a.powi(k32)) / k as f64)
        }
        // cosh b − cosh a
        (ProfileKind::Hyperbolic, 2) => Some(2.0 * (0.5 * (a + b)).sinh() * (0.5 * d).sinh()),
        // [(sinh ρ cosh ρ − ρ)/2]_a^b
        (ProfileKind::Hyperbolic, 3) => Some(0.5 * ((a + b).cosh() * d.sinh() - d)),
        // cos a − cos b
        (ProfileKind::Spherical, 2) => Some(2.0 * (0.5 * (a + b)).sin() * (0.5 * d).sin()),
        // [(ρ − sin ρ cos ρ)/2]_a^b
        (ProfileKind::Spherical, 3) => Some(0.5 * (d - (a + b).cos() * d.sin())),
        _ => None,
    }
}

/// ∫_a^b φ(ρ)^{k−1} dρ by adaptive Gauss–Kronrod quadrature. Tabulated
/// profiles are split at their knots, where the integrand is only C¹.
pub fn phi_power_integral_quadrature(
    profile: &WarpProfile,
    k: usize,
    a: f64,
    b: f64,
) -> Result<f64> {
    let power = k as i32 - 1;
    let integrand = |rho: f64| profile.phi(rho).powi(power);
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut breaks = vec![lo];
    if let Some(knots) = profile.knots() {
        breaks.extend(knots.iter().copied().filter(|&x| x > lo && x < hi));
    }
    breaks.push(hi);
    let est = integrate_piecewise(integrand, &breaks, Tolerance::default())?;
    Ok(sign * est.value)
}

/// ∫_a^b φ^{k−1}: closed form where available, quadrature otherwise.
pub fn phi_power_integral(profile: &WarpProfile, k: usize, a: f64, b: f64) -> Result<f64> {
    match phi_power_integral_closed_form(profile, k, a, b) {
        Some(v) => Ok(v),
        None => phi_power_integral_quadrature(profile, k, a, b),
    }
}

fn check_disk(profile: &WarpProfile, k: usize, rho0: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    profile.check_radius(rho0)
}

/// ω = ω_{k−1} ∫_0^{ρ₀} φ^{k−1} dρ, the area of the totally geodesic k-disk.
pub fn geodesic_disk_area(profile: &WarpProfile, k: usize, rho0: f64) -> Result<f64> {
    check_disk(profile, k, rho0)?;
    Ok(unit_sphere_area(k - 1) * phi_power_integral(profile, k, 0.0, rho0)?)
}

/// [`geodesic_disk_area`] forced through quadrature.
pub fn geodesic_disk_area_quadrature(profile: &WarpProfile, k: usize, rho0: f64) -> Result<f64> {
    check_disk(profile, k, rho0)?;
    Ok(unit_sphere_area(k - 1) * phi_power_integral_quadrature(profile, k, 0.0, rho0)?)
}
