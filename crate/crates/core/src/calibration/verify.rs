//! Finite checks of the three defining conditions of the calibration field.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::field::{center_law_residual, RadialField};
use crate::calibration::frame::{random_frame, Frame};
use crate::error::{Error, Result};
use crate::warp::PolarPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// |f(ρ₀)|.
    pub boundary: f64,
    /// Relative center-law residual at the smallest grid radius.
    pub asymptotic: f64,
    /// Excess of the frame divergence over 1, and deviation of radial frames from 1.
    pub divergence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            boundary: 1e-9,
            asymptotic: 1e-3,
            divergence: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub r_grid: Vec<f64>,
    /// Random frames drawn at grid radii.
    pub n_frames: usize,
    /// Radial-mass samples per grid radius (uniform on [0, 1], endpoints included).
    pub n_masses: usize,
    /// Ambient dimension n used for random frames.
    pub ambient_dim: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl VerifyOptions {
    pub fn new(rho0: f64, k: usize) -> Self {
        Self {
            r_grid: default_radius_grid(rho0, 200),
            n_frames: 10_000,
            n_masses: 101,
            ambient_dim: k + 1,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

/// `1e-3` (or ρ₀/2 if smaller) followed by `n` uniformly spaced radii ending at ρ₀.
pub fn default_radius_grid(rho0: f64, n: usize) -> Vec<f64> {
    let mut grid = vec![(1e-3_f64).min(0.5 * rho0)];
    grid.extend((1..=n).map(|i| rho0 * i as f64 / n as f64));
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ConditionCheck {
    fn new(residual: f64, tolerance: f64) -> Self {
        Self {
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub profile: String,
    pub k: usize,
    pub rho0: f64,
    pub seed: u64,
    pub n_frames: usize,
    pub ambient_dim: usize,
    /// W vanishes on the boundary sphere.
    pub condition_1: ConditionCheck,
    /// Center law f(r) ≈ −C (φ'(0) r)^{−(k−1)}.
    pub condition_2: ConditionCheck,
    /// Frame divergence ≤ 1 with equality on frames containing ∂_r.
    pub condition_3: ConditionCheck,
    pub boundary_residual: f64,
    pub asymptotic_residual: f64,
    pub asymptotic_radius: f64,
    pub divergence_max: f64,
    pub divergence_samples: usize,
    pub equality_witnesses: usize,
    pub equality_max_deviation: f64,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.condition_1.pass && self.condition_2.pass && self.condition_3.pass
    }
}

fn stream_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over (seed, index)
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_direction(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let d = DVector::from_fn(n, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            z
        });
        let norm = d.norm();
        if norm > 1e-8 {
            return d / norm;
        }
    }
}

/// Runs the three condition checks. Failures are reported, never raised;
/// errors signal invalid options.
pub fn verify_conditions<F: RadialField + ?Sized>(
    field: &F,
    options: &VerifyOptions,
) -> Result<ConditionReport> {
    let rho0 = field.rho0();
    let k = field.k();
    let tol = options.tolerances;
    if options.r_grid.is_empty() {
        return Err(Error::InvalidParameter("empty radius grid".into()));
    }
    if let Some(bad) = options.r_grid.iter().find(|&&r| !(r > 0.0 && r <= rho0)) {
        return Err(Error::Domain {
            r: *bad,
            upper: rho0,
        });
    }
    if options.n_frames == 0 || options.n_masses < 2 {
        return Err(Error::InvalidParameter(
            "need n_frames ≥ 1 and at least two radial-mass samples".into(),
        ));
    }
    if options.ambient_dim < k {
        return Err(Error::InvalidParameter(format!(
            "ambient dimension {} below k = {k}",
            options.ambient_dim
        )));
    }

    let boundary_residual = field.f(rho0)?.abs();

    let r_min = options.r_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let asymptotic_residual = center_law_residual(field, r_min)?;

    // Tensor grid over (r, radial mass).
    let masses: Vec<f64> = (0..options.n_masses)
        .map(|j| j as f64 / (options.n_masses - 1) as f64)
        .collect();
    let grid_values: Vec<f64> = options
        .r_grid
        .par_iter()
        .map(|&r| -> Result<f64> {
            let mut best = f64::NEG_INFINITY;
            for &m in &masses {
                best = best.max(field.frame_divergence(r, m)?);
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;

    // Random frames: the mass comes out of an actual orthonormal frame.
    let n = options.ambient_dim;
    let frame_values: Vec<f64> = (0..options.n_frames as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let s = stream_seed(options.seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let r = options.r_grid[rng.random_range(0..options.r_grid.len())];
            let location = PolarPoint::new(r, random_direction(n, &mut rng))?;
            let frame = random_frame(&location, k, s)?;
            field.frame_divergence(r, frame.radial_mass())
        })
        .collect::<Result<Vec<_>>>()?;

    // Radial frames, where equality must hold.
    let radial_values: Vec<f64> = options
        .r_grid
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(options.seed ^ 0xA5A5, i as u64));
            let location = PolarPoint::new(r, random_direction(n, &mut rng))?;
            let frame = Frame::radial(location, k)?;
            field.frame_divergence(r, frame.radial_mass())
        })
        .collect::<Result<Vec<_>>>()?;

    let divergence_max = grid_values
        .iter()
        .chain(&frame_values)
        .chain(&radial_values)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let equality_max_deviation = radial_values
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let equality_witnesses = radial_values
        .iter()
        .chain(&frame_values)
        .filter(|v| (*v - 1.0).abs() <= tol.divergence)
        .count();

    let excess = (divergence_max - 1.0).max(0.0);
    Ok(ConditionReport {
        profile: field.profile().label(),
        k,
        rho0,
        seed: options.seed,
        n_frames: options.n_frames,
        ambient_dim: n,
        condition_1: ConditionCheck::new(boundary_residual, tol.boundary),
        condition_2: ConditionCheck::new(asymptotic_residual, tol.asymptotic),
        condition_3: ConditionCheck::new(excess.max(equality_max_deviation), tol.divergence),
        boundary_residual,
        asymptotic_residual,
        asymptotic_radius: r_min,
        divergence_max,
        divergence_samples: options.r_grid.len() * masses.len()
            + frame_values.len()
            + radial_values.len(),
        equality_witnesses,
        equality_max_deviation,
    })
}
