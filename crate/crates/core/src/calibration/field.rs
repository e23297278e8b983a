use crate::calibration::area::phi_power_integral;
use crate::error::{Error, Result};
use crate::warp::WarpProfile;

/// Radius-only vector field `W = f(r) ∂_r` as seen by the condition checks.
///
/// [`CalibrationField`] is the implementation that matters; the trait exists so
/// that deliberately broken fields can be run through the same verifier.
pub trait RadialField: Sync {
    fn profile(&self) -> &WarpProfile;
    fn k(&self) -> usize;
    fn rho0(&self) -> f64;
    /// f(r) on (0, ρ₀].
    fn f(&self, r: f64) -> Result<f64>;
    /// f'(r) on (0, ρ₀].
    fn f_prime(&self, r: f64) -> Result<f64>;
    /// C = ∫_0^{ρ₀} φ^{k−1}.
    fn center_constant(&self) -> f64;

    /// Σ_i ⟨D_{τ_i} W, τ_i⟩ over an orthonormal k-frame whose span captures
    /// `radial_mass` = |(∂_r)^T|².
    fn frame_divergence(&self, r: f64, radial_mass: f64) -> Result<f64> {
        if !(-1e-12..=1.0 + 1e-12).contains(&radial_mass) {
            return Err(Error::InvalidParameter(format!(
                "radial mass {radial_mass} outside [0, 1]"
            )));
        }
        check_ball(r, self.rho0())?;
        let f = self.f(r)?;
        let fp = self.f_prime(r)?;
        let l = self.profile().log_derivative(r)?;
        Ok(self.k() as f64 * f * l + (fp - f * l) * radial_mass)
    }
}

/// Relative step of the finite-difference derivative in `ode_residual`.
pub const ODE_FD_RELATIVE_STEP: f64 = 2e-3;

fn check_ball(r: f64, rho0: f64) -> Result<()> {
    if r > 0.0 && r <= rho0 {
        Ok(())
    } else {
        Err(Error::Domain { r, upper: rho0 })
    }
}

/// The calibration field `W = f(r) ∂_r` with
/// `f(r) = φ(r)^{−(k−1)} ∫_{ρ₀}^r φ^{k−1}`, the solution of
/// `f' + (k−1) f φ'/φ = 1` vanishing on the sphere of radius ρ₀.
#[derive(Debug, Clone)]
pub struct CalibrationField {
    profile: WarpProfile,
    k: usize,
    rho0: f64,
    center_constant: f64,
}

impl CalibrationField {
    pub fn new(profile: WarpProfile, k: usize, rho0: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(rho0 > 0.0) || rho0 > profile.domain_end() {
            return Err(Error::InvalidParameter(format!(
                "rho0 = {rho0} must lie in (0, {}]: the profile requires φ' ≥ 0 on [0, rho0]",
                profile.domain_end()
            )));
        }
        let center_constant = phi_power_integral(&profile, k, 0.0, rho0)?;
        if !(center_constant > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "∫φ^(k-1) over [0, {rho0}] is {center_constant}, expected positive"
            )));
        }
        Ok(Self {
            profile,
            k,
            rho0,
            center_constant,
        })
    }

    pub fn eval_f(&self, r: f64) -> Result<f64> {
        check_ball(r, self.rho0)?;
        self.f_unchecked(r)
    }

    /// f' from the ODE, 1 − (k−1) f φ'/φ.
    pub fn eval_f_prime(&self, r: f64) -> Result<f64> {
        check_ball(r, self.rho0)?;
        if self.k == 1 {
            return Ok(1.0);
        }
        let f = self.f_unchecked(r)?;
        let l = self.profile.log_derivative_unchecked(r);
        Ok(1.0 - (self.k as f64 - 1.0) * f * l)
    }

    /// f evaluated anywhere on (0, domain_end]; finite-difference stencils
    /// and the chart oracle step slightly past ρ₀.
    pub(crate) fn f_unchecked(&self, r: f64) -> Result<f64> {
        let integral = phi_power_integral(&self.profile, self.k, self.rho0, r)?;
        if self.k == 1 {
            return Ok(integral);
        }
        Ok(integral / self.profile.phi(r).powi(self.k as i32 - 1))
    }

    /// `f' + (k−1) f φ'/φ − 1` with f' taken by finite differences of f,
    /// independent of the algebraic f'.
    ///
    /// Seven-point central stencil with step proportional to r, since f' grows
    /// like r^{−k} near the center. The stencil may reach past ρ₀, where the
    /// integral formula for f is still defined.
    pub fn ode_residual(&self, r: f64) -> Result<f64> {
        check_ball(r, self.rho0)?;
        let h = ODE_FD_RELATIVE_STEP * r;
        let f = |x: f64| self.f_unchecked(x);
        let d = |j: f64| -> Result<f64> { Ok(f(r + j * h)? - f(r - j * h)?) };
        let fd = (45.0 * d(1.0)? - 9.0 * d(2.0)? + d(3.0)?) / (60.0 * h);
        let l = self.profile.log_derivative_unchecked(r);
        Ok(fd + (self.k as f64 - 1.0) * f(r)? * l - 1.0)
    }

    /// |f'| at r: the size of the terms that cancel in [`Self::ode_residual`],
    /// which bounds its attainable absolute accuracy to about ε·|f'|.
    pub fn ode_scale(&self, r: f64) -> Result<f64> {
        Ok(self.eval_f_prime(r)?.abs().max(1.0))
    }

    /// C = ∫_0^{ρ₀} φ^{k−1} dρ = ω/ω_{k−1}.
    pub fn asymptotic_constant(&self) -> f64 {
        self.center_constant
    }

    /// Predicted center behaviour −C (φ'(0) r)^{−(k−1)}.
    pub fn center_law(&self, r: f64) -> f64 {
        let scale = self.profile.phi_prime_at_zero() * r;
        -self.center_constant / scale.powi(self.k as i32 - 1)
    }

    /// |f(r) (φ'(0) r)^{k−1} / C + 1|.
    pub fn center_law_residual(&self, r: f64) -> Result<f64> {
        center_law_residual(self, r)
    }

    pub fn profile(&self) -> &WarpProfile {
        &self.profile
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }
}

pub(crate) fn center_law_residual<F: RadialField + ?Sized>(field: &F, r: f64) -> Result<f64> {
    let f = field.f(r)?;
    let scale = field.profile().phi_prime_at_zero() * r;
    Ok((f * scale.powi(field.k() as i32 - 1) / field.center_constant() + 1.0).abs())
}

impl RadialField for CalibrationField {
    fn profile(&self) -> &WarpProfile {
        &self.profile
    }

    fn k(&self) -> usize {
        self.k
    }

    fn rho0(&self) -> f64 {
        self.rho0
    }

    fn f(&self, r: f64) -> Result<f64> {
        self.eval_f(r)
    }

    fn f_prime(&self, r: f64) -> Result<f64> {
        self.eval_f_prime(r)
    }

    fn center_constant(&self) -> f64 {
        self.center_constant
    }
}
