use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use calib_lab_core::warp::{Chart, WarpProfile};
use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// The full configuration of one run. Reports embed it verbatim so that
/// `calib-lab rerun` can replay them.
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    /// Check the three calibration conditions on a radius grid and random frames.
    Verify(VerifyConfig),
    /// Tabulate the geodesic disk area ω as CSV.
    Area(AreaConfig),
    /// Divergence theorem check of W on a triangulated disk.
    Flux(FluxConfig),
    /// Minimize area from perturbed disks and compare the result with ω.
    Minimize(MinimizeConfig),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// euclidean, hyperbolic, spherical or table:PATH.
    #[arg(long, default_value = "hyperbolic")]
    pub profile: String,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub rho0: f64,
    /// Number of grid radii in (0, ρ₀].
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Random frames drawn for condition 3.
    #[arg(long, default_value_t = 10_000)]
    pub frames: usize,
    /// Radial-mass samples per grid radius.
    #[arg(long, default_value_t = 101)]
    pub masses: usize,
    /// Ambient dimension of the random frames (default k + 1).
    #[arg(long)]
    pub ambient_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_boundary: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol_asymptotic: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_divergence: f64,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AreaConfig {
    /// Comma-separated profiles.
    #[arg(long, value_delimiter = ',', default_value = "hyperbolic")]
    pub profile: Vec<String>,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub k: Vec<usize>,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub rho0: Vec<f64>,
    /// Extra radii START:END:COUNT, evenly spaced and appended to --rho0.
    #[arg(long)]
    pub grid: Option<String>,
    /// CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FluxConfig {
    /// euclidean or hyperbolic: the profiles with a mesh chart.
    #[arg(long, default_value = "hyperbolic")]
    pub profile: String,
    #[arg(long, default_value_t = 1.0)]
    pub rho0: f64,
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    /// Amplitude of the normal bump added to the flat disk.
    #[arg(long, default_value_t = 0.05)]
    pub perturb: f64,
    /// Angular mode of the bump and of the boundary twist.
    #[arg(long, default_value_t = 1)]
    pub mode: usize,
    /// Boundary twist angle in radians.
    #[arg(long)]
    pub twist: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Check this mesh file instead of generating one.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Comma-separated inner radii, largest first (default from the mesh).
    #[arg(long, value_delimiter = ',')]
    pub epsilon_ladder: Vec<f64>,
    /// Allowed relative residual of the divergence theorem.
    #[arg(long, default_value_t = 0.01)]
    pub tol_residual: f64,
    /// Allowed relative deviation of the inner flux from ω.
    #[arg(long, default_value_t = 0.01)]
    pub tol_flux: f64,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MinimizeConfig {
    /// euclidean or hyperbolic: the profiles with a mesh chart.
    #[arg(long, default_value = "hyperbolic")]
    pub profile: String,
    #[arg(long, default_value_t = 1.0)]
    pub rho0: f64,
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    /// Amplitude of the normal bump added to the flat disk.
    #[arg(long, default_value_t = 0.1)]
    pub perturb: f64,
    /// Number of runs, seeded seed, seed + 1, ...
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Angular modes, cycled over the runs.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    pub modes: Vec<usize>,
    /// Boundary twist angle in radians.
    #[arg(long)]
    pub twist: Option<f64>,
    /// Start every run from this mesh file instead of a perturbed disk.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub fix_boundary: bool,
    #[arg(long, default_value_t = 20_000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub initial_step: f64,
    #[arg(long, default_value_t = 100)]
    pub log_every: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_gradient: f64,
    /// Final area may fall below ω by this fraction.
    #[arg(long, default_value_t = 0.005)]
    pub tol_slack: f64,
    /// Allowed relative deviation of the final inner flux from ω.
    #[arg(long, default_value_t = 0.005)]
    pub tol_flux: f64,
    /// Output directory for report.json, traces and final meshes
    /// (report on stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `euclidean`, `hyperbolic`, `spherical` or `table:PATH`.
pub fn parse_profile(spec: &str) -> Result<WarpProfile, Failure> {
    match spec {
        "euclidean" => Ok(WarpProfile::euclidean()),
        "hyperbolic" => Ok(WarpProfile::hyperbolic()),
        "spherical" => Ok(WarpProfile::spherical(FRAC_PI_2)?),
        _ => match spec.strip_prefix("table:") {
            Some(path) => WarpProfile::from_table_file(path)
                .map_err(|e| Failure::Config(format!("profile table {path}: {e}"))),
            None => Err(Failure::Config(format!(
                "unknown profile {spec:?}: expected euclidean, hyperbolic, spherical or table:PATH"
            ))),
        },
    }
}

/// The mesh chart of a profile, for the flux and minimize commands.
pub fn mesh_chart(spec: &str) -> Result<(WarpProfile, Chart), Failure> {
    let profile = parse_profile(spec)?;
    let chart = Chart::for_profile(&profile).ok_or_else(|| {
        Failure::Config(format!(
            "profile {spec} has no mesh chart: meshes live in the euclidean or hyperbolic model"
        ))
    })?;
    Ok((profile, chart))
}

/// Expands `START:END:COUNT` into evenly spaced values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Config(format!("grid {spec:?} is not START:END:COUNT"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, count] = parts[..] else {
        return Err(bad());
    };
    let start: f64 = start.parse().map_err(|_| bad())?;
    let end: f64 = end.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    match count {
        0 => Err(Failure::Config(format!("grid {spec:?} has no points"))),
        1 => Ok(vec![start]),
        _ => Ok((0..count)
            .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_both_ends() {
        assert_eq!(parse_grid("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0.5:9:1").unwrap(), vec![0.5]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
    }

    #[test]
    fn only_flat_and_hyperbolic_have_charts() {
        assert!(mesh_chart("hyperbolic").is_ok());
        assert!(mesh_chart("euclidean").is_ok());
        assert!(matches!(mesh_chart("spherical"), Err(Failure::Config(_))));
        assert!(matches!(parse_profile("sinh"), Err(Failure::Config(_))));
    }
}
