use std::fs;
use std::io::{self, Write};
use std::path::Path;

use calib_lab_core::calibration::verify::default_radius_grid;
use calib_lab_core::calibration::{
    geodesic_disk_area, verify_conditions, CalibrationField, ConditionReport, Tolerances,
    VerifyOptions,
};
use calib_lab_core::mesh::{
    boundary_twist, default_epsilon_ladder, divergence_theorem_check, geodesic_disk_mesh_in,
    graph_perturbation, DiscreteSubmanifold, FluxResult,
};
use calib_lab_core::minimize::{
    minimize_area, verify_bound_with, BoundReport, BoundTolerances, MinimizeOptions, StopReason,
};
use calib_lab_core::VERSION;
use nalgebra::Rotation3;
use serde::Serialize;

use crate::config::{
    mesh_chart, parse_grid, parse_profile, AreaConfig, FluxConfig, MinimizeConfig, RunConfig,
    VerifyConfig,
};
use crate::Failure;

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    version: &'a str,
    config: &'a RunConfig,
    pass: bool,
    result: T,
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    match config {
        RunConfig::Verify(c) => verify(config, c),
        RunConfig::Area(c) => area(c),
        RunConfig::Flux(c) => flux(config, c),
        RunConfig::Minimize(c) => minimize(config, c),
    }
}

fn write_report<T: Serialize>(
    config: &RunConfig,
    pass: bool,
    result: T,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let report = Report {
        version: VERSION,
        config,
        pass,
        result,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Config(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    write_text(out, &text)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Config(format!("cannot write to stdout: {e}"))),
    }
}

fn verify(config: &RunConfig, c: &VerifyConfig) -> Result<(), Failure> {
    let field = CalibrationField::new(parse_profile(&c.profile)?, c.k, c.rho0)?;
    let options = VerifyOptions {
        r_grid: default_radius_grid(c.rho0, c.grid),
        n_frames: c.frames,
        n_masses: c.masses,
        ambient_dim: c.ambient_dim.unwrap_or(c.k + 1),
        seed: c.seed,
        tolerances: Tolerances {
            boundary: c.tol_boundary,
            asymptotic: c.tol_asymptotic,
            divergence: c.tol_divergence,
        },
    };
    let report: ConditionReport = verify_conditions(&field, &options)?;
    let pass = report.all_pass();
    write_report(config, pass, &report, c.out.as_deref())?;
    let failed: Vec<String> = [
        ("condition_1 (boundary)", report.condition_1),
        ("condition_2 (center law)", report.condition_2),
        ("condition_3 (frame divergence)", report.condition_3),
    ]
    .iter()
    .filter(|(_, check)| !check.pass)
    .map(|(name, check)| {
        format!(
            "{name} residual {:e} exceeds {:e}",
            check.residual, check.tolerance
        )
    })
    .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed.join("; ")))
    }
}

#[derive(Serialize)]
struct AreaRow<'a> {
    profile: &'a str,
    k: usize,
    rho0: f64,
    omega: f64,
}

fn area(c: &AreaConfig) -> Result<(), Failure> {
    let mut radii = c.rho0.clone();
    if let Some(grid) = &c.grid {
        radii.extend(parse_grid(grid)?);
    }
    let mut rows = Vec::new();
    for spec in &c.profile {
        let profile = parse_profile(spec)?;
        for &k in &c.k {
            if k == 0 {
                return Err(Failure::Config("k must be at least 1".into()));
            }
            for &rho0 in &radii {
                if !(rho0 > 0.0) || rho0 > profile.domain_end() {
                    return Err(Failure::Config(format!(
                        "rho0 = {rho0} outside (0, {}] for profile {spec}: \
                         the profile requires φ' ≥ 0 on [0, rho0]",
                        profile.domain_end()
                    )));
                }
                let omega = geodesic_disk_area(&profile, k, rho0)?;
                rows.push(AreaRow {
                    profile: spec,
                    k,
                    rho0,
                    omega,
                });
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)
            .map_err(|e| Failure::Config(format!("cannot write CSV: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Config(format!("cannot write CSV: {e}")))?;
    write_text(c.out.as_deref(), &String::from_utf8_lossy(&bytes))
}

fn start_mesh(
    spec: &str,
    rho0: f64,
    depth: usize,
    perturb: f64,
    mode: usize,
    twist: Option<f64>,
    seed: u64,
) -> Result<DiscreteSubmanifold, Failure> {
    let (_, chart) = mesh_chart(spec)?;
    let flat = geodesic_disk_mesh_in(chart, rho0, depth, &Rotation3::identity())?;
    let bumped = graph_perturbation(&flat, perturb, mode, seed)?;
    let Some(angle) = twist else {
        return Ok(bumped);
    };
    // both generators need the flat disk, so their displacements are added
    let twisted = boundary_twist(&flat, angle, mode, seed)?;
    let positions = flat
        .vertices()
        .iter()
        .zip(bumped.vertices())
        .zip(twisted.vertices())
        .map(|((x, b), t)| b + t - x)
        .collect();
    Ok(flat.with_positions(positions)?)
}

fn load_mesh(path: &Path, spec: &str) -> Result<DiscreteSubmanifold, Failure> {
    let mesh = DiscreteSubmanifold::load_json(path)
        .map_err(|e| Failure::Config(format!("mesh {}: {e}", path.display())))?;
    let (_, chart) = mesh_chart(spec)?;
    if mesh.chart() != chart {
        return Err(Failure::Config(format!(
            "mesh {} is in the {:?} chart, profile {spec} needs {:?}",
            path.display(),
            mesh.chart(),
            chart
        )));
    }
    Ok(mesh)
}

#[derive(Serialize)]
struct FluxSummary<'a> {
    omega: f64,
    flux_relative_error: f64,
    flux: &'a FluxResult,
}

fn flux(config: &RunConfig, c: &FluxConfig) -> Result<(), Failure> {
    let mesh = match &c.mesh {
        Some(path) => load_mesh(path, &c.profile)?,
        None => start_mesh(
            &c.profile, c.rho0, c.depth, c.perturb, c.mode, c.twist, c.seed,
        )?,
    };
    let (profile, _) = mesh_chart(&c.profile)?;
    let field = CalibrationField::new(profile, 2, mesh.rho0())?;
    let ladder = if c.epsilon_ladder.is_empty() {
        default_epsilon_ladder(&mesh)?
    } else {
        c.epsilon_ladder.clone()
    };
    let result = divergence_theorem_check(&mesh, &field, &ladder)?;
    let omega = geodesic_disk_area(field.profile(), 2, mesh.rho0())?;
    let flux_relative_error = (result.extrapolated_inner_flux - omega).abs() / omega;

    let mut failed = Vec::new();
    if !(result.relative_residual <= c.tol_residual) {
        failed.push(format!(
            "relative_residual {:e} exceeds {:e}",
            result.relative_residual, c.tol_residual
        ));
    }
    if !(flux_relative_error <= c.tol_flux) {
        failed.push(format!(
            "flux_relative_error {flux_relative_error:e} exceeds {:e}",
            c.tol_flux
        ));
    }
    let summary = FluxSummary {
        omega,
        flux_relative_error,
        flux: &result,
    };
    write_report(config, failed.is_empty(), summary, c.out.as_deref())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed.join("; ")))
    }
}

fn stop_label(reason: StopReason) -> &'static str {
    match reason {
        StopReason::GradientTolerance => "gradient_tolerance",
        StopReason::MaxIterations => "max_iterations",
        StopReason::LineSearchFailure => "line_search_failure",
    }
}

#[derive(Serialize)]
struct MinimizeRun {
    seed: u64,
    mode: usize,
    initial_area: f64,
    iterations: usize,
    stop_reason: StopReason,
    bound: BoundReport,
}

fn minimize(config: &RunConfig, c: &MinimizeConfig) -> Result<(), Failure> {
    if c.seeds == 0 {
        return Err(Failure::Config("--seeds must be at least 1".into()));
    }
    if c.modes.is_empty() {
        return Err(Failure::Config("--modes is empty".into()));
    }
    let options = MinimizeOptions {
        max_iterations: c.max_iterations,
        gradient_tolerance: c.tol_gradient,
        initial_step: c.initial_step,
        log_every: c.log_every,
        fix_boundary: c.fix_boundary,
        ..MinimizeOptions::default()
    };
    options.validate()?;
    let tolerances = BoundTolerances {
        slack: c.tol_slack,
        flux: c.tol_flux,
    };
    let loaded = match &c.mesh {
        Some(path) => Some(load_mesh(path, &c.profile)?),
        None => None,
    };
    let (profile, _) = mesh_chart(&c.profile)?;
    let rho0 = loaded.as_ref().map_or(c.rho0, |m| m.rho0());
    let field = CalibrationField::new(profile, 2, rho0)?;
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
    }

    let mut runs = Vec::with_capacity(c.seeds);
    let mut failed = Vec::new();
    for i in 0..c.seeds {
        let seed = c.seed + i as u64;
        let mode = c.modes[i % c.modes.len()];
        let start = match &loaded {
            Some(mesh) => mesh.clone(),
            None => start_mesh(&c.profile, rho0, c.depth, c.perturb, mode, c.twist, seed)?,
        };
        let trace = minimize_area(&start, &options)?;
        let bound = verify_bound_with(&trace, &field, tolerances)?;
        if let Some(dir) = &c.out {
            let trace_path = dir.join(format!("trace_seed{seed}.csv"));
            let file = fs::File::create(&trace_path).map_err(|e| {
                Failure::Config(format!("cannot write {}: {e}", trace_path.display()))
            })?;
            trace.write_csv(file)?;
            trace
                .final_mesh
                .save_json(dir.join(format!("mesh_seed{seed}.json")))?;
        }
        if !trace.converged {
            failed.push(format!(
                "seed {seed}: not converged ({} after {} iterations)",
                stop_label(trace.stop_reason),
                trace.iterations
            ));
        }
        if !bound.bound_holds {
            failed.push(format!(
                "seed {seed}: final_area {} below ω(1 − slack) = {}",
                bound.final_area,
                bound.omega * (1.0 - c.tol_slack)
            ));
        }
        if !bound.flux_matches {
            failed.push(format!(
                "seed {seed}: flux_relative_error {:e} exceeds {:e}",
                bound.flux_relative_error, c.tol_flux
            ));
        }
        runs.push(MinimizeRun {
            seed,
            mode,
            initial_area: trace.rows.first().map_or(f64::NAN, |r| r.area),
            iterations: trace.iterations,
            stop_reason: trace.stop_reason,
            bound,
        });
    }
    let out = c.out.as_ref().map(|dir| dir.join("report.json"));
    write_report(config, failed.is_empty(), &runs, out.as_deref())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed.join("; ")))
    }
}
