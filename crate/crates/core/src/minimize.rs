//! Discrete area minimization with the center pinned at p and the boundary
//! sliding on `∂B_p(ρ₀)`, and the area-bound report for its result.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{geodesic_disk_area, RadialField};
use crate::error::{Error, Result};
use crate::mesh::{
    check_triangle, default_epsilon_ladder, divergence_theorem_check, riemannian_area,
    triangle_area, DiscreteSubmanifold, FluxResult, Vec3, TRIANGLE_RULE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Stop once the constrained gradient, measured in the lumped-mass metric
    /// (roughly the L² norm of the mean curvature), drops below this.
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    /// Step multiplier after a rejected trial, in (0, 1).
    pub backtracking: f64,
    /// Armijo constant c in `A(x − αg) ≤ A(x) − c α |g|²`.
    pub sufficient_decrease: f64,
    /// Step multiplier after an accepted step, at least 1.
    pub step_growth: f64,
    /// Line search gives up below this step.
    pub min_step: f64,
    /// Log every this many iterations (the first and last are always logged).
    pub log_every: usize,
    /// Pin boundary vertices instead of letting them slide on the sphere.
    pub fix_boundary: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            gradient_tolerance: 1e-4,
            initial_step: 1e-3,
            backtracking: 0.5,
            sufficient_decrease: 1e-4,
            step_growth: 1.25,
            min_step: 1e-14,
            log_every: 100,
            fix_boundary: false,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gradient_tolerance", self.gradient_tolerance),
            ("initial_step", self.initial_step),
            ("sufficient_decrease", self.sufficient_decrease),
            ("min_step", self.min_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if !(self.backtracking > 0.0 && self.backtracking < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "backtracking = {} must lie in (0, 1)",
                self.backtracking
            )));
        }
        if !(self.step_growth >= 1.0) || !self.step_growth.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step_growth = {} must be at least 1",
                self.step_growth
            )));
        }
        if self.max_iterations == 0 || self.log_every == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations and log_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub area: f64,
    pub gradient_norm: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeTrace {
    pub rows: Vec<TraceRow>,
    pub final_mesh: DiscreteSubmanifold,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub iterations: usize,
}

impl MinimizeTrace {
    /// A trace that performed no descent, for reporting on an arbitrary mesh.
    pub fn unminimized(mesh: DiscreteSubmanifold) -> Result<Self> {
        let area = riemannian_area(&mesh)?;
        let d = descent(&mesh, &area_gradient(&mesh)?, false);
        Ok(Self {
            rows: vec![TraceRow {
                iteration: 0,
                area,
                gradient_norm: d.norm(),
                violation: mesh.constraint_violation(),
            }],
            final_mesh: mesh,
            converged: false,
            stop_reason: StopReason::MaxIterations,
            iterations: 0,
        })
    }

    pub fn final_area(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.area)
    }

    /// CSV with columns iteration, area, gradient_norm, violation.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Gradient of [`riemannian_area`] with respect to every vertex position.
///
/// Per triangle, area = A_E Σ_q w_q λ²(x_q): the Euclidean area A_E varies
/// as ½ n̂ × (opposite edge), and each node pulls with its barycentric weight
/// through ∇λ².
pub fn area_gradient(mesh: &DiscreteSubmanifold) -> Result<Vec<Vec3>> {
    let chart = mesh.chart();
    let per_triangle: Vec<[Vec3; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let v = mesh.triangle_vertices(t);
            let cross = (v[1] - v[0]).cross(&(v[2] - v[0]));
            let twice = cross.norm();
            if !(twice > 0.0) {
                return Err(Error::DegenerateTriangle { index: t });
            }
            let n = cross / twice;
            let euclidean = 0.5 * twice;
            let mut density = 0.0;
            let mut pull = [Vec3::zeros(); 3];
            for (bary, w) in TRIANGLE_RULE.iter() {
                let x = v[0] * bary[0] + v[1] * bary[1] + v[2] * bary[2];
                let r2 = x.norm_squared();
                let lambda = chart.conformal_factor(r2);
                density += w * lambda * lambda;
                let grad_density = x * chart.metric_density_gradient_scale(r2);
                for i in 0..3 {
                    pull[i] += grad_density * (w * bary[i]);
                }
            }
            let mut g = [Vec3::zeros(); 3];
            for i in 0..3 {
                let opposite = v[(i + 2) % 3] - v[(i + 1) % 3];
                g[i] = n.cross(&opposite) * (0.5 * density) + pull[i] * euclidean;
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![Vec3::zeros(); mesh.num_vertices()];
    for (t, g) in per_triangle.iter().enumerate() {
        for (slot, &v) in mesh.triangles()[t].iter().enumerate() {
            grad[v] += g[slot];
        }
    }
    Ok(grad)
}

/// Per-step displacement cap, as a fraction of the shortest incident edge.
const MAX_MOVE: f64 = 0.2;

/// Descent direction and the squared dual norm `Σ_v ⟨g_v, d_v⟩` it realizes.
struct Descent {
    direction: Vec<Vec3>,
    slope: f64,
    /// Largest step moving no vertex by more than [`MAX_MOVE`] of its
    /// shortest incident edge.
    max_step: f64,
}

impl Descent {
    fn norm(&self) -> f64 {
        self.slope.sqrt()
    }
}

/// The metric gradient of area restricted to the admissible motions: the
/// lumped mass of each vertex (a third of its star area) serves as the metric.
///
/// The center (and a fixed boundary) does not move. Boundary vertices move on
/// the sphere perpendicular to the loop, since sliding along the loop only
/// reparameterizes it and collapses the boundary triangles.
fn descent(mesh: &DiscreteSubmanifold, grad: &[Vec3], fix_boundary: bool) -> Descent {
    let chart = mesh.chart();
    let n = mesh.num_vertices();
    let mut mass = vec![0.0; n];
    let mut reach = vec![f64::INFINITY; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let v = mesh.triangle_vertices(t);
        let third = triangle_area(chart, v) / 3.0;
        for (k, &i) in tri.iter().enumerate() {
            mass[i] += third;
            let shortest = (v[(k + 1) % 3] - v[k])
                .norm()
                .min((v[(k + 2) % 3] - v[k]).norm());
            reach[i] = reach[i].min(shortest);
        }
    }
    let mut across = vec![None; n];
    if !fix_boundary {
        let cycle = mesh.boundary_loop();
        for (i, &b) in cycle.iter().enumerate() {
            let prev = mesh.vertex(cycle[(i + cycle.len() - 1) % cycle.len()]);
            let next = mesh.vertex(cycle[(i + 1) % cycle.len()]);
            across[b] = (next - prev).cross(mesh.vertex(b)).try_normalize(0.0);
        }
    }
    let direction: Vec<Vec3> = (0..n)
        .map(|v| {
            let x = mesh.vertex(v);
            let g = match across[v] {
                _ if mesh.is_free(v) => grad[v],
                Some(u) => u * u.dot(&grad[v]),
                None => return Vec3::zeros(),
            };
            let lambda = chart.conformal_factor(x.norm_squared());
            g / (lambda * lambda * mass[v])
        })
        .collect();
    let slope = direction.iter().zip(grad).map(|(d, g)| d.dot(g)).sum();
    let max_step = direction
        .iter()
        .zip(&reach)
        .filter(|(d, _)| d.norm() > 0.0)
        .map(|(d, r)| MAX_MOVE * r / d.norm())
        .fold(f64::INFINITY, f64::min);
    Descent {
        direction,
        slope,
        max_step,
    }
}

/// Trial positions after a step, re-projected onto the constraints; `None`
/// when a triangle collapses or flips.
fn trial_mesh(mesh: &DiscreteSubmanifold, g: &[Vec3], step: f64) -> Option<DiscreteSubmanifold> {
    let radius = mesh.boundary_norm();
    let positions: Vec<Vec3> = mesh
        .vertices()
        .iter()
        .zip(g)
        .enumerate()
        .map(|(v, (x, g))| {
            if v == mesh.center_index() {
                return Vec3::zeros();
            }
            if *g == Vec3::zeros() {
                return *x;
            }
            let y = x - g * step;
            if mesh.is_boundary(v) {
                y * (radius / y.norm())
            } else {
                y
            }
        })
        .collect();
    let candidate = mesh.with_positions(positions).ok()?;
    let intact = (0..mesh.num_triangles()).into_par_iter().all(|t| {
        let [a, b, c] = mesh.triangle_vertices(t);
        let [p, q, s] = candidate.triangle_vertices(t);
        let before = (b - a).cross(&(c - a));
        let after = (q - p).cross(&(s - p));
        after.dot(&before) > 1e-3 * before.norm_squared() && check_triangle(&[p, q, s], t).is_ok()
    });
    intact.then_some(candidate)
}

/// Projected gradient descent with Armijo backtracking.
///
/// Each vertex moves against its area gradient divided by its lumped metric
/// mass, so the step approximates mean curvature flow. The center vertex
/// stays at the origin; boundary vertices are pushed back radially onto the
/// sphere after every step (or held fixed). No vertex moves more than a fifth
/// of its shortest edge per step, and steps that collapse or flip a triangle
/// are rejected like steps without enough decrease.
pub fn minimize_area(
    mesh: &DiscreteSubmanifold,
    options: &MinimizeOptions,
) -> Result<MinimizeTrace> {
    options.validate()?;
    let mut mesh = mesh.clone();
    let mut area = riemannian_area(&mesh)?;
    let mut d = descent(&mesh, &area_gradient(&mesh)?, options.fix_boundary);
    let mut gnorm = d.norm();
    let mut step = options.initial_step;
    let mut rows = vec![TraceRow {
        iteration: 0,
        area,
        gradient_norm: gnorm,
        violation: mesh.constraint_violation(),
    }];
    let mut iteration = 0;
    let stop = loop {
        if gnorm < options.gradient_tolerance {
            break StopReason::GradientTolerance;
        }
        if iteration == options.max_iterations {
            break StopReason::MaxIterations;
        }
        step = step.min(d.max_step);
        let accepted = loop {
            if step < options.min_step {
                break None;
            }
            if let Some(candidate) = trial_mesh(&mesh, &d.direction, step) {
                let trial_area = riemannian_area(&candidate)?;
                if trial_area <= area - options.sufficient_decrease * step * d.slope {
                    break Some((candidate, trial_area));
                }
            }
            step *= options.backtracking;
        };
        let Some((next, next_area)) = accepted else {
            break StopReason::LineSearchFailure;
        };
        iteration += 1;
        mesh = next;
        area = next_area;
        d = descent(&mesh, &area_gradient(&mesh)?, options.fix_boundary);
        gnorm = d.norm();
        step *= options.step_growth;
        if iteration % options.log_every == 0 {
            rows.push(TraceRow {
                iteration,
                area,
                gradient_norm: gnorm,
                violation: mesh.constraint_violation(),
            });
        }
    };
    if rows.last().map(|r| r.iteration) != Some(iteration) {
        rows.push(TraceRow {
            iteration,
            area,
            gradient_norm: gnorm,
            violation: mesh.constraint_violation(),
        });
    }
    Ok(MinimizeTrace {
        rows,
        final_mesh: mesh,
        converged: stop == StopReason::GradientTolerance,
        stop_reason: stop,
        iterations: iteration,
    })
}

/// Tolerances of [`verify_bound`], as fractions of ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTolerances {
    /// Final area may fall below ω by this much (discretization error).
    pub slack: f64,
    /// Allowed deviation of the extrapolated inner flux from ω.
    pub flux: f64,
}

impl Default for BoundTolerances {
    fn default() -> Self {
        Self {
            slack: 0.005,
            flux: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub final_area: f64,
    pub omega: f64,
    /// final_area − ω.
    pub excess: f64,
    pub relative_excess: f64,
    pub extrapolated_inner_flux: f64,
    pub flux_relative_error: f64,
    pub max_node_divergence: f64,
    pub converged: bool,
    pub tolerances: BoundTolerances,
    pub bound_holds: bool,
    pub flux_matches: bool,
    pub pass: bool,
    pub flux: FluxResult,
}

/// [`verify_bound_with`] at the default tolerances.
pub fn verify_bound<F: RadialField + ?Sized>(
    trace: &MinimizeTrace,
    field: &F,
) -> Result<BoundReport> {
    verify_bound_with(trace, field, BoundTolerances::default())
}

/// Compares the final area with ω and re-derives ω as the inner flux of W on
/// the final mesh. Passes when the trace converged, the area is at least
/// ω(1 − slack) and the flux is within the flux tolerance of ω.
pub fn verify_bound_with<F: RadialField + ?Sized>(
    trace: &MinimizeTrace,
    field: &F,
    tolerances: BoundTolerances,
) -> Result<BoundReport> {
    let mesh = &trace.final_mesh;
    let omega = geodesic_disk_area(field.profile(), 2, field.rho0())?;
    let final_area = riemannian_area(mesh)?;
    let flux = divergence_theorem_check(mesh, field, &default_epsilon_ladder(mesh)?)?;
    let excess = final_area - omega;
    let flux_relative_error = (flux.extrapolated_inner_flux - omega).abs() / omega;
    let bound_holds = final_area >= omega * (1.0 - tolerances.slack);
    let flux_matches = flux_relative_error <= tolerances.flux;
    Ok(BoundReport {
        final_area,
        omega,
        excess,
        relative_excess: excess / omega,
        extrapolated_inner_flux: flux.extrapolated_inner_flux,
        flux_relative_error,
        max_node_divergence: flux.max_node_divergence,
        converged: trace.converged,
        tolerances,
        bound_holds,
        flux_matches,
        pass: trace.converged && bound_holds && flux_matches,
        flux,
    })
}
