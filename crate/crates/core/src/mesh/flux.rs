use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::area::{check_triangle, rule_point, TRIANGLE_RULE};
use super::curvature::{mean_curvature_estimate_with_step, MEAN_CURVATURE_FD_STEP};
use super::{DiscreteSubmanifold, Vec3};
use crate::calibration::RadialField;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::sum::pairwise_sum;
use crate::warp::Chart;

/// Gauss–Legendre nodes per boundary edge.
const EDGE_NODES: usize = 6;
/// Gauss–Legendre nodes per direction on the polar parts of center triangles.
const POLAR_NODES: usize = 12;

/// Which boundary component of `M \ B_p(ε)` a flux is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `M ∩ ∂B_p(ρ₀)`.
    Outer,
    /// `M ∩ ∂B_p(ε)`.
    Inner(f64),
}

/// Both sides of the divergence theorem on `M \ B_p(ε)`.
///
/// Fluxes use the conormal ν pointing out of `M \ B_p(ε)`; every quantity
/// carries the mesh orientation sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxResult {
    pub outer_flux: f64,
    pub epsilon_ladder: Vec<f64>,
    pub inner_flux: Vec<f64>,
    pub extrapolated_inner_flux: f64,
    /// Error order in ε fitted from the ladder; `None` when it could not be fitted.
    pub observed_order: Option<f64>,
    /// ∫ Σ⟨D_τ W, τ⟩ + ∫⟨H, W⟩ over `M \ B_p(ε_min)`.
    pub interior_divergence_integral: f64,
    /// The first term alone.
    pub frame_divergence_integral: f64,
    /// The mean-curvature term alone.
    pub mean_curvature_integral: f64,
    /// Riemannian area of `M \ B_p(ε_min)`.
    pub excised_area: f64,
    pub max_node_divergence: f64,
    pub min_node_divergence: f64,
    pub orientation: f64,
    /// |interior − (outer + extrapolated inner)|.
    pub residual: f64,
    /// `residual` relative to |outer + extrapolated inner|.
    pub relative_residual: f64,
}

fn check_field<F: RadialField + ?Sized>(mesh: &DiscreteSubmanifold, field: &F) -> Result<()> {
    if field.k() != 2 {
        return Err(Error::InvalidParameter(format!(
            "surface fluxes need k = 2, field has k = {}",
            field.k()
        )));
    }
    if Chart::for_profile(field.profile()) != Some(mesh.chart()) {
        return Err(Error::InvalidParameter(format!(
            "field profile {} does not match the {:?} chart of the mesh",
            field.profile().label(),
            mesh.chart()
        )));
    }
    if (field.rho0() - mesh.rho0()).abs() > 1e-12 * mesh.rho0().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "field rho0 = {} differs from mesh rho0 = {}",
            field.rho0(),
            mesh.rho0()
        )));
    }
    Ok(())
}

/// Geodesic radius of a chart point, with rounding overshoot past ρ₀ removed.
fn radius_at(mesh: &DiscreteSubmanifold, x: &Vec3) -> f64 {
    mesh.chart().radius_from_norm(x.norm()).min(mesh.rho0())
}

/// W in chart components: f(r)/λ times the unit radial direction.
fn field_vector<F: RadialField + ?Sized>(
    mesh: &DiscreteSubmanifold,
    field: &F,
    x: &Vec3,
) -> Result<Vec3> {
    let lambda = mesh.chart().conformal_factor(x.norm_squared());
    Ok(x.normalize() * (field.f(radius_at(mesh, x))? / lambda))
}

/// The two non-center vertices of a center triangle, in winding order.
fn fan_pair(mesh: &DiscreteSubmanifold, t: usize) -> Option<(Vec3, Vec3)> {
    let tri = mesh.triangles()[t];
    let slot = tri.iter().position(|&v| v == mesh.center_index())?;
    Some((
        *mesh.vertex(tri[(slot + 1) % 3]),
        *mesh.vertex(tri[(slot + 2) % 3]),
    ))
}

fn closest_on_segment(a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let t = (-a.dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    a + ab * t
}

/// Point of triangle abc closest to the origin.
fn closest_on_triangle(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = -a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = -b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = -c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Supremum of admissible inner radii ε: the geodesic distance from p to the
/// part of the mesh outside the open star of the center.
pub fn max_inner_radius(mesh: &DiscreteSubmanifold) -> Result<f64> {
    let nearest = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| match fan_pair(mesh, t) {
            Some((a, b)) => closest_on_segment(&a, &b).norm(),
            None => {
                let [a, b, c] = mesh.triangle_vertices(t);
                closest_on_triangle(&a, &b, &c).norm()
            }
        })
        .reduce(|| f64::INFINITY, f64::min);
    if !(nearest > 0.0) {
        return Err(Error::InvalidMesh("the mesh returns to the center".into()));
    }
    Ok(mesh.chart().radius_from_norm(nearest))
}

/// {ε₀, ε₀/2, ε₀/4} with ε₀ = min(10⁻², half the largest admissible radius).
pub fn default_epsilon_ladder(mesh: &DiscreteSubmanifold) -> Result<Vec<f64>> {
    let e0 = (0.5 * max_inner_radius(mesh)?).min(1e-2);
    Ok(vec![e0, 0.5 * e0, 0.25 * e0])
}

fn outer_flux<F: RadialField + ?Sized>(mesh: &DiscreteSubmanifold, field: &F) -> Result<f64> {
    let ring = mesh.boundary_loop();
    let n = ring.len();
    let mut owner: HashMap<(usize, usize), usize> = ring
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let b = ring[(i + 1) % n];
            ((a.min(b), a.max(b)), usize::MAX)
        })
        .collect();
    for (ti, t) in mesh.triangles().iter().enumerate() {
        for j in 0..3 {
            let (a, b) = (t[j], t[(j + 1) % 3]);
            if let Some(slot) = owner.get_mut(&(a.min(b), a.max(b))) {
                *slot = ti;
            }
        }
    }
    let (nodes, weights) = gauss_legendre(EDGE_NODES);
    let chart = mesh.chart();
    let radius = mesh.boundary_norm();
    let per_edge: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            let t = owner[&(a.min(b), a.max(b))];
            let [p, q, s] = mesh.triangle_vertices(t);
            check_triangle(&[p, q, s], t)?;
            let normal = (q - p).cross(&(s - p)).normalize();
            let (xa, xb) = (mesh.vertex(a), mesh.vertex(b));
            let dp = xb - xa;
            let mut total = 0.0;
            // the chord radially projected onto the sphere, where ∂M lives
            for (u, w) in nodes.iter().zip(&weights) {
                let s = 0.5 * (u + 1.0);
                let p = xa + dp * s;
                let pn = p.norm();
                let phat = p / pn;
                let gamma = phat * radius;
                let velocity = (dp - phat * phat.dot(&dp)) * (radius / pn);
                let nu = velocity.cross(&normal).normalize();
                let f = field.f(radius_at(mesh, &gamma))?;
                let lambda = chart.conformal_factor(gamma.norm_squared());
                total += 0.5 * w * f * phat.dot(&nu) * lambda * velocity.norm();
            }
            Ok(total)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&per_edge))
}

/// Total angle of the center triangles at p.
fn center_angle(mesh: &DiscreteSubmanifold) -> Vec<(usize, f64)> {
    (0..mesh.num_triangles())
        .filter_map(|t| fan_pair(mesh, t).map(|(a, b)| (t, a.cross(&b).norm().atan2(a.dot(&b)))))
        .collect()
}

fn inner_flux<F: RadialField + ?Sized>(
    mesh: &DiscreteSubmanifold,
    field: &F,
    eps: f64,
    limit: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::Precondition(format!(
            "inner radius {eps} must lie in (0, {limit}): the sphere of radius ε may only cut triangles at the center"
        )));
    }
    let chart = mesh.chart();
    let rho = chart.norm_from_radius(eps);
    let theta: f64 = center_angle(mesh).iter().map(|(_, a)| a).sum();
    // ν = −∂_r along the arcs, so ⟨W, ν⟩ = −f(ε); arc length is λρ per radian
    Ok(mesh.orientation() * -field.f(eps)? * chart.conformal_factor(rho * rho) * rho * theta)
}

/// Flux of W through one boundary component of `M \ B_p(ε)`.
///
/// The outer boundary is taken as the boundary chords projected radially onto
/// `∂B_p(ρ₀)`. The inner sphere cuts each center triangle in an exact circular
/// arc, so the inner flux is exact up to the triangulation.
pub fn boundary_flux<F: RadialField + ?Sized>(
    mesh: &DiscreteSubmanifold,
    field: &F,
    which: Boundary,
) -> Result<f64> {
    check_field(mesh, field)?;
    match which {
        Boundary::Outer => outer_flux(mesh, field),
        Boundary::Inner(eps) => inner_flux(mesh, field, eps, max_inner_radius(mesh)?),
    }
}

/// Limit of a ladder of values at ε → 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub order: Option<f64>,
}

/// Richardson extrapolation of `values[i]` sampled at decreasing `ladder[i]`.
///
/// With three or more values on a geometric ladder the error order is fitted
/// from the last three; otherwise, or when the differences do not shrink, a
/// first-order error is assumed for the last two.
pub fn richardson(ladder: &[f64], values: &[f64]) -> Result<Extrapolation> {
    let n = ladder.len();
    if n == 0 || n != values.len() {
        return Err(Error::InvalidParameter(
            "ladder and values must be nonempty and of equal length".into(),
        ));
    }
    if ladder.iter().any(|&e| !(e > 0.0)) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "ε ladder must be positive and strictly decreasing".into(),
        ));
    }
    if n == 1 {
        return Ok(Extrapolation {
            value: values[0],
            order: None,
        });
    }
    if n >= 3 {
        let (e0, e1, e2) = (ladder[n - 3], ladder[n - 2], ladder[n - 1]);
        let (q1, q2) = (e0 / e1, e1 / e2);
        let d1 = values[n - 2] - values[n - 3];
        let d2 = values[n - 1] - values[n - 2];
        if (q1 - q2).abs() <= 1e-9 * q2 {
            if d2 == 0.0 {
                return Ok(Extrapolation {
                    value: values[n - 1],
                    order: None,
                });
            }
            let ratio = d1 / d2;
            if ratio > 1.0 {
                let p = ratio.ln() / q2.ln();
                if p >= 0.5 {
                    let value = values[n - 1] + d2 / (q2.powf(p) - 1.0);
                    return Ok(Extrapolation {
                        value,
                        order: Some(p),
                    });
                }
            }
        }
    }
    let (ea, eb) = (ladder[n - 2], ladder[n - 1]);
    let (fa, fb) = (values[n - 2], values[n - 1]);
    Ok(Extrapolation {
        value: (ea * fb - eb * fa) / (ea - eb),
        order: Some(1.0),
    })
}

struct NodeSums {
    divergence: f64,
    area: f64,
    max: f64,
    min: f64,
}

fn combine(parts: Vec<NodeSums>) -> NodeSums {
    let div: Vec<f64> = parts.iter().map(|p| p.divergence).collect();
    let area: Vec<f64> = parts.iter().map(|p| p.area).collect();
    NodeSums {
        divergence: pairwise_sum(&div),
        area: pairwise_sum(&area),
        max: parts
            .iter()
            .map(|p| p.max)
            .fold(f64::NEG_INFINITY, f64::max),
        min: parts.iter().map(|p| p.min).fold(f64::INFINITY, f64::min),
    }
}

/// ∫ frame_divergence and area over one triangle minus the ε-ball.
fn triangle_nodes<F: RadialField + ?Sized>(
    mesh: &DiscreteSubmanifold,
    field: &F,
    t: usize,
    rho_eps: f64,
    polar: &(Vec<f64>, Vec<f64>),
) -> Result<NodeSums> {
    let chart = mesh.chart();
    let v = mesh.triangle_vertices(t);
    check_triangle(&v, t)?;
    let cross = (v[1] - v[0]).cross(&(v[2] - v[0]));
    let normal = cross.normalize();
    let mut acc = NodeSums {
        divergence: 0.0,
        area: 0.0,
        max: f64::NEG_INFINITY,
        min: f64::INFINITY,
    };
    let mut node = |x: Vec3, weight: f64| -> Result<()> {
        let lambda = chart.conformal_factor(x.norm_squared());
        let along = x.normalize().dot(&normal);
        let mass = (1.0 - along * along).clamp(0.0, 1.0);
        let div = field.frame_divergence(radius_at(mesh, &x), mass)?;
        acc.divergence += weight * lambda * lambda * div;
        acc.area += weight * lambda * lambda;
        acc.max = acc.max.max(div);
        acc.min = acc.min.min(div);
        Ok(())
    };
    match fan_pair(mesh, t) {
        None => {
            let euclidean = 0.5 * cross.norm();
            for (bary, w) in TRIANGLE_RULE.iter() {
                node(rule_point(&v, bary), euclidean * w)?;
            }
        }
        Some((a, b)) => {
            // polar coordinates about p in the plane of the triangle
            let u = a.normalize();
            let w = normal.cross(&u);
            let theta = a.cross(&b).norm().atan2(a.dot(&b));
            let (a2, b2) = ((a.norm(), 0.0), (b.dot(&u), b.dot(&w)));
            let edge = (b2.0 - a2.0, b2.1 - a2.1);
            let (nodes, weights) = polar;
            for (ta, tw) in nodes.iter().zip(weights) {
                let angle = 0.5 * theta * (ta + 1.0);
                let (c, s) = (angle.cos(), angle.sin());
                let reach = (a2.0 * edge.1 - a2.1 * edge.0) / (c * edge.1 - s * edge.0);
                let dir = u * c + w * s;
                for (ra, rw) in nodes.iter().zip(weights) {
                    let rho = rho_eps + 0.5 * (reach - rho_eps) * (ra + 1.0);
                    let jac = 0.25 * theta * (reach - rho_eps) * tw * rw;
                    node(dir * rho, jac * rho)?;
                }
            }
        }
    }
    Ok(acc)
}

/// Evaluates both sides of the divergence theorem for W on `M \ B_p(ε_min)`.
///
/// The interior side integrates the frame divergence with the triangle rule
/// (polar Gauss–Legendre on center triangles outside the ε-ball) and adds
/// ∫⟨H, W⟩ = −Σ_v g_v · W(x_v) from the finite-difference area gradient g.
/// The boundary side is the outer flux plus the inner flux extrapolated over
/// the ε ladder.
pub fn divergence_theorem_check<F: RadialField + ?Sized>(
    mesh: &DiscreteSubmanifold,
    field: &F,
    epsilon_ladder: &[f64],
) -> Result<FluxResult> {
    check_field(mesh, field)?;
    let limit = max_inner_radius(mesh)?;
    if epsilon_ladder.is_empty() {
        return Err(Error::InvalidParameter("ε ladder is empty".into()));
    }
    let outer = outer_flux(mesh, field)?;
    let inner = epsilon_ladder
        .iter()
        .map(|&e| inner_flux(mesh, field, e, limit))
        .collect::<Result<Vec<_>>>()?;
    let extrapolated = richardson(epsilon_ladder, &inner)?;

    let eps_min = *epsilon_ladder.last().expect("nonempty");
    let rho_eps = mesh.chart().norm_from_radius(eps_min);
    let polar = gauss_legendre(POLAR_NODES);
    let parts = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| triangle_nodes(mesh, field, t, rho_eps, &polar))
        .collect::<Result<Vec<_>>>()?;
    let nodes = combine(parts);

    let curvature = mean_curvature_estimate_with_step(mesh, MEAN_CURVATURE_FD_STEP)?;
    let terms = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| {
            if !mesh.is_free(v) {
                return Ok(0.0);
            }
            Ok(-curvature.area_gradient[v].dot(&field_vector(mesh, field, mesh.vertex(v))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_curvature = pairwise_sum(&terms);

    let sign = mesh.orientation();
    let interior = sign * (nodes.divergence + mean_curvature);
    let boundary = outer + extrapolated.value;
    let residual = (interior - boundary).abs();
    Ok(FluxResult {
        outer_flux: outer,
        epsilon_ladder: epsilon_ladder.to_vec(),
        inner_flux: inner,
        extrapolated_inner_flux: extrapolated.value,
        observed_order: extrapolated.order,
        interior_divergence_integral: interior,
        frame_divergence_integral: sign * nodes.divergence,
        mean_curvature_integral: sign * mean_curvature,
        excised_area: nodes.area,
        max_node_divergence: nodes.max,
        min_node_divergence: nodes.min,
        orientation: sign,
        residual,
        relative_residual: residual / boundary.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{geodesic_disk_area, CalibrationField};
    use crate::mesh::{geodesic_disk_mesh, geodesic_disk_mesh_in, graph_perturbation};
    use crate::warp::WarpProfile;
    use nalgebra::Rotation3;

    fn field() -> CalibrationField {
        CalibrationField::new(WarpProfile::hyperbolic(), 2, 1.0).unwrap()
    }

    fn omega() -> f64 {
        geodesic_disk_area(&WarpProfile::hyperbolic(), 2, 1.0).unwrap()
    }

    #[test]
    fn closest_point_matches_brute_force() {
        let tris = [
            [
                Vec3::new(0.3, 0.1, 0.2),
                Vec3::new(0.5, -0.2, 0.1),
                Vec3::new(0.4, 0.3, -0.3),
            ],
            [
                Vec3::new(-0.3, -0.2, 0.1),
                Vec3::new(0.4, -0.1, 0.1),
                Vec3::new(0.0, 0.5, 0.1),
            ],
            [
                Vec3::new(0.1, 0.1, 0.0),
                Vec3::new(0.2, 0.1, 0.0),
                Vec3::new(0.1, 0.3, 0.0),
            ],
        ];
        for [a, b, c] in tris {
            let got = closest_on_triangle(&a, &b, &c).norm();
            let n = 400;
            let mut best = f64::INFINITY;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
                    best = best.min((a + (b - a) * s + (c - a) * t).norm());
                }
            }
            assert!(got <= best + 1e-12 && best - got < 2e-3, "{got} vs {best}");
        }
    }

    #[test]
    fn outer_flux_vanishes() {
        let m = geodesic_disk_mesh(1.0, 4, &Rotation3::from_euler_angles(0.3, 0.2, 0.1)).unwrap();
        let p = graph_perturbation(&m, 0.05, 3, 1).unwrap();
        for mesh in [m, p] {
            assert!(
                boundary_flux(&mesh, &field(), Boundary::Outer)
                    .unwrap()
                    .abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn inner_flux_on_flat_disk_is_exact() {
        let m = geodesic_disk_mesh(1.0, 6, &Rotation3::identity()).unwrap();
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let got = boundary_flux(&m, &field(), Boundary::Inner(eps)).unwrap();
            let expect = std::f64::consts::TAU * (1.0_f64.cosh() - eps.cosh());
            assert!((got - expect).abs() < 1e-12);
            assert!(got < omega() && omega() - got < 4.0 * eps * eps);
        }
    }

    #[test]
    fn inner_radius_must_stay_in_the_center_star() {
        let m = geodesic_disk_mesh(1.0, 6, &Rotation3::identity()).unwrap();
        let limit = max_inner_radius(&m).unwrap();
        // the first ring sits at tanh(1/2)/64 and its chords at cos(π/6) of that
        let expect = 2.0 * (0.5_f64.tanh() / 64.0 * (std::f64::consts::PI / 6.0).cos()).atanh();
        assert!((limit - expect).abs() < 1e-12);
        assert!(boundary_flux(&m, &field(), Boundary::Inner(0.5)).is_err());
        assert!(boundary_flux(&m, &field(), Boundary::Inner(0.0)).is_err());
    }

    #[test]
    fn field_must_match_mesh() {
        let m = geodesic_disk_mesh(1.0, 3, &Rotation3::identity()).unwrap();
        let wrong_rho = CalibrationField::new(WarpProfile::hyperbolic(), 2, 0.9).unwrap();
        let wrong_k = CalibrationField::new(WarpProfile::hyperbolic(), 3, 1.0).unwrap();
        let wrong_profile = CalibrationField::new(WarpProfile::euclidean(), 2, 1.0).unwrap();
        for f in [wrong_rho, wrong_k, wrong_profile] {
            assert!(boundary_flux(&m, &f, Boundary::Outer).is_err());
        }
    }

    #[test]
    fn richardson_recovers_known_orders() {
        let ladder = [0.04, 0.02, 0.01];
        for p in [1.0, 2.0, 3.0] {
            let values: Vec<f64> = ladder.iter().map(|e: &f64| 5.0 - 3.0 * e.powf(p)).collect();
            let ex = richardson(&ladder, &values).unwrap();
            assert!((ex.value - 5.0).abs() < 1e-12);
            assert!((ex.order.unwrap() - p).abs() < 1e-8);
        }
        let two = richardson(&[0.2, 0.1], &[4.8, 4.9]).unwrap();
        assert!((two.value - 5.0).abs() < 1e-12);
        assert!(richardson(&[0.1, 0.2], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn flat_disk_divergence_check() {
        let m = geodesic_disk_mesh(1.0, 5, &Rotation3::from_euler_angles(1.0, 0.5, -0.3)).unwrap();
        let ladder = default_epsilon_ladder(&m).unwrap();
        let r = divergence_theorem_check(&m, &field(), &ladder).unwrap();
        assert!((r.max_node_divergence - 1.0).abs() < 1e-9);
        assert!((r.min_node_divergence - 1.0).abs() < 1e-9);
        assert!((r.extrapolated_inner_flux - omega()).abs() < 1e-9);
        assert!(r.relative_residual < 5e-3);
        assert!(r.mean_curvature_integral.abs() < 1e-6);
    }

    #[test]
    fn reversing_orientation_flips_signs() {
        let m = graph_perturbation(
            &geodesic_disk_mesh(1.0, 4, &Rotation3::identity()).unwrap(),
            0.05,
            2,
            9,
        )
        .unwrap();
        let ladder = default_epsilon_ladder(&m).unwrap();
        let a = divergence_theorem_check(&m, &field(), &ladder).unwrap();
        let b = divergence_theorem_check(&m.reversed(), &field(), &ladder).unwrap();
        assert_eq!(b.orientation, -a.orientation);
        for (x, y) in a.inner_flux.iter().zip(&b.inner_flux) {
            assert_eq!(*x, -*y);
        }
        // winding order changes the rounding of the interior sums only
        assert!((a.interior_divergence_integral + b.interior_divergence_integral).abs() < 1e-12);
        assert!((a.outer_flux + b.outer_flux).abs() < 1e-15);
        assert!((a.residual - b.residual).abs() < 1e-12);
    }

    #[test]
    fn euclidean_disk_recovers_pi_rho_squared() {
        let f = CalibrationField::new(WarpProfile::euclidean(), 2, 1.5).unwrap();
        let m = geodesic_disk_mesh_in(Chart::Euclidean, 1.5, 5, &Rotation3::identity()).unwrap();
        let r = divergence_theorem_check(&m, &f, &default_epsilon_ladder(&m).unwrap()).unwrap();
        let target = std::f64::consts::PI * 2.25;
        assert!((r.extrapolated_inner_flux - target).abs() < 1e-9);
        assert!(r.relative_residual < 5e-3);
    }
}
