use std::f64::consts::TAU;

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DiscreteSubmanifold, Vec3};
use crate::error::{Error, Result};
use crate::warp::Chart;

/// Deepest refinement accepted by [`geodesic_disk_mesh`] (about 3·4¹⁰ vertices).
pub const MAX_DEPTH: usize = 10;

/// Totally geodesic disk of radius `rho0` through the center of the Poincaré ball.
///
/// The flat chart disk in the xy-plane, rotated by `tilt`. It has 2^depth
/// concentric rings, ring i carrying 6i vertices, and 6·4^depth triangles
/// wound counterclockwise about +z before rotation.
pub fn geodesic_disk_mesh(
    rho0: f64,
    depth: usize,
    tilt: &Rotation3<f64>,
) -> Result<DiscreteSubmanifold> {
    geodesic_disk_mesh_in(Chart::PoincareBall, rho0, depth, tilt)
}

/// [`geodesic_disk_mesh`] in an arbitrary chart.
pub fn geodesic_disk_mesh_in(
    chart: Chart,
    rho0: f64,
    depth: usize,
    tilt: &Rotation3<f64>,
) -> Result<DiscreteSubmanifold> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} must lie in 1..={MAX_DEPTH}"
        )));
    }
    let rings = 1usize << depth;
    let radius = chart.norm_from_radius(rho0);

    let mut vertices = vec![Vec3::zeros()];
    let mut ring_start = vec![0usize];
    for i in 1..=rings {
        ring_start.push(vertices.len());
        let count = 6 * i;
        let rho = if i == rings {
            radius
        } else {
            radius * i as f64 / rings as f64
        };
        for j in 0..count {
            let a = TAU * j as f64 / count as f64;
            vertices.push(Vec3::new(rho * a.cos(), rho * a.sin(), 0.0));
        }
    }

    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for j in 0..6 {
        triangles.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for i in 2..=rings {
        let (outer, n_out) = (ring_start[i], 6 * i);
        let (inner, n_in) = (ring_start[i - 1], 6 * (i - 1));
        let (mut a, mut b) = (0usize, 0usize);
        // zip the two rings together by angle
        while a < n_out || b < n_in {
            let advance_outer = b == n_in || (a < n_out && (a + 1) * n_in <= (b + 1) * n_out);
            if advance_outer {
                triangles.push([inner + b % n_in, outer + a, outer + (a + 1) % n_out]);
                a += 1;
            } else {
                triangles.push([inner + b, outer + a % n_out, inner + (b + 1) % n_in]);
                b += 1;
            }
        }
    }

    let vertices = vertices.into_iter().map(|v| tilt * v).collect();
    DiscreteSubmanifold::new(vertices, triangles, 0, rho0, chart)
}

/// Unit normal of a planar mesh, oriented with its triangles.
fn plane_normal(mesh: &DiscreteSubmanifold) -> Result<Vec3> {
    let sum: Vec3 = (0..mesh.num_triangles())
        .map(|t| {
            let [a, b, c] = mesh.triangle_vertices(t);
            (b - a).cross(&(c - a))
        })
        .sum();
    let n = sum
        .try_normalize(0.0)
        .ok_or_else(|| Error::Precondition("mesh has no well-defined plane".into()))?;
    let scale = mesh.boundary_norm();
    let off = mesh
        .vertices()
        .iter()
        .map(|x| x.dot(&n).abs())
        .fold(0.0, f64::max);
    if off > 1e-12 * scale.max(1.0) {
        return Err(Error::Precondition(format!(
            "mesh is not planar (a vertex lies {off:e} off the disk plane); start from geodesic_disk_mesh"
        )));
    }
    Ok(n)
}

/// Polar data (s = |x|/R, angle) of each vertex within the disk plane.
fn disk_polar(mesh: &DiscreteSubmanifold, normal: &Vec3) -> Vec<(f64, f64)> {
    let u = mesh.vertex(mesh.boundary_loop()[0]).normalize();
    let w = normal.cross(&u);
    let radius = mesh.boundary_norm();
    mesh.vertices()
        .iter()
        .map(|x| (x.norm() / radius, x.dot(&w).atan2(x.dot(&u))))
        .collect()
}

fn seeded_phase(seed: u64) -> f64 {
    ChaCha8Rng::seed_from_u64(seed).random_range(0.0..TAU)
}

fn finish(mesh: &DiscreteSubmanifold, positions: Vec<Vec3>) -> Result<DiscreteSubmanifold> {
    if let Some(x) = positions
        .iter()
        .find(|x| !mesh.chart().contains_norm(x.norm()))
    {
        return Err(Error::OutsideBall { norm: x.norm() });
    }
    mesh.with_positions(positions)
}

/// Displaces interior vertices of a flat disk along its normal by
/// `amplitude · 16 s²(1−s)² · cos(m θ + phase)`, with s = |x|/R, θ the polar
/// angle in the disk plane and the phase drawn from `seed`.
///
/// The bump vanishes at the center and on the boundary, which stay put.
pub fn graph_perturbation(
    mesh: &DiscreteSubmanifold,
    amplitude: f64,
    mode_index: usize,
    seed: u64,
) -> Result<DiscreteSubmanifold> {
    if !amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "amplitude {amplitude} is not finite"
        )));
    }
    let normal = plane_normal(mesh)?;
    let phase = seeded_phase(seed);
    let m = mode_index as f64;
    let polar = disk_polar(mesh, &normal);
    let positions = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, x)| {
            if !mesh.is_free(v) {
                return *x;
            }
            let (s, theta) = polar[v];
            let bump = 16.0 * s * s * (1.0 - s) * (1.0 - s);
            x + normal * (amplitude * bump * (m * theta + phase).cos())
        })
        .collect();
    finish(mesh, positions)
}

/// Tilts the boundary of a flat disk out of its great circle: the boundary
/// point at angle θ is rotated towards the normal by `angle · cos(m θ + phase)`
/// along the sphere, and interior vertices follow with weight s².
///
/// With m ≥ 2 the new boundary lies on no great circle.
pub fn boundary_twist(
    mesh: &DiscreteSubmanifold,
    angle: f64,
    mode_index: usize,
    seed: u64,
) -> Result<DiscreteSubmanifold> {
    if !angle.is_finite() || angle.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::InvalidParameter(format!(
            "twist angle {angle} must lie in (−π/2, π/2)"
        )));
    }
    let normal = plane_normal(mesh)?;
    let phase = seeded_phase(seed);
    let m = mode_index as f64;
    let radius = mesh.boundary_norm();
    let polar = disk_polar(mesh, &normal);
    let positions = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, x)| {
            if v == mesh.center_index() {
                return *x;
            }
            let (s, theta) = polar[v];
            let beta = angle * (m * theta + phase).cos();
            let xhat = x / x.norm();
            let shift = (xhat * (beta.cos() - 1.0) + normal * beta.sin()) * radius;
            let y = x + shift * (s * s);
            if mesh.is_boundary(v) {
                y * (radius / y.norm())
            } else {
                y
            }
        })
        .collect();
    finish(mesh, positions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::riemannian_area;

    #[test]
    fn disk_counts_and_constraints() {
        for depth in 1..=4 {
            let m = geodesic_disk_mesh(1.0, depth, &Rotation3::from_euler_angles(0.4, 1.2, -0.7))
                .unwrap();
            let n = 1usize << depth;
            assert_eq!(m.num_vertices(), 1 + 3 * n * (n + 1));
            assert_eq!(m.num_triangles(), 6 * n * n);
            assert_eq!(m.boundary_loop().len(), 6 * n);
            assert!(m.constraint_violation() < 1e-15);
        }
        assert!(geodesic_disk_mesh(1.0, 0, &Rotation3::identity()).is_err());
        assert!(geodesic_disk_mesh(1.0, MAX_DEPTH + 1, &Rotation3::identity()).is_err());
    }

    #[test]
    fn triangles_wind_counterclockwise() {
        let m = geodesic_disk_mesh(1.0, 3, &Rotation3::identity()).unwrap();
        for t in 0..m.num_triangles() {
            let [a, b, c] = m.triangle_vertices(t);
            assert!((b - a).cross(&(c - a)).z > 0.0, "triangle {t}");
        }
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let m = geodesic_disk_mesh(1.0, 3, &Rotation3::from_euler_angles(0.1, 0.2, 0.3)).unwrap();
        assert_eq!(graph_perturbation(&m, 0.0, 2, 7).unwrap(), m);
    }

    #[test]
    fn perturbation_keeps_constraints_and_adds_area() {
        let m = geodesic_disk_mesh(1.0, 4, &Rotation3::from_euler_angles(0.5, 0.0, 0.2)).unwrap();
        let p = graph_perturbation(&m, 0.05, 2, 3).unwrap();
        assert!(p.constraint_violation() < 1e-15);
        assert_eq!(p.triangles(), m.triangles());
        assert!(riemannian_area(&p).unwrap() > riemannian_area(&m).unwrap());
        assert!(graph_perturbation(&m, 5.0, 0, 0).is_err());
        assert!(graph_perturbation(&p, 0.05, 2, 3).is_err());
    }

    #[test]
    fn twist_moves_the_boundary_along_the_sphere() {
        let m = geodesic_disk_mesh(1.0, 3, &Rotation3::identity()).unwrap();
        let t = boundary_twist(&m, 0.2, 3, 11).unwrap();
        assert!(t.constraint_violation() < 1e-15);
        let lifted = t
            .boundary_loop()
            .iter()
            .map(|&b| t.vertex(b).z.abs())
            .fold(0.0, f64::max);
        assert!(lifted > 0.01);
        assert!(boundary_twist(&m, 2.0, 3, 11).is_err());
    }
}
