use rayon::prelude::*;

use super::{DiscreteSubmanifold, Vec3};
use crate::error::{Error, Result};
use crate::sum::pairwise_sum;
use crate::warp::Chart;

const A1: f64 = 0.445_948_490_915_964_886;
const W1: f64 = 0.223_381_589_678_011_466;
const A2: f64 = 0.091_576_213_509_770_743;
const W2: f64 = 0.109_951_743_655_321_868;

/// Symmetric 6-node rule exact for polynomials of degree 4 on a triangle:
/// barycentric coordinates and weights summing to 1.
pub const TRIANGLE_RULE: [([f64; 3], f64); 6] = [
    ([A1, A1, 1.0 - 2.0 * A1], W1),
    ([A1, 1.0 - 2.0 * A1, A1], W1),
    ([1.0 - 2.0 * A1, A1, A1], W1),
    ([A2, A2, 1.0 - 2.0 * A2], W2),
    ([A2, 1.0 - 2.0 * A2, A2], W2),
    ([1.0 - 2.0 * A2, A2, A2], W2),
];

#[inline]
pub(crate) fn rule_point(v: &[Vec3; 3], bary: &[f64; 3]) -> Vec3 {
    v[0] * bary[0] + v[1] * bary[1] + v[2] * bary[2]
}

/// Area of the chart-flat triangle `v` in the conformal metric λ²|dx|².
pub fn triangle_area(chart: Chart, v: [Vec3; 3]) -> f64 {
    let euclidean = 0.5 * (v[1] - v[0]).cross(&(v[2] - v[0])).norm();
    let density: f64 = TRIANGLE_RULE
        .iter()
        .map(|(bary, w)| {
            let lambda = chart.conformal_factor(rule_point(&v, bary).norm_squared());
            w * lambda * lambda
        })
        .sum();
    euclidean * density
}

/// Rejects triangles whose area is negligible relative to their edge lengths.
pub fn check_triangle(v: &[Vec3; 3], index: usize) -> Result<()> {
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let twice_area = e1.cross(&e2).norm();
    let scale = e1.norm_squared() + e2.norm_squared() + (v[2] - v[1]).norm_squared();
    if !(twice_area > 1e-12 * scale) {
        return Err(Error::DegenerateTriangle { index });
    }
    Ok(())
}

/// Riemannian area of every triangle.
pub fn triangle_areas(mesh: &DiscreteSubmanifold) -> Result<Vec<f64>> {
    let chart = mesh.chart();
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let v = mesh.triangle_vertices(t);
            check_triangle(&v, t)?;
            Ok(triangle_area(chart, v))
        })
        .collect()
}

/// Area of the mesh in the induced metric.
pub fn riemannian_area(mesh: &DiscreteSubmanifold) -> Result<f64> {
    Ok(pairwise_sum(&triangle_areas(mesh)?))
}
