use rayon::prelude::*;

use super::area::{check_triangle, triangle_area};
use super::{DiscreteSubmanifold, Vec3};
use crate::error::{Error, Result};

/// Central-difference step for the vertex area gradient.
pub const MEAN_CURVATURE_FD_STEP: f64 = 1e-6;

/// Per-vertex discrete mean curvature and the data it is built from.
///
/// All vectors are chart components. Center and boundary vertices carry zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureEstimate {
    /// H, with metric norm λ(x)|H|.
    pub mean_curvature: Vec<Vec3>,
    /// ∂(area)/∂x_v.
    pub area_gradient: Vec<Vec3>,
    /// One third of the Riemannian area of the vertex star.
    pub patch_area: Vec<f64>,
}

/// [`mean_curvature_estimate_with_step`] at the default step, returning H only.
pub fn mean_curvature_estimate(mesh: &DiscreteSubmanifold) -> Result<Vec<Vec3>> {
    Ok(mean_curvature_estimate_with_step(mesh, MEAN_CURVATURE_FD_STEP)?.mean_curvature)
}

/// H_v = −g_v / (λ(x_v)² A_v), where g_v is the central-difference gradient of
/// the star area at vertex v and A_v its barycentric patch area.
pub fn mean_curvature_estimate_with_step(
    mesh: &DiscreteSubmanifold,
    step: f64,
) -> Result<CurvatureEstimate> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step {step} must be positive"
        )));
    }
    let chart = mesh.chart();
    let stars = mesh.vertex_stars();
    let per_vertex: Vec<(Vec3, Vec3, f64)> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| {
            if !mesh.is_free(v) {
                return Ok((Vec3::zeros(), Vec3::zeros(), 0.0));
            }
            let star = &stars[v];
            let star_area = |x: Vec3| -> f64 {
                star.iter()
                    .map(|&t| {
                        let mut tri = mesh.triangle_vertices(t);
                        let slot = mesh.triangles()[t]
                            .iter()
                            .position(|&u| u == v)
                            .expect("vertex in its star");
                        tri[slot] = x;
                        triangle_area(chart, tri)
                    })
                    .sum()
            };
            let mut patch = 0.0;
            for &t in star {
                let tri = mesh.triangle_vertices(t);
                check_triangle(&tri, t)?;
                patch += triangle_area(chart, tri) / 3.0;
            }
            let x = *mesh.vertex(v);
            let mut g = Vec3::zeros();
            for d in 0..3 {
                let mut e = Vec3::zeros();
                e[d] = step;
                g[d] = (star_area(x + e) - star_area(x - e)) / (2.0 * step);
            }
            let lambda = chart.conformal_factor(x.norm_squared());
            let h = -g / (lambda * lambda * patch);
            Ok((h, g, patch))
        })
        .collect::<Result<_>>()?;
    let mut est = CurvatureEstimate {
        mean_curvature: Vec::with_capacity(per_vertex.len()),
        area_gradient: Vec::with_capacity(per_vertex.len()),
        patch_area: Vec::with_capacity(per_vertex.len()),
    };
    for (h, g, a) in per_vertex {
        est.mean_curvature.push(h);
        est.area_gradient.push(g);
        est.patch_area.push(a);
    }
    Ok(est)
}
