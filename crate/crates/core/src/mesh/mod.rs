//! Triangulated 2-surfaces through the center `p` of a geodesic ball, stored
//! in a conformally flat chart with `p` at the origin.
//!
//! Geodesic spheres about `p` are Euclidean spheres in the chart, so the
//! boundary constraint `∂M ⊂ ∂B_p(ρ₀)` is `|x| = chart.norm_from_radius(ρ₀)`.

mod area;
mod build;
mod curvature;
mod flux;

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::warp::Chart;

pub use area::{check_triangle, riemannian_area, triangle_area, triangle_areas, TRIANGLE_RULE};
pub use build::{
    boundary_twist, geodesic_disk_mesh, geodesic_disk_mesh_in, graph_perturbation, MAX_DEPTH,
};
pub use curvature::{
    mean_curvature_estimate, mean_curvature_estimate_with_step, CurvatureEstimate,
    MEAN_CURVATURE_FD_STEP,
};
pub use flux::{
    boundary_flux, default_epsilon_ladder, divergence_theorem_check, max_inner_radius, richardson,
    Boundary, Extrapolation, FluxResult,
};

pub type Vec3 = Vector3<f64>;

/// The center vertex must sit this close to the origin.
pub const CENTER_TOLERANCE: f64 = 1e-14;
/// Allowed deviation of boundary vertex norms from the sphere radius.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

/// A triangulated disk with one vertex pinned at the origin and its boundary
/// loop on the chart sphere of geodesic radius `rho0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshFile", into = "MeshFile")]
pub struct DiscreteSubmanifold {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    center_index: usize,
    boundary_loop: Vec<usize>,
    rho0: f64,
    chart: Chart,
    on_boundary: Vec<bool>,
    orientation: f64,
}

impl DiscreteSubmanifold {
    /// Validates the mesh and orders the boundary loop along the orientation
    /// induced by the triangles.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        center_index: usize,
        rho0: f64,
        chart: Chart,
    ) -> Result<Self> {
        Self::build(vertices, triangles, center_index, rho0, chart, None)
    }

    /// As [`Self::new`], with a prescribed boundary loop. A loop running against
    /// the triangle orientation gives orientation sign −1.
    pub fn with_boundary_loop(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        center_index: usize,
        rho0: f64,
        chart: Chart,
        boundary_loop: Vec<usize>,
    ) -> Result<Self> {
        Self::build(
            vertices,
            triangles,
            center_index,
            rho0,
            chart,
            Some(boundary_loop),
        )
    }

    fn build(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        center_index: usize,
        rho0: f64,
        chart: Chart,
        requested_loop: Option<Vec<usize>>,
    ) -> Result<Self> {
        if !(rho0 > 0.0) || !rho0.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "rho0 = {rho0} must be positive and finite"
            )));
        }
        if !chart.contains_norm(chart.norm_from_radius(rho0)) {
            return Err(Error::InvalidMesh(format!(
                "rho0 = {rho0} is not representable in the chart"
            )));
        }
        let nv = vertices.len();
        if nv == 0 || triangles.is_empty() {
            return Err(Error::InvalidMesh(
                "mesh has no vertices or no triangles".into(),
            ));
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {i} references a missing vertex"
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidMesh(format!("triangle {i} repeats a vertex")));
            }
        }
        if center_index >= nv {
            return Err(Error::InvalidMesh(format!(
                "center index {center_index} out of range"
            )));
        }

        // directed edge -> owning triangle; undirected edge -> use count
        let mut directed: HashMap<(usize, usize), usize> =
            HashMap::with_capacity(3 * triangles.len());
        let mut undirected: HashMap<(usize, usize), usize> =
            HashMap::with_capacity(3 * triangles.len());
        let mut used = vec![false; nv];
        for (ti, t) in triangles.iter().enumerate() {
            for j in 0..3 {
                let (a, b) = (t[j], t[(j + 1) % 3]);
                used[a] = true;
                if directed.insert((a, b), ti).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) appears twice with the same direction: triangles are not consistently oriented"
                    )));
                }
                *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidMesh(format!(
                "vertex {v} belongs to no triangle"
            )));
        }
        if let Some(((a, b), _)) = undirected.iter().find(|(_, &c)| c > 2) {
            return Err(Error::InvalidMesh(format!(
                "edge ({a}, {b}) borders more than two triangles"
            )));
        }

        let mut next: HashMap<usize, usize> = HashMap::new();
        for &(a, b) in directed.keys() {
            if undirected[&(a.min(b), a.max(b))] == 1 && next.insert(a, b).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "boundary is pinched at vertex {a}"
                )));
            }
        }
        if next.is_empty() {
            return Err(Error::InvalidMesh("mesh has no boundary".into()));
        }
        let start = *next.keys().min().expect("nonempty");
        let mut induced = vec![start];
        let mut v = next[&start];
        while v != start {
            if induced.len() > next.len() {
                return Err(Error::InvalidMesh("boundary edges do not close up".into()));
            }
            induced.push(v);
            v = *next
                .get(&v)
                .ok_or_else(|| Error::InvalidMesh(format!("boundary breaks off at vertex {v}")))?;
        }
        if induced.len() != next.len() {
            return Err(Error::InvalidMesh(format!(
                "boundary edges form more than one loop ({} of {} edges in the first)",
                induced.len(),
                next.len()
            )));
        }

        let euler = nv as i64 - undirected.len() as i64 + triangles.len() as i64;
        if euler != 1 {
            return Err(Error::InvalidMesh(format!(
                "Euler characteristic {euler}, a disk has 1"
            )));
        }

        let (boundary_loop, orientation) = match requested_loop {
            None => (induced, 1.0),
            Some(l) => (l.clone(), loop_orientation(&induced, &l)?),
        };
        let mut on_boundary = vec![false; nv];
        for &b in &boundary_loop {
            on_boundary[b] = true;
        }
        if on_boundary[center_index] {
            return Err(Error::InvalidMesh(
                "the center vertex lies on the boundary".into(),
            ));
        }

        let mesh = Self {
            vertices,
            triangles,
            center_index,
            boundary_loop,
            rho0,
            chart,
            on_boundary,
            orientation,
        };
        mesh.check_positions(&mesh.vertices)?;
        Ok(mesh)
    }

    fn check_positions(&self, positions: &[Vec3]) -> Result<()> {
        if positions.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "{} positions for {} vertices",
                positions.len(),
                self.vertices.len()
            )));
        }
        for (i, x) in positions.iter().enumerate() {
            let norm = x.norm();
            if !norm.is_finite() || !self.chart.contains_norm(norm) {
                return Err(Error::OutsideBall { norm });
            }
            if i == self.center_index && norm >= CENTER_TOLERANCE {
                return Err(Error::InvalidMesh(format!(
                    "center vertex at distance {norm:e} from the origin"
                )));
            }
        }
        let radius = self.boundary_norm();
        for &b in &self.boundary_loop {
            let dev = (positions[b].norm() - radius).abs();
            if dev >= BOUNDARY_TOLERANCE {
                return Err(Error::InvalidMesh(format!(
                    "boundary vertex {b} is {dev:e} off the sphere of radius {radius}"
                )));
            }
        }
        Ok(())
    }

    /// Same topology with new vertex positions; constraints are re-checked.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self> {
        self.check_positions(&positions)?;
        Ok(Self {
            vertices: positions,
            ..self.clone()
        })
    }

    /// Every triangle wound the other way; the boundary loop is kept, so the
    /// orientation sign flips.
    pub fn reversed(&self) -> Self {
        Self {
            triangles: self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect(),
            orientation: -self.orientation,
            ..self.clone()
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Vec3 {
        &self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn center_index(&self) -> usize {
        self.center_index
    }

    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary_loop
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    /// Neither the center nor on the boundary.
    pub fn is_free(&self, v: usize) -> bool {
        v != self.center_index && !self.on_boundary[v]
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Chart radius of `∂B_p(ρ₀)`.
    pub fn boundary_norm(&self) -> f64 {
        self.chart.norm_from_radius(self.rho0)
    }

    /// +1 when the boundary loop runs along the orientation induced by the
    /// triangles, −1 otherwise.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Triangles incident to each vertex.
    pub fn vertex_stars(&self) -> Vec<Vec<usize>> {
        let mut stars = vec![Vec::new(); self.vertices.len()];
        for (ti, t) in self.triangles.iter().enumerate() {
            for &v in t {
                stars[v].push(ti);
            }
        }
        stars
    }

    /// Largest deviation of the center and boundary vertices from their constraints.
    pub fn constraint_violation(&self) -> f64 {
        let radius = self.boundary_norm();
        self.boundary_loop
            .iter()
            .map(|&b| (self.vertices[b].norm() - radius).abs())
            .fold(self.vertices[self.center_index].norm(), f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn loop_orientation(induced: &[usize], given: &[usize]) -> Result<f64> {
    let n = induced.len();
    let mismatch = || Error::InvalidMesh("boundary loop does not match the boundary edges".into());
    if given.len() != n {
        return Err(mismatch());
    }
    let offset = given
        .iter()
        .position(|&v| v == induced[0])
        .ok_or_else(mismatch)?;
    if (0..n).all(|i| given[(offset + i) % n] == induced[i]) {
        Ok(1.0)
    } else if (0..n).all(|i| given[(offset + n - i) % n] == induced[i]) {
        Ok(-1.0)
    } else {
        Err(mismatch())
    }
}

/// On-disk mesh layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    center_index: usize,
    rho0: f64,
    #[serde(default)]
    chart: Chart,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundary_loop: Option<Vec<usize>>,
}

impl TryFrom<MeshFile> for DiscreteSubmanifold {
    type Error = Error;

    fn try_from(f: MeshFile) -> Result<Self> {
        let vertices = f
            .vertices
            .iter()
            .map(|v| Vec3::new(v[0], v[1], v[2]))
            .collect();
        Self::build(
            vertices,
            f.triangles,
            f.center_index,
            f.rho0,
            f.chart,
            f.boundary_loop,
        )
    }
}

impl From<DiscreteSubmanifold> for MeshFile {
    fn from(m: DiscreteSubmanifold) -> Self {
        MeshFile {
            vertices: m.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
            triangles: m.triangles,
            center_index: m.center_index,
            rho0: m.rho0,
            chart: m.chart,
            boundary_loop: Some(m.boundary_loop),
        }
    }
}
