//! Orthonormal k-frames at a point, their radial mass, and the chart-level
//! divergence oracle for hyperbolic space.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::calibration::field::CalibrationField;
use crate::error::{Error, Result};
use crate::warp::{ball_from_polar, chart_christoffels, BallPoint, PolarPoint, ProfileKind};

const GRAM_TOLERANCE: f64 = 1e-10;
const MAX_REDRAWS: usize = 10;

/// k orthonormal tangent vectors at a point, in the orthonormal basis
/// `{e_1, …, e_{n−1}, e_n = ∂_r}`; the last component of each vector is its
/// radial coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    location: PolarPoint,
    vectors: Vec<DVector<f64>>,
    radial_mass: f64,
}

impl Frame {
    pub fn new(location: PolarPoint, vectors: Vec<DVector<f64>>) -> Result<Self> {
        let n = location.dim();
        let k = vectors.len();
        if k == 0 || k > n {
            return Err(Error::DegenerateFrame(format!(
                "need 1 ≤ k ≤ n, got k = {k}, n = {n}"
            )));
        }
        if vectors.iter().any(|v| v.len() != n) {
            return Err(Error::DegenerateFrame(
                "vector length differs from n".into(),
            ));
        }
        for i in 0..k {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                let g = vectors[i].dot(&vectors[j]);
                if (g - target).abs() > GRAM_TOLERANCE {
                    return Err(Error::DegenerateFrame(format!(
                        "Gram entry ({i}, {j}) = {g}"
                    )));
                }
            }
        }
        let radial_mass = vectors.iter().map(|v| v[n - 1] * v[n - 1]).sum();
        Ok(Self {
            location,
            vectors,
            radial_mass,
        })
    }

    /// Frame whose first vector is ∂_r, completed by e_1, …, e_{k−1}.
    pub fn radial(location: PolarPoint, k: usize) -> Result<Self> {
        let n = location.dim();
        if k == 0 || k > n {
            return Err(Error::DegenerateFrame(format!("k = {k}, n = {n}")));
        }
        let vectors = (0..k)
            .map(|j| {
                let idx = if j == 0 { n - 1 } else { j - 1 };
                DVector::from_fn(n, |i, _| if i == idx { 1.0 } else { 0.0 })
            })
            .collect();
        Self::new(location, vectors)
    }

    pub fn location(&self) -> &PolarPoint {
        &self.location
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    /// |(∂_r)^T|² = Σ_j ⟨e_n, τ_j⟩².
    pub fn radial_mass(&self) -> f64 {
        self.radial_mass
    }
}

/// Orthonormalizes the columns of `m` (modified Gram–Schmidt, two passes).
/// Returns `None` when the columns are numerically dependent.
fn orthonormal_columns(m: &DMatrix<f64>) -> Option<Vec<DVector<f64>>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(m.ncols());
    for c in 0..m.ncols() {
        let mut v: DVector<f64> = m.column(c).into_owned();
        let scale = v.norm();
        for _ in 0..2 {
            for q in &out {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
            }
        }
        let norm = v.norm();
        if !(norm > 1e-10 * scale.max(1.0)) {
            return None;
        }
        out.push(v / norm);
    }
    Some(out)
}

/// Random orthonormal k-frame at `location`: an n×k standard normal draw
/// with orthonormalized columns, deterministic in `seed`.
pub fn random_frame(location: &PolarPoint, k: usize, seed: u64) -> Result<Frame> {
    let n = location.dim();
    if k == 0 || k > n {
        return Err(Error::DegenerateFrame(format!(
            "need 1 ≤ k ≤ n, got k = {k}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REDRAWS {
        let draw = DMatrix::from_fn(n, k, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        });
        if let Some(cols) = orthonormal_columns(&draw) {
            return Frame::new(location.clone(), cols);
        }
    }
    Err(Error::DegenerateFrame(format!(
        "{MAX_REDRAWS} consecutive rank-deficient draws"
    )))
}

/// Householder reflection taking the last standard basis vector to `theta`;
/// its columns are a Euclidean orthonormal basis with `theta` last.
fn basis_with_last(theta: &DVector<f64>) -> DMatrix<f64> {
    let n = theta.len();
    let mut v = -theta.clone();
    v[n - 1] += 1.0;
    let vv = v.norm_squared();
    let mut h = DMatrix::identity(n, n);
    if vv > 1e-30 {
        h -= (&v * v.transpose()) * (2.0 / vv);
    }
    h
}

/// Σ_j ⟨D_{τ_j} W, τ_j⟩ computed in the Poincaré ball chart: W from f and the
/// chart radial direction, partial derivatives of its components by five-point
/// central differences (step 1e-6), the covariant correction from the chart
/// Christoffel symbols, and inner products in the conformal metric.
pub fn frame_divergence_oracle(field: &CalibrationField, frame: &Frame) -> Result<f64> {
    if field.profile().kind() != ProfileKind::Hyperbolic {
        return Err(Error::Precondition(
            "the chart oracle is defined for the hyperbolic profile only".into(),
        ));
    }
    let r = frame.location().r();
    if !(1e-2..=field.rho0()).contains(&r) {
        return Err(Error::Precondition(format!(
            "frame radius {r} outside [1e-2, rho0 = {}]",
            field.rho0()
        )));
    }
    let x = ball_from_polar(frame.location())?;
    let n = x.dim();
    let lambda = x.conformal_factor();
    let basis = basis_with_last(frame.location().theta());

    // W(y) = f(r(y)) ŷ / λ(y) in chart components.
    let w_at = |y: &DVector<f64>| -> Result<DVector<f64>> {
        let norm = y.norm();
        let ry = 2.0 * norm.atanh();
        let ly = 2.0 / (1.0 - norm * norm);
        Ok(y * (field.f_unchecked(ry)? / (norm * ly)))
    };

    let h = 1e-6;
    let w = w_at(x.coords())?;
    let shifted = |i: usize, s: f64| {
        let mut y = x.coords().clone();
        y[i] += s;
        w_at(&y)
    };
    let mut jac = DMatrix::zeros(n, n); // jac[(k, i)] = ∂_i W^k
    for i in 0..n {
        // five-point stencil
        let d = (shifted(i, -2.0 * h)? - shifted(i, 2.0 * h)?
            + (shifted(i, h)? - shifted(i, -h)?) * 8.0)
            / (12.0 * h);
        jac.set_column(i, &d);
    }
    let gamma = chart_christoffels(&BallPoint::new(x.coords().clone())?);

    let mut total = 0.0;
    for a in frame.vectors() {
        let tau: DVector<f64> = (&basis * a) / lambda;
        let mut cov = &jac * &tau;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    cov[k] += gamma.get(k, i, j) * tau[i] * w[j];
                }
            }
        }
        total += lambda * lambda * cov.dot(&tau);
    }
    Ok(total)
}
