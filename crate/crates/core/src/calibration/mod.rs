//! The radial calibration field `W = f(r) ∂_r` and its defining conditions.

pub mod area;
pub mod field;
pub mod frame;
pub mod verify;

pub use area::{geodesic_disk_area, geodesic_disk_area_quadrature, unit_sphere_area};
pub use field::{CalibrationField, RadialField};
pub use frame::{frame_divergence_oracle, random_frame, Frame};
pub use verify::{verify_conditions, ConditionCheck, ConditionReport, Tolerances, VerifyOptions};
