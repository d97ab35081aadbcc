//! Euclidean domains and the geometric functionals built on them.

mod directions;
mod domain;
mod fraction;
mod spec_file;

pub use directions::DirectionSet;
pub use domain::{AxisBox, Ball, CellClass, Domain, Implicit, Membership, Polygon};
pub use fraction::{
    ball_fraction, generalized_inradius, inradius, sup_ball_fraction, Budget, FractionEstimate, FractionMode,
    GeneralizedInradius, Inradius, Resolution, SupConfig, DEFAULT_SEED,
};
pub(crate) use fraction::{ball_class, first_max, intersect_class, measure_bounds, three_sigma, BallSampler, NodeGrid};
pub use spec_file::{BoxSpec, DomainSpec, GridSpec, ShapeSpec, VoxelMask};

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Surface measure `|S^{d-1}|` of the unit sphere in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }
}
