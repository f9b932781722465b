//! Distance-to-corner weight on the free surface.

use crate::domain::CornerPoint;
use crate::error::{Error, Result};
use crate::mesh::TraceGrid;

use super::TraceField;

/// Nodal values of the weight ρ on the trace grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryWeight {
    pub values: Vec<f64>,
    pub rho0: f64,
}

/// Lipschitz constant of the blend used between `rho0/2` and `rho0`.
pub const BLEND_LIPSCHITZ: f64 = 4.0 / 3.0;

/// ρ as a function of the distance `d` to the nearest corner: equal to `d`
/// up to `rho0/2`, equal to `rho0` beyond `rho0`, C¹ in between.
pub fn blend(d: f64, rho0: f64) -> f64 {
    let half = 0.5 * rho0;
    if d <= half {
        d.max(0.0)
    } else if d >= rho0 {
        rho0
    } else {
        let t = (d - half) / half;
        half + half * (t + t * t - t * t * t)
    }
}

/// Corners that the weight vanishes at: mixed corners that are not
/// artificial truncation walls.
pub fn weighted_corners(corners: &[CornerPoint]) -> Vec<&CornerPoint> {
    corners.iter().filter(|c| c.is_mixed() && !c.truncation).collect()
}

/// Builds ρ from the distance of each surface node to the mixed corners.
pub fn build_weight(grid: &TraceGrid, corners: &[CornerPoint], rho0: f64) -> Result<BoundaryWeight> {
    if !(rho0 > 0.0) || !rho0.is_finite() {
        return Err(Error::InvalidArgument(format!("rho0 must be positive, got {rho0}")));
    }
    let active = weighted_corners(corners);
    let min_radius = active.iter().map(|c| c.straight_radius).fold(f64::INFINITY, f64::min);
    if rho0 > 0.5 * min_radius * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "rho0 = {rho0} exceeds half the smallest straight corner radius {min_radius}"
        )));
    }
    let values = grid
        .abscissae()
        .into_iter()
        .map(|x| {
            let d = active.iter().map(|c| (x - c.x).hypot(c.z)).fold(f64::INFINITY, f64::min);
            blend(d, rho0)
        })
        .collect();
    Ok(BoundaryWeight { values, rho0 })
}

impl BoundaryWeight {
    pub fn as_field(&self) -> TraceField {
        TraceField::new(self.values.clone())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest difference quotient between neighbouring nodes.
    pub fn lipschitz(&self, grid: &TraceGrid) -> f64 {
        let mut l: f64 = 0.0;
        for (j, c) in grid.components.iter().enumerate() {
            let r = &self.values[grid.range(j)];
            for k in 1..c.len() {
                l = l.max((r[k] - r[k - 1]).abs() / (c.x[k] - c.x[k - 1]));
            }
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::mesh::{boundary_trace_grid, generate, GradingParams};

    #[test]
    fn blend_is_c1() {
        let rho0 = 0.2;
        assert_eq!(blend(0.0, rho0), 0.0);
        assert_eq!(blend(0.25 * rho0, rho0), 0.25 * rho0);
        assert_eq!(blend(3.0, rho0), rho0);
        let h = 1e-7;
        for d in [0.5 * rho0, rho0] {
            let left = (blend(d, rho0) - blend(d - h, rho0)) / h;
            let right = (blend(d + h, rho0) - blend(d, rho0)) / h;
            assert!((left - right).abs() < 1e-5, "slope jump at {d}");
        }
        let mut prev = 0.0;
        for k in 1..=1000 {
            let d = 1.5 * rho0 * k as f64 / 1000.0;
            let v = blend(d, rho0);
            assert!(v >= prev && v <= rho0);
            assert!((v - prev) <= BLEND_LIPSCHITZ * 1.5 * rho0 / 1000.0 + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn weight_on_one_object() {
        let spec = DomainSpec::one_object();
        let params = GradingParams::for_spec(&spec, 0.1, 2.0);
        let mesh = generate(&spec, &params).unwrap();
        let grid = boundary_trace_grid(&mesh);
        let w = build_weight(&grid, &mesh.corners, params.rho0).unwrap();
        let x = grid.abscissae();
        for (k, &v) in w.values.iter().enumerate() {
            assert!(v >= 0.0 && v <= params.rho0);
            if (x[k] + 0.5).abs() < 1e-12 || (x[k] - 0.5).abs() < 1e-12 {
                assert_eq!(v, 0.0);
            }
            // truncation walls at x = -3 and x = 3 do not count
            if (x[k].abs() - 3.0).abs() < 1e-12 {
                assert_eq!(v, params.rho0);
            }
        }
        assert!(w.lipschitz(&grid) <= BLEND_LIPSCHITZ + 1e-12);
        assert!(build_weight(&grid, &mesh.corners, 10.0).is_err());
        assert!(build_weight(&grid, &mesh.corners, 0.0).is_err());
    }
}
