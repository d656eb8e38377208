//! Swept-box collision test for straight-line tool motions.
//!
//! The robot body is an axis-aligned cube lifted above the tool point. A
//! motion is sampled at `k / steps` for `k = 1..=steps`; the motion collides
//! with an obstacle when the cube strictly overlaps it at any sample. The
//! start pose itself (`k = 0`) is not tested.

use crate::model::Aabb;

/// Geometry of the moving robot body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyGeometry {
    /// Edge length of the cube.
    pub size: f64,
    /// Vertical offset of the cube's center above the tool point.
    pub lift: f64,
}

impl BodyGeometry {
    pub fn at(&self, tcp: [f64; 3]) -> Aabb {
        Aabb::from_center([tcp[0], tcp[1], tcp[2] + self.lift], [self.size; 3])
    }
}

/// Tool position at sample `k` of `steps` along `from → to`.
pub fn sample_point(from: [f64; 3], to: [f64; 3], k: u32, steps: u32) -> [f64; 3] {
    let t = k as f64 / steps as f64;
    [0, 1, 2].map(|i| from[i] + (to[i] - from[i]) * t)
}

/// First sample index in `1..=steps` at which the swept body overlaps
/// `obstacle`, if any.
///
/// Solves for the parameter interval of overlap per axis, then confirms the
/// handful of samples around that interval with the exact sampled geometry.
pub fn first_hit(body: &BodyGeometry, from: [f64; 3], to: [f64; 3], steps: u32, obstacle: &Aabb) -> Option<u32> {
    let half = body.size / 2.0;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for i in 0..3 {
        let start = from[i] + if i == 2 { body.lift } else { 0.0 };
        let delta = to[i] - from[i];
        let (a, b) = (obstacle.min[i] - half, obstacle.max[i] + half);
        if delta.abs() < 1e-15 {
            // margin keeps boundary cases for the exact check below
            if start <= a - 1e-9 || start >= b + 1e-9 {
                return None;
            }
            continue;
        }
        let (t0, t1) = ((a - start) / delta, (b - start) / delta);
        lo = lo.max(t0.min(t1));
        hi = hi.min(t0.max(t1));
    }
    let margin = 1e-9;
    if lo > hi + margin {
        return None;
    }
    let n = steps as f64;
    let k_lo = (((lo - margin) * n).floor().max(1.0)) as u32;
    let k_hi = (((hi + margin) * n).ceil().min(n)) as u32;
    (k_lo..=k_hi).find(|&k| body.at(sample_point(from, to, k, steps)).overlaps(obstacle))
}

#[cfg(test)]
mod tests {
    use super::*;

    // dyadic sizes keep the expected sample indices exact
    const BODY: BodyGeometry = BodyGeometry { size: 0.25, lift: 0.0 };

    #[test]
    fn straight_through() {
        let wall = Aabb::from_center([0.5, 0.0, 0.0], [0.5, 1.0, 1.0]);
        assert_eq!(first_hit(&BODY, [0.0; 3], [1.0, 0.0, 0.0], 64, &wall), Some(9));
        assert_eq!(first_hit(&BODY, [0.0; 3], [0.0, 1.0, 0.0], 64, &wall), None);
    }

    #[test]
    fn touching_is_not_a_hit() {
        // the body's front face touches the wall at the end pose
        let wall = Aabb::from_center([1.375, 0.0, 0.0], [0.5, 1.0, 1.0]);
        assert_eq!(first_hit(&BODY, [0.0; 3], [1.0, 0.0, 0.0], 64, &wall), None);
    }

    #[test]
    fn stationary_inside_obstacle() {
        let wall = Aabb::from_center([0.0; 3], [1.0; 3]);
        assert_eq!(first_hit(&BODY, [0.0; 3], [0.0; 3], 64, &wall), Some(1));
    }
}
