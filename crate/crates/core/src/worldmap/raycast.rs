use super::{MapError, MaterialMap};
use crate::motion::Pose2;

/// First blocking cell along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Distance from the ray origin to where the ray enters the cell, meters.
    pub range: f64,
    pub cell: (usize, usize),
    /// `None` when the ray stopped on an unknown cell.
    pub material_id: Option<usize>,
}

impl MaterialMap {
    /// Walk every cell the ray crosses (Amanatides–Woo traversal) and
    /// return the first occupied or unknown one within `max_range`.
    pub fn raycast(&self, pose: &Pose2, bearing: f64, max_range: f64) -> Result<Option<RayHit>, MapError> {
        let (gx, gy) = self.world_to_grid(pose.x, pose.y);
        let (ci, cj) = (gx.floor(), gy.floor());
        if !(ci >= 0.0 && cj >= 0.0 && ci < self.width() as f64 && cj < self.height() as f64) {
            return Err(MapError::OutOfBounds { x: pose.x, y: pose.y });
        }
        let (mut i, mut j) = (ci as isize, cj as isize);
        let hit = |i: isize, j: isize, t: f64| RayHit {
            range: t,
            cell: (i as usize, j as usize),
            material_id: self.material(i as usize, j as usize),
        };
        if self.blocks_ray(i as usize, j as usize) {
            return Ok(Some(hit(i, j, 0.0)));
        }

        let angle = pose.theta + bearing - self.grid_heading();
        let (dy, dx) = angle.sin_cos();
        let res = self.resolution();
        let max_t = max_range / res;

        let step_i: isize = if dx > 0.0 { 1 } else { -1 };
        let step_j: isize = if dy > 0.0 { 1 } else { -1 };
        // Parametric distance (in cells) to the first vertical / horizontal
        // boundary and between successive boundaries.
        let (mut t_max_x, t_delta_x) = if dx != 0.0 {
            let next = if dx > 0.0 { ci + 1.0 } else { ci };
            ((next - gx) / dx, 1.0 / dx.abs())
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let (mut t_max_y, t_delta_y) = if dy != 0.0 {
            let next = if dy > 0.0 { cj + 1.0 } else { cj };
            ((next - gy) / dy, 1.0 / dy.abs())
        } else {
            (f64::INFINITY, f64::INFINITY)
        };

        loop {
            let t = if t_max_x <= t_max_y {
                i += step_i;
                let t = t_max_x;
                t_max_x += t_delta_x;
                t
            } else {
                j += step_j;
                let t = t_max_y;
                t_max_y += t_delta_y;
                t
            };
            if t > max_t || !self.in_bounds(i, j) {
                return Ok(None);
            }
            if self.blocks_ray(i as usize, j as usize) {
                return Ok(Some(hit(i, j, t * res)));
            }
        }
    }
}
