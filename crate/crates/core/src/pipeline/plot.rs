use std::fmt::Write;

use crate::eval::TrajectoryLog;
use crate::worldmap::{MaterialMap, Occupancy};

const PX_PER_CELL: f64 = 6.0;

/// Overhead view: walls in grey, ground truth in green, estimate in red.
pub fn render_svg(map: &MaterialMap, gt: &TrajectoryLog, est: &TrajectoryLog) -> String {
    let (w, h) = (map.width(), map.height());
    let (pw, ph) = (w as f64 * PX_PER_CELL, h as f64 * PX_PER_CELL);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{pw}" height="{ph}" viewBox="0 0 {pw} {ph}">"#
    )
    .unwrap();
    writeln!(svg, r##"<rect width="{pw}" height="{ph}" fill="#ffffff"/>"##).unwrap();
    for j in 0..h {
        let y = (h - 1 - j) as f64 * PX_PER_CELL;
        let mut i = 0;
        while i < w {
            let kind = map.occupancy(i, j);
            let start = i;
            while i < w && map.occupancy(i, j) == kind {
                i += 1;
            }
            let fill = match kind {
                Occupancy::Free => continue,
                Occupancy::Occupied => "#555555",
                Occupancy::Unknown => "#bbbbbb",
            };
            writeln!(
                svg,
                r#"<rect x="{}" y="{y}" width="{}" height="{PX_PER_CELL}" fill="{fill}"/>"#,
                start as f64 * PX_PER_CELL,
                (i - start) as f64 * PX_PER_CELL
            )
            .unwrap();
        }
    }
    for (log, colour) in [(gt, "#1a9850"), (est, "#d73027")] {
        let points: Vec<String> = log
            .poses()
            .map(|p| {
                let (gx, gy) = map.world_to_grid(p.x, p.y);
                format!("{:.2},{:.2}", gx * PX_PER_CELL, ph - gy * PX_PER_CELL)
            })
            .collect();
        writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            points.join(" ")
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
