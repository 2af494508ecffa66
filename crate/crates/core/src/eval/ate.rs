use serde::{Deserialize, Serialize};

use super::{ErrorStats, EvalError, TrajectoryLog};
use crate::motion::Pose2;

/// An estimated pose matched to a ground-truth pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub t_est: f64,
    pub t_gt: f64,
    pub est: Pose2,
    pub gt: Pose2,
}

/// Greedy timestamp association: candidate pairs with `|dt| <= max_dt` are
/// accepted in order of increasing `|dt|`, each sample used at most once.
/// The result is ordered by estimate timestamp.
pub fn associate(est: &TrajectoryLog, gt: &TrajectoryLog, max_dt: f64) -> Result<Vec<Pair>, EvalError> {
    let gts = gt.samples();
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, (te, _)) in est.samples().iter().enumerate() {
        let lo = gts.partition_point(|(tg, _)| *tg < te - max_dt);
        for (j, (tg, _)) in gts.iter().enumerate().skip(lo) {
            let dt = (tg - te).abs();
            if *tg > te + max_dt {
                break;
            }
            if dt <= max_dt {
                candidates.push((dt, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_est = vec![false; est.len()];
    let mut used_gt = vec![false; gt.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if used_est[i] || used_gt[j] {
            continue;
        }
        used_est[i] = true;
        used_gt[j] = true;
        let (t_est, e) = est.samples()[i];
        let (t_gt, g) = gts[j];
        pairs.push(Pair {
            t_est,
            t_gt,
            est: e,
            gt: g,
        });
    }
    if pairs.is_empty() {
        return Err(EvalError::NoOverlap { max_dt });
    }
    pairs.sort_by(|a, b| a.t_est.total_cmp(&b.t_est));
    Ok(pairs)
}

/// Least-squares rigid transform `T` (rotation + translation, no scale)
/// minimising `Σ |T·est_i − gt_i|²` over the pair positions.
pub fn align_rigid(pairs: &[Pair]) -> Result<Pose2, EvalError> {
    if pairs.len() < 2 {
        return Err(EvalError::DegenerateGeometry);
    }
    let n = pairs.len() as f64;
    let (mut ex, mut ey, mut gx, mut gy) = (0.0, 0.0, 0.0, 0.0);
    for p in pairs {
        ex += p.est.x;
        ey += p.est.y;
        gx += p.gt.x;
        gy += p.gt.y;
    }
    let (ex, ey, gx, gy) = (ex / n, ey / n, gx / n, gy / n);
    let (mut s_cos, mut s_sin, mut spread_e, mut spread_g) = (0.0, 0.0, 0.0, 0.0);
    for p in pairs {
        let (ax, ay) = (p.est.x - ex, p.est.y - ey);
        let (bx, by) = (p.gt.x - gx, p.gt.y - gy);
        s_cos += ax * bx + ay * by;
        s_sin += ax * by - ay * bx;
        spread_e += ax * ax + ay * ay;
        spread_g += bx * bx + by * by;
    }
    let scale = 1.0 + ex.abs().max(ey.abs()).max(gx.abs()).max(gy.abs());
    if spread_e <= 1e-24 * scale * scale || spread_g <= 1e-24 * scale * scale {
        return Err(EvalError::DegenerateGeometry);
    }
    let theta = s_sin.atan2(s_cos);
    let (s, c) = theta.sin_cos();
    Ok(Pose2::new(gx - (c * ex - s * ey), gy - (s * ex + c * ey), theta))
}

pub fn apply_transform(transform: &Pose2, pose: &Pose2) -> Pose2 {
    transform.then(pose)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AteOptions {
    /// Association window, seconds.
    pub max_dt: f64,
    /// Fit a rigid transform before measuring residuals. Disable to measure
    /// error in the map frame, where a rotated-but-consistent estimate is
    /// still wrong.
    pub align: bool,
    /// Fraction of pairs, counted from the end, included in the statistics.
    pub tail_fraction: f64,
}

impl AteOptions {
    pub fn aligned(max_dt: f64) -> Self {
        AteOptions {
            max_dt,
            align: true,
            tail_fraction: 1.0,
        }
    }

    pub fn map_frame(max_dt: f64) -> Self {
        AteOptions {
            max_dt,
            align: false,
            tail_fraction: 1.0,
        }
    }

    pub fn final_half(self) -> Self {
        AteOptions {
            tail_fraction: 0.5,
            ..self
        }
    }
}

/// ATE after rigid alignment over all associated pairs.
pub fn compute_ate(est: &TrajectoryLog, gt: &TrajectoryLog, max_dt: f64) -> Result<ErrorStats, EvalError> {
    compute_ate_with(est, gt, &AteOptions::aligned(max_dt))
}

pub fn compute_ate_with(
    est: &TrajectoryLog,
    gt: &TrajectoryLog,
    opts: &AteOptions,
) -> Result<ErrorStats, EvalError> {
    let pairs = associate(est, gt, opts.max_dt)?;
    let transform = if opts.align {
        align_rigid(&pairs)?
    } else {
        Pose2::identity()
    };
    let keep = ((pairs.len() as f64 * opts.tail_fraction.clamp(0.0, 1.0)).ceil() as usize).max(1);
    let residuals: Vec<f64> = pairs[pairs.len() - keep..]
        .iter()
        .map(|p| {
            let e = apply_transform(&transform, &p.est);
            (e.x - p.gt.x).hypot(e.y - p.gt.y)
        })
        .collect();
    Ok(ErrorStats::from_samples(&residuals))
}

/// Translational (meters) and rotational (degrees) relative pose error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RpeStats {
    pub translational: ErrorStats,
    pub rotational: ErrorStats,
}

pub fn compute_rpe(
    est: &TrajectoryLog,
    gt: &TrajectoryLog,
    delta: usize,
    max_dt: f64,
) -> Result<RpeStats, EvalError> {
    let delta = delta.max(1);
    let pairs = associate(est, gt, max_dt)?;
    if pairs.len() < delta + 1 {
        return Err(EvalError::InsufficientData {
            needed: delta + 1,
            have: pairs.len(),
        });
    }
    let mut trans = Vec::with_capacity(pairs.len() - delta);
    let mut rot = Vec::with_capacity(pairs.len() - delta);
    for k in 0..pairs.len() - delta {
        let (a, b) = (&pairs[k], &pairs[k + delta]);
        let gt_rel = a.gt.inverse().then(&b.gt);
        let est_rel = a.est.inverse().then(&b.est);
        let err = gt_rel.inverse().then(&est_rel);
        trans.push(err.translation_norm());
        rot.push(err.theta.abs().to_degrees());
    }
    Ok(RpeStats {
        translational: ErrorStats::from_samples(&trans),
        rotational: ErrorStats::from_samples(&rot),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(samples: &[(f64, Pose2)]) -> TrajectoryLog {
        TrajectoryLog::new(samples.to_vec()).unwrap()
    }

    fn spiral(n: usize) -> TrajectoryLog {
        log(&(0..n)
            .map(|k| {
                let t = k as f64 * 0.1;
                (t, Pose2::new(t.cos() * (1.0 + t), t.sin() * (1.0 + 0.5 * t), 0.7 * t))
            })
            .collect::<Vec<_>>())
    }

    #[test]
    fn identical_timestamps_pair_fully() {
        let gt = spiral(20);
        let pairs = associate(&gt, &gt, 0.01).unwrap();
        assert_eq!(pairs.len(), 20);
        assert!(pairs.iter().all(|p| p.t_est == p.t_gt));
    }

    #[test]
    fn offset_beyond_window_has_no_overlap() {
        let gt = spiral(10);
        let max_dt = 0.02;
        let shifted = log(&gt.samples().iter().map(|(t, p)| (t + max_dt + 1e-6, *p)).collect::<Vec<_>>());
        assert_eq!(associate(&shifted, &gt, max_dt), Err(EvalError::NoOverlap { max_dt }));
    }

    #[test]
    fn identity_alignment() {
        let gt = spiral(30);
        let pairs = associate(&gt, &gt, 0.01).unwrap();
        let t = align_rigid(&pairs).unwrap();
        assert!(t.x.abs() < 1e-12 && t.y.abs() < 1e-12 && t.theta.abs() < 1e-12);
    }

    #[test]
    fn recovers_constructed_transform() {
        let gt = spiral(40);
        let motion = Pose2::new(1.0, 2.0, 30f64.to_radians());
        let est = log(&gt.samples().iter().map(|(t, p)| (*t, motion.then(p))).collect::<Vec<_>>());
        let t = align_rigid(&associate(&est, &gt, 0.01).unwrap()).unwrap();
        let inv = motion.inverse();
        assert!((t.theta - (-30f64).to_radians()).abs() < 1e-9);
        assert!((t.x - inv.x).abs() < 1e-9 && (t.y - inv.y).abs() < 1e-9);
        let ate = compute_ate(&est, &gt, 0.01).unwrap();
        assert!(ate.rmse < 1e-9 && ate.max < 1e-9);
    }

    #[test]
    fn degenerate_geometry() {
        let p = Pose2::new(1.0, 1.0, 0.0);
        let gt = log(&[(0.0, p), (1.0, p), (2.0, p)]);
        assert_eq!(
            align_rigid(&associate(&gt, &gt, 0.1).unwrap()),
            Err(EvalError::DegenerateGeometry)
        );
        let one = log(&[(0.0, p)]);
        assert_eq!(align_rigid(&associate(&one, &one, 0.1).unwrap()), Err(EvalError::DegenerateGeometry));
    }

    #[test]
    fn ate_zero_for_offset_copy() {
        let gt = spiral(25);
        let est = log(&gt.samples().iter().map(|(t, p)| (*t, Pose2::new(p.x + 3.0, p.y - 1.0, p.theta))).collect::<Vec<_>>());
        let s = compute_ate(&est, &gt, 0.01).unwrap();
        assert!(s.rmse < 1e-9 && s.mean < 1e-9 && s.max < 1e-9);
        let unaligned = compute_ate_with(&est, &gt, &AteOptions::map_frame(0.01)).unwrap();
        assert!((unaligned.mean - 10f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn tail_fraction_uses_final_samples() {
        let gt = spiral(10);
        let est = log(&gt
            .samples()
            .iter()
            .enumerate()
            .map(|(k, (t, p))| (*t, if k < 5 { Pose2::new(p.x + 1.0, p.y, p.theta) } else { *p }))
            .collect::<Vec<_>>());
        let tail = compute_ate_with(&est, &gt, &AteOptions::map_frame(0.01).final_half()).unwrap();
        assert_eq!(tail.count, 5);
        assert_eq!(tail.max, 0.0);
    }

    #[test]
    fn rpe_zero_for_rigidly_moved_estimate() {
        let gt = spiral(30);
        let motion = Pose2::new(-4.0, 0.5, 2.0);
        let est = log(&gt.samples().iter().map(|(t, p)| (*t, motion.then(p))).collect::<Vec<_>>());
        for delta in [1, 3] {
            let r = compute_rpe(&est, &gt, delta, 0.01).unwrap();
            assert!(r.translational.max < 1e-9);
            assert!(r.rotational.max < 1e-9);
        }
    }

    #[test]
    fn rpe_heading_bias_accumulates() {
        let gt = spiral(30);
        let beta = 0.01;
        // Per-step heading bias: est_k = gt_k rotated in place by k·β.
        let est = log(&gt
            .samples()
            .iter()
            .enumerate()
            .map(|(k, (t, p))| (*t, Pose2::new(p.x, p.y, p.theta + k as f64 * beta)))
            .collect::<Vec<_>>());
        for delta in [1, 2, 5] {
            let r = compute_rpe(&est, &gt, delta, 0.01).unwrap();
            assert!((r.rotational.mean - (beta * delta as f64).to_degrees()).abs() < 1e-9);
        }
    }

    #[test]
    fn rpe_insufficient() {
        let gt = spiral(3);
        assert!(matches!(compute_rpe(&gt, &gt, 3, 0.01), Err(EvalError::InsufficientData { .. })));
    }
}
