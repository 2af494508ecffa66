//! Timestamped trajectories and the TUM text format
//! (`timestamp tx ty tz qx qy qz qw`, yaw-only quaternions, tz = 0).

use std::fmt::Write as _;
use std::path::Path;

use super::EvalError;
use crate::error::{Error, Result};
use crate::motion::{wrap_angle, Pose2};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    samples: Vec<(f64, Pose2)>,
}

impl TrajectoryLog {
    pub fn new(samples: Vec<(f64, Pose2)>) -> Result<Self, EvalError> {
        for (k, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(EvalError::NonMonotonic { index: k + 1 });
            }
        }
        Ok(TrajectoryLog { samples })
    }

    pub fn empty() -> Self {
        TrajectoryLog::default()
    }

    /// Append a sample; its timestamp must exceed the last one.
    pub fn push(&mut self, t: f64, pose: Pose2) -> Result<(), EvalError> {
        if let Some((last, _)) = self.samples.last() {
            if !(t > *last) {
                return Err(EvalError::NonMonotonic {
                    index: self.samples.len(),
                });
            }
        }
        self.samples.push((t, pose));
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, Pose2)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn poses(&self) -> impl Iterator<Item = &Pose2> {
        self.samples.iter().map(|(_, p)| p)
    }

    pub fn to_records(&self) -> Vec<TumRecord> {
        self.samples.iter().map(|(t, p)| TumRecord::from_pose(*t, p)).collect()
    }

    pub fn from_records(records: &[TumRecord]) -> Result<Self, EvalError> {
        TrajectoryLog::new(records.iter().map(|r| (r.timestamp, r.pose())).collect())
    }

    pub fn to_tum(&self) -> String {
        TumRecord::emit(&self.to_records())
    }

    pub fn parse_tum(text: &str, path: &Path) -> Result<Self> {
        let records = TumRecord::parse(text, path)?;
        Ok(TrajectoryLog::from_records(&records)?)
    }

    pub fn load_tum(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrajectoryLog::parse_tum(&text, path)
    }

    pub fn save_tum(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tum()).map_err(|e| Error::io(path, e))
    }
}

/// One raw line of a TUM trajectory file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TumRecord {
    pub timestamp: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub qw: f64,
}

impl TumRecord {
    pub fn from_pose(timestamp: f64, p: &Pose2) -> Self {
        let (s, c) = (0.5 * p.theta).sin_cos();
        TumRecord {
            timestamp,
            tx: p.x,
            ty: p.y,
            tz: 0.0,
            qx: 0.0,
            qy: 0.0,
            qz: s,
            qw: c,
        }
    }

    /// Planar pose; yaw extracted from the full quaternion.
    pub fn pose(&self) -> Pose2 {
        let yaw = (2.0 * (self.qw * self.qz + self.qx * self.qy))
            .atan2(1.0 - 2.0 * (self.qy * self.qy + self.qz * self.qz));
        Pose2::new(self.tx, self.ty, wrap_angle(yaw))
    }

    pub fn emit(records: &[TumRecord]) -> String {
        let mut out = String::with_capacity(records.len() * 96);
        for r in records {
            writeln!(
                out,
                "{} {} {} {} {} {} {} {}",
                r.timestamp, r.tx, r.ty, r.tz, r.qx, r.qy, r.qz, r.qw
            )
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Vec<TumRecord>> {
        let mut out = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
            if v.len() != 8 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    msg: format!("expected 8 fields, found {}", v.len()),
                });
            }
            out.push(TumRecord {
                timestamp: v[0],
                tx: v[1],
                ty: v[2],
                tz: v[3],
                qx: v[4],
                qy: v[5],
                qz: v[6],
                qw: v[7],
            });
        }
        Ok(out)
    }
}
