use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{generate_to_disk, run_pipeline, RunManifest};
use crate::error::{Error, Result};
use crate::eval::ErrorStats;
use crate::sensing::SensorModelKind;
use crate::spectral::MetricKind;

/// ε_R values of the weight sweep.
pub const EPS_RANGE_GRID: [f64; 5] = [0.2, 0.4, 0.5, 0.6, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Metric,
    Eps,
    Model,
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "metric" => Ok(SweepAxis::Metric),
            "eps" => Ok(SweepAxis::Eps),
            "model" => Ok(SweepAxis::Model),
            other => Err(format!("unknown sweep axis `{other}` (expected metric, eps or model)")),
        }
    }
}

impl SweepAxis {
    /// One (label, manifest) per axis value.
    pub fn variants(self, base: &RunManifest) -> Vec<(String, RunManifest)> {
        let with = |label: String, f: &dyn Fn(&mut RunManifest)| {
            let mut m = base.clone();
            f(&mut m);
            m.output = base.output.join(&label);
            (label, m)
        };
        match self {
            SweepAxis::Metric => MetricKind::ALL
                .iter()
                .map(|k| with(k.as_str().to_string(), &|m| m.sensor.metric.kind = *k))
                .collect(),
            SweepAxis::Eps => EPS_RANGE_GRID
                .iter()
                .map(|eps_r| {
                    with(format!("eps_r={eps_r}"), &|m| {
                        m.sensor.eps_range = *eps_r;
                        m.sensor.eps_material = 1.0 - eps_r;
                    })
                })
                .collect(),
            SweepAxis::Model => [SensorModelKind::Beam, SensorModelKind::LikelihoodField]
                .iter()
                .map(|k| with(k.to_string(), &|m| m.sensor.model = *k))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config: String,
    /// `ok`, or the error name of a failed run.
    pub status: String,
    pub ate: Option<ErrorStats>,
    /// Filter wall-clock seconds.
    pub seconds: Option<f64>,
}

/// Run the base manifest once per axis value, sequentially so wall-clock
/// figures are comparable. A requested dataset is generated once and
/// shared by all rows. Rows come back ordered by ATE RMSE, failures last.
pub fn run_sweep(base: &RunManifest, axis: SweepAxis) -> Result<Vec<SweepRow>> {
    let mut base = base.clone();
    if let Some(spec) = base.generate.take() {
        generate_to_disk(&spec, &base.map, &base.log, &base.ground_truth)?;
    }
    std::fs::create_dir_all(&base.output).map_err(|e| Error::io(&base.output, e))?;
    let mut rows: Vec<SweepRow> = axis
        .variants(&base)
        .into_iter()
        .map(|(config, m)| match run_pipeline(&m) {
            Ok(s) => SweepRow {
                config,
                status: "ok".into(),
                ate: Some(s.ate.aligned),
                seconds: Some(s.seconds),
            },
            Err(e) => SweepRow {
                config,
                status: e.name().into(),
                ate: None,
                seconds: None,
            },
        })
        .collect();
    rows.sort_by(|a, b| match (&a.ate, &b.ate) {
        (Some(x), Some(y)) => x.rmse.total_cmp(&y.rmse),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(rows)
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("config,status,rmse,mean,median,sd,min,max,seconds\n");
    for r in rows {
        write!(out, "{},{}", r.config, r.status).unwrap();
        match &r.ate {
            Some(s) => {
                for v in [s.rmse, s.mean, s.median, s.sd, s.min, s.max] {
                    write!(out, ",{v}").unwrap();
                }
            }
            None => out.push_str(",,,,,,"),
        }
        match r.seconds {
            Some(t) => writeln!(out, ",{t:.6}").unwrap(),
            None => out.push_str(",\n"),
        }
    }
    out
}
