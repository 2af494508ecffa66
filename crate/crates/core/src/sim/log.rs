//! Line-delimited JSON scan/odometry log: one record per line,
//! `{"t", "odom": {dx, dy, dtheta}, "scan": [{range?, bearing, spectrum_id? | intensities?}]}`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::OdometryDelta;
use crate::sensing::{ScanEntry, ScanTuple};
use crate::spectral::{SpectralLibrary, Spectrum};
use crate::worldmap::MaterialMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBeam {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
    pub bearing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensities: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub odom: OdometryDelta,
    pub scan: Vec<LogBeam>,
}

impl LogRecord {
    /// Store library ids when `by_id` and the spectrum is a library entry,
    /// raw intensities otherwise.
    pub fn from_scan(odom: OdometryDelta, scan: &ScanTuple, map: &MaterialMap, by_id: bool) -> Self {
        let library = map.library();
        let beams = scan
            .entries
            .iter()
            .map(|e| {
                let id = if by_id {
                    library.spectra().iter().position(|s| *s == e.spectrum)
                } else {
                    None
                };
                LogBeam {
                    range: e.range,
                    bearing: e.bearing,
                    spectrum_id: id,
                    intensities: id.is_none().then(|| e.spectrum.intensities().to_vec()),
                }
            })
            .collect();
        LogRecord {
            t: scan.timestamp,
            odom,
            scan: beams,
        }
    }

    /// Resolve spectra against `library`.
    pub fn to_scan(&self, library: &SpectralLibrary) -> std::result::Result<ScanTuple, String> {
        let entries = self
            .scan
            .iter()
            .map(|b| {
                let spectrum = match (&b.spectrum_id, &b.intensities) {
                    (Some(id), None) => library
                        .get(*id)
                        .cloned()
                        .ok_or_else(|| format!("spectrum_id {id} not in library of {}", library.len()))?,
                    (None, Some(v)) => Spectrum::new(library.grid(), v.clone()).map_err(|e| e.to_string())?,
                    _ => return Err("beam needs exactly one of spectrum_id and intensities".to_string()),
                };
                Ok(ScanEntry {
                    range: b.range,
                    bearing: b.bearing,
                    spectrum,
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let scan = ScanTuple {
            timestamp: self.t,
            entries,
        };
        scan.validate(f64::INFINITY).map_err(|e| e.to_string())?;
        Ok(scan)
    }
}

pub fn log_to_string(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("log records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_log(path: &Path, records: &[LogRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(log_to_string(records).as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn parse_log(text: &str, path: &Path) -> Result<Vec<LogRecord>> {
    let mut records: Vec<LogRecord> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            msg,
        };
        let r: LogRecord = serde_json::from_str(line).map_err(|e| perr(e.to_string()))?;
        if let Some(last) = records.last() {
            if !(r.t > last.t) {
                return Err(perr(format!("timestamp {} does not increase", r.t)));
            }
        }
        records.push(r);
    }
    Ok(records)
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log(&text, path)
}

/// Resolve every record into (odometry, scan) pairs.
pub fn resolve_log(records: &[LogRecord], library: &SpectralLibrary, path: &Path) -> Result<Vec<(OdometryDelta, ScanTuple)>> {
    records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            r.to_scan(library).map(|s| (r.odom, s)).map_err(|msg| Error::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                msg,
            })
        })
        .collect()
}
