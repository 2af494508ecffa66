//! Spectral library files.
//!
//! Text format: a header `grid_start grid_step n_bins`, then one spectrum
//! per line as `id,name,i_0,i_1,...,i_{n-1}`. IDs are dense from 0 and must
//! appear in order. Floats are written in shortest round-trip form, so a
//! load/save cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{baseline_correct, MetricKind, SpectralError, SpectralGrid, Spectrum};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLibrary {
    grid: SpectralGrid,
    names: Vec<String>,
    spectra: Vec<Spectrum>,
}

impl SpectralLibrary {
    pub fn new(grid: SpectralGrid) -> Self {
        SpectralLibrary {
            grid,
            names: Vec::new(),
            spectra: Vec::new(),
        }
    }

    /// Append a spectrum and return its id.
    pub fn push(&mut self, name: impl Into<String>, spectrum: Spectrum) -> Result<usize> {
        if spectrum.grid() != self.grid {
            return Err(crate::spectral::SpectralError::GridMismatch.into());
        }
        let name = name.into();
        if name.contains(',') || name.contains('\n') {
            return Err(Error::Config(format!("library names may not contain commas: {name:?}")));
        }
        self.names.push(name);
        self.spectra.push(spectrum);
        Ok(self.spectra.len() - 1)
    }

    pub fn grid(&self) -> SpectralGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Spectrum> {
        self.spectra.get(id)
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn spectra(&self) -> &[Spectrum] {
        &self.spectra
    }

    /// Id of the entry nearest to `observed` once both have had a baseline
    /// of `baseline_order` removed and the metric's normalization applied.
    pub fn classify(
        &self,
        observed: &Spectrum,
        kind: MetricKind,
        window: usize,
        baseline_order: usize,
    ) -> std::result::Result<usize, SpectralError> {
        let obs = kind.prepare(&baseline_correct(observed, baseline_order)?)?;
        let mut best = (f64::INFINITY, 0);
        for (id, s) in self.spectra.iter().enumerate() {
            obs.ensure_comparable(s)?;
            let reference = kind.prepare(&baseline_correct(s, baseline_order)?)?;
            let d = kind.distance_prepared(&obs, &reference, window)?;
            if d < best.0 {
                best = (d, id);
            }
        }
        if self.spectra.is_empty() {
            return Err(SpectralError::InsufficientLibrary(0));
        }
        Ok(best.1)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.grid.start, self.grid.step, self.grid.len);
        for (id, (name, s)) in self.names.iter().zip(&self.spectra).enumerate() {
            write!(out, "{id},{name}").unwrap();
            for v in s.intensities() {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty library file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(perr(1, format!("expected `grid_start grid_step n_bins`, got {header:?}")));
        }
        let start: f64 = fields[0].parse().map_err(|e| perr(1, format!("grid_start: {e}")))?;
        let step: f64 = fields[1].parse().map_err(|e| perr(1, format!("grid_step: {e}")))?;
        let len: usize = fields[2].parse().map_err(|e| perr(1, format!("n_bins: {e}")))?;
        let grid = SpectralGrid::new(start, step, len).map_err(|e| perr(1, e.to_string()))?;

        let mut lib = SpectralLibrary::new(grid);
        for (idx, line) in lines {
            let lineno = idx + 1;
            let mut parts = line.trim_end().split(',');
            let id: usize = parts
                .next()
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|e| perr(lineno, format!("id: {e}")))?;
            if id != lib.len() {
                return Err(perr(lineno, format!("expected id {}, found {id}", lib.len())));
            }
            let name = parts.next().ok_or_else(|| perr(lineno, "missing name".into()))?;
            let values = parts
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| perr(lineno, format!("intensity: {e}")))?;
            let spectrum = Spectrum::new(grid, values).map_err(|e| perr(lineno, e.to_string()))?;
            lib.push(name, spectrum)?;
        }
        Ok(lib)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SpectralLibrary::parse(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
