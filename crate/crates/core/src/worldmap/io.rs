//! Map files.
//!
//! A map is three component files plus a metadata file:
//!
//! - occupancy: 8-bit grayscale PGM or PNG, top row = highest `j`
//! - material index: CSV `i,j,material_id` (one row per occupied cell) or a
//!   same-size 8-bit image whose pixel value is the material id (255 = none)
//! - spectral library: see [`SpectralLibrary`]
//! - metadata: `key: value` lines with `resolution`, `origin_x`, `origin_y`,
//!   `origin_theta`, `occupancy`, `materials`, `library`; component paths
//!   are relative to the metadata file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat, Luma};

use super::{MapError, MaterialMap, Occupancy};
use crate::error::{Error, Result};
use crate::motion::Pose2;
use crate::spectral::SpectralLibrary;

const NO_MATERIAL_PIXEL: u8 = 255;
const OCCUPIED_PIXEL: u8 = 0;
const FREE_PIXEL: u8 = 254;
const UNKNOWN_PIXEL: u8 = 128;

/// Pixel thresholds as fractions of the maximum pixel value: darker than
/// `occupied` is occupied, brighter than `free` is free, in between unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyThresholds {
    pub occupied: f64,
    pub free: f64,
}

impl Default for OccupancyThresholds {
    fn default() -> Self {
        OccupancyThresholds {
            occupied: 0.196,
            free: 0.65,
        }
    }
}

impl OccupancyThresholds {
    pub fn classify(&self, pixel: u8) -> Occupancy {
        let p = pixel as f64;
        if p < self.occupied * 255.0 {
            Occupancy::Occupied
        } else if p > self.free * 255.0 {
            Occupancy::Free
        } else {
            Occupancy::Unknown
        }
    }
}

fn read_gray(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })?;
    Ok(img.to_luma8())
}

fn is_csv(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn parse_material_csv(path: &Path, width: usize, height: usize) -> Result<Vec<Option<usize>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut materials = vec![None; width * height];
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let perr = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(perr(format!("expected `i,j,material_id`, got {line:?}")));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|e| perr(format!("{s:?}: {e}")));
        let (i, j, m) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        if i >= width || j >= height {
            return Err(MapError::MapMismatch(format!(
                "material entry ({i}, {j}) outside the {width}x{height} occupancy image"
            ))
            .into());
        }
        materials[j * width + i] = Some(m);
    }
    Ok(materials)
}

fn flip_row(height: usize, j: usize) -> u32 {
    (height - 1 - j) as u32
}

/// Load a map from its three component files.
pub fn load_map(
    occupancy_path: &Path,
    material_index_path: &Path,
    library_path: &Path,
    resolution: f64,
    origin: Pose2,
) -> Result<MaterialMap> {
    let img = read_gray(occupancy_path)?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let thresholds = OccupancyThresholds::default();
    let mut occupancy = vec![Occupancy::Unknown; width * height];
    for j in 0..height {
        for i in 0..width {
            let Luma([p]) = *img.get_pixel(i as u32, flip_row(height, j));
            occupancy[j * width + i] = thresholds.classify(p);
        }
    }

    let materials = if is_csv(material_index_path) {
        parse_material_csv(material_index_path, width, height)?
    } else {
        let mimg = read_gray(material_index_path)?;
        if mimg.width() as usize != width || mimg.height() as usize != height {
            return Err(MapError::MapMismatch(format!(
                "occupancy image is {width}x{height} but material image is {}x{}",
                mimg.width(),
                mimg.height()
            ))
            .into());
        }
        let mut materials = vec![None; width * height];
        for j in 0..height {
            for i in 0..width {
                let Luma([p]) = *mimg.get_pixel(i as u32, flip_row(height, j));
                if p != NO_MATERIAL_PIXEL {
                    materials[j * width + i] = Some(p as usize);
                }
            }
        }
        materials
    };

    let library = SpectralLibrary::load(library_path)?;
    Ok(MaterialMap::new(
        width, height, resolution, origin, occupancy, materials, library,
    )?)
}

/// Metadata file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFiles {
    pub resolution: f64,
    pub origin: Pose2,
    pub occupancy: PathBuf,
    pub materials: PathBuf,
    pub library: PathBuf,
}

impl MapFiles {
    pub const DEFAULT_NAME: &'static str = "map.txt";

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        let mut get = std::collections::HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(':').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("expected `key: value`, got {line:?}"),
            })?;
            get.insert(k.trim().to_string(), (idx + 1, v.trim().to_string()));
        }
        let field = |k: &str| -> Result<(usize, String)> {
            get.get(k).cloned().ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("missing `{k}`"),
            })
        };
        let num = |k: &str| -> Result<f64> {
            let (line, v) = field(k)?;
            v.parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("{k}: {e}"),
            })
        };
        let origin_theta = num("origin_theta")?;
        Ok(MapFiles {
            resolution: num("resolution")?,
            origin: Pose2 {
                x: num("origin_x")?,
                y: num("origin_y")?,
                theta: origin_theta,
            },
            occupancy: base.join(field("occupancy")?.1),
            materials: base.join(field("materials")?.1),
            library: base.join(field("library")?.1),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MapFiles::parse(&text, path)
    }

    /// Accepts the metadata file itself or a directory containing `map.txt`.
    pub fn locate(path: &Path) -> PathBuf {
        if path.is_dir() {
            path.join(Self::DEFAULT_NAME)
        } else {
            path.to_path_buf()
        }
    }

    pub fn load(&self) -> Result<MaterialMap> {
        load_map(&self.occupancy, &self.materials, &self.library, self.resolution, self.origin)
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl MaterialMap {
    /// Load from a metadata file or a directory holding `map.txt`.
    pub fn load(path: &Path) -> Result<MaterialMap> {
        MapFiles::read(&MapFiles::locate(path))?.load()
    }

    /// Write `map.txt`, `occupancy.pgm`, `materials.csv` and `library.txt`
    /// into `dir`, returning the metadata path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = MapFiles {
            resolution: self.resolution(),
            origin: self.origin(),
            occupancy: dir.join("occupancy.pgm"),
            materials: dir.join("materials.csv"),
            library: dir.join("library.txt"),
        };

        let (w, h) = (self.width(), self.height());
        let mut img = GrayImage::new(w as u32, h as u32);
        let mut csv = String::from("i,j,material_id\n");
        for j in 0..h {
            for i in 0..w {
                let pixel = match self.occupancy(i, j) {
                    Occupancy::Occupied => OCCUPIED_PIXEL,
                    Occupancy::Free => FREE_PIXEL,
                    Occupancy::Unknown => UNKNOWN_PIXEL,
                };
                img.put_pixel(i as u32, flip_row(h, j), Luma([pixel]));
                if let Some(m) = self.material(i, j) {
                    writeln!(csv, "{i},{j},{m}").unwrap();
                }
            }
        }
        img.save_with_format(&files.occupancy, ImageFormat::Pnm).map_err(|e| Error::Parse {
            path: files.occupancy.clone(),
            line: 0,
            msg: e.to_string(),
        })?;
        std::fs::write(&files.materials, csv).map_err(|e| Error::io(&files.materials, e))?;
        self.library().save(&files.library)?;

        let meta_path = dir.join(MapFiles::DEFAULT_NAME);
        let origin = self.origin();
        let meta = format!(
            "resolution: {}\norigin_x: {}\norigin_y: {}\norigin_theta: {}\noccupancy: {}\nmaterials: {}\nlibrary: {}\n",
            self.resolution(),
            origin.x,
            origin.y,
            origin.theta,
            file_name(&files.occupancy),
            file_name(&files.materials),
            file_name(&files.library),
        );
        std::fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))?;
        Ok(meta_path)
    }
}
