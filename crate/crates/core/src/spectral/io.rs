//! Field files: raw little-endian `f64` values plus a JSON sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Field, Grid};
use crate::error::{Error, Result};

pub const FIELD_FORMAT: &str = "f64-le/row-major";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub grid: Grid,
    pub spacing: f64,
    /// Binary file name, relative to the sidecar.
    pub data: String,
    pub mass: f64,
}

/// Writes `<stem>.bin` and `<stem>.json`; returns the sidecar path.
pub fn write_field(field: &Field, stem: &Path) -> Result<PathBuf> {
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
    let header = FieldHeader {
        format: FIELD_FORMAT.to_string(),
        grid: *field.grid(),
        spacing: field.grid().spacing(),
        data: bin
            .file_name()
            .expect("stem has a file name")
            .to_string_lossy()
            .into_owned(),
        mass: field.mass(),
    };
    fs::write(&json, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&json, e))?;
    Ok(json)
}

pub fn read_field(sidecar: &Path) -> Result<Field> {
    let text = fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
    let header: FieldHeader = serde_json::from_str(&text)?;
    if header.format != FIELD_FORMAT {
        return Err(Error::InvalidInput(format!(
            "unsupported field format {:?}",
            header.format
        )));
    }
    let bin = sidecar.parent().unwrap_or(Path::new(".")).join(&header.data);
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if bytes.len() != 8 * header.grid.len() {
        return Err(Error::InvalidInput(format!(
            "{} holds {} bytes, expected {}",
            bin.display(),
            bytes.len(),
            8 * header.grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Field::new(header.grid, values)
}

/// `x,value` rows for a one-dimensional field.
pub fn write_field_csv(field: &Field, path: &Path) -> Result<()> {
    let g = field.grid();
    if g.dim() != 1 {
        return Err(Error::InvalidInput("CSV export is only defined for d = 1".into()));
    }
    let mut out = String::from("x,value\n");
    for (i, v) in field.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", g.coordinate(i), v));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(2, 8, 3.0).unwrap();
        let f = Field::from_fn(g, |x| (x[0] * 1.3).sin() + x[1].powi(3) / 7.0);
        let sidecar = write_field(&f, &dir.path().join("u")).unwrap();
        assert_eq!(read_field(&sidecar).unwrap(), f);
    }

    #[test]
    fn csv_only_for_one_dimension() {
        let dir = tempfile::tempdir().unwrap();
        let f1 = Field::constant(Grid::new(1, 4, 1.0).unwrap(), 0.5);
        write_field_csv(&f1, &dir.path().join("a.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(text.lines().count(), 5);
        let f2 = Field::constant(Grid::new(2, 4, 1.0).unwrap(), 0.5);
        assert!(write_field_csv(&f2, &dir.path().join("b.csv")).is_err());
    }
}
