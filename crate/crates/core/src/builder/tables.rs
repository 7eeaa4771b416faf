//! Raw ingestion tables: `parks.csv`, `grids.csv`, `pois.jsonl`,
//! `enterprises.jsonl`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BuildError;

pub const PARKS_FILE: &str = "parks.csv";
pub const GRIDS_FILE: &str = "grids.csv";
pub const POIS_FILE: &str = "pois.jsonl";
pub const ENTERPRISES_FILE: &str = "enterprises.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkRow {
    pub park_id: String,
    pub name: String,
    /// Semicolon-separated in the CSV file.
    #[serde(with = "semicolon_list")]
    pub planned_industries: Vec<String>,
    pub row_min: u32,
    pub row_max: u32,
    pub col_min: u32,
    pub col_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub grid_id: String,
    pub row: u32,
    pub col: u32,
    pub lat: f64,
    pub lon: f64,
    pub park_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiRow {
    pub poi_id: String,
    pub category: String,
    pub grid_id: String,
    pub name: String,
    #[serde(default)]
    pub address: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnterpriseRow {
    pub ent_id: String,
    pub name: String,
    #[serde(default)]
    pub primary_industry: Option<String>,
    #[serde(default)]
    pub secondary_industry: Option<String>,
    #[serde(default)]
    pub tertiary_industry: Option<String>,
    #[serde(default)]
    pub scopes: Vec<String>,
    pub grid_id: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawTables {
    pub parks: Vec<ParkRow>,
    pub grids: Vec<GridRow>,
    pub pois: Vec<PoiRow>,
    pub enterprises: Vec<EnterpriseRow>,
}

impl RawTables {
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<RawTables, BuildError> {
        let dir = dir.as_ref();
        Ok(RawTables {
            parks: read_csv(&dir.join(PARKS_FILE))?,
            grids: read_csv(&dir.join(GRIDS_FILE))?,
            pois: read_jsonl(&dir.join(POIS_FILE))?,
            enterprises: read_jsonl(&dir.join(ENTERPRISES_FILE))?,
        })
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(), BuildError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| BuildError::io(dir, e))?;
        write_csv(&dir.join(PARKS_FILE), &self.parks)?;
        write_csv(&dir.join(GRIDS_FILE), &self.grids)?;
        write_jsonl(&dir.join(POIS_FILE), &self.pois)?;
        write_jsonl(&dir.join(ENTERPRISES_FILE), &self.enterprises)
    }
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, BuildError> {
    let file = File::open(path).map_err(|e| BuildError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for (idx, rec) in reader.deserialize().enumerate() {
        rows.push(rec.map_err(|e| BuildError::Parse {
            file: path.to_path_buf(),
            line: idx + 2,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, BuildError> {
    let file = File::open(path).map_err(|e| BuildError::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BuildError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| BuildError::Parse {
            file: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BuildError> {
    let file = File::create(path).map_err(|e| BuildError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let to_err = |e: csv::Error| BuildError::Parse {
        file: PathBuf::from(path),
        line: 0,
        message: e.to_string(),
    };
    for row in rows {
        writer.serialize(row).map_err(to_err)?;
    }
    writer.flush().map_err(|e| BuildError::io(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BuildError> {
    let file = File::create(path).map_err(|e| BuildError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).expect("rows serialize");
        writeln!(out, "{line}").map_err(|e| BuildError::io(path, e))?;
    }
    out.flush().map_err(|e| BuildError::io(path, e))
}

mod semicolon_list {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(items: &[String], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&items.join(";"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(raw
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect())
    }
}
