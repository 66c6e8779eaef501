use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};

use nalgebra::Vector2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::size_class::{InstrumentSize, SizeClass};

/// One instrument of a corpus metadata table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstrumentRecord {
    pub inventory_id: String,
    pub size: InstrumentSize,
    pub size_class: SizeClass,
    /// Free text; `?` marks unknown or uncertain values and is kept as is.
    pub attribution: Option<String>,
    pub date: Option<String>,
    pub sound_board_path: Option<PathBuf>,
    pub back_path: Option<PathBuf>,
    pub body_path: Option<PathBuf>,
    /// Unit vector toward the neck in the mesh frame.
    #[serde(serialize_with = "ser_vec2")]
    pub neck_direction: Vector2<f64>,
    pub notes: String,
    /// Museum documentation link; stored, never fetched.
    pub link: Option<String>,
}

fn ser_vec2<S: serde::Serializer>(v: &Vector2<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    [v.x, v.y].serialize(s)
}

impl InstrumentRecord {
    /// Record with default metadata, for programmatic use.
    pub fn new(inventory_id: impl Into<String>, size: InstrumentSize) -> Self {
        InstrumentRecord {
            inventory_id: inventory_id.into(),
            size,
            size_class: size.default_size_class(),
            attribution: None,
            date: None,
            sound_board_path: None,
            back_path: None,
            body_path: None,
            neck_direction: Vector2::x(),
            notes: String::new(),
            link: None,
        }
    }
}

const REQUIRED: [&str; 2] = ["inventory_id", "size"];

fn parse_direction(s: &str, line: usize) -> Result<Vector2<f64>> {
    let parts: Vec<&str> = s
        .split(|c: char| c == ';' || c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    let bad = || Error::format_at_line(line, format!("invalid neck_direction {s:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let x: f64 = parts[0].parse().map_err(|_| bad())?;
    let y: f64 = parts[1].parse().map_err(|_| bad())?;
    let v = Vector2::new(x, y);
    let n = v.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(bad());
    }
    Ok(v / n)
}

/// Reads a corpus table. Mesh paths are resolved against the table's
/// directory.
pub fn load_corpus_metadata(path: &Path) -> Result<Vec<InstrumentRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    read_corpus(file, &base)
}

pub fn read_corpus<R: std::io::Read>(input: R, base: &Path) -> Result<Vec<InstrumentRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let column: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    for name in REQUIRED {
        if !column.contains_key(name) {
            return Err(Error::format_at_line(1, format!("missing column {name:?}")));
        }
    }
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let rec = result?;
        let line = row + 2;
        let get = |name: &str| -> Option<&str> {
            column
                .get(name)
                .and_then(|&i| rec.get(i))
                .filter(|s| !s.is_empty())
        };
        let id = get("inventory_id")
            .ok_or_else(|| Error::format_at_line(line, "empty inventory_id"))?
            .to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let size: InstrumentSize = get("size").unwrap_or("").parse()?;
        let size_class = match get("size_class_override") {
            Some(s) => s.parse()?,
            None => size.default_size_class(),
        };
        let path_of = |name: &str| get(name).map(|p| base.join(p));
        records.push(InstrumentRecord {
            inventory_id: id,
            size,
            size_class,
            attribution: get("attribution").map(str::to_string),
            date: get("date").map(str::to_string),
            sound_board_path: path_of("sound_board_path"),
            back_path: path_of("back_path"),
            body_path: path_of("body_path"),
            neck_direction: match get("neck_direction") {
                Some(s) => parse_direction(s, line)?,
                None => Vector2::x(),
            },
            notes: get("notes").unwrap_or("").to_string(),
            link: get("link").map(str::to_string),
        });
    }
    if records.is_empty() {
        log::warn!("corpus table has no instruments");
    }
    Ok(records)
}
