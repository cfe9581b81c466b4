//! Deterministic artifact files: fixed float formatting, config hash in every file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::CliError;

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON with every float written by [`fmt_f64`] and non-finite values as null.
struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("json serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf-8 json")
}

/// A CSV cell.
pub enum Cell {
    Int(usize),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_f64(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i)
    }
}

/// Writes artifacts into one directory and remembers their names.
pub struct ArtifactWriter {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hash: hash.to_string(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// CSV with a `# config_sha256=` line followed by a header row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> Result<(), CliError> {
        let mut out = format!("# config_sha256={}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let io_err = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(header).map_err(io_err)?;
            for row in rows {
                w.write_record(row.iter().map(Cell::render)).map_err(io_err)?;
            }
            w.flush()?;
        }
        self.put(name, &out)
    }

    /// JSON object with `config_hash` inserted as the first key.
    pub fn json(&mut self, name: &str, body: Value) -> Result<(), CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("config_hash".into(), Value::String(self.hash.clone()));
        match body {
            Value::Object(map) => obj.extend(map),
            other => {
                obj.insert("data".into(), other);
            }
        }
        self.put(name, to_json_string(&Value::Object(obj)).as_bytes())
    }

    /// Plain text with a leading `# config_sha256=` comment line.
    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# config_sha256={}\n{body}", self.hash);
        self.put(name, text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(std::f64::consts::FRAC_PI_2), "1.5707963267948966e0");
        let s = to_json_string(&json!({"a": 0.1, "b": [1, f64::NAN], "c": "x"}));
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn artifacts_embed_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path(), "abc").unwrap();
        w.csv("t.csv", &["x", "i"], vec![vec![Cell::from(0.5), Cell::from(3usize)]]).unwrap();
        w.json("t.json", json!({"v": 2.0})).unwrap();
        let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(csv, "# config_sha256=abc\nx,i\n5.0000000000000000e-1,3\n");
        let js = fs::read_to_string(dir.path().join("t.json")).unwrap();
        assert!(js.starts_with("{\n  \"config_hash\": \"abc\""));
        assert_eq!(w.written(), &["t.csv".to_string(), "t.json".to_string()]);
    }
}
