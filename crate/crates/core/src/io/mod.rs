//! File formats: pool CSV, scene and annotation JSON, dataset statistics
//! and run configuration.

pub mod annotations;
pub mod config;
pub mod fixture;
pub mod grouping;
pub mod pool;
pub mod stats;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

/// Version written to, and required from, every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}{source}", prefix(path))]
    Io {
        path: Option<PathBuf>,
        #[source]
        source: io::Error,
    },
    #[error("{}line {line}: {message}", prefix(path))]
    Parse { path: Option<PathBuf>, line: u64, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("{}schema version {found} is not supported (expected {expected})", prefix(path))]
    SchemaVersion { path: Option<PathBuf>, found: String, expected: u32 },
}

fn prefix(path: &Option<PathBuf>) -> String {
    path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default()
}

impl DataError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: Some(path.to_path_buf()), source }
    }

    pub fn parse(line: u64, message: impl Into<String>) -> Self {
        Self::Parse { path: None, line, message: message.into() }
    }

    pub fn with_path(self, p: &Path) -> Self {
        match self {
            Self::Io { path: None, source } => Self::Io { path: Some(p.into()), source },
            Self::Parse { path: None, line, message } => Self::Parse { path: Some(p.into()), line, message },
            Self::SchemaVersion { path: None, found, expected } => {
                Self::SchemaVersion { path: Some(p.into()), found, expected }
            }
            Self::Validation(m) => Self::Validation(format!("{}: {m}", p.display())),
            other => other,
        }
    }

    /// Process exit status: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } => 2,
            _ => 1,
        }
    }
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| DataError::Validation(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(DataError::io(path, e));
    }
    Ok(())
}

/// Pretty JSON with every float written as 17 significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
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

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    buf
}

/// Parses a versioned JSON document, checking `schema_version` first.
pub fn from_json_bytes<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, DataError> {
    let probe: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| DataError::parse(e.line() as u64, e.to_string()))?;
    match probe.get("schema_version") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(v) => {
            return Err(DataError::SchemaVersion { path: None, found: v.to_string(), expected: SCHEMA_VERSION })
        }
        None => return Err(DataError::parse(1, "missing `schema_version`")),
    }
    serde_json::from_slice(bytes).map_err(|e| DataError::parse(e.line() as u64, e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, DataError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    from_json_bytes(&bytes).map_err(|e| e.with_path(path))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), DataError> {
    write_atomic(path.as_ref(), &to_json_bytes(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Doc {
        schema_version: u32,
        values: Vec<f64>,
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        let text = String::from_utf8(to_json_bytes(&Doc { schema_version: 1, values: vec![0.1, -2.5e-300] })).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("-2.5000000000000000e-300"), "{text}");
    }

    #[test]
    fn version_gate() {
        let err = from_json_bytes::<Doc>(br#"{"schema_version": 99, "values": []}"#).unwrap_err();
        assert!(matches!(err, DataError::SchemaVersion { ref found, .. } if found == "99"));
        let err = from_json_bytes::<Doc>(br#"{"schema_version": "99", "values": []}"#).unwrap_err();
        assert!(matches!(err, DataError::SchemaVersion { .. }));
        let err = from_json_bytes::<Doc>(br#"{"values": []}"#).unwrap_err();
        assert!(matches!(err, DataError::Parse { .. }));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.json");
        write_json(&path, &Doc { schema_version: 1, values: vec![1.0] }).unwrap();
        write_json(&path, &Doc { schema_version: 1, values: vec![2.0] }).unwrap();
        let back: Doc = read_json(&path).unwrap();
        assert_eq!(back.values, vec![2.0]);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let missing = read_json::<Doc>(dir.path().join("nope.json")).unwrap_err();
        assert_eq!(missing.exit_code(), 2);
    }

    proptest! {
        #[test]
        fn finite_floats_round_trip_bit_exact(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..32)) {
            let doc = Doc { schema_version: 1, values };
            let back: Doc = from_json_bytes(&to_json_bytes(&doc)).unwrap();
            for (a, b) in doc.values.iter().zip(&back.values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
