//! Artifacts on disk: atomic writes, the binary field format with its JSON
//! sidecar, and run manifests.
//!
//! A field file holds the half-domain nodal values as little-endian `f64`,
//! axis-major with `x1` slowest and `y` fastest. The sidecar `<stem>.json`
//! records `n`, `res`, `a`, the axis order and the SHA-256 of the data.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, LabError, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, GridSpec};

/// Writes through a temporary file in the same directory and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| LabError::Invalid(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub n: usize,
    pub res: usize,
    pub a: f64,
    pub order: String,
    /// Nodes along `y`, which covers only `[0, 1]`.
    pub ny: usize,
    pub sha256: String,
}

pub fn sidecar_path(field: &Path) -> PathBuf {
    field.with_extension("json")
}

pub fn field_bytes(field: &ScalarField) -> Vec<u8> {
    field.values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Writes the field and its sidecar; returns the data hash.
pub fn write_field(path: &Path, field: &ScalarField) -> Result<String> {
    let bytes = field_bytes(field);
    let g = &field.grid;
    let n = g.n();
    let order = (1..=n).map(|i| format!("x{i}")).collect::<Vec<_>>().join("..");
    let order = if n > 1 { format!("{order},y") } else { "x1,y".to_string() };
    let meta = FieldSidecar { n, res: g.res(), a: g.a(), order, ny: g.ny, sha256: sha256_hex(&bytes) };
    write_atomic(path, &bytes)?;
    write_atomic(&sidecar_path(path), serde_json::to_string_pretty(&meta).expect("sidecar serializes").as_bytes())?;
    Ok(meta.sha256)
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let meta: FieldSidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)
        .map_err(|e| LabError::Parse(format!("field sidecar: {e}")))?;
    let bytes = fs::read(path)?;
    if sha256_hex(&bytes) != meta.sha256 {
        return invalid(format!("{} does not match the hash in its sidecar", path.display()));
    }
    let grid = Arc::new(Grid::new(GridSpec::new(meta.n, meta.res, meta.a))?);
    if bytes.len() != 8 * grid.len() || grid.ny != meta.ny {
        return invalid(format!("{} has {} bytes, expected {}", path.display(), bytes.len(), 8 * grid.len()));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok(ScalarField::new(grid, values))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub artifacts: Vec<Artifact>,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(String, f64)>,
    pub timestamp: String,
}

/// Collects artifacts of one command and writes them with a manifest.
pub struct Output {
    pub dir: PathBuf,
    pub artifacts: Vec<Artifact>,
}

impl Output {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), artifacts: Vec::new() }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.artifacts.push(Artifact { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::Invalid(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_field(&mut self, name: &str, field: &ScalarField) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let hash = write_field(&path, field)?;
        self.artifacts.push(Artifact { path: name.to_string(), sha256: hash });
        let side = sidecar_path(Path::new(name));
        let bytes = fs::read(self.dir.join(&side))?;
        self.artifacts.push(Artifact { path: side.to_string_lossy().into_owned(), sha256: sha256_hex(&bytes) });
        Ok(path)
    }

    pub fn finish(self, command: &str, config_hash: &str, seed: u64, timings: Vec<(String, f64)>) -> Result<PathBuf> {
        let manifest = Manifest {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            artifacts: self.artifacts,
            timings,
            timestamp: unix_timestamp(),
        };
        let path = self.dir.join("manifest.json");
        write_atomic(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes").as_bytes())?;
        Ok(path)
    }
}

fn unix_timestamp() -> String {
    let t = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Arc::new(Grid::new(GridSpec::new(1, 17, -0.3)).unwrap());
        let f = ScalarField::from_fn(grid, |x| x[0] * x[0] - x[1]);
        let path = dir.path().join("u.bin");
        write_field(&path, &f).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.values, f.values);
        let meta: FieldSidecar = serde_json::from_slice(&fs::read(dir.path().join("u.json")).unwrap()).unwrap();
        assert_eq!(meta.order, "x1,y");
    }

    #[test]
    fn tampered_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Arc::new(Grid::new(GridSpec::new(1, 17, 0.0)).unwrap());
        let f = ScalarField::from_fn(grid, |x| x[0]);
        let path = dir.path().join("u.bin");
        write_field(&path, &f).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[3] ^= 1;
        fs::write(&path, bytes).unwrap();
        assert!(read_field(&path).is_err());
    }
}
