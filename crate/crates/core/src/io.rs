//! Run directories: CSV series, JSON reports and a hash-verifiable manifest.
//!
//! Floats are written in their shortest round-trip form, so every value reads
//! back bit-for-bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{Result, ShockError};
use crate::functionals::FunctionalReport;
use crate::profile::{Formulation, ShockProfile};
use crate::shift::ShiftTrajectory;
use crate::solver::FluidState;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const PROFILE_COLUMNS: [&str; 4] = ["xi", "v", "u", "h"];
pub const TRAJECTORY_COLUMNS: [&str; 8] = ["t", "X", "Xdot", "Y", "J_bad", "entropy", "G2_accum", "D_accum"];
pub const SNAPSHOT_COLUMNS: [&str; 3] = ["xi", "v", "field_b"];

fn io_err(path: &Path, e: impl std::fmt::Display) -> ShockError {
    ShockError::Io(format!("{}: {e}", path.display()))
}

fn write_rows<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// `xi, v, u, h` at the profile's own nodes.
pub fn write_profile_csv(path: &Path, profile: &ShockProfile<f64>) -> Result<()> {
    let rows = (0..profile.grid.n).map(|i| (profile.grid.x(i), profile.v[i], profile.u[i], profile.h[i]));
    write_rows(path, &PROFILE_COLUMNS, rows)
}

/// One row per recorded step of a co-advanced run.
pub fn write_trajectory_csv(path: &Path, tr: &ShiftTrajectory) -> Result<()> {
    let rows = (0..tr.len()).map(|k| {
        (tr.t[k], tr.x[k], tr.xdot[k], tr.y[k], tr.j_bad[k], tr.entropy[k], tr.g2_accum[k], tr.d_accum[k])
    });
    write_rows(path, &TRAJECTORY_COLUMNS, rows)
}

/// `xi, v, field_b`; `field_b` is `u` or `h` following the state's formulation.
pub fn write_snapshot_csv(path: &Path, state: &FluidState<f64>) -> Result<()> {
    let rows = (0..state.grid.n).map(|i| (state.grid.x(i), state.v[i], state.w[i]));
    write_rows(path, &SNAPSHOT_COLUMNS, rows)
}

/// Full functional breakdown, one row per report, headed by the field names.
pub fn write_reports_csv(path: &Path, reports: &[FunctionalReport<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in reports {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

/// Column headers of a CSV file.
pub fn csv_header(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    Ok(r.headers().map_err(|e| io_err(path, e))?.iter().map(str::to_owned).collect())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Which field a snapshot's second column carries.
#[must_use]
pub fn field_b_name(formulation: Formulation) -> &'static str {
    match formulation {
        Formulation::Vu => "u",
        Formulation::Vh => "h",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub seed: u64,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub config: ExperimentConfig,
    /// Free-form run facts such as the truncation rule of a sweep.
    pub notes: Vec<(String, String)>,
    pub files: Vec<FileEntry>,
}

#[must_use]
pub fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Output directory that remembers every file written through it.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
    started_unix_ms: u64,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(Self { root, files: Vec::new(), started_unix_ms: unix_ms() })
    }

    #[must_use]
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Registers `name` and returns its full path; names may not escape the directory.
    pub fn path(&mut self, name: &str) -> Result<PathBuf> {
        let rel = Path::new(name);
        if rel.is_absolute() || rel.components().any(|c| !matches!(c, std::path::Component::Normal(_))) {
            return Err(ShockError::InvalidArgument(format!("output name {name:?} must be a plain relative path")));
        }
        if name == MANIFEST_NAME {
            return Err(ShockError::InvalidArgument(format!("{MANIFEST_NAME} is reserved")));
        }
        if let Some(parent) = rel.parent().filter(|p| !p.as_os_str().is_empty()) {
            let dir = self.root.join(parent);
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_owned());
        }
        Ok(self.root.join(rel))
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.path(name)?, value)
    }

    /// Hashes every registered file and writes the manifest atomically (temp file, then rename).
    pub fn finish(self, command: &str, config: &ExperimentConfig, notes: Vec<(String, String)>) -> Result<RunManifest> {
        let mut files = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let p = self.root.join(name);
            let bytes = fs::metadata(&p).map_err(|e| io_err(&p, e))?.len();
            files.push(FileEntry { path: name.clone(), bytes, sha256: sha256_file(&p)? });
        }
        let manifest = RunManifest {
            command: command.to_owned(),
            code_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: config.seed,
            started_unix_ms: self.started_unix_ms,
            finished_unix_ms: unix_ms(),
            config: config.clone(),
            notes,
            files,
        };
        let target = self.root.join(MANIFEST_NAME);
        let tmp = self.root.join(format!(".{MANIFEST_NAME}.tmp"));
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(&target, e))?;
        {
            let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
            f.write_all(text.as_bytes()).and_then(|()| f.write_all(b"\n")).map_err(|e| io_err(&tmp, e))?;
            f.sync_all().map_err(|e| io_err(&tmp, e))?;
        }
        fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))?;
        Ok(manifest)
    }
}

/// Re-hashes every file listed in `dir/manifest.json`.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let manifest: RunManifest = read_json(&dir.join(MANIFEST_NAME))?;
    for f in &manifest.files {
        let p = dir.join(&f.path);
        let digest = sha256_file(&p)?;
        if digest != f.sha256 {
            return Err(io_err(&p, format!("hash mismatch: manifest {} vs file {digest}", f.sha256)));
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config;

    fn cfg() -> ExperimentConfig {
        validate_config(ExperimentConfig::reference()).unwrap()
    }

    #[test]
    fn manifest_lists_and_verifies_every_file() {
        let tmp = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(tmp.path().join("r")).unwrap();
        run.json("report.json", &[1.0_f64, 0.1, 1e-300]).unwrap();
        let p = run.path("series/a.csv").unwrap();
        fs::write(&p, "x\n1\n").unwrap();
        let m = run.finish("test", &cfg(), vec![("k".into(), "v".into())]).unwrap();
        assert_eq!(m.files.len(), 2);
        assert_eq!(m.files[1].path, "series/a.csv");
        assert_eq!(m.files[1].bytes, 4);
        let back = verify_manifest(&tmp.path().join("r")).unwrap();
        assert_eq!(back, m);
        assert!(!tmp.path().join("r").join(".manifest.json.tmp").exists());

        fs::write(&p, "x\n2\n").unwrap();
        let err = verify_manifest(&tmp.path().join("r")).unwrap_err();
        assert!(err.to_string().contains("hash mismatch"), "{err}");
    }

    #[test]
    fn names_cannot_escape_or_clobber_the_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(tmp.path()).unwrap();
        assert!(run.path("../x.csv").is_err());
        assert!(run.path("/abs.csv").is_err());
        assert!(run.path(MANIFEST_NAME).is_err());
    }

    #[test]
    fn known_digest() {
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("abc");
        fs::write(&p, "abc").unwrap();
        assert_eq!(sha256_file(&p).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn floats_round_trip_bit_for_bit() {
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("t.csv");
        let vals = [0.1_f64, 1.0 / 3.0, -2.2250738585072014e-308, 1.7976931348623157e308, 0.0];
        write_rows(&p, &["a"], vals.iter().map(|&v| (v,))).unwrap();
        let mut r = csv::Reader::from_path(&p).unwrap();
        let back: Vec<f64> = r.records().map(|rec| rec.unwrap()[0].parse().unwrap()).collect();
        for (a, b) in vals.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let j = tmp.path().join("t.json");
        write_json(&j, &vals).unwrap();
        let back: Vec<f64> = read_json(&j).unwrap();
        for (a, b) in vals.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
