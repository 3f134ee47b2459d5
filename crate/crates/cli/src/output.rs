//! Output staging: files are written to a hidden sibling directory and
//! renamed into place only after the whole command succeeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{config_err, CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        Artifact { name: name.into(), bytes: bytes.into() }
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> CliResult<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Artifact::new(name, bytes))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Wall-clock time per named stage.
#[derive(Debug, Default)]
pub struct Stages(Vec<StageTiming>);

impl Stages {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        let seconds = t.elapsed().as_secs_f64();
        log::info!("{stage}: {seconds:.3} s");
        self.0.push(StageTiming { stage: stage.into(), seconds });
        out
    }

    pub fn into_inner(self) -> Vec<StageTiming> {
        self.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: Option<PathBuf>,
    /// SHA-256 of the resolved parameters as compact JSON.
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub stages: Vec<StageTiming>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn split(out: &Path) -> CliResult<(PathBuf, String)> {
    let name = out
        .file_name()
        .ok_or_else(|| config_err(format!("output path {} has no final component", out.display())))?
        .to_string_lossy()
        .into_owned();
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    Ok((parent, name))
}

/// An existing output directory may only be replaced if it is empty or
/// holds a previous manifest.
pub fn check_target(out: &Path) -> CliResult<()> {
    split(out)?;
    if !out.exists() {
        return Ok(());
    }
    let replaceable = out.is_dir() && (out.join(MANIFEST).is_file() || fs::read_dir(out)?.next().is_none());
    if replaceable {
        Ok(())
    } else {
        Err(config_err(format!("{} exists and is not a previous output directory", out.display())))
    }
}

/// Write every artifact, then move the staging directory to `out`.
pub fn commit(out: &Path, artifacts: &[Artifact]) -> CliResult<()> {
    check_target(out)?;
    let (parent, name) = split(out)?;
    fs::create_dir_all(&parent)?;
    let pid = std::process::id();
    let staging = parent.join(format!(".{name}.partial-{pid}"));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir(&staging)?;
    let result = (|| -> CliResult<()> {
        for a in artifacts {
            fs::write(staging.join(&a.name), &a.bytes)?;
        }
        if out.exists() {
            let old = parent.join(format!(".{name}.old-{pid}"));
            fs::rename(out, &old)?;
            fs::rename(&staging, out)?;
            fs::remove_dir_all(&old)?;
        } else {
            fs::rename(&staging, out)?;
        }
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

/// CSV body with a header row.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> CliResult<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}
