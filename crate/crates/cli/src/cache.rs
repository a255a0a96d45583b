//! Content-addressed store of count reports under `<out>/cache/`.
//!
//! The key hashes every numerical input bit for bit, so a cache hit replays
//! a report computed from exactly the same inputs. A hand-edited entry is
//! not detected here; the oracle bracket is what catches it.

use std::fs;
use std::path::{Path, PathBuf};

use oscgraph_core::counting::{ConvergeOptions, CountReport};
use oscgraph_core::ModelParams;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Bumped whenever the meaning of a cached report changes.
const CACHE_VERSION: &str = "count-v1";

#[derive(Serialize)]
struct KeyMaterial<'a> {
    version: &'a str,
    kind: &'a str,
    params: [String; 4],
    schedule: (usize, String, usize, usize),
    method: String,
    pivot_tol: String,
    lanczos_steps: usize,
    extra: Vec<String>,
}

fn bits(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

/// Hex SHA-256 of the inputs of a count. `kind` separates reports of
/// different quantities; `extra` carries any further numerical input.
pub fn cache_key(kind: &str, params: &ModelParams, opts: &ConvergeOptions, extra: &[f64]) -> String {
    let m = KeyMaterial {
        version: CACHE_VERSION,
        kind,
        params: [
            bits(params.alpha_plus),
            bits(params.alpha_minus),
            bits(params.nu_plus),
            bits(params.nu_minus),
        ],
        schedule: (
            opts.schedule.l0,
            bits(opts.schedule.growth),
            opts.schedule.window,
            opts.schedule.cap,
        ),
        method: format!("{:?}", opts.count.method),
        pivot_tol: bits(opts.count.pivot_tol),
        lanczos_steps: opts.lanczos_steps,
        extra: extra.iter().map(|&x| bits(x)).collect(),
    };
    let json = serde_json::to_vec(&m).expect("key material serializes");
    hex::encode(Sha256::digest(&json))
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(out: &Path, enabled: bool) -> Self {
        Self {
            dir: enabled.then(|| out.join("cache")),
        }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn path_for(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    /// The stored report, or `None` on a miss. Unreadable or malformed
    /// entries are reported and treated as misses.
    pub fn lookup(&self, key: &str) -> Option<CountReport> {
        let path = self.path_for(key)?;
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                return None;
            }
        };
        match serde_json::from_str(&text) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {}: {e}", path.display());
                None
            }
        }
    }

    pub fn store(&self, key: &str, report: &CountReport) -> Result<(), CliError> {
        let Some(path) = self.path_for(key) else {
            return Ok(());
        };
        let dir = path.parent().expect("cache entries live in a directory");
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let json = serde_json::to_string_pretty(report).expect("reports serialize");
        // write then rename, so concurrent readers never see a partial file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, json).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::io(&path, e))?;
        Ok(())
    }
}
