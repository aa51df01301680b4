//! Ensemble files.
//!
//! CSV: a header line `N=<int>,K=<int>`, then one line per path holding
//! `N+1` values written with 17 significant digits (exact binary64
//! round-trip). Binary (`.bin`): magic `OSUP1`, then `N` and `K` as
//! little-endian `u64`, then the values as little-endian `f64`, row-major.
//!
//! Either format gets a JSON sidecar `<stem>.manifest.json` with the
//! generator descriptor, master seed and optional weights. Files without a
//! sidecar load as [`Generator::External`](super::Generator::External) ensembles.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Generator, Manifest, Path, PathEnsemble};
use crate::error::{Error, Result};
use crate::orlicz::OrliczFunction;

pub const BINARY_MAGIC: &[u8; 5] = b"OSUP1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    generator: Generator,
    master_seed: u64,
    k: usize,
    n: usize,
    #[serde(default = "yes")]
    continuity_assumed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<OrliczFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

fn yes() -> bool {
    true
}

impl ManifestFile {
    fn split(self) -> (Manifest, Option<Vec<f64>>) {
        let manifest = Manifest {
            generator: self.generator,
            master_seed: self.master_seed,
            k: self.k,
            n: self.n,
            continuity_assumed: self.continuity_assumed,
            phi: self.phi,
        };
        (manifest, self.weights)
    }
}

/// `<dir>/<stem>.manifest.json` next to an ensemble file.
pub fn manifest_path(path: &FsPath) -> PathBuf {
    path.with_extension("manifest.json")
}

fn is_binary(path: &FsPath) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

/// Writes the ensemble (CSV, or binary for a `.bin` extension) and its sidecar.
pub fn save_ensemble(e: &PathEnsemble, path: &FsPath) -> Result<()> {
    if is_binary(path) {
        write_binary(e, path)?;
    } else {
        write_csv(e, path)?;
    }
    let m = e.manifest().clone();
    let sidecar = ManifestFile {
        generator: m.generator,
        master_seed: m.master_seed,
        k: m.k,
        n: m.n,
        continuity_assumed: m.continuity_assumed,
        phi: m.phi,
        weights: e.weights().map(<[f64]>::to_vec),
    };
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    fs::write(manifest_path(path), json)?;
    Ok(())
}

fn write_csv(e: &PathEnsemble, path: &FsPath) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "N={},K={}", e.n_grid(), e.k())?;
    for p in e.paths() {
        let mut first = true;
        for v in p.values() {
            if !first {
                w.write_all(b",")?;
            }
            first = false;
            write!(w, "{v:.16e}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn write_binary(e: &PathEnsemble, path: &FsPath) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(e.n_grid() as u64).to_le_bytes())?;
    w.write_all(&(e.k() as u64).to_le_bytes())?;
    for p in e.paths() {
        for v in p.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an ensemble written by [`save_ensemble`] (or any conforming file).
///
/// Rows are numbered from 1 in errors (row `r` is line `r + 1` of a CSV);
/// columns from 0.
pub fn load_ensemble(path: &FsPath) -> Result<PathEnsemble> {
    let (n, rows) = if is_binary(path) {
        read_binary(path)?
    } else {
        read_csv(path)?
    };
    let paths = rows
        .into_iter()
        .enumerate()
        .map(|(r, values)| {
            Path::new(values).map_err(|e| match e {
                Error::NonFinite { column, .. } => Error::NonFinite { row: r + 1, column },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = paths.len();
    let sidecar = manifest_path(path);
    if sidecar.exists() {
        let file: ManifestFile = serde_json::from_str(&fs::read_to_string(&sidecar)?)?;
        let (manifest, weights) = file.split();
        if manifest.k != k || manifest.n != n {
            return Err(Error::Malformed {
                line: 0,
                message: format!(
                    "sidecar {} declares K = {}, N = {} but data has K = {k}, N = {n}",
                    sidecar.display(),
                    manifest.k,
                    manifest.n
                ),
            });
        }
        PathEnsemble::new(paths, manifest, weights)
    } else {
        PathEnsemble::new(paths, Manifest::external(k, n), None)
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let (n, k) = line.trim().split_once(',')?;
    let n = n.trim().strip_prefix("N=")?.parse().ok()?;
    let k = k.trim().strip_prefix("K=")?.parse().ok()?;
    Some((n, k))
}

fn read_csv(path: &FsPath) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut lines = BufReader::new(fs::File::open(path)?).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let (n, k) = parse_header(&header).ok_or_else(|| Error::Malformed {
        line: 1,
        message: format!("expected header \"N=<int>,K=<int>\", found {header:?}"),
    })?;
    let mut rows = Vec::with_capacity(k);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                row,
                expected: n + 1,
                found: fields.len(),
            });
        }
        let values = fields
            .iter()
            .enumerate()
            .map(|(column, f)| {
                let v: f64 = f.trim().parse().map_err(|_| Error::Malformed {
                    line: row + 1,
                    message: format!("column {column}: cannot parse {f:?} as a number"),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite { row, column })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.len() != k {
        return Err(Error::Malformed {
            line: rows.len() + 1,
            message: format!(
                "header declares K = {k} paths but {} were found",
                rows.len()
            ),
        });
    }
    Ok((n, rows))
}

fn read_binary(path: &FsPath) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let malformed = |message: String| Error::Malformed { line: 0, message };
    if bytes.len() < 21 || &bytes[..5] != BINARY_MAGIC {
        return Err(malformed("missing OSUP1 magic".into()));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (n, k) = (word(5) as usize, word(13) as usize);
    let expected = n
        .checked_add(1)
        .and_then(|w| w.checked_mul(k))
        .and_then(|c| c.checked_mul(8))
        .and_then(|b| b.checked_add(21))
        .ok_or_else(|| malformed(format!("implausible header N = {n}, K = {k}")))?;
    if bytes.len() != expected {
        return Err(malformed(format!(
            "N = {n}, K = {k} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let rows = bytes[21..]
        .chunks_exact(8 * (n + 1))
        .map(|row| {
            row.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect()
        })
        .collect();
    Ok((n, rows))
}
