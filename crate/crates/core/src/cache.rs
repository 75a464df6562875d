//! Content-addressed artifact cache under `$HECKE3_CACHE`.
//!
//! Each entry is one file: a JSON [`CacheEntry`] line, then the payload.
//! The payload's SHA-256 is checked on every load; a mismatch (or a foreign
//! version) discards the entry and the caller recomputes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cyclolinalg::{DenseMat, Rat};
use crate::error::{Error, Result};
use crate::heckeops::{global_decomposition, hecke_matrix_with, CosetDecomposition, CosetScope, HeckeElement, HeckeOptions};
use crate::matrix::{parse_rat, RMat3};
use crate::projspace::{enumerate, Level, PointTable};
use crate::relspace::{build_relations, solve_model, ModelBasis};

pub const CACHE_ENV: &str = "HECKE3_CACHE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheKind {
    Basis,
    Decomposition,
    HeckeMatrix,
}

impl CacheKind {
    fn tag(self) -> &'static str {
        match self {
            CacheKind::Basis => "basis",
            CacheKind::Decomposition => "decomposition",
            CacheKind::HeckeMatrix => "hecke_matrix",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub kind: CacheKind,
    pub level: u64,
    pub key: String,
    pub sha256: String,
    pub version: u32,
}

/// What a lookup found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
    /// Entry existed but failed its hash or version check.
    Corrupt,
    Disabled,
}

#[derive(Debug, Clone, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: Some(dir.into()) }
    }

    pub fn disabled() -> Self {
        Cache { dir: None }
    }

    /// Uses `$HECKE3_CACHE` when set and non-empty.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Cache::new(d),
            _ => Cache::disabled(),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, kind: CacheKind, level: u64, key: &str) -> Option<PathBuf> {
        let id = &sha_hex(key.as_bytes())[..16];
        self.dir.as_ref().map(|d| d.join(format!("{}-{level}-{id}.h3c", kind.tag())))
    }

    /// Payload of a valid entry, or the reason there is none.
    pub fn load(&self, kind: CacheKind, level: u64, key: &str) -> (CacheStatus, Option<String>) {
        let Some(path) = self.path_for(kind, level, key) else {
            return (CacheStatus::Disabled, None);
        };
        let Ok(text) = fs::read_to_string(&path) else {
            return (CacheStatus::Miss, None);
        };
        let (head, payload) = text.split_once('\n').unwrap_or((&text, ""));
        let valid = serde_json::from_str::<CacheEntry>(head).is_ok_and(|e| {
            e.kind == kind
                && e.level == level
                && e.key == key
                && e.version == crate::FORMAT_VERSION
                && e.sha256 == sha_hex(payload.as_bytes())
        });
        if valid {
            (CacheStatus::Hit, Some(payload.to_string()))
        } else {
            let _ = fs::remove_file(&path);
            (CacheStatus::Corrupt, None)
        }
    }

    pub fn store(&self, kind: CacheKind, level: u64, key: &str, payload: &str) -> Result<()> {
        let Some(path) = self.path_for(kind, level, key) else {
            return Ok(());
        };
        fs::create_dir_all(path.parent().expect("cache file has a parent"))?;
        let entry = CacheEntry {
            kind,
            level,
            key: key.to_string(),
            sha256: sha_hex(payload.as_bytes()),
            version: crate::FORMAT_VERSION,
        };
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, format!("{}\n{payload}", serde_json::to_string(&entry)?))?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    /// Loads or computes, storing on miss. A payload that passes its hash
    /// but fails to decode is treated as corrupt as well.
    pub fn get_or_compute<T>(
        &self,
        kind: CacheKind,
        level: u64,
        key: &str,
        encode: impl Fn(&T) -> String,
        decode: impl Fn(&str) -> Result<T>,
        compute: impl FnOnce() -> Result<T>,
    ) -> Result<(T, CacheStatus)> {
        let (mut status, payload) = self.load(kind, level, key);
        if let Some(p) = payload {
            match decode(&p) {
                Ok(v) => return Ok((v, status)),
                Err(_) => status = CacheStatus::Corrupt,
            }
        }
        let v = compute()?;
        self.store(kind, level, key, &encode(&v))?;
        Ok((v, status))
    }

    pub fn basis(&self, level: Level) -> Result<(PointTable, ModelBasis, CacheStatus)> {
        let table = enumerate(level);
        let (basis, status) = self.get_or_compute(
            CacheKind::Basis,
            level.modulus(),
            "basis",
            |b: &ModelBasis| {
                let mut buf = Vec::new();
                b.write_artifact(&mut buf, table.len()).expect("in-memory write");
                String::from_utf8(buf).expect("utf8 artifact")
            },
            |p| ModelBasis::read_artifact(p.as_bytes()),
            || Ok(solve_model(&build_relations(&table)?)),
        )?;
        Ok((table, basis, status))
    }

    pub fn decomposition(&self, alpha: &HeckeElement, level: Level) -> Result<(CosetDecomposition, CacheStatus)> {
        self.get_or_compute(
            CacheKind::Decomposition,
            level.modulus(),
            &alpha.alpha.canonical_string(),
            encode_decomposition,
            |p| decode_decomposition(p, alpha, level),
            || global_decomposition(alpha, level),
        )
    }

    /// Hecke matrix keyed by `α` and the basis content hash.
    pub fn hecke_matrix(
        &self,
        basis: &ModelBasis,
        table: &PointTable,
        alpha: &HeckeElement,
        opts: &HeckeOptions,
    ) -> Result<(DenseMat<Rat>, CacheStatus)> {
        let key = format!("{}|{}|{:?}", alpha.alpha.canonical_string(), basis.content_hash(), opts.convention);
        self.get_or_compute(
            CacheKind::HeckeMatrix,
            basis.level.modulus(),
            &key,
            encode_matrix,
            decode_matrix,
            || {
                let (d, _) = self.decomposition(alpha, basis.level)?;
                hecke_matrix_with(basis, table, &d, opts)
            },
        )
    }
}

fn encode_decomposition(d: &CosetDecomposition) -> String {
    let mut s = format!("primes,{}\n", d.primes.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";"));
    for r in &d.reps {
        s.push_str(&r.canonical_string());
        s.push('\n');
    }
    s
}

fn decode_decomposition(p: &str, alpha: &HeckeElement, level: Level) -> Result<CosetDecomposition> {
    let mut lines = p.lines();
    let primes = lines
        .next()
        .and_then(|l| l.strip_prefix("primes,"))
        .ok_or_else(|| Error::Artifact("decomposition payload lacks primes".into()))?
        .split(';')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Parse(s.into())))
        .collect::<Result<Vec<u64>>>()?;
    let reps = lines.map(RMat3::parse).collect::<Result<Vec<_>>>()?;
    Ok(CosetDecomposition {
        alpha: alpha.clone(),
        level,
        reps,
        verified: true,
        scope: CosetScope::Global,
        primes,
    })
}

fn encode_matrix(m: &DenseMat<Rat>) -> String {
    let mut s = format!("{},{}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        s.push_str(&m.row(i).iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

fn decode_matrix(p: &str) -> Result<DenseMat<Rat>> {
    let mut lines = p.lines();
    let dims: Vec<usize> = lines
        .next()
        .ok_or_else(|| Error::Artifact("empty matrix payload".into()))?
        .split(',')
        .map(|s| s.parse().map_err(|_| Error::Parse(s.into())))
        .collect::<Result<_>>()?;
    let [r, c] = dims[..] else {
        return Err(Error::Artifact("bad matrix dimensions".into()));
    };
    let mut rows = Vec::with_capacity(r);
    for line in lines {
        let row = if line.is_empty() { vec![] } else { line.split(',').map(parse_rat).collect::<Result<Vec<_>>>()? };
        if row.len() != c {
            return Err(Error::Artifact("ragged matrix payload".into()));
        }
        rows.push(row);
    }
    if rows.len() != r {
        return Err(Error::Artifact("matrix payload row count".into()));
    }
    Ok(if r == 0 { DenseMat::zeros(0, c) } else { DenseMat::from_rows(rows) })
}
