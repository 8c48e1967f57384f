//! On-disk cache of recurrence tables, one JSON file per
//! `(coefficients, Jmax, precision_bits)` key.

use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rmt_bulk::orthopoly::recurrence_table;
use rmt_bulk::quadrature::{build_quadrature_with, QuadratureOptions};
use rmt_bulk::{PhiBasis, Potential, RecurrenceTable};
use serde::Serialize;

use crate::config::hex_digest;
use crate::{CliError, Result};

const PREFIX: &str = "recurrence-";
const QUARANTINE: &str = "quarantine";

pub struct Cache {
    dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CacheEntry {
    pub file: String,
    pub coeffs: String,
    pub jmax: usize,
    pub precision_bits: u32,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct VerifyEntry {
    pub file: String,
    pub ok: bool,
    pub j: Option<usize>,
    pub a_stored: Option<String>,
    pub a_rederived: Option<String>,
    pub b_stored: Option<String>,
    pub b_rederived: Option<String>,
    /// Re-derived `b_0`.
    pub b0: Option<f64>,
    pub problem: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct VerifyReport {
    pub entries: Vec<VerifyEntry>,
    pub quarantined: Vec<String>,
}

pub fn key_id(key: &(String, usize, u32)) -> String {
    hex_digest(format!("{}|{}|{}", key.0, key.1, key.2).as_bytes())[..16].to_string()
}

pub fn key_string(key: &(String, usize, u32)) -> String {
    format!("{} jmax={} bits={}", key.0, key.1, key.2)
}

/// Builds a recurrence table with the same quadrature settings as `PhiBasis::build`.
pub fn derive_table(v: &Potential, jmax: usize, bits: u32) -> rmt_bulk::Result<RecurrenceTable> {
    let quad = build_quadrature_with(v, &QuadratureOptions::new(bits, 40, 4 * jmax))?;
    recurrence_table(v, jmax, &quad)
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &(String, usize, u32)) -> PathBuf {
        self.dir.join(format!("{PREFIX}{}.json", key_id(key)))
    }

    fn require_dir(&self) -> Result<()> {
        if self.dir.is_dir() {
            Ok(())
        } else {
            Err(CliError::Config(format!("cache directory {} does not exist", self.dir.display())))
        }
    }

    fn files(&self) -> Result<Vec<PathBuf>> {
        let rd = std::fs::read_dir(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let mut out: Vec<PathBuf> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with(PREFIX) && n.ends_with(".json"))
            })
            .collect();
        out.sort();
        Ok(out)
    }

    fn read(path: &Path) -> std::result::Result<RecurrenceTable, String> {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let table = RecurrenceTable::from_json(&text).map_err(|e| e.to_string())?;
        let expected = format!("{PREFIX}{}.json", key_id(&table.key()));
        if path.file_name().and_then(|n| n.to_str()) != Some(expected.as_str()) {
            return Err(format!("contents do not match the file name (expected {expected})"));
        }
        Ok(table)
    }

    fn quarantine(&self, path: &Path) -> Result<String> {
        let qdir = self.dir.join(QUARANTINE);
        std::fs::create_dir_all(&qdir).map_err(|e| CliError::io(&qdir, e))?;
        let name = path.file_name().expect("cache file name");
        let target = qdir.join(name);
        std::fs::rename(path, &target).map_err(|e| CliError::io(path, e))?;
        Ok(name.to_string_lossy().into_owned())
    }

    /// Cached table for `key`; a corrupt file is quarantined and treated as a miss.
    pub fn load(&self, key: &(String, usize, u32)) -> Result<Option<RecurrenceTable>> {
        let path = self.path_for(key);
        if !path.is_file() {
            return Ok(None);
        }
        match Self::read(&path) {
            Ok(t) if &t.key() == key => Ok(Some(t)),
            _ => {
                self.quarantine(&path)?;
                Ok(None)
            }
        }
    }

    pub fn store(&self, table: &RecurrenceTable) -> Result<String> {
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let path = self.path_for(&table.key());
        std::fs::write(&path, table.to_json()).map_err(|e| CliError::io(&path, e))?;
        Ok(key_id(&table.key()))
    }

    /// Basis for `v` from a cached table, or built afresh with its table stored.
    /// Returns the basis, the table, the cache key id and whether it was a hit.
    pub fn basis(&self, v: &Potential, jmax: usize, bits: u32) -> Result<(PhiBasis, RecurrenceTable, String, bool)> {
        let key = (v.spec_string(), jmax, bits);
        if let Some(t) = self.load(&key)? {
            return Ok((PhiBasis::from_table(&t)?, t, key_id(&key), true));
        }
        let (t, basis) = PhiBasis::build_with_table(v, jmax, bits)?;
        let id = self.store(&t)?;
        Ok((basis, t, id, false))
    }

    pub fn list(&self) -> Result<Vec<CacheEntry>> {
        self.require_dir()?;
        let mut out = Vec::new();
        for p in self.files()? {
            let file = p.file_name().unwrap().to_string_lossy().into_owned();
            match Self::read(&p) {
                Ok(t) => {
                    let (coeffs, jmax, precision_bits) = t.key();
                    out.push(CacheEntry { file, coeffs, jmax, precision_bits });
                }
                Err(_) => out.push(CacheEntry { file, coeffs: "<unreadable>".into(), jmax: 0, precision_bits: 0 }),
            }
        }
        Ok(out)
    }

    /// Removes every cached table and the quarantine; a missing directory removes nothing.
    pub fn purge(&self) -> Result<usize> {
        if !self.dir.is_dir() {
            return Ok(0);
        }
        let mut removed = 0;
        for p in self.files()? {
            std::fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
            removed += 1;
        }
        let q = self.dir.join(QUARANTINE);
        if q.is_dir() {
            removed += std::fs::read_dir(&q).map_err(|e| CliError::io(&q, e))?.count();
            std::fs::remove_dir_all(&q).map_err(|e| CliError::io(&q, e))?;
        }
        Ok(removed)
    }

    /// Re-derives one random `(a_j, b_j)` per table and compares at the stored precision.
    pub fn verify(&self, seed: u64) -> Result<VerifyReport> {
        self.require_dir()?;
        let mut rng = StdRng::seed_from_u64(seed);
        let mut report = VerifyReport::default();
        for p in self.files()? {
            let file = p.file_name().unwrap().to_string_lossy().into_owned();
            let mut entry = VerifyEntry {
                file: file.clone(),
                ok: false,
                j: None,
                a_stored: None,
                a_rederived: None,
                b_stored: None,
                b_rederived: None,
                b0: None,
                problem: None,
            };
            match Self::read(&p) {
                Err(e) => entry.problem = Some(e),
                Ok(t) => {
                    let j = rng.gen_range(0..t.jmax);
                    let fresh = derive_table(&t.potential, t.jmax, t.precision_bits)?;
                    let tol = 2f64.powi(16 - t.precision_bits as i32);
                    let close = |x: &rug::Float, y: &rug::Float| {
                        let d = rug::Float::with_val(t.precision_bits, x - y).abs().to_f64();
                        d <= tol * y.to_f64().abs().max(1.0)
                    };
                    let ok = close(&t.a[j], &fresh.a[j]) && close(&t.b[j], &fresh.b[j]);
                    let file_of = t.to_file();
                    let fresh_file = fresh.to_file();
                    entry.j = Some(j);
                    entry.a_stored = Some(file_of.a[j].clone());
                    entry.a_rederived = Some(fresh_file.a[j].clone());
                    entry.b_stored = Some(file_of.b[j].clone());
                    entry.b_rederived = Some(fresh_file.b[j].clone());
                    entry.b0 = Some(fresh.b[0].to_f64());
                    entry.ok = ok;
                    if !ok {
                        entry.problem = Some(format!("a_{j} or b_{j} disagrees with a fresh derivation"));
                    }
                }
            }
            if !entry.ok {
                report.quarantined.push(self.quarantine(&p)?);
            }
            report.entries.push(entry);
        }
        Ok(report)
    }
}
