use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Suite};
use crate::output::write_text;
use crate::suites::{run, Context};
use crate::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRecord {
    pub suite: Suite,
    pub pass: bool,
    pub detail: String,
    pub outputs: Vec<String>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub version: String,
    pub pass: bool,
    pub suites: Vec<SuiteRecord>,
    pub cache_keys: Vec<String>,
}

impl Manifest {
    pub fn failing(&self) -> Vec<Suite> {
        self.suites.iter().filter(|s| !s.pass).map(|s| s.suite).collect()
    }

    /// Copy with all timings zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        let mut m = self.clone();
        for s in &mut m.suites {
            s.seconds = 0.0;
        }
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Validates `config`, runs the selected suites in order and writes
/// `manifest.json` next to their outputs. A suite that errors is recorded as failed.
pub fn run_suite(config: &RunConfig) -> Result<Manifest> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| CliError::io(&config.output_dir, e))?;
    let ctx = Context::new(config, pool);
    let mut suites = Vec::new();
    for &suite in &config.suites {
        let t0 = Instant::now();
        let rec = match run(&ctx, suite) {
            Ok(o) => SuiteRecord { suite, pass: o.pass, detail: o.detail, outputs: o.outputs, seconds: 0.0 },
            Err(e) => SuiteRecord { suite, pass: false, detail: format!("error: {e}"), outputs: Vec::new(), seconds: 0.0 },
        };
        suites.push(SuiteRecord { seconds: t0.elapsed().as_secs_f64(), ..rec });
    }
    let manifest = Manifest {
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        pass: suites.iter().all(|s| s.pass),
        suites,
        cache_keys: ctx.cache_keys.into_inner().unwrap().into_iter().collect(),
    };
    write_text(&config.output_dir.join("manifest.json"), &manifest.to_json())?;
    Ok(manifest)
}
