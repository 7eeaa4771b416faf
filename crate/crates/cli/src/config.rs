//! `--config` file: a TOML document whose keys mirror the CLI flags plus the
//! `[search]`, `[build]` and `[benchmark]` tables.
//!
//! ```toml
//! graph = "graph.jsonl"
//! gazetteer = "gazetteer.csv"
//! policy = "scripted"
//! out_dir = "runs"
//!
//! [search]
//! iterations = 30
//! branching = 3
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::Deserialize;

use scopekg::builder::BuildConfig;
use scopekg::eval::BenchmarkConfig;
use scopekg::planner::SearchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    /// Deterministic task policies (oracle for sites, diversifying for plans).
    Scripted,
    /// Random-answer baseline.
    Degenerate,
    /// HTTP language model configured by SCOPEKG_LLM_URL / SCOPEKG_LLM_KEY.
    Remote,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub graph: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub overrides: Option<PathBuf>,
    pub fewshot_dir: Option<PathBuf>,
    pub policy: Option<PolicyMode>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub search: SearchConfig,
    pub build: BuildConfig,
    pub benchmark: BenchmarkConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for slot in [
            &mut cfg.graph,
            &mut cfg.gazetteer,
            &mut cfg.registry,
            &mut cfg.overrides,
            &mut cfg.fewshot_dir,
            &mut cfg.out_dir,
        ] {
            if let Some(p) = slot.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Input paths must exist before any work starts.
    pub fn check_inputs(&self) -> Result<()> {
        for (name, path) in [
            ("graph", &self.graph),
            ("gazetteer", &self.gazetteer),
            ("registry", &self.registry),
            ("overrides", &self.overrides),
            ("fewshot_dir", &self.fewshot_dir),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    bail!("{name} path {} does not exist", p.display());
                }
            }
        }
        self.search.validate().map_err(|e| anyhow::anyhow!("search config: {e}"))?;
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("scopekg-out"))
    }
}
