use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use matman::embed::{train, write_checkpoint, Loss, LossInput, OptimizerKind, TrainConfig};
use matman::manifolds::ManifoldSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache;
use crate::fail::{self, Failure, Result};

pub const CELLS: &str = "cells";
pub const SUMMARY: &str = "summary.csv";

#[derive(clap::Args)]
pub struct Args {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override the config's `cache`.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Override the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Retrain cells that already have a checkpoint.
    #[arg(long)]
    force: bool,
}

/// The three optimizer recipes: RAdam with a fixed scale, and RSGD or RAdam
/// with a learned distance scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Setting {
    Radam,
    RsgdScale,
    RadamScale,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::Radam, Setting::RsgdScale, Setting::RadamScale];

    fn file_tag(self) -> &'static str {
        match self {
            Setting::Radam => "radam",
            Setting::RsgdScale => "rsgd-scale",
            Setting::RadamScale => "radam-scale",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Radam => "radam",
            Setting::RsgdScale => "rsgd+scale",
            Setting::RadamScale => "radam+scale",
        })
    }
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "radam" => Ok(Setting::Radam),
            "rsgd+scale" | "rsgd-scale" => Ok(Setting::RsgdScale),
            "radam+scale" | "radam-scale" => Ok(Setting::RadamScale),
            _ => Err(format!(
                "unknown optimizer setting {s:?} (expected radam, rsgd+scale or radam+scale)"
            )),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Keys {
    cache: PathBuf,
    out: PathBuf,
    manifolds: Vec<String>,
    losses: Vec<String>,
    #[serde(default)]
    settings: Option<Vec<String>>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    rsgd_learning_rate: Option<f64>,
}

const EXPERIMENT_KEYS: [&str; 7] = [
    "cache",
    "out",
    "manifolds",
    "losses",
    "settings",
    "seeds",
    "rsgd_learning_rate",
];

pub struct Experiment {
    pub cache: PathBuf,
    pub out: PathBuf,
    pub manifolds: Vec<ManifoldSpec>,
    pub losses: Vec<Loss>,
    pub settings: Vec<Setting>,
    pub seeds: Vec<u64>,
    pub rsgd_learning_rate: Option<f64>,
    pub train: TrainConfig,
}

impl Experiment {
    /// Experiment keys plus every `TrainConfig` field in one flat table;
    /// relative paths resolve against the config's directory.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let usage = |m: String| Failure::Usage(m);
        let table: toml::Table = toml::from_str(text).map_err(|e| usage(format!("config: {e}")))?;
        let (exp, rest): (toml::Table, toml::Table) = table
            .into_iter()
            .partition(|(k, _)| EXPERIMENT_KEYS.contains(&k.as_str()));
        for k in ["loss", "optimizer", "seed", "learn_scale"] {
            if rest.contains_key(k) {
                return Err(usage(format!(
                    "config: `{k}` is set per cell; use `losses`, `settings` and `seeds`"
                )));
            }
        }
        let keys: Keys = exp.try_into().map_err(|e| usage(format!("config: {e}")))?;
        let train: TrainConfig = rest.try_into().map_err(|e| usage(format!("config: {e}")))?;
        train.validate().map_err(|e| usage(format!("config: {e}")))?;

        let manifolds = keys
            .manifolds
            .iter()
            .map(|s| s.parse::<ManifoldSpec>().map_err(|e| usage(format!("config: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let losses = keys
            .losses
            .iter()
            .map(|s| s.parse::<Loss>().map_err(|e| usage(format!("config: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let settings = match keys.settings {
            None => Setting::ALL.to_vec(),
            Some(v) => v
                .iter()
                .map(|s| s.parse::<Setting>().map_err(|e| usage(format!("config: {e}"))))
                .collect::<Result<Vec<_>>>()?,
        };
        let seeds = keys.seeds.unwrap_or_else(|| vec![0]);
        if manifolds.is_empty() || losses.is_empty() || settings.is_empty() || seeds.is_empty() {
            return Err(usage(
                "config: need at least one manifold, loss, setting and seed".into(),
            ));
        }
        if let Some(lr) = keys.rsgd_learning_rate {
            if !(lr > 0.0) {
                return Err(usage("config: rsgd_learning_rate must be positive".into()));
            }
        }
        Ok(Experiment {
            cache: base.join(keys.cache),
            out: base.join(keys.out),
            manifolds,
            losses,
            settings,
            seeds,
            rsgd_learning_rate: keys.rsgd_learning_rate,
            train,
        })
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for m in &self.manifolds {
            for &loss in &self.losses {
                for &setting in &self.settings {
                    for &seed in &self.seeds {
                        let mut cfg = self.train.clone();
                        cfg.loss = loss;
                        cfg.seed = seed;
                        match setting {
                            Setting::Radam => cfg.optimizer = OptimizerKind::Radam,
                            Setting::RadamScale => {
                                cfg.optimizer = OptimizerKind::Radam;
                                cfg.learn_scale = true;
                            }
                            Setting::RsgdScale => {
                                cfg.optimizer = OptimizerKind::Rsgd;
                                cfg.learn_scale = true;
                                if let Some(lr) = self.rsgd_learning_rate {
                                    cfg.learning_rate = lr;
                                }
                            }
                        }
                        out.push(Cell {
                            name: cell_name(m, loss, setting, seed),
                            manifold: m.clone(),
                            setting,
                            cfg,
                        });
                    }
                }
            }
        }
        out
    }
}

fn file_safe(s: &str) -> String {
    s.chars()
        .filter_map(|c| match c {
            ':' => Some('-'),
            ',' => Some('.'),
            '(' | ')' => None,
            c if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' => Some(c),
            _ => Some('_'),
        })
        .collect()
}

fn cell_name(m: &ManifoldSpec, loss: Loss, setting: Setting, seed: u64) -> String {
    format!(
        "{}__{}__{}__s{seed}",
        file_safe(&m.to_string()),
        file_safe(&loss.to_string()),
        setting.file_tag()
    )
}

pub struct Cell {
    pub name: String,
    pub manifold: ManifoldSpec,
    pub setting: Setting,
    pub cfg: TrainConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellRecord {
    pub name: String,
    pub manifold: String,
    pub loss: String,
    pub setting: String,
    pub seed: u64,
    pub status: String,
    pub epochs: usize,
    pub final_loss: Option<f64>,
    pub converged: bool,
    pub scale: Option<f64>,
    pub error: Option<String>,
    pub config: TrainConfig,
}

pub fn checkpoint_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.mmemb"))
}

pub fn record_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.json"))
}

fn run_cell(cell: &Cell, input: &cache::Input, dir: &Path) -> CellRecord {
    let mut rec = CellRecord {
        name: cell.name.clone(),
        manifold: cell.manifold.to_string(),
        loss: cell.cfg.loss.to_string(),
        setting: cell.setting.to_string(),
        seed: cell.cfg.seed,
        status: "failed".into(),
        epochs: 0,
        final_loss: None,
        converged: false,
        scale: None,
        error: None,
        config: cell.cfg.clone(),
    };
    let li = LossInput {
        graph: input.graph.as_ref(),
        distances: &input.distances,
    };
    let result = train(li, &cell.manifold, &cell.cfg).map_err(Failure::from).and_then(|(emb, hist)| {
        fail::write(&dir.join(format!("{}.history.csv", cell.name)), hist.to_csv())?;
        // write-then-rename so an interrupted run never leaves a partial checkpoint
        let tmp = dir.join(format!("{}.mmemb.tmp", cell.name));
        write_checkpoint(&tmp, &emb)?;
        let dst = checkpoint_path(dir, &cell.name);
        std::fs::rename(&tmp, &dst).map_err(|e| fail::io_err(&dst, e))?;
        Ok((emb.scale(), hist))
    });
    match result {
        Ok((scale, hist)) => {
            rec.status = "trained".into();
            rec.epochs = hist.epochs.len();
            rec.final_loss = hist.final_loss();
            rec.converged = hist.converged;
            rec.scale = Some(scale);
        }
        Err(e) => {
            log::warn!("cell {} failed: {e}", cell.name);
            rec.error = Some(e.to_string());
        }
    }
    rec
}

pub fn run(a: Args) -> Result<()> {
    let text = fail::read_to_string(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut exp = Experiment::parse(&text, &base)?;
    if let Some(c) = a.cache {
        exp.cache = c;
    }
    if let Some(o) = a.out {
        exp.out = o;
    }
    let input = cache::load(&exp.cache)?;
    log::info!("input {} with {} nodes", input.meta.source, input.meta.m);
    let dir = exp.out.join(CELLS);
    fail::create_dir(&dir)?;

    let cells = exp.cells();
    let records: Vec<CellRecord> = cells
        .par_iter()
        .map(|cell| {
            let ckpt = checkpoint_path(&dir, &cell.name);
            let rec_path = record_path(&dir, &cell.name);
            if ckpt.exists() && !a.force {
                if let Ok(mut r) = fail::from_json::<CellRecord>(&rec_path) {
                    r.status = "skipped".into();
                    return Ok(r);
                }
            }
            log::info!("training {}", cell.name);
            let rec = run_cell(cell, &input, &dir);
            fail::write(&rec_path, fail::to_json(&rec))?;
            Ok(rec)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.manifold.clone(),
                r.loss.clone(),
                r.setting.clone(),
                r.seed.to_string(),
                r.status.clone(),
                r.epochs.to_string(),
                fail::opt(r.final_loss),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    fail::write_csv(
        &exp.out.join(SUMMARY),
        &["cell", "manifold", "loss", "setting", "seed", "status", "epochs", "final_loss", "error"],
        &rows,
    )?;
    let count = |s: &str| records.iter().filter(|r| r.status == s).count();
    println!(
        "{} cells: {} trained, {} skipped, {} failed",
        records.len(),
        count("trained"),
        count("skipped"),
        count("failed")
    );
    Ok(())
}
