use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use matman::embed::read_checkpoint;
use matman::eval::{angle_sum_profile, Histogram, MetricsReport};
use matman::Error;
use rayon::prelude::*;

use crate::cache;
use crate::embed::{checkpoint_path, Cell, Experiment, CELLS};
use crate::fail::{self, Failure, Result};

pub const EVAL: &str = "eval";
pub const RESULTS: &str = "results.csv";
pub const BEST: &str = "best.csv";

#[derive(clap::Args)]
pub struct Args {
    /// The experiment config used for `matman embed`.
    config: PathBuf,
    /// Override the config's `cache`.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Override the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also histogram the angle sums of this many random triangles per cell.
    #[arg(long, default_value_t = 0)]
    angles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Row {
    cell: String,
    manifold: String,
    loss: String,
    setting: String,
    seed: u64,
    status: String,
    report: Option<MetricsReport>,
}

fn evaluate(cell: &Cell, input: &cache::Input, dir: &Path, angles: usize, seed: u64) -> Result<Option<MetricsReport>> {
    let ckpt = checkpoint_path(dir, &cell.name);
    if !ckpt.exists() {
        return Ok(None);
    }
    let emb = read_checkpoint(&ckpt)?;
    if emb.m() != input.distances.m() {
        return Err(Error::invalid(format!(
            "{}: embedding has {} points but the cache has {} nodes",
            ckpt.display(),
            emb.m(),
            input.distances.m()
        ))
        .into());
    }
    let mut report = MetricsReport::compute(input.graph.as_ref(), &input.distances, &emb)?;
    if angles > 0 {
        let s = angle_sum_profile(&emb, angles, seed)?;
        report.angle_histogram = Some(Histogram::angle_sums(&s));
    }
    Ok(Some(report))
}

fn pct(v: Option<f64>) -> Option<f64> {
    v.map(|x| 100.0 * x)
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
    let cells_dir = exp.out.join(CELLS);
    let eval_dir = exp.out.join(EVAL);
    fail::create_dir(&eval_dir)?;

    let rows: Vec<Row> = exp
        .cells()
        .par_iter()
        .map(|cell| {
            let mut row = Row {
                cell: cell.name.clone(),
                manifold: cell.manifold.to_string(),
                loss: cell.cfg.loss.to_string(),
                setting: cell.setting.to_string(),
                seed: cell.cfg.seed,
                status: "missing".into(),
                report: None,
            };
            match evaluate(cell, &input, &cells_dir, a.angles, a.seed) {
                Ok(None) => {}
                Ok(Some(r)) => {
                    fail::write(&eval_dir.join(format!("{}.metrics.json", cell.name)), fail::to_json(&r))?;
                    if let Some(c) = &r.f1_curve {
                        fail::write(&eval_dir.join(format!("{}.f1.csv", cell.name)), c.to_csv())?;
                    }
                    if let Some(h) = &r.angle_histogram {
                        fail::write(&eval_dir.join(format!("{}.angles.csv", cell.name)), h.to_csv())?;
                    }
                    row.status = "ok".into();
                    row.report = Some(r);
                }
                // a checkpoint for a different graph means the config points at the wrong cache
                Err(Failure::Core(e @ Error::InvalidInput(_))) => return Err(e.into()),
                Err(e) => {
                    log::warn!("cell {} not evaluated: {e}", cell.name);
                    row.status = format!("failed: {e}");
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let m = r.report.as_ref();
            vec![
                r.cell.clone(),
                r.manifold.clone(),
                r.loss.clone(),
                r.setting.clone(),
                r.seed.to_string(),
                fail::opt(pct(m.and_then(|m| m.f1_at_1))),
                fail::opt(pct(m.and_then(|m| m.auc))),
                fail::opt(m.and_then(|m| m.map)),
                fail::opt(m.map(|m| m.avg_distortion)),
                r.status.clone(),
            ]
        })
        .collect();
    fail::write_csv(
        &exp.out.join(RESULTS),
        &[
            "cell", "manifold", "loss", "setting", "seed", "f1_at_1", "auc", "map", "avg_distortion", "status",
        ],
        &table,
    )?;

    // each column is optimized separately over losses, settings and seeds
    let mut best: BTreeMap<&str, [Option<f64>; 3]> = BTreeMap::new();
    for r in &rows {
        let Some(m) = &r.report else { continue };
        let e = best.entry(&r.manifold).or_default();
        let max = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        };
        e[0] = max(e[0], pct(m.f1_at_1));
        e[1] = max(e[1], pct(m.auc));
        e[2] = Some(e[2].map_or(m.avg_distortion, |x| x.min(m.avg_distortion)));
    }
    let best_rows: Vec<Vec<String>> = exp
        .manifolds
        .iter()
        .filter_map(|s| {
            let k = s.to_string();
            best.get(k.as_str())
                .map(|b| vec![k.clone(), fail::opt(b[0]), fail::opt(b[1]), fail::opt(b[2])])
        })
        .collect();
    fail::write_csv(
        &exp.out.join(BEST),
        &["manifold", "f1_at_1", "auc", "avg_distortion"],
        &best_rows,
    )?;

    let ok = rows.iter().filter(|r| r.status == "ok").count();
    println!("evaluated {ok} of {} cells; see {}", rows.len(), exp.out.join(RESULTS).display());
    Ok(())
}
