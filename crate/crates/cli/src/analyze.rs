use std::path::PathBuf;

use clap::Subcommand;
use matman::embed::read_checkpoint;
use matman::eval::{angle_sum_profile, Histogram};
use matman::graphgeom::{CurvatureOptions, CurvatureReport, RICCI_ALPHA};
use matman::graphio::{apsp, load_edgelist};
use matman::sampler::quantile;
use serde::Serialize;

use crate::fail::{self, Result};

#[derive(clap::Args)]
pub struct Args {
    #[command(subcommand)]
    target: Target,
}

#[derive(Subcommand)]
enum Target {
    /// δ-hyperbolicity, Ollivier-Ricci and sectional curvature of a graph.
    Graph {
        edgelist: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Random quadruples for δ (graphs small enough are done exhaustively).
        #[arg(long, default_value_t = 1_000_000)]
        quadruples: usize,
        /// Random (m; y, z) triples for the sectional curvature.
        #[arg(long, default_value_t = 10_000)]
        sectional: usize,
        /// Laziness of the random walks in the Ricci curvature.
        #[arg(long, default_value_t = RICCI_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Triangle angle sums of a trained embedding.
    Checkpoint {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        triangles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct Quartiles {
    min: f64,
    q25: f64,
    median: f64,
    q75: f64,
    max: f64,
    mean: f64,
}

impl Quartiles {
    fn of(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Quartiles {
            min: s[0],
            max: s[s.len() - 1],
            q25: quantile(&s, 0.25),
            median: quantile(&s, 0.5),
            q75: quantile(&s, 0.75),
            mean: s.iter().sum::<f64>() / s.len() as f64,
        })
    }
}

#[derive(Serialize)]
struct GraphSummary {
    m: usize,
    edges: usize,
    dropped_nodes: usize,
    delta_max: f64,
    delta_mean: f64,
    delta_samples: usize,
    delta_exhaustive: bool,
    ricci: Option<Quartiles>,
    sectional: Option<Quartiles>,
}

#[derive(Serialize)]
struct AngleSummary {
    triangles: usize,
    quartiles: Option<Quartiles>,
}

fn lines(header: &str, values: &[f64]) -> String {
    let mut s = format!("{header}\n");
    for v in values {
        s.push_str(&format!("{v}\n"));
    }
    s
}

pub fn run(a: Args) -> Result<()> {
    match a.target {
        Target::Graph {
            edgelist,
            out,
            quadruples,
            sectional,
            alpha,
            seed,
        } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(fail::Failure::Usage(format!("--alpha must lie in (0, 1), got {alpha}")));
            }
            let g = load_edgelist(&edgelist)?;
            let d = apsp(&g)?;
            let opts = CurvatureOptions {
                n_quadruples: quadruples,
                n_sectional: sectional,
                alpha,
                seed,
            };
            let r = CurvatureReport::compute(&g, &d, &opts)?;
            fail::create_dir(&out)?;
            let hi = if r.delta.max > 0.0 { r.delta.max * (1.0 + 1e-9) } else { 1.0 };
            let h = Histogram::new(&r.delta.samples, 0.0, hi, 50)?;
            fail::write(&out.join("delta_hist.csv"), h.to_csv())?;
            fail::write(&out.join("ricci_edges.csv"), r.ricci_edges_csv())?;
            fail::write(&out.join("ricci_nodes.csv"), r.ricci_nodes_csv())?;
            fail::write(&out.join("sectional.csv"), lines("sectional", &r.sectional_samples))?;
            let mut labels = g.labels().join("\n");
            labels.push('\n');
            fail::write(&out.join("labels.txt"), labels)?;
            let ricci: Vec<f64> = r.ricci_edges.iter().map(|e| e.2).collect();
            let summary = GraphSummary {
                m: g.m(),
                edges: g.edge_count(),
                dropped_nodes: g.dropped_nodes(),
                delta_max: r.delta.max,
                delta_mean: r.delta.mean,
                delta_samples: r.delta.samples.len(),
                delta_exhaustive: r.delta_exhaustive,
                ricci: Quartiles::of(&ricci),
                sectional: Quartiles::of(&r.sectional_samples),
            };
            fail::write(&out.join("summary.json"), fail::to_json(&summary))?;
            println!(
                "{}: m = {}, delta max {} mean {:.4}",
                edgelist.display(),
                summary.m,
                summary.delta_max,
                summary.delta_mean
            );
        }
        Target::Checkpoint {
            file,
            out,
            triangles,
            seed,
        } => {
            if triangles == 0 {
                return Err(fail::Failure::Usage("--triangles must be positive".into()));
            }
            let emb = read_checkpoint(&file)?;
            let s = angle_sum_profile(&emb, triangles, seed)?;
            fail::create_dir(&out)?;
            fail::write(&out.join("angle_hist.csv"), Histogram::angle_sums(&s).to_csv())?;
            let summary = AngleSummary {
                triangles: s.len(),
                quartiles: Quartiles::of(&s),
            };
            fail::write(&out.join("angle_summary.json"), fail::to_json(&summary))?;
            println!(
                "{}: {} ({} triangles), median normalized angle sum {:.4}",
                file.display(),
                emb.spec(),
                s.len(),
                summary.quartiles.as_ref().map_or(f64::NAN, |q| q.median)
            );
        }
    }
    Ok(())
}
