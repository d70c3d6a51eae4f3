use std::path::PathBuf;

use matman::graphio::{apsp, load_dissimilarity, load_edgelist, max_scale, write_distance_cache};

use crate::cache::{self, Meta};
use crate::fail::{self, Result};

#[derive(clap::Args)]
pub struct Args {
    /// Edge list (`u v [w]` per line) or, with --dissimilarity, a square matrix.
    input: PathBuf,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Treat the input as a dissimilarity matrix without adjacency.
    #[arg(long)]
    dissimilarity: bool,
    /// Overwrite an existing cache.
    #[arg(long)]
    force: bool,
}

pub fn run(a: Args) -> Result<()> {
    let target = a.out.join(cache::DISTANCES);
    // the sidecar is written last, so its presence marks a complete cache
    if a.out.join(cache::META).exists() && !a.force {
        println!("{}: cache exists, skipped (use --force to rebuild)", target.display());
        return Ok(());
    }
    fail::create_dir(&a.out)?;
    let source = a.input.display().to_string();
    let (raw, graph) = if a.dissimilarity {
        (load_dissimilarity(&a.input)?, None)
    } else {
        let g = load_edgelist(&a.input)?;
        (apsp(&g)?, Some(g))
    };
    let scaled = max_scale(&raw)?;
    let meta = Meta {
        m: scaled.m(),
        diameter: raw.max(),
        scale: scaled.scale(),
        dropped_nodes: graph.as_ref().map_or(0, |g| g.dropped_nodes()),
        weighted: graph.as_ref().is_some_and(|g| g.is_weighted()),
        has_graph: graph.is_some(),
        source,
    };
    if let Some(g) = &graph {
        cache::write_graph(&a.out.join(cache::GRAPH), g)?;
        let mut labels = g.labels().join("\n");
        labels.push('\n');
        fail::write(&a.out.join(cache::LABELS), labels)?;
    }
    write_distance_cache(&target, &scaled)?;
    fail::write(&a.out.join(cache::META), fail::to_json(&meta))?;
    println!(
        "{}: m = {}, diameter = {}, dropped {} node(s)",
        target.display(),
        meta.m,
        meta.diameter,
        meta.dropped_nodes
    );
    Ok(())
}
