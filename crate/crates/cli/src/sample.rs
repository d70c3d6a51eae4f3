use std::path::PathBuf;

use clap::ValueEnum;
use matman::eval::{angle_sums, Histogram};
use matman::manifolds::ManifoldSpec;
use matman::sampler::{
    default_thresholds, pairwise_distances, sample_exp_ball, sample_uniform, sweep_distances, SweepOptions,
};

use crate::fail::{self, Failure, Result};

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Haar measure on a compact manifold.
    Uniform,
    /// Exponential map of a uniform tangent ball at the base point.
    ExpBall,
}

#[derive(clap::Args)]
pub struct Args {
    /// Manifold, e.g. `sphere:2` or `spd:3`.
    spec: ManifoldSpec,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Uniform)]
    method: Method,
    #[arg(short = 'n', long, default_value_t = 1000)]
    count: usize,
    /// Ball radius for `exp-ball`.
    #[arg(long)]
    radius: Option<f64>,
    /// Number of thresholds in the sweep.
    #[arg(long, default_value_t = 20)]
    thresholds: usize,
    /// Sectional-curvature samples per threshold.
    #[arg(long, default_value_t = 1000)]
    sectional: usize,
    /// Random triangles for the angle-sum histogram (0 skips it).
    #[arg(long, default_value_t = 0)]
    angles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn run(a: Args) -> Result<()> {
    if a.count < 2 {
        return Err(Failure::Usage("--count must be at least 2".into()));
    }
    if a.thresholds < 2 {
        return Err(Failure::Usage("--thresholds must be at least 2".into()));
    }
    let cloud = match (a.method, a.radius) {
        (Method::Uniform, None) => sample_uniform(&a.spec, a.count, a.seed)?,
        (Method::Uniform, Some(_)) => {
            return Err(Failure::Usage("--radius only applies to --method exp-ball".into()))
        }
        (Method::ExpBall, Some(r)) => sample_exp_ball(&a.spec, None, r, a.count, a.seed)?,
        (Method::ExpBall, None) => return Err(Failure::Usage("--method exp-ball needs --radius".into())),
    };
    let d = pairwise_distances(&cloud)?;
    let grid = default_thresholds(&cloud, &d, a.thresholds)?;
    let opts = SweepOptions {
        n_sectional: a.sectional,
        seed: a.seed,
    };
    let sweep = sweep_distances(&d, &grid, &opts)?;
    fail::create_dir(&a.out)?;
    fail::write(&a.out.join("sweep.csv"), sweep.to_csv())?;
    if a.angles > 0 {
        let m = cloud.manifold()?;
        let s = angle_sums(m.as_ref(), &cloud.points, a.angles, a.seed)?;
        fail::write(&a.out.join("angle_hist.csv"), Histogram::angle_sums(&s).to_csv())?;
    }
    println!(
        "{}: {} points, {} thresholds -> {}",
        a.spec,
        cloud.len(),
        grid.len(),
        a.out.join("sweep.csv").display()
    );
    Ok(())
}
