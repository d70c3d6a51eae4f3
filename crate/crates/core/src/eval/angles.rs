use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingSet;
use crate::error::{Error, Result};
use crate::manifolds::Manifold;
use crate::matrix::Matrix;

/// Tangent vectors shorter than this make an angle undefined.
const MIN_SIDE: f64 = 1e-12;

fn angle_at(m: &dyn Manifold, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<f64> {
    let u = m.log(a, b)?;
    let v = m.log(a, c)?;
    let (nu, nv) = (m.norm(a, &u), m.norm(a, &v));
    if nu < MIN_SIDE || nv < MIN_SIDE {
        return Err(Error::DegenerateConfiguration("triangle with a repeated vertex".into()));
    }
    Ok((m.inner(a, &u, &v) / (nu * nv)).clamp(-1.0, 1.0).acos())
}

/// Normalized angle excess `(θ_a + θ_b + θ_c − π) / 2π` of the geodesic
/// triangle `abc`.
pub fn triangle_angle_sum(m: &dyn Manifold, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<f64> {
    let sum = angle_at(m, a, b, c)? + angle_at(m, b, c, a)? + angle_at(m, c, a, b)?;
    Ok((sum - PI) / (2.0 * PI))
}

/// `n` samples of the normalized angle sum over random triples of distinct
/// points. Triples touching a cut locus or with coincident vertices are
/// redrawn, at most `10·n` times in total.
pub fn angle_sums(m: &dyn Manifold, points: &[Matrix], n: usize, seed: u64) -> Result<Vec<f64>> {
    let count = points.len();
    if count < 3 {
        return Err(Error::invalid("angle sums need at least 3 points"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut redraws = 0usize;
    while out.len() < n {
        let i = rng.gen_range(0..count);
        let j = rng.gen_range(0..count);
        let k = rng.gen_range(0..count);
        if i == j || j == k || i == k {
            continue;
        }
        match triangle_angle_sum(m, &points[i], &points[j], &points[k]) {
            Ok(x) => out.push(x),
            Err(Error::CutLocus(_) | Error::DegenerateConfiguration(_) | Error::NumericalDomain(_)) => {
                redraws += 1;
                if redraws > 10 * n {
                    return Err(Error::DegenerateConfiguration(format!(
                        "gave up after {redraws} rejected triples"
                    )));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn angle_sum_profile(emb: &EmbeddingSet, n: usize, seed: u64) -> Result<Vec<f64>> {
    angle_sums(emb.manifold(), emb.points(), n, seed)
}

/// Fixed-range histogram; values outside `[lo, hi]` go to the end bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || bins == 0 {
            return Err(Error::invalid("histogram needs hi > lo and at least one bin"));
        }
        let mut counts = vec![0; bins];
        let w = (hi - lo) / bins as f64;
        for &x in samples.iter().filter(|x| x.is_finite()) {
            let b = ((x - lo) / w).floor().clamp(0.0, (bins - 1) as f64) as usize;
            counts[b] += 1;
        }
        Ok(Histogram { lo, hi, counts })
    }

    /// Range `[−0.5, 1]` in steps of 0.02, covering both curvature signs.
    pub fn angle_sums(samples: &[f64]) -> Self {
        Self::new(samples, -0.5, 1.0, 75).expect("valid range")
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// CSV rows `(lo, hi, count, density)`; density integrates to 1.
    pub fn to_csv(&self) -> String {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        let total = self.total().max(1) as f64;
        let mut s = String::from("bin_lo,bin_hi,count,density\n");
        for (i, &c) in self.counts.iter().enumerate() {
            let a = self.lo + i as f64 * w;
            s.push_str(&format!("{},{},{},{}\n", a, a + w, c, c as f64 / (total * w)));
        }
        s
    }
}
