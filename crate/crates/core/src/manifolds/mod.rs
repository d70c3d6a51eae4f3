//! Riemannian manifolds used as embedding spaces.
//!
//! Every manifold works on [`Matrix`] values: column vectors for Euclidean,
//! sphere and Lorentz points, `n × n` matrices for SPD and rotations,
//! `n × k` orthonormal frames for Grassmannians and stacked column vectors
//! for products. Tangent vectors share the shape of their base point.
//!
//! Two notions of distance coexist. [`Manifold::distance`] is the geodesic
//! distance of the Riemannian structure used by the optimizer, while
//! [`Manifold::model_sq_distance`] is what the losses consume. They agree
//! everywhere except on the Stein-SPD manifold, whose model metric is the
//! symmetric Stein divergence.

mod euclidean;
mod grassmann;
mod lorentz;
mod product;
mod special_orthogonal;
mod spd;
mod sphere;

use std::fmt;
use std::str::FromStr;

pub use euclidean::Euclidean;
pub use grassmann::Grassmann;
pub use lorentz::{lorentz_inner, Lorentz};
pub use product::Product;
pub use special_orthogonal::{so_distance, SpecialOrthogonal};
pub use spd::{stein_divergence, stein_gradient, Spd, SpdMetric};
pub use sphere::Sphere;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Tolerance for point and tangent-space membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Squared distance together with its ambient (Euclidean) gradients with
/// respect to both arguments.
#[derive(Clone, Debug)]
pub struct SqDistGrad {
    pub value: f64,
    pub grad_x: Matrix,
    pub grad_y: Matrix,
}

pub trait Manifold: Send + Sync + fmt::Debug {
    fn spec(&self) -> &ManifoldSpec;

    /// Shape of the matrix holding a point.
    fn point_shape(&self) -> (usize, usize);

    /// Intrinsic dimension.
    fn dim(&self) -> usize;

    /// Canonical base point (origin, pole, identity, first-k frame).
    fn base_point(&self) -> Matrix;

    fn check_point(&self, x: &Matrix) -> Result<()>;

    fn check_tangent(&self, x: &Matrix, v: &Matrix) -> Result<()>;

    /// Riemannian inner product at `x`.
    fn inner(&self, x: &Matrix, u: &Matrix, v: &Matrix) -> f64;

    fn norm(&self, x: &Matrix, u: &Matrix) -> f64 {
        self.inner(x, u, u).max(0.0).sqrt()
    }

    /// Geodesic distance.
    fn distance(&self, x: &Matrix, y: &Matrix) -> Result<f64>;

    fn exp(&self, x: &Matrix, v: &Matrix) -> Result<Matrix>;

    fn log(&self, x: &Matrix, y: &Matrix) -> Result<Matrix>;

    /// Orthogonal projection of an ambient matrix onto `T_x`.
    fn project(&self, x: &Matrix, g: &Matrix) -> Matrix;

    /// Converts the ambient gradient of a function into its Riemannian gradient.
    fn egrad_to_rgrad(&self, x: &Matrix, g: &Matrix) -> Matrix;

    /// Update map used by the optimizers.
    fn retract(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        self.exp(x, &self.project(x, v))
    }

    /// Pulls a numerically drifted point back onto the manifold.
    fn repair(&self, x: &Matrix) -> Result<Matrix> {
        Ok(x.clone())
    }

    /// `d²(x, y)` with ambient gradients.
    fn sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad>;

    /// The squared dissimilarity the losses consume.
    fn model_sq_distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        self.distance(x, y).map(|d| d * d)
    }

    fn model_sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        self.sq_distance_grad(x, y)
    }

    /// Maps coordinates in an orthonormal basis of `T_x` (with respect to the
    /// Riemannian metric) to a tangent vector. `coords.len() == self.dim()`.
    fn tangent_from_coords(&self, x: &Matrix, coords: &[f64]) -> Result<Matrix>;

    /// Radius below which `exp_x` is injective at every point.
    fn injectivity_radius(&self) -> f64 {
        f64::INFINITY
    }

    fn is_compact(&self) -> bool {
        false
    }
}

/// Parsed manifold description, e.g. `"grassmann:2,4"` or
/// `"product:(lorentz:3)x(sphere:3)"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ManifoldSpec {
    Euclidean(usize),
    /// `n`-sphere in `ℝⁿ⁺¹`.
    Sphere(usize),
    /// `n`-dimensional hyperboloid in `ℝⁿ⁺¹`.
    Lorentz(usize),
    /// `n × n` SPD matrices with the affine-invariant metric.
    SpdCanonical(usize),
    /// `n × n` SPD matrices, Stein divergence as the model metric.
    SpdStein(usize),
    Grassmann { k: usize, n: usize },
    Product(Vec<ManifoldSpec>),
    SpecialOrthogonal(usize),
}

impl ManifoldSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldSpec::Euclidean(n)
            | ManifoldSpec::Sphere(n)
            | ManifoldSpec::Lorentz(n)
            | ManifoldSpec::SpdCanonical(n)
            | ManifoldSpec::SpdStein(n)
                if *n == 0 =>
            {
                Err(Error::invalid(format!("{self}: dimension must be positive")))
            }
            ManifoldSpec::Grassmann { k, n } if *k == 0 || k >= n => Err(Error::invalid(format!(
                "grassmann requires 1 ≤ k < n, got k={k}, n={n}"
            ))),
            ManifoldSpec::SpecialOrthogonal(n) if !(2..=3).contains(n) => Err(Error::invalid(
                format!("special orthogonal group supported for n ∈ {{2, 3}}, got {n}"),
            )),
            ManifoldSpec::Product(factors) => {
                if factors.len() < 2 {
                    return Err(Error::invalid("product needs at least two factors"));
                }
                factors.iter().try_for_each(ManifoldSpec::validate)
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Manifold>> {
        self.validate()?;
        Ok(match self {
            ManifoldSpec::Euclidean(n) => Box::new(Euclidean::new(*n)),
            ManifoldSpec::Sphere(n) => Box::new(Sphere::new(*n)),
            ManifoldSpec::Lorentz(n) => Box::new(Lorentz::new(*n)),
            ManifoldSpec::SpdCanonical(n) => Box::new(Spd::new(*n, SpdMetric::Canonical)),
            ManifoldSpec::SpdStein(n) => Box::new(Spd::new(*n, SpdMetric::Stein)),
            ManifoldSpec::Grassmann { k, n } => Box::new(Grassmann::new(*k, *n)),
            ManifoldSpec::SpecialOrthogonal(n) => Box::new(SpecialOrthogonal::new(*n)),
            ManifoldSpec::Product(factors) => Box::new(Product::new(
                factors.iter().map(|f| f.build()).collect::<Result<Vec<_>>>()?,
            )),
        })
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match self {
            ManifoldSpec::Euclidean(n) | ManifoldSpec::Sphere(n) | ManifoldSpec::Lorentz(n) => *n,
            ManifoldSpec::SpdCanonical(n) | ManifoldSpec::SpdStein(n) => n * (n + 1) / 2,
            ManifoldSpec::Grassmann { k, n } => k * (n - k),
            ManifoldSpec::SpecialOrthogonal(n) => n * (n - 1) / 2,
            ManifoldSpec::Product(f) => f.iter().map(ManifoldSpec::dim).sum(),
        }
    }

    /// Short family name used when grouping results.
    pub fn family(&self) -> &'static str {
        match self {
            ManifoldSpec::Euclidean(_) => "euclidean",
            ManifoldSpec::Sphere(_) => "sphere",
            ManifoldSpec::Lorentz(_) => "lorentz",
            ManifoldSpec::SpdCanonical(_) => "spd",
            ManifoldSpec::SpdStein(_) => "stein",
            ManifoldSpec::Grassmann { .. } => "grassmann",
            ManifoldSpec::Product(_) => "product",
            ManifoldSpec::SpecialOrthogonal(_) => "so",
        }
    }
}

impl fmt::Display for ManifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldSpec::Euclidean(n) => write!(f, "euclidean:{n}"),
            ManifoldSpec::Sphere(n) => write!(f, "sphere:{n}"),
            ManifoldSpec::Lorentz(n) => write!(f, "lorentz:{n}"),
            ManifoldSpec::SpdCanonical(n) => write!(f, "spd:{n}"),
            ManifoldSpec::SpdStein(n) => write!(f, "stein:{n}"),
            ManifoldSpec::Grassmann { k, n } => write!(f, "grassmann:{k},{n}"),
            ManifoldSpec::SpecialOrthogonal(n) => write!(f, "so:{n}"),
            ManifoldSpec::Product(factors) => {
                write!(f, "product:")?;
                for (i, fac) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, "x")?;
                    }
                    write!(f, "({fac})")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ManifoldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("manifold spec {s:?} lacks ':'")))?;
        let int = |a: &str| {
            a.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad integer {a:?} in manifold spec {s:?}")))
        };
        let spec = match kind.trim() {
            "euclidean" => ManifoldSpec::Euclidean(int(args)?),
            "sphere" => ManifoldSpec::Sphere(int(args)?),
            "lorentz" | "hyperbolic" => ManifoldSpec::Lorentz(int(args)?),
            "spd" => ManifoldSpec::SpdCanonical(int(args)?),
            "stein" => ManifoldSpec::SpdStein(int(args)?),
            "so" => ManifoldSpec::SpecialOrthogonal(int(args)?),
            "grassmann" => {
                let (k, n) = args
                    .split_once(',')
                    .ok_or_else(|| Error::invalid(format!("grassmann spec {s:?} needs k,n")))?;
                ManifoldSpec::Grassmann {
                    k: int(k)?,
                    n: int(n)?,
                }
            }
            "product" => ManifoldSpec::Product(parse_factors(args)?),
            other => return Err(Error::invalid(format!("unknown manifold kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_factors(args: &str) -> Result<Vec<ManifoldSpec>> {
    let bad = || Error::invalid(format!("malformed product factors {args:?}"));
    let mut factors = Vec::new();
    let mut depth = 0usize;
    let mut start = None;
    let mut expect_sep = false;
    for (i, c) in args.char_indices() {
        match c {
            '(' => {
                if depth == 0 {
                    if expect_sep {
                        return Err(bad());
                    }
                    start = Some(i + 1);
                }
                depth += 1;
            }
            ')' => {
                depth = depth.checked_sub(1).ok_or_else(bad)?;
                if depth == 0 {
                    factors.push(args[start.take().ok_or_else(bad)?..i].parse()?);
                    expect_sep = true;
                }
            }
            'x' | '×' if depth == 0 => {
                if !expect_sep {
                    return Err(bad());
                }
                expect_sep = false;
            }
            c if depth == 0 && !c.is_whitespace() => return Err(bad()),
            _ => {}
        }
    }
    if depth != 0 || !expect_sep {
        return Err(bad());
    }
    Ok(factors)
}

/// Validated exponential map.
pub fn exp_map(m: &dyn Manifold, x: &Matrix, v: &Matrix) -> Result<Matrix> {
    m.check_tangent(x, v)?;
    m.exp(x, v)
}

/// Tangent vector at `x` drawn uniformly from the Riemannian ball of the
/// given radius: uniform direction, norm `radius · U^{1/dim}`.
pub fn random_tangent_in_ball<R: rand::Rng + ?Sized>(
    m: &dyn Manifold,
    x: &Matrix,
    radius: f64,
    rng: &mut R,
) -> Result<Matrix> {
    let dim = m.dim();
    let mut coords: Vec<f64> = (0..dim).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
    let u: f64 = rng.gen();
    let len = if norm > 0.0 {
        radius * u.powf(1.0 / dim as f64) / norm
    } else {
        0.0
    };
    coords.iter_mut().for_each(|c| *c *= len);
    m.tangent_from_coords(x, &coords)
}

fn shape_check(m: &dyn Manifold, a: &Matrix, what: &str) -> Result<()> {
    if a.shape() != m.point_shape() {
        return Err(Error::invalid(format!(
            "{what} has shape {:?}, {} expects {:?}",
            a.shape(),
            m.spec(),
            m.point_shape()
        )));
    }
    Ok(())
}

/// Orthonormal basis of the complement of the column span of `a` (`n × k`
/// with orthonormal columns), as an `n × (n − k)` matrix.
pub(crate) fn orthonormal_complement(a: &Matrix) -> Matrix {
    let (n, k) = a.shape();
    let mut basis: Vec<Vec<f64>> = (0..k).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    let mut out = Vec::with_capacity(n - k);
    for e in 0..n {
        if out.len() == n - k {
            break;
        }
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= d * bi;
                }
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= nrm);
            basis.push(v.clone());
            out.push(v);
        }
    }
    Matrix::from_fn(n, n - k, |i, j| out[j][i])
}

/// Modified Gram–Schmidt on the columns, applied twice for stability.
pub fn orthonormalize_columns(a: &Matrix) -> Result<Matrix> {
    let (n, k) = a.shape();
    let mut q = a.clone();
    for j in 0..k {
        for _ in 0..2 {
            for p in 0..j {
                let d: f64 = (0..n).map(|i| q[(i, p)] * q[(i, j)]).sum();
                for i in 0..n {
                    let qp = q[(i, p)];
                    q[(i, j)] -= d * qp;
                }
            }
        }
        let nrm = (0..n).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
        if !(nrm > 1e-12) {
            return Err(Error::NumericalDomain("columns are linearly dependent".into()));
        }
        for i in 0..n {
            q[(i, j)] /= nrm;
        }
    }
    Ok(q)
}

/// `x/sin(x)`, continuous at 0.
#[inline]
pub(crate) fn x_over_sin(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 + x * x / 6.0
    } else {
        x / x.sin()
    }
}

/// `x/sinh(x)`, continuous at 0.
#[inline]
pub(crate) fn x_over_sinh(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x / x.sinh()
    }
}

/// `sinh(x)/x`, continuous at 0.
#[inline]
pub(crate) fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// `sin(x)/x`, continuous at 0.
#[inline]
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
