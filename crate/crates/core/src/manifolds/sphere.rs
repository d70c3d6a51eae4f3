use std::f64::consts::PI;

use super::{
    orthonormal_complement, shape_check, sinc, x_over_sin, Manifold, ManifoldSpec, SqDistGrad,
    MEMBERSHIP_TOL,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Unit sphere `Sⁿ ⊂ ℝⁿ⁺¹` with the induced metric.
#[derive(Debug, Clone)]
pub struct Sphere {
    n: usize,
    spec: ManifoldSpec,
}

impl Sphere {
    pub fn new(n: usize) -> Self {
        Sphere {
            n,
            spec: ManifoldSpec::Sphere(n),
        }
    }

    /// Angle between unit vectors, accurate near 0 and π.
    fn angle(x: &Matrix, y: &Matrix) -> f64 {
        let diff = (x - y).norm();
        let sum = (x + y).norm();
        2.0 * diff.atan2(sum)
    }
}

impl Manifold for Sphere {
    fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    fn point_shape(&self) -> (usize, usize) {
        (self.n + 1, 1)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn base_point(&self) -> Matrix {
        let mut x = Matrix::zeros(self.n + 1, 1);
        x[(0, 0)] = 1.0;
        x
    }

    fn check_point(&self, x: &Matrix) -> Result<()> {
        shape_check(self, x, "point")?;
        let dev = (x.norm() - 1.0).abs();
        if !(dev <= MEMBERSHIP_TOL) {
            return Err(Error::invalid(format!("sphere point has norm off by {dev:e}")));
        }
        Ok(())
    }

    fn check_tangent(&self, x: &Matrix, v: &Matrix) -> Result<()> {
        self.check_point(x)?;
        shape_check(self, v, "tangent")?;
        let d = x.dot(v).abs();
        if !(d <= MEMBERSHIP_TOL * v.norm().max(1.0)) {
            return Err(Error::invalid(format!("vector is not tangent: xᵀv = {d:e}")));
        }
        Ok(())
    }

    fn inner(&self, _x: &Matrix, u: &Matrix, v: &Matrix) -> f64 {
        u.dot(v)
    }

    fn distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        Ok(Self::angle(x, y))
    }

    fn exp(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        let t = v.norm();
        let mut out = x.scale(t.cos());
        out.axpy(sinc(t), v);
        let nrm = out.norm();
        out.scale_mut(1.0 / nrm);
        Ok(out)
    }

    fn log(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        if (x + y).norm() < MEMBERSHIP_TOL {
            return Err(Error::CutLocus("antipodal points on the sphere".into()));
        }
        let theta = Self::angle(x, y);
        let mut u = y.clone();
        u.axpy(-x.dot(y), x);
        let nrm = u.norm();
        if nrm == 0.0 {
            return Ok(Matrix::zeros(x.rows(), 1));
        }
        // ‖u‖ = sin θ; rescaling by θ/‖u‖ degrades gracefully as θ → 0.
        u.scale_mut(if theta < 1e-6 { 1.0 } else { theta / nrm });
        Ok(u)
    }

    fn project(&self, x: &Matrix, g: &Matrix) -> Matrix {
        let mut out = g.clone();
        out.axpy(-x.dot(g), x);
        out
    }

    fn egrad_to_rgrad(&self, x: &Matrix, g: &Matrix) -> Matrix {
        self.project(x, g)
    }

    fn repair(&self, x: &Matrix) -> Result<Matrix> {
        let n = x.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NumericalDomain("cannot normalize a zero vector".into()));
        }
        Ok(x.scale(1.0 / n))
    }

    fn sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        let theta = Self::angle(x, y);
        // d(arccos c)²/dc = −2θ/sin θ; sin θ is floored so that near-antipodal
        // pairs yield a large but finite gradient.
        let coef = if PI - theta < 1e-8 {
            -2.0 * theta / 1e-8
        } else {
            -2.0 * x_over_sin(theta)
        };
        Ok(SqDistGrad {
            value: theta * theta,
            grad_x: y.scale(coef),
            grad_y: x.scale(coef),
        })
    }

    fn tangent_from_coords(&self, x: &Matrix, coords: &[f64]) -> Result<Matrix> {
        if coords.len() != self.n {
            return Err(Error::invalid("coordinate count does not match the dimension"));
        }
        let basis = orthonormal_complement(x);
        Ok(basis.matmul(&Matrix::column(coords)))
    }

    fn injectivity_radius(&self) -> f64 {
        PI
    }

    fn is_compact(&self) -> bool {
        true
    }
}
