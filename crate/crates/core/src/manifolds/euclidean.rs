use super::{shape_check, Manifold, ManifoldSpec, SqDistGrad};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Flat `ℝⁿ`, points stored as column vectors.
#[derive(Debug, Clone)]
pub struct Euclidean {
    n: usize,
    spec: ManifoldSpec,
}

impl Euclidean {
    pub fn new(n: usize) -> Self {
        Euclidean {
            n,
            spec: ManifoldSpec::Euclidean(n),
        }
    }
}

impl Manifold for Euclidean {
    fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    fn point_shape(&self) -> (usize, usize) {
        (self.n, 1)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn base_point(&self) -> Matrix {
        Matrix::zeros(self.n, 1)
    }

    fn check_point(&self, x: &Matrix) -> Result<()> {
        shape_check(self, x, "point")?;
        if !x.is_finite() {
            return Err(Error::invalid("point has non-finite entries"));
        }
        Ok(())
    }

    fn check_tangent(&self, x: &Matrix, v: &Matrix) -> Result<()> {
        self.check_point(x)?;
        self.check_point(v)
    }

    fn inner(&self, _x: &Matrix, u: &Matrix, v: &Matrix) -> f64 {
        u.dot(v)
    }

    fn distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        Ok((x - y).norm())
    }

    fn exp(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        Ok(x + v)
    }

    fn log(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        Ok(y - x)
    }

    fn project(&self, _x: &Matrix, g: &Matrix) -> Matrix {
        g.clone()
    }

    fn egrad_to_rgrad(&self, _x: &Matrix, g: &Matrix) -> Matrix {
        g.clone()
    }

    fn sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        let diff = x - y;
        Ok(SqDistGrad {
            value: diff.norm_sq(),
            grad_x: diff.scale(2.0),
            grad_y: diff.scale(-2.0),
        })
    }

    fn tangent_from_coords(&self, _x: &Matrix, coords: &[f64]) -> Result<Matrix> {
        Ok(Matrix::column(coords))
    }
}
