use super::{shape_check, Manifold, ManifoldSpec, SqDistGrad};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Riemannian product. A point is the column stack of the flattened
/// (row-major) factor points; squared distances add across factors.
#[derive(Debug)]
pub struct Product {
    factors: Vec<Box<dyn Manifold>>,
    offsets: Vec<usize>,
    total: usize,
    spec: ManifoldSpec,
}

impl Product {
    pub fn new(factors: Vec<Box<dyn Manifold>>) -> Self {
        let mut offsets = Vec::with_capacity(factors.len());
        let mut total = 0;
        for f in &factors {
            offsets.push(total);
            let (r, c) = f.point_shape();
            total += r * c;
        }
        let spec = ManifoldSpec::Product(factors.iter().map(|f| f.spec().clone()).collect());
        Product {
            factors,
            offsets,
            total,
            spec,
        }
    }

    pub fn factors(&self) -> &[Box<dyn Manifold>] {
        &self.factors
    }

    /// Factor `i` of a stacked vector, in the factor's native shape.
    pub fn part(&self, x: &Matrix, i: usize) -> Matrix {
        let (r, c) = self.factors[i].point_shape();
        let o = self.offsets[i];
        Matrix::from_row_slice(r, c, &x.as_slice()[o..o + r * c])
    }

    pub fn split(&self, x: &Matrix) -> Vec<Matrix> {
        (0..self.factors.len()).map(|i| self.part(x, i)).collect()
    }

    pub fn stack(&self, parts: &[Matrix]) -> Matrix {
        let mut out = Matrix::zeros(self.total, 1);
        for (i, p) in parts.iter().enumerate() {
            let o = self.offsets[i];
            out.as_mut_slice()[o..o + p.len()].copy_from_slice(p.as_slice());
        }
        out
    }

    fn map2(
        &self,
        x: &Matrix,
        v: &Matrix,
        f: impl Fn(&dyn Manifold, &Matrix, &Matrix) -> Result<Matrix>,
    ) -> Result<Matrix> {
        let parts = (0..self.factors.len())
            .map(|i| f(self.factors[i].as_ref(), &self.part(x, i), &self.part(v, i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.stack(&parts))
    }

    fn grads(
        &self,
        x: &Matrix,
        y: &Matrix,
        f: impl Fn(&dyn Manifold, &Matrix, &Matrix) -> Result<SqDistGrad>,
    ) -> Result<SqDistGrad> {
        let mut value = 0.0;
        let mut gx = Vec::with_capacity(self.factors.len());
        let mut gy = Vec::with_capacity(self.factors.len());
        for (i, m) in self.factors.iter().enumerate() {
            let g = f(m.as_ref(), &self.part(x, i), &self.part(y, i))?;
            value += g.value;
            gx.push(g.grad_x);
            gy.push(g.grad_y);
        }
        Ok(SqDistGrad {
            value,
            grad_x: self.stack(&gx),
            grad_y: self.stack(&gy),
        })
    }
}

impl Manifold for Product {
    fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    fn point_shape(&self) -> (usize, usize) {
        (self.total, 1)
    }

    fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).sum()
    }

    fn base_point(&self) -> Matrix {
        let parts: Vec<_> = self.factors.iter().map(|f| f.base_point()).collect();
        self.stack(&parts)
    }

    fn check_point(&self, x: &Matrix) -> Result<()> {
        shape_check(self, x, "point")?;
        for (i, m) in self.factors.iter().enumerate() {
            m.check_point(&self.part(x, i))?;
        }
        Ok(())
    }

    fn check_tangent(&self, x: &Matrix, v: &Matrix) -> Result<()> {
        shape_check(self, x, "point")?;
        shape_check(self, v, "tangent")?;
        for (i, m) in self.factors.iter().enumerate() {
            m.check_tangent(&self.part(x, i), &self.part(v, i))?;
        }
        Ok(())
    }

    fn inner(&self, x: &Matrix, u: &Matrix, v: &Matrix) -> f64 {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, m)| m.inner(&self.part(x, i), &self.part(u, i), &self.part(v, i)))
            .sum()
    }

    fn distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        let mut s = 0.0;
        for (i, m) in self.factors.iter().enumerate() {
            s += m.distance(&self.part(x, i), &self.part(y, i))?.powi(2);
        }
        Ok(s.sqrt())
    }

    fn exp(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        self.map2(x, v, |m, a, b| m.exp(a, b))
    }

    fn log(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        self.map2(x, y, |m, a, b| m.log(a, b))
    }

    fn project(&self, x: &Matrix, g: &Matrix) -> Matrix {
        self.map2(x, g, |m, a, b| Ok(m.project(a, b))).unwrap()
    }

    fn egrad_to_rgrad(&self, x: &Matrix, g: &Matrix) -> Matrix {
        self.map2(x, g, |m, a, b| Ok(m.egrad_to_rgrad(a, b))).unwrap()
    }

    fn retract(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        self.map2(x, v, |m, a, b| m.retract(a, b))
    }

    fn repair(&self, x: &Matrix) -> Result<Matrix> {
        self.map2(x, x, |m, a, _| m.repair(a))
    }

    fn sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        self.grads(x, y, |m, a, b| m.sq_distance_grad(a, b))
    }

    fn model_sq_distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        let mut s = 0.0;
        for (i, m) in self.factors.iter().enumerate() {
            s += m.model_sq_distance(&self.part(x, i), &self.part(y, i))?;
        }
        Ok(s)
    }

    fn model_sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        self.grads(x, y, |m, a, b| m.model_sq_distance_grad(a, b))
    }

    fn tangent_from_coords(&self, x: &Matrix, coords: &[f64]) -> Result<Matrix> {
        if coords.len() != self.dim() {
            return Err(Error::invalid("coordinate count does not match the dimension"));
        }
        let mut parts = Vec::with_capacity(self.factors.len());
        let mut at = 0;
        for (i, m) in self.factors.iter().enumerate() {
            let d = m.dim();
            parts.push(m.tangent_from_coords(&self.part(x, i), &coords[at..at + d])?);
            at += d;
        }
        Ok(self.stack(&parts))
    }

    fn injectivity_radius(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.injectivity_radius())
            .fold(f64::INFINITY, f64::min)
    }

    fn is_compact(&self) -> bool {
        self.factors.iter().all(|f| f.is_compact())
    }
}
