use super::{shape_check, sinhc, x_over_sinh, Manifold, ManifoldSpec, SqDistGrad, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Minkowski product `−x₀y₀ + Σ xᵢyᵢ`.
#[inline]
pub fn lorentz_inner(x: &Matrix, y: &Matrix) -> f64 {
    let (a, b) = (x.as_slice(), y.as_slice());
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(p, q)| p * q).sum::<f64>()
}

/// Hyperboloid model `{x ∈ ℝⁿ⁺¹ : ⟨x,x⟩_L = −1, x₀ > 0}` of hyperbolic space.
#[derive(Debug, Clone)]
pub struct Lorentz {
    n: usize,
    spec: ManifoldSpec,
}

impl Lorentz {
    pub fn new(n: usize) -> Self {
        Lorentz {
            n,
            spec: ManifoldSpec::Lorentz(n),
        }
    }

    /// `d = 2 asinh(‖x − y‖_L / 2)`, which keeps precision for nearby points
    /// where `acosh(−⟨x,y⟩_L)` loses half the digits.
    fn dist(x: &Matrix, y: &Matrix) -> f64 {
        let diff = x - y;
        let sq = lorentz_inner(&diff, &diff).max(0.0);
        2.0 * (0.5 * sq.sqrt()).asinh()
    }

    fn check_alpha(x: &Matrix, y: &Matrix) -> Result<f64> {
        let alpha = -lorentz_inner(x, y);
        if alpha < 1.0 - 1e-9 * x.norm() * y.norm() {
            return Err(Error::NumericalDomain(format!(
                "cosh⁻¹ argument {alpha} below 1"
            )));
        }
        Ok(alpha.max(1.0))
    }
}

impl Manifold for Lorentz {
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
        let q = lorentz_inner(x, x);
        if !((q + 1.0).abs() <= MEMBERSHIP_TOL * x.norm_sq().max(1.0)) || !(x[(0, 0)] > 0.0) {
            return Err(Error::invalid(format!(
                "not on the upper hyperboloid: ⟨x,x⟩_L = {q}, x₀ = {}",
                x[(0, 0)]
            )));
        }
        Ok(())
    }

    fn check_tangent(&self, x: &Matrix, v: &Matrix) -> Result<()> {
        self.check_point(x)?;
        shape_check(self, v, "tangent")?;
        let d = lorentz_inner(x, v).abs();
        if !(d <= MEMBERSHIP_TOL * (x.norm() * v.norm()).max(1.0)) {
            return Err(Error::invalid(format!(
                "vector is not tangent: ⟨x,v⟩_L = {d:e}"
            )));
        }
        Ok(())
    }

    fn inner(&self, _x: &Matrix, u: &Matrix, v: &Matrix) -> f64 {
        lorentz_inner(u, v)
    }

    fn distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        Self::check_alpha(x, y)?;
        Ok(Self::dist(x, y))
    }

    fn exp(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        let t = lorentz_inner(v, v).max(0.0).sqrt();
        let mut out = x.scale(t.cosh());
        out.axpy(sinhc(t), v);
        Ok(out)
    }

    fn log(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        let alpha = Self::check_alpha(x, y)?;
        let d = Self::dist(x, y);
        let mut u = y.clone();
        u.axpy(-alpha, x);
        // ‖y − αx‖_L = sinh d.
        u.scale_mut(x_over_sinh(d));
        Ok(u)
    }

    fn project(&self, x: &Matrix, g: &Matrix) -> Matrix {
        let mut out = g.clone();
        out.axpy(lorentz_inner(g, x), x);
        out
    }

    fn egrad_to_rgrad(&self, x: &Matrix, g: &Matrix) -> Matrix {
        // Raise the index with diag(−1, 1, …, 1), then project onto T_x.
        let mut h = g.clone();
        h[(0, 0)] = -h[(0, 0)];
        self.project(x, &h)
    }

    fn retract(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        let y = self.exp(x, &self.project(x, v))?;
        self.repair(&y)
    }

    fn repair(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = x.clone();
        let spatial: f64 = y.as_slice()[1..].iter().map(|a| a * a).sum();
        if !spatial.is_finite() {
            return Err(Error::NumericalDomain("hyperboloid point overflowed".into()));
        }
        y[(0, 0)] = (1.0 + spatial).sqrt();
        Ok(y)
    }

    fn sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        Self::check_alpha(x, y)?;
        let d = Self::dist(x, y);
        // ∂d²/∂x = −2 d/sinh(d) · J y with J = diag(−1, 1, …, 1).
        let coef = -2.0 * x_over_sinh(d);
        let mut gx = y.scale(coef);
        gx[(0, 0)] = -gx[(0, 0)];
        let mut gy = x.scale(coef);
        gy[(0, 0)] = -gy[(0, 0)];
        Ok(SqDistGrad {
            value: d * d,
            grad_x: gx,
            grad_y: gy,
        })
    }

    fn tangent_from_coords(&self, x: &Matrix, coords: &[f64]) -> Result<Matrix> {
        if coords.len() != self.n {
            return Err(Error::invalid("coordinate count does not match the dimension"));
        }
        // Parallel transport of the standard basis from the origin o:
        // u ↦ u + ⟨x, u⟩_L / (1 + x₀) · (o + x).
        let mut u = Matrix::zeros(self.n + 1, 1);
        u.as_mut_slice()[1..].copy_from_slice(coords);
        let coef = lorentz_inner(x, &u) / (1.0 + x[(0, 0)]);
        let mut out = u;
        out.axpy(coef, x);
        out[(0, 0)] += coef;
        Ok(out)
    }
}
