use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use super::{shape_check, x_over_sin, Manifold, ManifoldSpec, SqDistGrad, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Rotation angles this close to π put the log map on the cut locus.
pub const CUT_LOCUS_MARGIN: f64 = 1e-6;

/// Rotation group `SO(n)`, `n ∈ {2, 3}`, with the bi-invariant metric
/// induced by the Frobenius inner product. Under this metric the geodesic
/// distance is `√2 · θ` with θ the rotation angle of `AᵀB`.
#[derive(Debug, Clone)]
pub struct SpecialOrthogonal {
    n: usize,
    spec: ManifoldSpec,
}

/// Rotation angle of `R ∈ SO(n)` in `[0, π]`.
fn rotation_angle(r: &Matrix) -> f64 {
    if r.rows() == 2 {
        r[(1, 0)].atan2(r[(0, 0)]).abs()
    } else {
        let s = vee3(&r.skew());
        let sin = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        sin.atan2((r.trace() - 1.0) / 2.0)
    }
}

fn vee3(w: &Matrix) -> [f64; 3] {
    [w[(2, 1)], w[(0, 2)], w[(1, 0)]]
}

/// Geodesic distance between two rotations of the same size (n ∈ {2, 3}).
pub fn so_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() || !a.is_square() || !(2..=3).contains(&a.rows()) {
        return Err(Error::invalid("so_distance needs two n×n rotations, n ∈ {2, 3}"));
    }
    for r in [a, b] {
        let det = r.det();
        if !((det - 1.0).abs() <= MEMBERSHIP_TOL) {
            return Err(Error::invalid(format!("determinant {det} is not 1")));
        }
    }
    Ok(SQRT_2 * rotation_angle(&a.tr_matmul(b)))
}

impl SpecialOrthogonal {
    pub fn new(n: usize) -> Self {
        SpecialOrthogonal {
            n,
            spec: ManifoldSpec::SpecialOrthogonal(n),
        }
    }

    /// Matrix exponential of a skew-symmetric `W` (Rodrigues for n = 3).
    fn expm_skew(&self, w: &Matrix) -> Matrix {
        if self.n == 2 {
            let t = w[(1, 0)];
            let (s, c) = t.sin_cos();
            return Matrix::from_rows(&[&[c, -s], &[s, c]]);
        }
        let v = vee3(w);
        let t = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let (a, b) = if t < 1e-6 {
            (1.0 - t * t / 6.0, 0.5 - t * t / 24.0)
        } else {
            (t.sin() / t, (1.0 - t.cos()) / (t * t))
        };
        let mut out = Matrix::identity(3);
        out.axpy(a, w);
        out.axpy(b, &w.matmul(w));
        out
    }

    /// `log(AᵀB)` as a skew matrix, i.e. the body-frame velocity.
    fn log_rel(&self, r: &Matrix) -> Result<Matrix> {
        let theta = rotation_angle(r);
        if PI - theta < CUT_LOCUS_MARGIN {
            return Err(Error::CutLocus(format!(
                "rotation angle {theta} is within the margin of π"
            )));
        }
        if self.n == 2 {
            let t = r[(1, 0)].atan2(r[(0, 0)]);
            return Ok(Matrix::from_rows(&[&[0.0, -t], &[t, 0.0]]));
        }
        Ok(r.skew().scale(x_over_sin(theta)))
    }
}

impl Manifold for SpecialOrthogonal {
    fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    fn point_shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn dim(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    fn base_point(&self) -> Matrix {
        Matrix::identity(self.n)
    }

    fn check_point(&self, x: &Matrix) -> Result<()> {
        shape_check(self, x, "point")?;
        let dev = (&x.tr_matmul(x) - &Matrix::identity(self.n)).norm();
        let det = x.det();
        if !(dev <= MEMBERSHIP_TOL) || !((det - 1.0).abs() <= MEMBERSHIP_TOL) {
            return Err(Error::invalid(format!(
                "not a rotation: ‖AᵀA − I‖ = {dev:e}, det = {det}"
            )));
        }
        Ok(())
    }

    fn check_tangent(&self, x: &Matrix, v: &Matrix) -> Result<()> {
        self.check_point(x)?;
        shape_check(self, v, "tangent")?;
        let s = x.tr_matmul(v).sym().norm();
        if !(s <= MEMBERSHIP_TOL * v.norm().max(1.0)) {
            return Err(Error::invalid(format!("AᵀV is not skew: ‖sym‖ = {s:e}")));
        }
        Ok(())
    }

    fn inner(&self, _x: &Matrix, u: &Matrix, v: &Matrix) -> f64 {
        u.dot(v)
    }

    fn distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        Ok(SQRT_2 * rotation_angle(&x.tr_matmul(y)))
    }

    fn exp(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        let w = x.tr_matmul(v).skew();
        Ok(x.matmul(&self.expm_skew(&w)))
    }

    fn log(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        Ok(x.matmul(&self.log_rel(&x.tr_matmul(y))?))
    }

    fn project(&self, x: &Matrix, g: &Matrix) -> Matrix {
        x.matmul(&x.tr_matmul(g).skew())
    }

    fn egrad_to_rgrad(&self, x: &Matrix, g: &Matrix) -> Matrix {
        self.project(x, g)
    }

    fn repair(&self, x: &Matrix) -> Result<Matrix> {
        let q = super::orthonormalize_columns(x)?;
        if q.det() < 0.0 {
            return Err(Error::NumericalDomain("rotation flipped orientation".into()));
        }
        Ok(q)
    }

    fn retract(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        let y = self.exp(x, &self.project(x, v))?;
        self.repair(&y)
    }

    fn sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        // Riemannian gradients are −2 log; as tangent vectors they are
        // already fixed points of the projection, so they double as
        // Euclidean gradients.
        let r = x.tr_matmul(y);
        let theta = rotation_angle(&r);
        let w = if PI - theta < CUT_LOCUS_MARGIN {
            // Any minimizing direction will do; use the skew part with a
            // floored sine so the step stays finite.
            r.skew().scale(theta / CUT_LOCUS_MARGIN)
        } else {
            self.log_rel(&r)?
        };
        Ok(SqDistGrad {
            value: 2.0 * theta * theta,
            grad_x: x.matmul(&w).scale(-2.0),
            grad_y: y.matmul(&w).scale(2.0),
        })
    }

    fn tangent_from_coords(&self, x: &Matrix, coords: &[f64]) -> Result<Matrix> {
        if coords.len() != self.dim() {
            return Err(Error::invalid("coordinate count does not match the dimension"));
        }
        let mut w = Matrix::zeros(self.n, self.n);
        let mut c = coords.iter();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = c.next().unwrap() * FRAC_1_SQRT_2;
                w[(i, j)] = v;
                w[(j, i)] = -v;
            }
        }
        Ok(x.matmul(&w))
    }

    fn injectivity_radius(&self) -> f64 {
        SQRT_2 * PI
    }

    fn is_compact(&self) -> bool {
        true
    }
}
