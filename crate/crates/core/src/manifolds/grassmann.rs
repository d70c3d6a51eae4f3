//! Grassmann manifold `Gr(k, n)` of k-planes in `ℝⁿ`, represented by
//! `n × k` matrices with orthonormal columns. Two representatives of the
//! same subspace are the same point; equality is tested through the
//! subspace distance, never entrywise.

use std::f64::consts::FRAC_PI_2;

use smallvec::SmallVec;

use super::{
    orthonormal_complement, orthonormalize_columns, shape_check, x_over_sin, Manifold,
    ManifoldSpec, SqDistGrad, MEMBERSHIP_TOL,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::smallmat::{singular_values_2x2, svd_2x2, svd_thin, SvdDecomposition};

/// Principal angles this close to π/2 put the log map on the cut locus.
pub const CUT_LOCUS_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Grassmann {
    k: usize,
    n: usize,
    spec: ManifoldSpec,
}

/// Aligned representatives of a pair of subspaces.
struct Alignment {
    /// `AᵀB = P · diag(cos θ) · Qᵀ`.
    svd: SvdDecomposition,
    /// `B·Q`.
    bq: Matrix,
    angles: SmallVec<[f64; 4]>,
}

impl Grassmann {
    pub fn new(k: usize, n: usize) -> Self {
        Grassmann {
            k,
            n,
            spec: ManifoldSpec::Grassmann { k, n },
        }
    }

    fn cross_svd(&self, m: &Matrix) -> SvdDecomposition {
        match self.k {
            2 => svd_2x2(m),
            _ => svd_thin(m),
        }
    }

    /// Principal angles, descending cosines. The sines come from the part of
    /// `B·Q` orthogonal to `span(A)`, so small angles keep full precision.
    fn align(&self, a: &Matrix, b: &Matrix) -> Alignment {
        let svd = self.cross_svd(&a.tr_matmul(b));
        let bq = b.matmul(&svd.right);
        let ap = a.matmul(&svd.left);
        let angles = (0..self.k)
            .map(|i| {
                let c = svd.values[i];
                let s = (0..self.n)
                    .map(|r| {
                        let z = bq[(r, i)] - ap[(r, i)] * c;
                        z * z
                    })
                    .sum::<f64>()
                    .sqrt();
                s.atan2(c)
            })
            .collect();
        Alignment { svd, bq, angles }
    }

    /// Principal angles between `span(a)` and `span(b)`.
    pub fn principal_angles(&self, a: &Matrix, b: &Matrix) -> SmallVec<[f64; 4]> {
        if self.k == 1 {
            let c = a.dot(b).abs();
            let mut r = b.clone();
            r.axpy(-a.dot(b), a);
            return SmallVec::from_slice(&[r.norm().atan2(c)]);
        }
        self.align(a, b).angles
    }

    /// Principal angles from the closed-form 2×2 singular values (k = 2 only).
    pub fn principal_angles_closed_form(&self, a: &Matrix, b: &Matrix) -> [f64; 2] {
        assert_eq!(self.k, 2);
        let s = singular_values_2x2(&a.tr_matmul(b));
        [s[0].clamp(-1.0, 1.0).acos(), s[1].clamp(-1.0, 1.0).acos()]
    }
}

impl Manifold for Grassmann {
    fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    fn point_shape(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    fn dim(&self) -> usize {
        self.k * (self.n - self.k)
    }

    fn base_point(&self) -> Matrix {
        Matrix::eye_frame(self.n, self.k)
    }

    fn check_point(&self, x: &Matrix) -> Result<()> {
        shape_check(self, x, "point")?;
        let dev = (&x.tr_matmul(x) - &Matrix::identity(self.k)).norm();
        if !(dev <= MEMBERSHIP_TOL) {
            return Err(Error::invalid(format!(
                "Grassmann representative is not orthonormal (‖AᵀA − I‖ = {dev:e})"
            )));
        }
        Ok(())
    }

    fn check_tangent(&self, x: &Matrix, v: &Matrix) -> Result<()> {
        self.check_point(x)?;
        shape_check(self, v, "tangent")?;
        let d = x.tr_matmul(v).norm();
        if !(d <= MEMBERSHIP_TOL * v.norm().max(1.0)) {
            return Err(Error::invalid(format!("vector is not horizontal: ‖Aᵀv‖ = {d:e}")));
        }
        Ok(())
    }

    fn inner(&self, _x: &Matrix, u: &Matrix, v: &Matrix) -> f64 {
        u.dot(v)
    }

    fn distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        Ok(self
            .principal_angles(x, y)
            .iter()
            .map(|t| t * t)
            .sum::<f64>()
            .sqrt())
    }

    fn exp(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        // [AV  U] [cos Σ; sin Σ] Vᵀ with V the thin SVD of the tangent.
        let svd = svd_thin(v);
        let av = x.matmul(&svd.right);
        let mut y = Matrix::zeros(self.n, self.k);
        for j in 0..self.k {
            let (c, s) = (svd.values[j].cos(), svd.values[j].sin());
            for i in 0..self.n {
                y[(i, j)] = av[(i, j)] * c + svd.left[(i, j)] * s;
            }
        }
        orthonormalize_columns(&y.matmul_tr(&svd.right))
    }

    fn log(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        let al = self.align(x, y);
        if let Some(t) = al.angles.iter().find(|&&t| FRAC_PI_2 - t < CUT_LOCUS_MARGIN) {
            return Err(Error::CutLocus(format!("principal angle {t} is within the margin of π/2")));
        }
        // (BQ − AP·cos Θ) · diag(θ/sin θ) · Pᵀ
        let ap = x.matmul(&al.svd.left);
        let mut z = Matrix::zeros(self.n, self.k);
        for j in 0..self.k {
            let c = al.svd.values[j];
            let w = x_over_sin(al.angles[j]);
            for i in 0..self.n {
                z[(i, j)] = (al.bq[(i, j)] - ap[(i, j)] * c) * w;
            }
        }
        Ok(z.matmul_tr(&al.svd.left))
    }

    fn project(&self, x: &Matrix, g: &Matrix) -> Matrix {
        let mut out = g.clone();
        out -= &x.matmul(&x.tr_matmul(g));
        out
    }

    fn egrad_to_rgrad(&self, x: &Matrix, g: &Matrix) -> Matrix {
        self.project(x, g)
    }

    /// Polar retraction `UVᵀ` of `A + P = UΣVᵀ`.
    fn retract(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        let moved = x + &self.project(x, v);
        if !moved.is_finite() {
            return Err(Error::NumericalDomain("Grassmann retraction overflowed".into()));
        }
        let svd = svd_thin(&moved);
        Ok(svd.left.matmul_tr(&svd.right))
    }

    fn repair(&self, x: &Matrix) -> Result<Matrix> {
        orthonormalize_columns(x)
    }

    fn sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        // f(A, B) = Σ arccos²(σᵢ(AᵀB)); with AᵀB = P diag(σ) Qᵀ,
        //   ∂f/∂A = −2 BQ diag(θ/sin θ) Pᵀ,  ∂f/∂B = −2 AP diag(θ/sin θ) Qᵀ.
        let al = self.align(x, y);
        let ap = x.matmul(&al.svd.left);
        let mut gx = Matrix::zeros(self.n, self.k);
        let mut gy = Matrix::zeros(self.n, self.k);
        let mut value = 0.0;
        for j in 0..self.k {
            let t = al.angles[j];
            value += t * t;
            let w = -2.0 * x_over_sin(t);
            for i in 0..self.n {
                gx[(i, j)] = w * al.bq[(i, j)];
                gy[(i, j)] = w * ap[(i, j)];
            }
        }
        Ok(SqDistGrad {
            value,
            grad_x: gx.matmul_tr(&al.svd.left),
            grad_y: gy.matmul_tr(&al.svd.right),
        })
    }

    fn tangent_from_coords(&self, x: &Matrix, coords: &[f64]) -> Result<Matrix> {
        if coords.len() != self.dim() {
            return Err(Error::invalid("coordinate count does not match the dimension"));
        }
        let c = Matrix::from_row_slice(self.n - self.k, self.k, coords);
        Ok(orthonormal_complement(x).matmul(&c))
    }

    fn injectivity_radius(&self) -> f64 {
        FRAC_PI_2
    }

    fn is_compact(&self) -> bool {
        true
    }
}
