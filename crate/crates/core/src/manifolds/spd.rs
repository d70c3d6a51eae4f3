//! Symmetric positive-definite matrices with the affine-invariant metric
//! `⟨P, Q⟩_A = tr(A⁻¹PA⁻¹Q)`.
//!
//! Every computation that needs the spectrum of `A⁻¹B` works on the
//! congruent SPD matrix `L⁻¹BL⁻ᵀ` (with `A = LLᵀ`), which has the same
//! eigenvalues and never requires a matrix square root.

use super::{shape_check, Manifold, ManifoldSpec, SqDistGrad, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::smallmat::{
    cholesky, congruence_diag, log_det_from_cholesky, lower_inverse, spd_inverse, sym_eig,
    sym_eigvals,
};

/// Eigenvalue floor applied to optimizer iterates.
pub const EIGENVALUE_FLOOR: f64 = 1e-10;

/// Which dissimilarity the losses see.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpdMetric {
    /// Geodesic distance of the affine-invariant metric.
    Canonical,
    /// Symmetric Stein divergence `S(A,B)` in place of the squared distance.
    Stein,
}

#[derive(Debug, Clone)]
pub struct Spd {
    n: usize,
    metric: SpdMetric,
    spec: ManifoldSpec,
}

impl Spd {
    pub fn new(n: usize, metric: SpdMetric) -> Self {
        let spec = match metric {
            SpdMetric::Canonical => ManifoldSpec::SpdCanonical(n),
            SpdMetric::Stein => ManifoldSpec::SpdStein(n),
        };
        Spd { n, metric, spec }
    }

    pub fn metric(&self) -> SpdMetric {
        self.metric
    }

    /// `L⁻¹ · M · L⁻ᵀ`.
    fn whiten(l_inv: &Matrix, m: &Matrix) -> Matrix {
        l_inv.matmul(m).matmul_tr(l_inv).sym()
    }

    fn clamp_spectrum(a: &Matrix) -> Result<Matrix> {
        let eig = sym_eig(&a.sym())?;
        Ok(eig.apply(|l| l.max(EIGENVALUE_FLOOR)))
    }
}

/// Symmetric Stein divergence `log det((A+B)/2) − ½ log det(AB)`, with every
/// log-determinant read off a Cholesky diagonal.
pub fn stein_divergence(a: &Matrix, b: &Matrix) -> Result<f64> {
    let n = a.rows() as f64;
    let la = cholesky(a)?;
    let lb = cholesky(b)?;
    let lc = cholesky(&(a + b))?;
    let s = log_det_from_cholesky(&lc) - n * std::f64::consts::LN_2
        - 0.5 * (log_det_from_cholesky(&la) + log_det_from_cholesky(&lb));
    Ok(s.max(0.0))
}

/// Euclidean gradient of the Stein divergence in its first argument,
/// `(A+B)⁻¹ − ½A⁻¹`.
pub fn stein_gradient(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let mut g = spd_inverse(&(a + b))?;
    g.axpy(-0.5, &spd_inverse(a)?);
    Ok(g.sym())
}

impl Manifold for Spd {
    fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    fn point_shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn dim(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn base_point(&self) -> Matrix {
        Matrix::identity(self.n)
    }

    fn check_point(&self, x: &Matrix) -> Result<()> {
        shape_check(self, x, "point")?;
        if x.asymmetry() > MEMBERSHIP_TOL * x.max_abs().max(1.0) {
            return Err(Error::invalid("SPD point is not symmetric"));
        }
        let min = *sym_eigvals(&x.sym())?.last().unwrap();
        if !(min > EIGENVALUE_FLOOR) {
            return Err(Error::invalid(format!(
                "SPD point has minimum eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    fn check_tangent(&self, x: &Matrix, v: &Matrix) -> Result<()> {
        self.check_point(x)?;
        shape_check(self, v, "tangent")?;
        if v.asymmetry() > MEMBERSHIP_TOL * v.max_abs().max(1.0) {
            return Err(Error::invalid("SPD tangent vector is not symmetric"));
        }
        Ok(())
    }

    fn inner(&self, x: &Matrix, u: &Matrix, v: &Matrix) -> f64 {
        // tr(A⁻¹UA⁻¹V) = ⟨L⁻¹UL⁻ᵀ, L⁻¹VL⁻ᵀ⟩_F
        match cholesky(x) {
            Ok(l) => {
                let li = lower_inverse(&l);
                Self::whiten(&li, u).dot(&Self::whiten(&li, v))
            }
            Err(_) => f64::NAN,
        }
    }

    fn distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        let li = lower_inverse(&cholesky(x)?);
        let m = Self::whiten(&li, y);
        let vals = sym_eigvals(&m)?;
        let mut s = 0.0;
        for &l in &vals {
            if !(l > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: 0, value: l });
            }
            s += l.ln().powi(2);
        }
        Ok(s.sqrt())
    }

    fn exp(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        // A·exp(A⁻¹P) = L·exp(L⁻¹PL⁻ᵀ)·Lᵀ
        let l = cholesky(x)?;
        let li = lower_inverse(&l);
        let w = sym_eig(&Self::whiten(&li, &v.sym()))?;
        let e = w.apply(f64::exp);
        Ok(l.matmul(&e).matmul_tr(&l).sym())
    }

    fn log(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        // A·log(A⁻¹B) = L·log(L⁻¹BL⁻ᵀ)·Lᵀ
        let l = cholesky(x)?;
        let li = lower_inverse(&l);
        let w = sym_eig(&Self::whiten(&li, y))?;
        if let Some(&min) = w.values.last() {
            if !(min > 0.0) {
                return Err(Error::Singularity(min));
            }
        }
        let lg = w.apply(f64::ln);
        Ok(l.matmul(&lg).matmul_tr(&l).sym())
    }

    fn project(&self, _x: &Matrix, g: &Matrix) -> Matrix {
        g.sym()
    }

    fn egrad_to_rgrad(&self, x: &Matrix, g: &Matrix) -> Matrix {
        x.matmul(&g.sym()).matmul(x).sym()
    }

    /// Second-order retraction `A + P + ½PA⁻¹P`, floored at [`EIGENVALUE_FLOOR`].
    fn retract(&self, x: &Matrix, v: &Matrix) -> Result<Matrix> {
        let p = v.sym();
        let xi = spd_inverse(x)?;
        let mut out = x + &p;
        out.axpy(0.5, &p.matmul(&xi).matmul(&p));
        let out = out.sym();
        if !out.is_finite() {
            return Err(Error::NumericalDomain("SPD retraction overflowed".into()));
        }
        self.repair(&out)
    }

    fn repair(&self, x: &Matrix) -> Result<Matrix> {
        let s = x.sym();
        let min = *sym_eigvals(&s)?.last().unwrap();
        if min >= EIGENVALUE_FLOOR {
            Ok(s)
        } else {
            Self::clamp_spectrum(&s)
        }
    }

    fn sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        // With M = L⁻¹BL⁻ᵀ = UΛUᵀ and K = L⁻ᵀU:
        //   ∂d²/∂A = −2 K diag(log λ) Kᵀ,  ∂d²/∂B = 2 K diag(log λ / λ) Kᵀ.
        let li = lower_inverse(&cholesky(x)?);
        let m = Self::whiten(&li, y);
        let eig = sym_eig(&m)?;
        let k = li.tr_matmul(&eig.vectors);
        let mut value = 0.0;
        let mut dx = smallvec::SmallVec::<[f64; 8]>::new();
        let mut dy = smallvec::SmallVec::<[f64; 8]>::new();
        for &l in &eig.values {
            if !(l > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: 0, value: l });
            }
            let lg = l.ln();
            value += lg * lg;
            dx.push(-2.0 * lg);
            dy.push(2.0 * lg / l);
        }
        Ok(SqDistGrad {
            value,
            grad_x: congruence_diag(&k, &dx),
            grad_y: congruence_diag(&k, &dy),
        })
    }

    fn model_sq_distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        match self.metric {
            SpdMetric::Canonical => self.distance(x, y).map(|d| d * d),
            SpdMetric::Stein => stein_divergence(x, y),
        }
    }

    fn model_sq_distance_grad(&self, x: &Matrix, y: &Matrix) -> Result<SqDistGrad> {
        match self.metric {
            SpdMetric::Canonical => self.sq_distance_grad(x, y),
            SpdMetric::Stein => {
                let n = self.n as f64;
                let la = cholesky(x)?;
                let lb = cholesky(y)?;
                let lc = cholesky(&(x + y))?;
                let value = (log_det_from_cholesky(&lc)
                    - n * std::f64::consts::LN_2
                    - 0.5 * (log_det_from_cholesky(&la) + log_det_from_cholesky(&lb)))
                .max(0.0);
                let inv = |l: &Matrix| {
                    let li = lower_inverse(l);
                    li.tr_matmul(&li)
                };
                let c_inv = inv(&lc);
                let mut gx = c_inv.clone();
                gx.axpy(-0.5, &inv(&la));
                let mut gy = c_inv;
                gy.axpy(-0.5, &inv(&lb));
                Ok(SqDistGrad {
                    value,
                    grad_x: gx.sym(),
                    grad_y: gy.sym(),
                })
            }
        }
    }

    fn tangent_from_coords(&self, x: &Matrix, coords: &[f64]) -> Result<Matrix> {
        if coords.len() != self.dim() {
            return Err(Error::invalid("coordinate count does not match the dimension"));
        }
        // Orthonormal symmetric basis at I, pushed forward by P ↦ LPLᵀ.
        let n = self.n;
        let mut e = Matrix::zeros(n, n);
        let mut c = coords.iter();
        for i in 0..n {
            e[(i, i)] = *c.next().unwrap();
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let v = c.next().unwrap() * std::f64::consts::FRAC_1_SQRT_2;
                e[(i, j)] = v;
                e[(j, i)] = v;
            }
        }
        let l = cholesky(x)?;
        Ok(l.matmul(&e).matmul_tr(&l).sym())
    }
}
