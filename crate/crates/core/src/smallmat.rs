//! Small dense kernels: symmetric eigendecomposition, SVD, Cholesky and
//! spectral functions of SPD matrices.
//!
//! The 2×2 and 3×3 symmetric cases use explicit eigenvalue formulas (trace /
//! determinant for 2×2, the trigonometric solution of the shifted cubic for
//! 3×3). Larger matrices go through cyclic Jacobi. All routines are pure.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub type Values = SmallVec<[f64; 8]>;

/// Entrywise asymmetry tolerated by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues closer than this (relative to the spectrum scale) count as repeated.
pub const TIE_TOL: f64 = 1e-10;
/// Scale below which the 3×3 shifted matrix is treated as a multiple of the identity.
pub const DEGENERATE_SCALE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// `A = U · diag(values) · Uᵀ` with `values` sorted descending.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Values,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    /// `U · diag(f(λ)) · Uᵀ`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let mapped: Values = self.values.iter().map(|&l| f(l)).collect();
        congruence_diag(&self.vectors, &mapped)
    }
}

/// `A = U · diag(values) · Vᵀ`, values sorted descending and non-negative.
#[derive(Clone, Debug)]
pub struct SvdDecomposition {
    pub left: Matrix,
    pub values: Values,
    pub right: Matrix,
}

impl SvdDecomposition {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.left.clone();
        for j in 0..us.cols() {
            for i in 0..us.rows() {
                us[(i, j)] *= self.values[j];
            }
        }
        us.matmul_tr(&self.right)
    }
}

/// `U · diag(d) · Uᵀ` without forming the diagonal matrix.
pub fn congruence_diag(u: &Matrix, d: &[f64]) -> Matrix {
    let n = u.rows();
    let k = d.len();
    debug_assert_eq!(u.cols(), k);
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for l in 0..k {
                s += u[(i, l)] * d[l] * u[(j, l)];
            }
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    out
}

fn check_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::invalid(format!(
            "expected a non-empty square matrix, got {}×{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(Error::invalid(format!("matrix is not symmetric (asymmetry {asym:e})")));
    }
    Ok(())
}

/// Eigenvalues of a symmetric 2×2 matrix, descending.
pub fn eigvals_2x2(a: &Matrix) -> [f64; 2] {
    let (p, r, q) = (a[(0, 0)], 0.5 * (a[(0, 1)] + a[(1, 0)]), a[(1, 1)]);
    let half_trace = 0.5 * (p + q);
    // (t/2)² − det rewritten as ((p − q)/2)² + r², which cannot go negative.
    let disc = (0.5 * (p - q)).hypot(r);
    [half_trace + disc, half_trace - disc]
}

/// Eigenvalues of a symmetric 3×3 matrix, descending.
pub fn eigvals_3x3(a: &Matrix) -> [f64; 3] {
    let q = a.trace() / 3.0;
    let (a00, a11, a22) = (a[(0, 0)] - q, a[(1, 1)] - q, a[(2, 2)] - q);
    let (a01, a02, a12) = (a[(0, 1)], a[(0, 2)], a[(1, 2)]);
    let off = a01 * a01 + a02 * a02 + a12 * a12;
    let p = ((a00 * a00 + a11 * a11 + a22 * a22 + 2.0 * off) / 6.0).sqrt();
    if p < DEGENERATE_SCALE {
        return [q, q, q];
    }
    let (b00, b11, b22) = (a00 / p, a11 / p, a22 / p);
    let (b01, b02, b12) = (a01 / p, a02 / p, a12 / p);
    let det_b = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02)
        + b02 * (b01 * b12 - b11 * b02);
    let r = (0.5 * det_b).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let l2 = 3.0 * q - l1 - l3;
    [l1, l2, l3]
}

/// Eigenvalues only, descending. Closed form for n ≤ 3.
pub fn sym_eigvals(a: &Matrix) -> Result<Values> {
    check_symmetric(a)?;
    Ok(match a.rows() {
        1 => SmallVec::from_slice(&[a[(0, 0)]]),
        2 => SmallVec::from_slice(&eigvals_2x2(a)),
        3 => SmallVec::from_slice(&eigvals_3x3(a)),
        _ => jacobi_eig(a, JACOBI_MAX_SWEEPS).values,
    })
}

/// Symmetric eigendecomposition with eigenvalues sorted descending.
///
/// For n ∈ {2, 3} the eigenvalues come from the closed-form formulas and the
/// eigenvectors from the null space of `A − λI`; clustered spectra fall back
/// to Jacobi, where closed-form vectors are ill-conditioned.
pub fn sym_eig(a: &Matrix) -> Result<EigenDecomposition> {
    check_symmetric(a)?;
    let n = a.rows();
    let closed = match n {
        1 => Some(EigenDecomposition {
            values: SmallVec::from_slice(&[a[(0, 0)]]),
            vectors: Matrix::identity(1),
        }),
        2 => closed_form_2x2(a),
        3 => closed_form_3x3(a),
        _ => None,
    };
    Ok(closed.unwrap_or_else(|| jacobi_eig(a, JACOBI_MAX_SWEEPS)))
}

fn has_ties(values: &[f64]) -> bool {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    values.windows(2).any(|w| (w[0] - w[1]).abs() <= TIE_TOL * scale)
}

fn closed_form_2x2(a: &Matrix) -> Option<EigenDecomposition> {
    let values = eigvals_2x2(a);
    if has_ties(&values) {
        return None;
    }
    let (p, r, q) = (a[(0, 0)], 0.5 * (a[(0, 1)] + a[(1, 0)]), a[(1, 1)]);
    // Rows of A − λ₁I are (p − λ₁, r) and (r, q − λ₁); the null vector is
    // orthogonal to whichever row carries more weight.
    let r0 = (p - values[0], r);
    let r1 = (r, q - values[0]);
    let (x, y) = if r0.0.hypot(r0.1) >= r1.0.hypot(r1.1) {
        (-r0.1, r0.0)
    } else {
        (-r1.1, r1.0)
    };
    let norm = x.hypot(y);
    if norm == 0.0 {
        return None;
    }
    let (x, y) = (x / norm, y / norm);
    Some(EigenDecomposition {
        values: SmallVec::from_slice(&values),
        vectors: Matrix::from_rows(&[&[x, -y], &[y, x]]),
    })
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn null_vector_3x3(a: &Matrix, lambda: f64) -> Option<[f64; 3]> {
    let row = |i: usize| {
        let mut r = [a[(i, 0)], a[(i, 1)], a[(i, 2)]];
        r[i] -= lambda;
        r
    };
    let (r0, r1, r2) = (row(0), row(1), row(2));
    // Column pivoting: keep the best-conditioned pairwise cross product.
    let best = [cross(r0, r1), cross(r0, r2), cross(r1, r2)]
        .into_iter()
        .max_by(|u, v| norm3(*u).total_cmp(&norm3(*v)))?;
    let n = norm3(best);
    (n > 0.0).then(|| [best[0] / n, best[1] / n, best[2] / n])
}

fn closed_form_3x3(a: &Matrix) -> Option<EigenDecomposition> {
    let values = eigvals_3x3(a);
    if has_ties(&values) {
        return None;
    }
    let v1 = null_vector_3x3(a, values[0])?;
    let mut v3 = null_vector_3x3(a, values[2])?;
    let d = v1[0] * v3[0] + v1[1] * v3[1] + v1[2] * v3[2];
    for i in 0..3 {
        v3[i] -= d * v1[i];
    }
    let n3 = norm3(v3);
    if n3 < 0.5 {
        return None;
    }
    for x in v3.iter_mut() {
        *x /= n3;
    }
    let v2 = cross(v3, v1);
    let vectors = Matrix::from_fn(3, 3, |i, j| [v1, v2, v3][j][i]);
    Some(EigenDecomposition {
        values: SmallVec::from_slice(&values),
        vectors,
    })
}

/// Cyclic Jacobi eigendecomposition.
///
/// Stops once the off-diagonal Frobenius norm falls under
/// `JACOBI_REL_TOL · ‖A‖_F` or after `max_sweeps` sweeps.
pub fn jacobi_eig(a: &Matrix, max_sweeps: usize) -> EigenDecomposition {
    let n = a.rows();
    let mut m = a.sym();
    let mut v = Matrix::identity(n);
    let target = JACOBI_REL_TOL * m.norm();
    for _ in 0..max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    EigenDecomposition {
        values: order.iter().map(|&i| m[(i, i)]).collect(),
        vectors: Matrix::from_fn(n, n, |r, c| v[(r, order[c])]),
    }
}

/// Closed-form SVD of a 2×2 matrix.
pub fn svd_2x2(a: &Matrix) -> SvdDecomposition {
    assert_eq!(a.shape(), (2, 2), "svd_2x2 expects a 2×2 matrix");
    let [s1, s2] = singular_values_2x2(a);
    let (p, q, r) = (
        a[(0, 0)] * a[(0, 0)] + a[(1, 0)] * a[(1, 0)],
        a[(0, 1)] * a[(0, 1)] + a[(1, 1)] * a[(1, 1)],
        a[(0, 0)] * a[(0, 1)] + a[(1, 0)] * a[(1, 1)],
    );
    // Right vectors diagonalize AᵀA = [[p, r], [r, q]].
    let theta = 0.5 * (2.0 * r).atan2(p - q);
    let (c, s) = (theta.cos(), theta.sin());
    let right = Matrix::from_rows(&[&[c, -s], &[s, c]]);
    let av1 = (a[(0, 0)] * c + a[(0, 1)] * s, a[(1, 0)] * c + a[(1, 1)] * s);
    let u1 = if s1 > 0.0 { (av1.0 / s1, av1.1 / s1) } else { (1.0, 0.0) };
    let av2 = (-a[(0, 0)] * s + a[(0, 1)] * c, -a[(1, 0)] * s + a[(1, 1)] * c);
    let u2 = if s2 > f64::MIN_POSITIVE * 1e10 {
        (av2.0 / s2, av2.1 / s2)
    } else {
        (-u1.1, u1.0)
    };
    SvdDecomposition {
        left: Matrix::from_rows(&[&[u1.0, u2.0], &[u1.1, u2.1]]),
        values: SmallVec::from_slice(&[s1, s2]),
        right,
    }
}

/// Singular values of a 2×2 matrix, descending.
pub fn singular_values_2x2(m: &Matrix) -> [f64; 2] {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let s1 = a * a + b * b + c * c + d * d;
    let s2 = (a * a + b * b - c * c - d * d).hypot(2.0 * (a * c + b * d));
    let sigma1 = (0.5 * (s1 + s2)).sqrt();
    // σ₂ = √((S₁ − S₂)/2) equals |det|/σ₁; the latter avoids cancellation.
    let sigma2 = if sigma1 > 0.0 {
        ((a * d - b * c).abs() / sigma1).min(sigma1)
    } else {
        0.0
    };
    [sigma1, sigma2]
}

/// Thin SVD of an `n × k` matrix (`n ≥ k`) by one-sided Jacobi rotations.
pub fn svd_thin(a: &Matrix) -> SvdDecomposition {
    let (n, k) = a.shape();
    assert!(n >= k, "svd_thin expects a tall matrix");
    let mut w = a.clone();
    let mut v = Matrix::identity(k);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    alpha += w[(i, p)] * w[(i, p)];
                    beta += w[(i, q)] * w[(i, q)];
                    gamma += w[(i, p)] * w[(i, q)];
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..k {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let mut left = Matrix::zeros(n, k);
    let mut right = Matrix::zeros(k, k);
    let mut values = Values::new();
    for (c, &j) in order.iter().enumerate() {
        values.push(norms[j]);
        for i in 0..k {
            right[(i, c)] = v[(i, j)];
        }
        if norms[j] > 1e-300 && norms[j] > 1e-14 * scale {
            for i in 0..n {
                left[(i, c)] = w[(i, j)] / norms[j];
            }
        }
    }
    complete_orthonormal_columns(&mut left);
    SvdDecomposition {
        left,
        values,
        right,
    }
}

/// Replaces zero columns with unit vectors orthogonal to all other columns.
fn complete_orthonormal_columns(m: &mut Matrix) {
    let (n, k) = m.shape();
    for j in 0..k {
        if (0..n).any(|i| m[(i, j)] != 0.0) {
            continue;
        }
        for e in 0..n {
            let mut cand = vec![0.0; n];
            cand[e] = 1.0;
            for c in 0..k {
                if c == j {
                    continue;
                }
                let d: f64 = (0..n).map(|i| m[(i, c)] * cand[i]).sum();
                for (i, x) in cand.iter_mut().enumerate() {
                    *x -= d * m[(i, c)];
                }
            }
            let nrm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 0.5 {
                for i in 0..n {
                    m[(i, j)] = cand[i] / nrm;
                }
                break;
            }
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = A` and positive diagonal.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::invalid("cholesky of a non-square matrix"));
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = 0.5 * (a[(i, j)] + a[(j, i)]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// `log det A = 2 Σ log L_ii` from a Cholesky factor.
pub fn log_det_from_cholesky(l: &Matrix) -> f64 {
    2.0 * (0.. l.rows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &Matrix) -> Matrix {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = s / l[(i, i)];
        }
    }
    inv
}

/// `A⁻¹` for SPD `A` via Cholesky.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let li = lower_inverse(&cholesky(a)?);
    Ok(li.tr_matmul(&li))
}

/// Spectral function applied to an SPD (or, for `Exp`, any symmetric) matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpdFn {
    Exp,
    Log,
    Sqrt,
    InvSqrt,
}

/// Smallest eigenvalue accepted by the singular spectral functions.
pub const SPD_FN_EIG_TOL: f64 = 1e-300;

/// `U · diag(f(λ)) · Uᵀ`.
pub fn spd_fn(a: &Matrix, f: SpdFn) -> Result<Matrix> {
    let eig = sym_eig(a)?;
    if f != SpdFn::Exp {
        let min = eig.values[eig.values.len() - 1];
        if !(min > SPD_FN_EIG_TOL) {
            return Err(Error::Singularity(min));
        }
    }
    Ok(match f {
        SpdFn::Exp => eig.apply(f64::exp),
        SpdFn::Log => eig.apply(f64::ln),
        SpdFn::Sqrt => eig.apply(f64::sqrt),
        SpdFn::InvSqrt => eig.apply(|l| 1.0 / l.sqrt()),
    })
}
