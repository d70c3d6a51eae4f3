use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::manifolds::Manifold;
use crate::matrix::Matrix;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    /// `x ← R_x(−η·g)`.
    Rsgd,
    /// Adaptive moments per point: the first moment lives in the tangent
    /// space and is re-projected after every step, the second moment is the
    /// scalar `‖g‖²_x`.
    Radam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Rsgd => "rsgd",
            OptimizerKind::Radam => "radam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rsgd" | "sgd" => Ok(OptimizerKind::Rsgd),
            "radam" | "adam" => Ok(OptimizerKind::Radam),
            other => Err(Error::invalid(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Moments {
    first: Option<Matrix>,
    second: f64,
    steps: i32,
}

impl Moments {
    /// Returns the bias-corrected direction `m̂ / (√v̂ + ε)`.
    fn update(&mut self, g: &Matrix, g_sq: f64) -> Matrix {
        let first = self.first.get_or_insert_with(|| Matrix::zeros(g.rows(), g.cols()));
        first.scale_mut(BETA1);
        first.axpy(1.0 - BETA1, g);
        self.second = BETA2 * self.second + (1.0 - BETA2) * g_sq;
        self.steps += 1;
        let m_hat = 1.0 / (1.0 - BETA1.powi(self.steps));
        let v_hat = self.second / (1.0 - BETA2.powi(self.steps));
        first.scale(m_hat / (v_hat.sqrt() + EPSILON))
    }
}

/// Optimizer state for `m` points plus the log-scale parameter.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    points: Vec<Moments>,
    scale: Moments,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, m: usize) -> Self {
        Optimizer {
            kind,
            points: vec![Moments::default(); m],
            scale: Moments::default(),
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Step count of point `i` (RAdam only).
    pub fn steps(&self, i: usize) -> i32 {
        self.points[i].steps
    }

    /// First moment of point `i`, if any step has been taken (RAdam only).
    pub fn first_moment(&self, i: usize) -> Option<&Matrix> {
        self.points[i].first.as_ref()
    }

    pub fn second_moment(&self, i: usize) -> f64 {
        self.points[i].second
    }

    /// Move point `i` from `x` along the Riemannian gradient `rgrad`.
    pub fn step_point(
        &mut self,
        manifold: &dyn Manifold,
        i: usize,
        x: &Matrix,
        rgrad: &Matrix,
        lr: f64,
    ) -> Result<Matrix> {
        let state = &mut self.points[i];
        let dir = match self.kind {
            OptimizerKind::Rsgd => {
                if rgrad.max_abs() == 0.0 {
                    return Ok(x.clone());
                }
                rgrad.clone()
            }
            OptimizerKind::Radam => {
                let idle = rgrad.max_abs() == 0.0
                    && state.first.as_ref().map_or(true, |m| m.max_abs() == 0.0);
                if idle {
                    return Ok(x.clone());
                }
                let g_sq = manifold.inner(x, rgrad, rgrad).max(0.0);
                state.update(rgrad, g_sq)
            }
        };
        let y = manifold.retract(x, &dir.scale(-lr))?;
        if !y.is_finite() {
            return Err(Error::NumericalDomain(format!("point {i} left the manifold")));
        }
        if let Some(m) = state.first.as_mut() {
            *m = manifold.project(&y, m);
        }
        Ok(y)
    }

    /// Update the unconstrained log-scale σ given ∂L/∂σ.
    pub fn step_scale(&mut self, sigma: f64, grad: f64, lr: f64) -> f64 {
        match self.kind {
            OptimizerKind::Rsgd => sigma - lr * grad,
            OptimizerKind::Radam => {
                if grad == 0.0 && self.scale.first.is_none() {
                    return sigma;
                }
                let g = Matrix::column(&[grad]);
                let d = self.scale.update(&g, grad * grad);
                sigma - lr * d[(0, 0)]
            }
        }
    }
}
