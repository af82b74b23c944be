//! The pure p-spin mixture `ξ(x) = β² xᵖ` and the quantities derived from it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("spin degree p must be at least 2, got {0}")]
    DegreeTooSmall(u32),
    #[error("inverse temperature must be finite and nonnegative, got {0}")]
    InvalidBeta(f64),
    #[error("{name} = {value} outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
}

/// Degree p and inverse temperature β of the pure p-spin model.
///
/// `beta == 0` is accepted so that the β = 0 limit of the criterion
/// functions can be evaluated; the solvers reject it via [`ModelSpec::require_positive_beta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    p: u32,
    beta: f64,
}

/// Degree at and above which `xᵏ` near 1 is evaluated as `exp(k ln x)`.
const LOG_POWER_DEGREE: u32 = 15;

impl ModelSpec {
    pub fn new(p: u32, beta: f64) -> Result<Self, ModelError> {
        if p < 2 {
            return Err(ModelError::DegreeTooSmall(p));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(ModelError::InvalidBeta(beta));
        }
        Ok(Self { p, beta })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Same degree, different temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self, ModelError> {
        Self::new(self.p, beta)
    }

    pub fn require_positive_beta(&self) -> Result<(), ModelError> {
        if self.beta > 0.0 {
            Ok(())
        } else {
            Err(ModelError::Domain {
                name: "beta",
                value: self.beta,
                domain: "(0, inf) for solvers",
            })
        }
    }

    fn pow(&self, x: f64, k: u32) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if x == 0.0 {
            return 0.0;
        }
        if self.p >= LOG_POWER_DEGREE && x > 0.5 {
            (f64::from(k) * x.ln()).exp()
        } else {
            x.powi(k as i32)
        }
    }

    pub(crate) fn xi_raw(&self, x: f64) -> f64 {
        self.beta * self.beta * self.pow(x, self.p)
    }

    pub(crate) fn dxi(&self, x: f64) -> f64 {
        self.beta * self.beta * f64::from(self.p) * self.pow(x, self.p - 1)
    }

    pub(crate) fn d2xi(&self, x: f64) -> f64 {
        let p = f64::from(self.p);
        self.beta * self.beta * p * (p - 1.0) * self.pow(x, self.p - 2)
    }

    pub(crate) fn theta_raw(&self, q: f64) -> f64 {
        self.beta * self.beta * f64::from(self.p - 1) * self.pow(q, self.p)
    }

    /// `√ξ'(u)`.
    pub(crate) fn y_raw(&self, u: f64) -> f64 {
        self.dxi(u).sqrt()
    }

    /// `√(ξ'(a) − ξ'(b))`, clamped at zero.
    pub(crate) fn y_diff_raw(&self, a: f64, b: f64) -> f64 {
        (self.dxi(a) - self.dxi(b)).max(0.0).sqrt()
    }

    /// `ξ(x) = β² xᵖ` on `[0, 1]`.
    pub fn xi(&self, x: f64) -> Result<f64, ModelError> {
        check_unit(x, "x")?;
        Ok(self.xi_raw(x))
    }

    /// `ξ'(x) = β² p xᵖ⁻¹` for `x ≥ 0`.
    pub fn xi_prime(&self, x: f64) -> Result<f64, ModelError> {
        check_nonneg(x, "x")?;
        Ok(self.dxi(x))
    }

    /// `ξ''(x) = β² p (p−1) xᵖ⁻²` for `x ≥ 0`; constant when `p = 2`.
    pub fn xi_pp(&self, x: f64) -> Result<f64, ModelError> {
        check_nonneg(x, "x")?;
        Ok(self.d2xi(x))
    }

    /// `θ(q) = q ξ'(q) − ξ(q) = β² (p−1) qᵖ`, the antiderivative of `s ξ''(s)`.
    pub fn theta(&self, q: f64) -> Result<f64, ModelError> {
        check_unit(q, "q")?;
        Ok(self.theta_raw(q))
    }

    /// `Y = √ξ'(u)`.
    pub fn y_of(&self, u: f64) -> Result<f64, ModelError> {
        check_nonneg(u, "u")?;
        Ok(self.y_raw(u))
    }

    /// `Y_{a−b} = √(ξ'(a) − ξ'(b))` for `a > b ≥ 0`.
    pub fn y_diff(&self, a: f64, b: f64) -> Result<f64, ModelError> {
        check_nonneg(b, "b")?;
        if !(a > b) {
            return Err(ModelError::Domain {
                name: "a",
                value: a,
                domain: "(b, inf)",
            });
        }
        Ok(self.y_diff_raw(a, b))
    }
}

fn check_unit(x: f64, name: &'static str) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(ModelError::Domain {
            name,
            value: x,
            domain: "[0, 1]",
        })
    }
}

fn check_nonneg(x: f64, name: &'static str) -> Result<(), ModelError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain {
            name,
            value: x,
            domain: "[0, inf)",
        })
    }
}
