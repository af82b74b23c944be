//! Quadrature rules for expectations over a standard Gaussian `g ~ N(0, 1)`.
//!
//! Weights are normalised to sum to one, so [`QuadratureRule::expect`]
//! approximates `E[f(g)]` directly. Two families are provided:
//!
//! * [`QuadratureRule::gauss_hermite`], exact for polynomials of degree `2n − 1`;
//! * [`QuadratureRule::standard`], the trapezoid rule on `[−10, 10]` with
//!   Gaussian weights. For integrands analytic in a strip around the real
//!   axis it converges geometrically in `n / strip width`, which beats
//!   Gauss–Hermite on `log cosh(Yg + Y²)` and friends once `Y ≳ 2`.
//!
//! Every criterion function consumes *ratios* of `cosh`-weighted
//! expectations. Those are evaluated through the exact Gaussian tilt
//!
//! ```text
//! E[cosh(Yg) h(Yg)] = e^{Y²/2} · ½ (E[h(Yg + Y²)] + E[h(Yg − Y²)])
//! ```
//!
//! so the `e^{Y²/2}` factor never has to be formed when a ratio is wanted.
//! Powers `coshᵐ = cosh · coshᵐ⁻¹` reuse the same tilt, see [`PowerTilt`].

use thiserror::Error;

use crate::special::log_cosh;

pub const MIN_ORDER: usize = 4;
pub const MAX_ORDER: usize = 2048;
pub const DEFAULT_ORDER: usize = 200;
/// Truncation point of [`QuadratureRule::standard`]; `P(|g| > 10) ≈ 1.5e-23`.
pub const TRAPEZOID_HALF_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature order {0} outside [{MIN_ORDER}, {MAX_ORDER}]")]
    OrderOutOfRange(usize),
    #[error("tridiagonal eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("integrand not finite at node {node}: {value}")]
    NonFinite { node: f64, value: f64 },
    #[error("integrand not finite at node pair ({0}, {1}): {2}")]
    NonFinite2d(f64, f64, f64),
    #[error("expectation overflows f64 (log value {0})")]
    Overflow(f64),
    #[error("{name} = {value} outside {domain}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
}

/// Immutable node/weight table of an n-point Gaussian rule.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds the n-point rule: Golub–Welsch eigenvalues of the Jacobi
    /// matrix, Newton-polished on the orthonormal Hermite recurrence, with
    /// weights from the Christoffel formula `1 / (n p_{n−1}(x)²)`.
    pub fn gauss_hermite(n: usize) -> Result<Self, QuadratureError> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&n) {
            return Err(QuadratureError::OrderOutOfRange(n));
        }
        let mut diag = vec![0.0; n];
        let mut off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
        off.push(0.0);
        tridiagonal_eigenvalues(&mut diag, &mut off)?;
        diag.sort_by(f64::total_cmp);

        let mut nodes = Vec::with_capacity(n);
        let mut log_weights = Vec::with_capacity(n);
        for &x0 in &diag {
            let mut x = x0;
            for _ in 0..8 {
                let (pn, pn1, _) = hermite_pair(n, x);
                let step = pn / ((n as f64).sqrt() * pn1);
                x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, pn1, log_scale) = hermite_pair(n, x);
            nodes.push(x);
            log_weights.push(-(n as f64).ln() - 2.0 * (pn1.abs().ln() + log_scale));
        }

        // exact reflection symmetry g -> -g
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let lw = 0.5 * (log_weights[i] + log_weights[j]);
            log_weights[i] = lw;
            log_weights[j] = lw;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }

        Ok(Self::from_log_weights(nodes, log_weights))
    }

    /// The rule used by every evaluator in this crate: the n-point
    /// trapezoid rule on `[−TRAPEZOID_HALF_WIDTH, TRAPEZOID_HALF_WIDTH]`.
    pub fn standard(n: usize) -> Result<Self, QuadratureError> {
        Self::trapezoid(n, TRAPEZOID_HALF_WIDTH)
    }

    /// n equispaced nodes on `[−half_width, half_width]` with weights
    /// proportional to the Gaussian density.
    pub fn trapezoid(n: usize, half_width: f64) -> Result<Self, QuadratureError> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&n) {
            return Err(QuadratureError::OrderOutOfRange(n));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(QuadratureError::InvalidParameter {
                name: "half_width",
                value: half_width,
                domain: "(0, inf)",
            });
        }
        let step = 2.0 * half_width / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n)
            .map(|i| {
                // mirror so the node set is exactly symmetric
                let k = i as f64 - 0.5 * (n - 1) as f64;
                k * step
            })
            .collect();
        let log_weights = nodes.iter().map(|x| -0.5 * x * x).collect();
        Ok(Self::from_log_weights(nodes, log_weights))
    }

    /// Normalises so the weights sum to one, summing from the tails inward.
    fn from_log_weights(nodes: Vec<f64>, mut log_weights: Vec<f64>) -> Self {
        let max_lw = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut order: Vec<usize> = (0..log_weights.len()).collect();
        order.sort_by(|&a, &b| log_weights[a].total_cmp(&log_weights[b]));
        let total: f64 = order.iter().map(|&i| (log_weights[i] - max_lw).exp()).sum();
        let log_total = max_lw + total.ln();
        for lw in &mut log_weights {
            *lw -= log_total;
        }
        let weights = log_weights.iter().map(|lw| lw.exp()).collect();
        Self {
            nodes,
            weights,
            log_weights,
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `Σ wᵢ f(xᵢ)`, failing on the first non-finite integrand value.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64, QuadratureError> {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(QuadratureError::NonFinite { node: x, value: v });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Unchecked `Σ wᵢ f(xᵢ)` for integrands known to be finite.
    #[inline]
    pub(crate) fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E[cosh(Yg) h(Yg)] / E[cosh(Yg)]` via the symmetrised tilt; no factor
    /// `e^{Y²/2}` is ever formed.
    pub fn cosh_ratio<H: Fn(f64) -> f64>(&self, y: f64, h: H) -> f64 {
        let shift = y * y;
        0.5 * self.sum(|g| h(y * g + shift) + h(y * g - shift))
    }

    /// One-sided tilt `E[h(Yg + Y²)]`; equals [`Self::cosh_ratio`] when `h` is even.
    pub fn cosh_ratio_even<H: Fn(f64) -> f64>(&self, y: f64, h: H) -> f64 {
        let shift = y * y;
        self.sum(|g| h(y * g + shift))
    }

    /// `E[cosh(Yg) h(Yg)]` with the tilt factor kept in log space.
    pub fn cosh_weighted<H: Fn(f64) -> f64>(
        &self,
        y: f64,
        h: H,
    ) -> Result<ScaledValue, QuadratureError> {
        check_nonneg("Y", y)?;
        Ok(ScaledValue {
            log_scale: 0.5 * y * y,
            mantissa: self.cosh_ratio(y, h),
        })
    }

    /// `E[cosh(Yg) h(Yg)]` as a plain number; errors if it overflows.
    pub fn expect_cosh_weighted<H: Fn(f64) -> f64>(
        &self,
        y: f64,
        h: H,
    ) -> Result<f64, QuadratureError> {
        self.cosh_weighted(y, h)?.value()
    }

    /// Normalised `coshᵐ(Yg)` weights on this rule, valid for any integrand.
    pub fn cosh_pow_tilt(&self, y: f64, m: f64) -> Result<PowerTilt, QuadratureError> {
        check_pow_args(y, m)?;
        Ok(PowerTilt::new(self, y, m, false))
    }

    /// As [`Self::cosh_pow_tilt`] but one-sided; only for even integrands.
    pub fn cosh_pow_tilt_even(&self, y: f64, m: f64) -> Result<PowerTilt, QuadratureError> {
        check_pow_args(y, m)?;
        Ok(PowerTilt::new(self, y, m, true))
    }

    /// `E[coshᵐ(Yg) h(Yg)]`, `0 < m ≤ 1`.
    pub fn expect_cosh_pow<H: Fn(f64) -> f64>(
        &self,
        y: f64,
        m: f64,
        h: H,
    ) -> Result<f64, QuadratureError> {
        let tilt = self.cosh_pow_tilt(y, m)?;
        ScaledValue {
            log_scale: tilt.log_norm,
            mantissa: tilt.mean(h),
        }
        .value()
    }

    /// `log E[coshᵐ(Yg)]`.
    pub fn log_expect_cosh_pow(&self, y: f64, m: f64) -> Result<f64, QuadratureError> {
        check_pow_args(y, m)?;
        Ok(log_norm_cosh_pow(self, y, m))
    }

    /// Tensor-product rule `Σᵢⱼ wᵢ wⱼ F(xᵢ, xⱼ)` for independent `g₁, g₂`.
    pub fn expect2d<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<f64, QuadratureError> {
        let mut acc = 0.0;
        for (&x1, &w1) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&x2, &w2) in self.nodes.iter().zip(&self.weights) {
                let v = f(x1, x2);
                if !v.is_finite() {
                    return Err(QuadratureError::NonFinite2d(x1, x2, v));
                }
                inner += w2 * v;
            }
            acc += w1 * inner;
        }
        Ok(acc)
    }
}

/// A positive quantity stored as `mantissa · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub log_scale: f64,
    pub mantissa: f64,
}

impl ScaledValue {
    pub fn value(&self) -> Result<f64, QuadratureError> {
        let v = self.mantissa * self.log_scale.exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::Overflow(self.log_scale + self.mantissa.abs().ln()))
        }
    }

    /// `self / other` with the scales cancelled before exponentiation.
    pub fn ratio(&self, other: &ScaledValue) -> f64 {
        self.mantissa / other.mantissa * (self.log_scale - other.log_scale).exp()
    }
}

/// Probability weights proportional to `coshᵐ(Yg)`, with
/// `log E[coshᵐ(Yg)]` kept alongside.
///
/// Writing `coshᵐ = cosh · coshᵐ⁻¹` and tilting by `cosh` moves the nodes to
/// `Yg ± Y²` and leaves the bounded factor `coshᵐ⁻¹` in the weights, so the
/// truncated rule never has to resolve a growing integrand.
#[derive(Debug, Clone)]
pub struct PowerTilt {
    pub log_norm: f64,
    probs: Vec<f64>,
    args: Vec<f64>,
}

impl PowerTilt {
    /// No range checks: the 1RSB solver probes `m` slightly above one.
    pub(crate) fn new(rule: &QuadratureRule, y: f64, m: f64, even: bool) -> Self {
        let shift = y * y;
        let mut args: Vec<f64> = rule.nodes.iter().map(|g| y * g + shift).collect();
        let mut logs: Vec<f64> = rule
            .log_weights
            .iter()
            .zip(&args)
            .map(|(lw, a)| lw + (m - 1.0) * log_cosh(*a))
            .collect();
        if !even {
            // the mirrored half carries identical weights since cosh is even
            let mirrored: Vec<f64> = args.iter().map(|a| -a).collect();
            args.extend(mirrored);
            logs.extend_from_within(..);
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        let halves = if even { 0.0 } else { std::f64::consts::LN_2 };
        Self {
            log_norm: 0.5 * shift + max + total.ln() - halves,
            probs,
            args,
        }
    }

    /// `E[coshᵐ(Yg) h(Yg)] / E[coshᵐ(Yg)]`.
    pub fn mean<H: Fn(f64) -> f64>(&self, h: H) -> f64 {
        self.probs.iter().zip(&self.args).map(|(p, a)| p * h(*a)).sum()
    }

    /// Iterator over `(argument, normalised weight)`.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.args.iter().copied().zip(self.probs.iter().copied())
    }
}

/// `log E[coshᵐ(Yg)]` without building the weight table.
pub(crate) fn log_norm_cosh_pow(rule: &QuadratureRule, y: f64, m: f64) -> f64 {
    let shift = y * y;
    if m == 1.0 {
        return 0.5 * shift;
    }
    let logs: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.log_weights)
        .map(|(g, lw)| lw + (m - 1.0) * log_cosh(y * g + shift))
        .collect();
    0.5 * shift + crate::special::log_sum_exp(&logs)
}

fn check_pow_args(y: f64, m: f64) -> Result<(), QuadratureError> {
    check_nonneg("Y", y)?;
    if !(m > 0.0 && m <= 1.0) {
        return Err(QuadratureError::InvalidParameter {
            name: "m",
            value: m,
            domain: "(0, 1]",
        });
    }
    Ok(())
}

fn check_nonneg(name: &'static str, v: f64) -> Result<(), QuadratureError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(QuadratureError::InvalidParameter {
            name,
            value: v,
            domain: "[0, inf)",
        })
    }
}

/// Orthonormal probabilists' Hermite values `(p_n(x), p_{n−1}(x))`, both
/// divided by `e^{log_scale}` to stay in range for large `|x|`.
fn hermite_pair(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut log_scale = 0.0;
    for k in 0..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        let big = cur.abs().max(prev.abs());
        if big > 1e150 {
            prev /= big;
            cur /= big;
            log_scale += big.ln();
        }
    }
    (cur, prev, log_scale)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL.
/// `diag` is overwritten with the eigenvalues; `off[i]` couples `i` and `i+1`.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> Result<(), QuadratureError> {
    let n = diag.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let scale = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(QuadratureError::NoConvergence);
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}
