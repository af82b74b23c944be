//! Atomic overlap measures, the Parisi functional via the Cole–Hopf
//! recursion, and the criterion functions `Γ_μ`, `f_μ` for one- and
//! two-atom measures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelSpec;
#[cfg(test)]
use crate::quadrature::log_norm_cosh_pow;
use crate::quadrature::{PowerTilt, QuadratureRule};
use crate::rs;
use crate::special::log_cosh;

/// Slack on `f ≤ 0` when judging a criterion curve.
pub const VIOLATION_TOL: f64 = 1e-7;
/// `|f| ≤ ZERO_TOL` counts as vanishing on the support.
pub const ZERO_TOL: f64 = 1e-8;
pub const DEFAULT_GRID: usize = 2001;
/// Deepest nesting accepted by [`phi_at_origin`].
pub const MAX_ATOMS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("measure needs at least one atom")]
    Empty,
    #[error("atom location {0} outside [0, 1)")]
    Location(f64),
    #[error("atom mass {0} outside (0, 1]")]
    Mass(f64),
    #[error("atom locations must be strictly increasing")]
    Unsorted,
    #[error("masses sum to {0}, not 1")]
    Total(f64),
    #[error("{0} atoms exceed the supported depth of {1}")]
    Capacity(usize, usize),
    #[error("criterion functions need an atom at 0")]
    NoAtomAtZero,
    #[error("levels: {0}")]
    Levels(&'static str),
    #[error("{name} = {value} outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Probability measure with finitely many atoms in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        for a in &atoms {
            if !(0.0..1.0).contains(&a.location) {
                return Err(MeasureError::Location(a.location));
            }
            if !(a.mass > 0.0 && a.mass <= 1.0) {
                return Err(MeasureError::Mass(a.mass));
            }
        }
        if atoms.windows(2).any(|w| w[0].location >= w[1].location) {
            return Err(MeasureError::Unsorted);
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(MeasureError::Total(total));
        }
        Ok(Self { atoms })
    }

    /// `δ_q`.
    pub fn dirac(q: f64) -> Result<Self, MeasureError> {
        Self::new(vec![Atom {
            location: q,
            mass: 1.0,
        }])
    }

    /// Mass `m` at 0 and `1 − m` at `q`; `m = 1` gives `δ₀`.
    pub fn one_rsb(m: f64, q: f64) -> Result<Self, MeasureError> {
        if m == 1.0 {
            return Self::dirac(0.0);
        }
        Self::new(vec![
            Atom {
                location: 0.0,
                mass: m,
            },
            Atom {
                location: q,
                mass: 1.0 - m,
            },
        ])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Levels of the step function `α_μ(s) = μ([0, s])`.
    pub fn levels(&self) -> Levels {
        let mut m = Vec::new();
        let mut q = Vec::new();
        if self.atoms[0].location > 0.0 {
            m.push(0.0);
            q.push(0.0);
        }
        let mut cumulative = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            cumulative += a.mass;
            // the final level is exactly one regardless of rounding
            m.push(if i + 1 == self.atoms.len() { 1.0 } else { cumulative });
            q.push(a.location);
        }
        Levels { m, q }
    }
}

/// `α_μ = m_j` on `[q_j, q_{j+1})`, with `q_{L+1} = 1` implied.
///
/// Built from a [`DiscreteMeasure`], or directly when a degenerate level
/// (`m_j = m_{j+1}`) is wanted.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels {
    m: Vec<f64>,
    q: Vec<f64>,
}

impl Levels {
    pub fn new(m: Vec<f64>, q: Vec<f64>) -> Result<Self, MeasureError> {
        if m.is_empty() || m.len() != q.len() {
            return Err(MeasureError::Levels("need matching nonempty m and q"));
        }
        if q[0] != 0.0 {
            return Err(MeasureError::Levels("first level must start at 0"));
        }
        if q.windows(2).any(|w| w[0] >= w[1]) || q.iter().any(|&x| !(0.0..1.0).contains(&x)) {
            return Err(MeasureError::Levels("q must increase strictly inside [0, 1)"));
        }
        if m.windows(2).any(|w| w[0] > w[1]) || m.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(MeasureError::Levels("m must be nondecreasing in [0, 1]"));
        }
        if *m.last().unwrap() != 1.0 {
            return Err(MeasureError::Levels("last level must have m = 1"));
        }
        Ok(Self { m, q })
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    fn upper(&self, j: usize) -> f64 {
        self.q.get(j + 1).copied().unwrap_or(1.0)
    }
}

/// `Φ_μ(0, 0)` for a measure with at most [`MAX_ATOMS`] atoms.
pub fn phi_at_origin(
    measure: &DiscreteMeasure,
    model: &ModelSpec,
    rule: &QuadratureRule,
) -> Result<f64, MeasureError> {
    if measure.atoms.len() > MAX_ATOMS {
        return Err(MeasureError::Capacity(measure.atoms.len(), MAX_ATOMS));
    }
    phi_levels(&measure.levels(), model, rule)
}

/// `Φ(0, 0)` from explicit levels (at most `MAX_ATOMS + 1` of them).
pub fn phi_levels(
    levels: &Levels,
    model: &ModelSpec,
    rule: &QuadratureRule,
) -> Result<f64, MeasureError> {
    if levels.m.len() > MAX_ATOMS + 1 {
        return Err(MeasureError::Capacity(levels.m.len(), MAX_ATOMS + 1));
    }
    Ok(phi_rec(levels, model, rule, 0, 0.0))
}

/// Level `j` of the recursion at spatial point `x`.
///
/// For `m > 0`, `exp(mΦ) = cosh(m y) K(y)` with bounded `K`, and the cosh
/// factor is integrated exactly:
/// `E[cosh(m(x + σg)) K(x + σg)] = ½ Σ± e^{±mx + m²σ²/2} E[K(x ± mσ² + σg)]`.
fn phi_rec(levels: &Levels, model: &ModelSpec, rule: &QuadratureRule, j: usize, x: f64) -> f64 {
    let last = levels.m.len() - 1;
    let lo = levels.q[j];
    if j == last {
        return log_cosh(x) + 0.5 * (model.dxi(1.0) - model.dxi(lo));
    }
    let m = levels.m[j];
    let sigma = model.y_diff_raw(levels.upper(j), lo);
    let inner = |y: f64| phi_rec(levels, model, rule, j + 1, y);
    if m == 0.0 {
        return rule.sum(|g| inner(x + sigma * g));
    }
    let var = sigma * sigma;
    let branch = |sign: f64| {
        let centre = x + sign * m * var;
        let k = rule.sum(|g| {
            let y = centre + sigma * g;
            (m * inner(y) - log_cosh(m * y)).exp()
        });
        sign * m * x + k.ln()
    };
    let (a, b) = (branch(1.0), branch(-1.0));
    let hi = a.max(b);
    let lse = hi + ((a - hi).exp() + (b - hi).exp()).ln() - std::f64::consts::LN_2;
    (0.5 * m * m * var + lse) / m
}

/// `𝒫(μ) = log 2 + Φ_μ(0, 0) − ½ Σ_j m_j (θ(q_{j+1}) − θ(q_j))`.
pub fn parisi_functional(
    measure: &DiscreteMeasure,
    model: &ModelSpec,
    rule: &QuadratureRule,
) -> Result<f64, MeasureError> {
    if measure.atoms.len() > MAX_ATOMS {
        return Err(MeasureError::Capacity(measure.atoms.len(), MAX_ATOMS));
    }
    parisi_levels(&measure.levels(), model, rule)
}

pub fn parisi_levels(
    levels: &Levels,
    model: &ModelSpec,
    rule: &QuadratureRule,
) -> Result<f64, MeasureError> {
    let phi = phi_levels(levels, model, rule)?;
    let correction: f64 = (0..levels.m.len())
        .map(|j| levels.m[j] * (model.theta_raw(levels.upper(j)) - model.theta_raw(levels.q[j])))
        .sum();
    Ok(std::f64::consts::LN_2 + phi - 0.5 * correction)
}

/// `𝒫` of the two-atom measure in closed form, from
/// `Φ(0,0) = (1/m) log E[coshᵐ(Y_q g)] + ½(ξ'(1) − ξ'(q))`.
#[cfg(test)]
pub(crate) fn parisi_two_atom(model: &ModelSpec, rule: &QuadratureRule, m: f64, q: f64) -> f64 {
    let y = model.y_raw(q);
    let log_norm = log_norm_cosh_pow(rule, y, m);
    std::f64::consts::LN_2 + log_norm / m + 0.5 * (model.dxi(1.0) - model.dxi(q))
        - 0.5 * m * model.theta_raw(q)
        - 0.5 * (model.theta_raw(1.0) - model.theta_raw(q))
}

/// `f_{δ₀}(u) = C_β(u)`.
pub fn f_rs(model: &ModelSpec, rule: &QuadratureRule, u: f64) -> Result<f64, MeasureError> {
    check_unit("u", u)?;
    Ok(rs::c_raw(model, rule, u))
}

fn check_unit(name: &'static str, v: f64) -> Result<(), MeasureError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(MeasureError::Domain {
            name,
            value: v,
            domain: "[0, 1]",
        })
    }
}

/// Criterion functions of the measure `m δ₀ + (1 − m) δ_q`, sharing the
/// `coshᵐ(Y_q g)` tilt across every `u`.
#[derive(Debug, Clone)]
pub struct TwoAtomCriterion {
    model: ModelSpec,
    m: f64,
    q: f64,
    tilt: PowerTilt,
    /// `E[coshᵐ log cosh] / E[coshᵐ]` at `Y_q`.
    mean_log_cosh: f64,
    /// Quadrature nodes and weights with negligible weights dropped.
    inner: Vec<(f64, f64)>,
}

/// Relative weight below which a node cannot move a sum of O(1) terms.
const NEGLIGIBLE_WEIGHT: f64 = 1e-18;

impl TwoAtomCriterion {
    pub fn new(
        model: &ModelSpec,
        rule: &QuadratureRule,
        m: f64,
        q: f64,
    ) -> Result<Self, MeasureError> {
        if !(m > 0.0 && m <= 1.0) {
            return Err(MeasureError::Domain {
                name: "m",
                value: m,
                domain: "(0, 1]",
            });
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(MeasureError::Domain {
                name: "q",
                value: q,
                domain: "(0, 1)",
            });
        }
        let tilt = PowerTilt::new(rule, model.y_raw(q), m, true);
        let mean_log_cosh = tilt.mean(log_cosh);
        let w_max = rule.weights().iter().copied().fold(0.0, f64::max);
        let inner = rule
            .nodes()
            .iter()
            .copied()
            .zip(rule.weights().iter().copied())
            .filter(|&(_, w)| w >= NEGLIGIBLE_WEIGHT * w_max)
            .collect();
        Ok(Self {
            model: *model,
            m,
            q,
            tilt,
            mean_log_cosh,
            inner,
        })
    }

    /// `Γ_μ(u)`; the lower formula is used at `u = q`.
    pub fn gamma(&self, u: f64) -> Result<f64, MeasureError> {
        check_unit("u", u)?;
        Ok(if u <= self.q {
            self.lower(u, true).1
        } else {
            self.upper(u, |z| {
                let t = z.tanh();
                t * t
            })
        })
    }

    /// `f_μ(u)`; vanishes at `u = q` and equals `−C¹_β(m, q)` at `u = 0`.
    pub fn f(&self, u: f64) -> Result<f64, MeasureError> {
        check_unit("u", u)?;
        let model = &self.model;
        Ok(if u <= self.q {
            let (weighted_log, _) = self.lower(u, false);
            -self.mean_log_cosh / self.m
                + 0.5 * (model.theta_raw(self.q) - model.theta_raw(u))
                + weighted_log / (self.m * self.m)
        } else {
            -self.mean_log_cosh + self.upper(u, log_cosh)
                - 0.5 * (model.theta_raw(u) - model.theta_raw(self.q))
                - 0.5 * (model.dxi(u) - model.dxi(self.q))
        })
    }

    /// `E_tilt[R_h(a, b)]` with `b = Y_{u−q}` and
    /// `R_h(a, b) = E[cosh(a + bg) h(a + bg)] / E[cosh(a + bg)]`.
    fn upper<H: Fn(f64) -> f64>(&self, u: f64, h: H) -> f64 {
        let b = self.model.y_diff_raw(u, self.q);
        let shift = b * b;
        let sum = |centre: f64| -> f64 { self.inner.iter().map(|&(g, w)| w * h(centre + b * g)).sum() };
        self.tilt
            .points()
            .filter(|&(_, p)| p >= NEGLIGIBLE_WEIGHT)
            .map(|(a, p)| {
                let up = 0.5 * (1.0 + a.tanh());
                p * (up * sum(a + shift) + (1.0 - up) * sum(a - shift))
            })
            .sum()
    }

    /// For `u ≤ q`, with `s = Y_u g₁` and `z = s + Y_{q−u} g₂`, returns
    /// `(E₁[w L], E₁[w τ²])` where `L(s) = log E₂ coshᵐ z`,
    /// `w = e^{L} / E coshᵐ(Y_q g)` and `τ = E₂[tanh z coshᵐ z] / e^{L}`.
    /// `τ²` is only accumulated when `with_tau` is set.
    fn lower(&self, u: f64, with_tau: bool) -> (f64, f64) {
        let model = &self.model;
        let y_u = model.y_raw(u);
        let c = model.y_diff_raw(self.q, u);
        let c2 = c * c;
        let m1 = self.m - 1.0;
        let mut norm = 0.0;
        let mut acc_log = 0.0;
        let mut acc_tau = 0.0;
        // outer cosh(s) tilt moves s to Y_u g + Y_u²; inner to s ± c² + c g
        for &(g1, w1) in &self.inner {
            let s = y_u * g1 + y_u * y_u;
            let up = 0.5 * (1.0 + s.tanh());
            let mut m0 = 0.0;
            let mut m1_tanh = 0.0;
            for (sign, ps) in [(1.0, up), (-1.0, 1.0 - up)] {
                if ps == 0.0 {
                    continue;
                }
                let centre = s + sign * c2;
                let (mut k0, mut k1) = (0.0, 0.0);
                for &(g2, w2) in &self.inner {
                    let z = centre + c * g2;
                    let k = w2 * (m1 * log_cosh(z)).exp();
                    k0 += k;
                    if with_tau {
                        k1 += k * z.tanh();
                    }
                }
                m0 += ps * k0;
                m1_tanh += ps * k1;
            }
            let weight = w1 * m0;
            norm += weight;
            acc_log += weight * (log_cosh(s) + 0.5 * c2 + m0.ln());
            if with_tau {
                let tau = m1_tanh / m0;
                acc_tau += weight * tau * tau;
            }
        }
        (acc_log / norm, acc_tau / norm)
    }
}

/// `Γ_μ(u)` for `μ = m δ₀ + (1 − m) δ_q`.
pub fn gamma_1rsb(
    model: &ModelSpec,
    rule: &QuadratureRule,
    m: f64,
    q: f64,
    u: f64,
) -> Result<f64, MeasureError> {
    TwoAtomCriterion::new(model, rule, m, q)?.gamma(u)
}

/// `f_μ(u)` for `μ = m δ₀ + (1 − m) δ_q`.
pub fn f_1rsb(
    model: &ModelSpec,
    rule: &QuadratureRule,
    m: f64,
    q: f64,
    u: f64,
) -> Result<f64, MeasureError> {
    TwoAtomCriterion::new(model, rule, m, q)?.f(u)
}

/// `f_μ` sampled on a grid, with the `f ≤ 0` and support-zero verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionCurve {
    pub grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub max_violation: f64,
    pub zeros_at_support: Vec<bool>,
}

impl CriterionCurve {
    pub fn nonpositive(&self) -> bool {
        self.max_violation <= VIOLATION_TOL
    }

    pub fn vanishes_on_support(&self) -> bool {
        self.zeros_at_support.iter().all(|&z| z)
    }

    pub fn accepts(&self) -> bool {
        self.nonpositive() && self.vanishes_on_support()
    }
}

/// `f_μ` on `grid_size` uniform points of `[0, 1]` plus the atom locations.
/// Supported for `δ₀` and for `m δ₀ + (1 − m) δ_q`.
pub fn criterion_curve(
    measure: &DiscreteMeasure,
    model: &ModelSpec,
    rule: &QuadratureRule,
    grid_size: usize,
) -> Result<CriterionCurve, MeasureError> {
    let atoms = measure.atoms();
    if atoms.len() > 2 {
        return Err(MeasureError::Capacity(atoms.len(), 2));
    }
    if atoms[0].location != 0.0 {
        return Err(MeasureError::NoAtomAtZero);
    }
    if grid_size < 2 {
        return Err(MeasureError::Domain {
            name: "grid_size",
            value: grid_size as f64,
            domain: "[2, inf)",
        });
    }
    let mut grid: Vec<f64> = (0..grid_size)
        .map(|i| i as f64 / (grid_size - 1) as f64)
        .chain(atoms.iter().map(|a| a.location))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let f_values: Vec<f64> = if atoms.len() == 1 {
        grid.iter().map(|&u| rs::c_raw(model, rule, u)).collect()
    } else {
        let crit = TwoAtomCriterion::new(model, rule, atoms[0].mass, atoms[1].location)?;
        grid.iter().map(|&u| crit.f(u)).collect::<Result<_, _>>()?
    };
    let max_violation = f_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let zeros_at_support = atoms
        .iter()
        .map(|a| {
            let i = grid.iter().position(|&u| u == a.location).unwrap();
            f_values[i].abs() <= ZERO_TOL
        })
        .collect();
    Ok(CriterionCurve {
        grid,
        f_values,
        max_violation,
        zeros_at_support,
    })
}
