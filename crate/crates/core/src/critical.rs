//! Critical points of `C_β`, the bracketing criterion for `β₁ᵖ`, the RS
//! classification, and the bisection solver for the boundary system
//! `C_β(q) = D_β(q) = 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ModelSpec};
use crate::quadrature::QuadratureRule;
use crate::rs::{c1_raw, c2_raw, c_raw, d_raw};

/// Uniform scan points inside `(0, 1)`.
pub const SCAN_POINTS: usize = 4001;
/// Extra log-spaced points in `1 − q ∈ [1e-15, 1e-2]` for `p ≥ 10`.
pub const TAIL_POINTS: usize = 2000;
/// Root polish width.
pub const ROOT_TOL: f64 = 1e-12;
/// `C ≤ RS_TOL` at every critical point means replica symmetric.
pub const RS_TOL: f64 = 1e-9;
/// `β` bracket width at which the boundary bisection stops.
pub const BETA_TOL: f64 = 1e-11;
pub const BETA_MAX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriticalError {
    #[error("p = 2 (SK model): there is no phase transition between RS and 1RSB")]
    NoTransition,
    #[error("no sign change of C at the local maximum for beta in (0, {0}]")]
    BracketFailure(f64),
    #[error("probe points must satisfy 0 < q01 < q02 < q11 < q12 < 1 and 0 < q2 < 1")]
    ProbeOrder,
    #[error("need 0 < beta_low < beta_high")]
    BetaOrder,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Zeros of `D_β` in `(0, 1)`, i.e. the critical points of `C_β`.
///
/// A grid scan followed by bisection. Where `|D|` has an interior local
/// minimum without a sign change, the extremum of `D` is refined: it may
/// hide two close roots, or touch zero within `1e-10 · min(1, 1 − q)`, in
/// which case it is returned as a single (tangent) root.
pub fn d_roots(model: &ModelSpec, rule: &QuadratureRule) -> Vec<f64> {
    if model.beta() == 0.0 {
        return Vec::new();
    }
    let grid = scan_grid(model.p());
    let d = |q: f64| d_raw(model, rule, q);
    let values: Vec<f64> = grid.iter().map(|&q| d(q)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if a * b < 0.0 {
            roots.push(bisect(&d, grid[i], grid[i + 1], a));
        } else if i > 0 && values[i - 1] * a > 0.0 && a.abs() <= values[i - 1].abs() && a.abs() <= b.abs() {
            // D turns back toward zero between grid points: a pair of roots
            // closer than the spacing, a tangency, or nothing
            let (lo, hi) = (grid[i - 1], grid[i + 1]);
            let sign = a.signum();
            let peak = golden_min(&|q| sign * d(q), lo, hi);
            let dp = d(peak);
            let scale = 1e-10 * (1.0 - peak).min(1.0);
            if dp * a < 0.0 {
                roots.push(bisect(&d, lo, peak, values[i - 1]));
                roots.push(bisect(&d, peak, hi, dp));
            } else if dp.abs() < scale {
                roots.push(peak);
            }
        }
    }
    // D(1) < 0, so a positive tail means one more root above the grid; for
    // large β it can sit within rounding of 1
    let last = grid.len() - 1;
    if values[last] > 0.0 {
        let d1 = d(1.0);
        roots.push(if d1 < 0.0 {
            bisect(&d, grid[last], 1.0, values[last])
        } else {
            1.0 - f64::EPSILON / 2.0
        });
    }
    roots
}

fn scan_grid(p: u32) -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=SCAN_POINTS)
        .map(|i| i as f64 / (SCAN_POINTS + 1) as f64)
        .collect();
    if p >= 10 {
        let (lo, hi) = (1e-15f64.ln(), 1e-2f64.ln());
        for i in 0..TAIL_POINTS {
            let s = (lo + (hi - lo) * i as f64 / (TAIL_POINTS - 1) as f64).exp();
            grid.push(1.0 - s);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    grid
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > ROOT_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// The local maximum of `C_β` on `(0, 1)`: the root where `D` turns from
/// positive to negative, or a tangent root.
pub fn local_max_point(model: &ModelSpec, rule: &QuadratureRule) -> Option<f64> {
    let roots = d_roots(model, rule);
    let h = 1e-7;
    roots.iter().rev().copied().find(|&q| {
        let left = d_raw(model, rule, (q - h).max(0.0));
        let right = d_raw(model, rule, (q + h).min(1.0));
        !(left < 0.0 && right > 0.0)
    })
}

/// RS iff `C ≤ 1e-9` at every critical point.
pub fn classify_rs(model: &ModelSpec, rule: &QuadratureRule) -> bool {
    d_roots(model, rule)
        .iter()
        .all(|&q| c_raw(model, rule, q) <= RS_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySolution {
    pub p: u32,
    pub beta1: f64,
    pub q1: f64,
    /// `C_{β₁}(q₁)`.
    #[serde(rename = "residual_C")]
    pub residual_c: f64,
    /// `D_{β₁}(q₁)`.
    #[serde(rename = "residual_D")]
    pub residual_d: f64,
    pub bracket_width: f64,
}

/// `C_β` at its local maximum, or `−1` when `C_β` has none (then `C ≤ 0`).
fn c_at_local_max(p: u32, beta: f64, rule: &QuadratureRule) -> Result<(f64, Option<f64>), ModelError> {
    let model = ModelSpec::new(p, beta)?;
    Ok(match local_max_point(&model, rule) {
        Some(q) => (c_raw(&model, rule, q), Some(q)),
        None => (-1.0, None),
    })
}

/// Bisection in `β` on `C_β(c_β)`, where `c_β` is the local maximum of
/// `C_β`. The value increases strictly with `β`, which makes the crossing
/// unique.
pub fn solve_boundary(p: u32, rule: &QuadratureRule) -> Result<BoundarySolution, CriticalError> {
    if p < 2 {
        return Err(ModelError::DegreeTooSmall(p).into());
    }
    if p == 2 {
        return Err(CriticalError::NoTransition);
    }
    let mut lo = 0.5;
    let mut hi = 2.0;
    while c_at_local_max(p, lo, rule)?.0 >= 0.0 {
        lo *= 0.5;
        if lo < 1e-3 {
            return Err(CriticalError::BracketFailure(BETA_MAX));
        }
    }
    while c_at_local_max(p, hi, rule)?.0 <= 0.0 {
        if hi >= BETA_MAX {
            return Err(CriticalError::BracketFailure(BETA_MAX));
        }
        hi = (2.0 * hi).min(BETA_MAX);
    }
    while hi - lo > BETA_TOL {
        let mid = 0.5 * (lo + hi);
        if c_at_local_max(p, mid, rule)?.0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let beta1 = 0.5 * (lo + hi);
    let model = ModelSpec::new(p, beta1)?;
    // the point itself may sit a hair below the birth of the maximum
    let q1 = match local_max_point(&model, rule) {
        Some(q) => q,
        None => c_at_local_max(p, hi, rule)?.1.ok_or(CriticalError::BracketFailure(BETA_MAX))?,
    };
    Ok(BoundarySolution {
        p,
        beta1,
        q1,
        residual_c: c_raw(&model, rule, q1),
        residual_d: d_raw(&model, rule, q1),
        bracket_width: hi - lo,
    })
}

/// Probe overlaps for [`check_criterion`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePoints {
    pub q01: f64,
    pub q02: f64,
    pub q11: f64,
    pub q12: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub p: u32,
    pub beta_low: f64,
    pub beta_high: f64,
    /// `D(q01) > D(q02) > 0 > D(q11) > D(q12)` at `beta_low`.
    pub cond_1a: bool,
    pub d_values: [f64; 4],
    /// `C¹(q11) − C²(q02) < 0` at `beta_low`.
    pub cond_1b: bool,
    pub c1_minus_c2: f64,
    /// `C(q2) > 0` at `beta_high`.
    pub cond_2: bool,
    pub c_high: f64,
    /// All three hold, so `β₁ᵖ ∈ [beta_low, beta_high]`.
    pub verdict: bool,
}

pub fn check_criterion(
    p: u32,
    beta_low: f64,
    beta_high: f64,
    probes: ProbePoints,
    rule: &QuadratureRule,
) -> Result<CriterionReport, CriticalError> {
    let ProbePoints {
        q01,
        q02,
        q11,
        q12,
        q2,
    } = probes;
    if !(0.0 < q01 && q01 < q02 && q02 < q11 && q11 < q12 && q12 < 1.0 && 0.0 < q2 && q2 < 1.0) {
        return Err(CriticalError::ProbeOrder);
    }
    if !(0.0 < beta_low && beta_low < beta_high) {
        return Err(CriticalError::BetaOrder);
    }
    let low = ModelSpec::new(p, beta_low)?;
    let high = ModelSpec::new(p, beta_high)?;
    let d_values = [q01, q02, q11, q12].map(|q| d_raw(&low, rule, q));
    let cond_1a = d_values[0] > d_values[1]
        && d_values[1] > 0.0
        && 0.0 > d_values[2]
        && d_values[2] > d_values[3];
    let c1_minus_c2 = c1_raw(&low, rule, q11) - c2_raw(&low, q02);
    let cond_1b = c1_minus_c2 < 0.0;
    let c_high = c_raw(&high, rule, q2);
    let cond_2 = c_high > 0.0;
    Ok(CriterionReport {
        p,
        beta_low,
        beta_high,
        cond_1a,
        d_values,
        cond_1b,
        c1_minus_c2,
        cond_2,
        c_high,
        verdict: cond_1a && cond_1b && cond_2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn rule() -> &'static QuadratureRule {
        static RULE: OnceLock<QuadratureRule> = OnceLock::new();
        RULE.get_or_init(|| QuadratureRule::standard(200).unwrap())
    }

    fn boundary3() -> &'static BoundarySolution {
        static SOL: OnceLock<BoundarySolution> = OnceLock::new();
        SOL.get_or_init(|| solve_boundary(3, rule()).unwrap())
    }

    fn m(p: u32, beta: f64) -> ModelSpec {
        ModelSpec::new(p, beta).unwrap()
    }

    #[test]
    fn d_roots_examples() {
        let r = rule();
        assert!(d_roots(&m(3, 0.5), r).is_empty());
        let roots = d_roots(&m(3, 1.05), r);
        assert_eq!(roots.len(), 2);
        assert!(roots[1] > 0.735 && roots[1] < 0.739, "{roots:?}");
        for &q in &roots {
            assert!(d_raw(&m(3, 1.05), r, q).abs() < 1e-9);
        }
        // slope of D: up through the minimum of C, down through its maximum
        let h = 1e-6;
        let model = m(3, 1.05);
        assert!(d_raw(&model, r, roots[0] + h) > d_raw(&model, r, roots[0] - h));
        assert!(d_raw(&model, r, roots[1] + h) < d_raw(&model, r, roots[1] - h));
    }

    #[test]
    fn sk_has_one_critical_point_and_no_boundary() {
        let r = rule();
        assert_eq!(solve_boundary(2, r), Err(CriticalError::NoTransition));
        let model = m(2, 1.0);
        let roots = d_roots(&model, r);
        assert_eq!(roots.len(), 1);
        // C rises from 0 and turns at that root
        assert!(c_raw(&model, r, roots[0]) > 0.0);
        assert!(d_roots(&m(2, 0.5), r).is_empty());
    }

    #[test]
    fn tangent_root_is_reported_once() {
        // bisect in β for the birth of the two roots and check the double root
        let r = rule();
        let (mut lo, mut hi) = (0.9, 1.05);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if d_roots(&m(3, mid), r).is_empty() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let roots = d_roots(&m(3, lo), r);
        assert!(roots.len() <= 1, "{roots:?}");
        let roots = d_roots(&m(3, hi), r);
        assert!(!roots.is_empty() && roots.len() <= 2, "{roots:?}");
    }

    #[test]
    fn criterion_examples() {
        let r = rule();
        let ex1 = ProbePoints {
            q01: 0.733,
            q02: 0.735,
            q11: 0.739,
            q12: 0.740,
            q2: 0.9,
        };
        let rep = check_criterion(3, 1.05, 1.1, ex1, r).unwrap();
        assert!(rep.cond_1a && rep.cond_1b && rep.cond_2 && rep.verdict, "{rep:?}");
        let ex2 = ProbePoints {
            q01: 0.9999992,
            q02: 0.9999994,
            q11: 0.9999997,
            q12: 0.9999999,
            q2: 0.99,
        };
        let rep = check_criterion(20, 1.15, 1.2, ex2, r).unwrap();
        assert!(rep.verdict, "{rep:?}");
        let rep = check_criterion(3, 0.3, 0.4, ex1, r).unwrap();
        assert!(!rep.verdict);
        assert_eq!(rep.verdict, rep.cond_1a && rep.cond_1b && rep.cond_2);
        let bad = ProbePoints { q01: 0.8, ..ex1 };
        assert_eq!(check_criterion(3, 1.05, 1.1, bad, r), Err(CriticalError::ProbeOrder));
        assert_eq!(check_criterion(3, 1.1, 1.05, ex1, r), Err(CriticalError::BetaOrder));
    }

    #[test]
    fn boundary_p3() {
        let sol = boundary3();
        assert!((1.05..=1.1).contains(&sol.beta1), "{sol:?}");
        assert!(sol.q1 > 0.0 && sol.q1 < 1.0);
        assert!(sol.residual_c.abs() <= 1e-8 && sol.residual_d.abs() <= 1e-8);
        assert!(sol.bracket_width <= 1e-8);
    }

    #[test]
    fn boundary_partial_in_beta() {
        let r = rule();
        let sol = boundary3();
        let h = 1e-6;
        let c = |b: f64| c_raw(&m(3, b), r, sol.q1);
        let fd = (c(sol.beta1 + h) - c(sol.beta1 - h)) / (2.0 * h);
        let model = m(3, sol.beta1);
        let want = model.xi(sol.q1).unwrap() / sol.beta1;
        assert!((fd - want).abs() < 1e-6, "{fd} vs {want}");
    }

    #[test]
    fn strict_crossing_at_boundary() {
        let r = rule();
        let sol = boundary3();
        for (db, sign) in [(-1e-4, -1.0), (1e-4, 1.0)] {
            let model = m(3, sol.beta1 + db);
            let q = local_max_point(&model, r).unwrap();
            assert_eq!(c_raw(&model, r, q).signum(), sign);
        }
    }

    #[test]
    fn classify_rs_examples_and_monotone() {
        let r = rule();
        assert!(classify_rs(&m(3, 1.0), r));
        assert!(!classify_rs(&m(3, 1.1), r));
        let b1 = boundary3().beta1;
        assert!(classify_rs(&m(3, b1 - 1e-9), r));
        for i in 0..21 {
            let below = b1 * (i + 1) as f64 / 21.0;
            assert!(classify_rs(&m(3, below), r), "beta={below}");
            let above = b1 + 0.2 * (i + 1) as f64 / 21.0;
            assert!(!classify_rs(&m(3, above), r), "beta={above}");
        }
    }

    #[test]
    fn c_nonpositive_below_boundary() {
        let r = rule();
        let model = m(3, 0.9 * boundary3().beta1);
        for i in 0..=1000 {
            assert!(c_raw(&model, r, i as f64 / 1000.0) <= 0.0);
        }
    }
}
