//! The two-equation 1RSB system `C¹_β(m, q) = D¹_β(m, q) = 0`, its Newton
//! solver, and phase classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cole_hopf::{criterion_curve, DiscreteMeasure, DEFAULT_GRID, VIOLATION_TOL};
use crate::critical::{classify_rs, solve_boundary, BoundarySolution, CriticalError};
use crate::model::{ModelError, ModelSpec};
use crate::quadrature::{PowerTilt, QuadratureRule};
use crate::special::{log_cosh, sech_sq};

pub const MAX_NEWTON_ITERATIONS: usize = 100;
pub const FD_STEP: f64 = 1e-6;
/// Residual accepted as converged.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Residual at which Newton stops early.
const RESIDUAL_TARGET: f64 = 1e-12;
/// `1 − m` below this is the threshold point, not a 1RSB solution.
pub const THRESHOLD_GAP: f64 = 1e-9;
/// Default warm start `m = 1 − START_GAP`.
pub const START_GAP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OneRsbError {
    #[error("beta = {beta} is not above the transition at {beta1}")]
    BelowTransition { beta: f64, beta1: f64 },
    #[error("Newton iteration converged to the threshold m = 1")]
    AtThreshold,
    #[error("not in the 1RSB window: {0}")]
    NotInWindow(String),
    #[error("{name} = {value} outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error(transparent)]
    Critical(#[from] CriticalError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_args(m: f64, q: f64) -> Result<(), OneRsbError> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(OneRsbError::Domain {
            name: "m",
            value: m,
            domain: "(0, 1]",
        });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(OneRsbError::Domain {
            name: "q",
            value: q,
            domain: "(0, 1)",
        });
    }
    Ok(())
}

/// `(C¹, D¹)` without range checks; `m` may exceed one slightly.
pub(crate) fn residuals_raw(model: &ModelSpec, rule: &QuadratureRule, m: f64, q: f64) -> (f64, f64) {
    let tilt = PowerTilt::new(rule, model.y_raw(q), m, true);
    let c1 = -tilt.log_norm / (m * m) + tilt.mean(log_cosh) / m - 0.5 * model.theta_raw(q);
    let d1 = (1.0 - q) - tilt.mean(sech_sq);
    (c1, d1)
}

/// `C¹_β(m, q) = −(1/m²) log E coshᵐ + (1/m) E[coshᵐ log cosh]/E coshᵐ − ½θ(q)`.
pub fn c1_1rsb(model: &ModelSpec, rule: &QuadratureRule, m: f64, q: f64) -> Result<f64, OneRsbError> {
    check_args(m, q)?;
    Ok(residuals_raw(model, rule, m, q).0)
}

/// `D¹_β(m, q) = E[tanh² coshᵐ]/E coshᵐ − q`.
pub fn d1_1rsb(model: &ModelSpec, rule: &QuadratureRule, m: f64, q: f64) -> Result<f64, OneRsbError> {
    check_args(m, q)?;
    Ok(residuals_raw(model, rule, m, q).1)
}

/// Summary of the criterion curve of `m δ₀ + (1 − m) δ_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FCheck {
    pub max_violation: f64,
    pub zero_at_0: bool,
    pub zero_at_q: bool,
}

impl FCheck {
    pub fn passes(&self) -> bool {
        self.max_violation <= VIOLATION_TOL && self.zero_at_0 && self.zero_at_q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneRsbSolution {
    pub m: f64,
    pub q: f64,
    /// `C¹_β(m, q)`.
    pub residual_c: f64,
    /// `D¹_β(m, q)`.
    pub residual_d: f64,
    pub iterations: usize,
    /// Filled by [`OneRsbSolution::verify`].
    pub f_check: Option<FCheck>,
}

impl OneRsbSolution {
    /// Evaluates the criterion curve on `grid` points and records the verdict.
    pub fn verify(
        &mut self,
        model: &ModelSpec,
        rule: &QuadratureRule,
        grid: usize,
    ) -> Result<FCheck, OneRsbError> {
        let measure = DiscreteMeasure::one_rsb(self.m, self.q)
            .map_err(|e| OneRsbError::NotInWindow(e.to_string()))?;
        let curve = criterion_curve(&measure, model, rule, grid)
            .map_err(|e| OneRsbError::NotInWindow(e.to_string()))?;
        let check = FCheck {
            max_violation: curve.max_violation,
            zero_at_0: curve.zeros_at_support[0],
            zero_at_q: curve.zeros_at_support.get(1).copied().unwrap_or(false),
        };
        self.f_check = Some(check);
        Ok(check)
    }
}

/// Solves the 1RSB system at `model` by damped Newton, warm-started from
/// `start` or from `(1 − 1e-3, q₁)`. `boundary` is computed when absent.
pub fn solve_1rsb(
    model: &ModelSpec,
    rule: &QuadratureRule,
    boundary: Option<&BoundarySolution>,
    start: Option<(f64, f64)>,
) -> Result<OneRsbSolution, OneRsbError> {
    model.require_positive_beta()?;
    let owned;
    let boundary = match boundary {
        Some(b) => b,
        None => {
            owned = solve_boundary(model.p(), rule)?;
            &owned
        }
    };
    if model.beta() <= boundary.beta1 {
        return Err(OneRsbError::BelowTransition {
            beta: model.beta(),
            beta1: boundary.beta1,
        });
    }
    let (m0, q0) = start.unwrap_or((1.0 - START_GAP, boundary.q1));
    newton(model, rule, m0, q0)
}

fn newton(model: &ModelSpec, rule: &QuadratureRule, m0: f64, q0: f64) -> Result<OneRsbSolution, OneRsbError> {
    let eval = |m: f64, q: f64| residuals_raw(model, rule, m, q);
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let (mut m, mut q) = (m0.min(1.0), q0);
    let mut r = eval(m, q);
    let mut iterations = 0;
    while norm(r) > RESIDUAL_TARGET && iterations < MAX_NEWTON_ITERATIONS {
        iterations += 1;
        let h = FD_STEP;
        let (cm_p, cm_m) = (eval(m + h, q), eval(m - h, q));
        let (cq_p, cq_m) = (eval(m, q + h), eval(m, q - h));
        let j11 = (cm_p.0 - cm_m.0) / (2.0 * h);
        let j21 = (cm_p.1 - cm_m.1) / (2.0 * h);
        let j12 = (cq_p.0 - cq_m.0) / (2.0 * h);
        let j22 = (cq_p.1 - cq_m.1) / (2.0 * h);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(OneRsbError::NotInWindow("singular Jacobian".into()));
        }
        let dm = -(j22 * r.0 - j12 * r.1) / det;
        let dq = -(-j21 * r.0 + j11 * r.1) / det;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (mt, qt) = ((m + t * dm).min(1.0), q + t * dq);
            if mt > 0.0 && qt > 0.0 && qt < 1.0 {
                let rt = eval(mt, qt);
                if norm(rt) < norm(r) {
                    m = mt;
                    q = qt;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(r) > RESIDUAL_TOL {
        return Err(OneRsbError::NotInWindow(format!(
            "residual {:.3e} after {iterations} iterations at m={m}, q={q}",
            norm(r)
        )));
    }
    if 1.0 - m <= THRESHOLD_GAP {
        return Err(OneRsbError::AtThreshold);
    }
    Ok(OneRsbSolution {
        m,
        q,
        residual_c: r.0,
        residual_d: r.1,
        iterations,
        f_check: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "RS")]
    Rs,
    #[serde(rename = "OneRSB")]
    OneRsb,
    Unknown,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Rs => "RS",
            Phase::OneRsb => "OneRSB",
            Phase::Unknown => "Unknown",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions<'a> {
    pub boundary: Option<&'a BoundarySolution>,
    pub start: Option<(f64, f64)>,
    pub grid: usize,
}

impl Default for ClassifyOptions<'_> {
    fn default() -> Self {
        Self {
            boundary: None,
            start: None,
            grid: DEFAULT_GRID,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub phase: Phase,
    /// Present whenever the Newton solve succeeded, verified or not.
    pub solution: Option<OneRsbSolution>,
}

/// RS when every critical point of `C_β` has `C ≤ 1e-9`; otherwise 1RSB if
/// the solver converges and the criterion curve is nonpositive with zeros
/// at both atoms; otherwise Unknown.
pub fn classify_phase(model: &ModelSpec, rule: &QuadratureRule, opts: ClassifyOptions<'_>) -> Classification {
    if classify_rs(model, rule) {
        return Classification {
            phase: Phase::Rs,
            solution: None,
        };
    }
    let Ok(mut sol) = solve_1rsb(model, rule, opts.boundary, opts.start) else {
        return Classification {
            phase: Phase::Unknown,
            solution: None,
        };
    };
    let phase = match sol.verify(model, rule, opts.grid) {
        Ok(check) if check.passes() => Phase::OneRsb,
        _ => Phase::Unknown,
    };
    Classification {
        phase,
        solution: Some(sol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cole_hopf::{parisi_functional, parisi_two_atom, TwoAtomCriterion};
    use crate::rs::{c_raw, d_raw, g2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::OnceLock;

    fn rule() -> &'static QuadratureRule {
        static RULE: OnceLock<QuadratureRule> = OnceLock::new();
        RULE.get_or_init(|| QuadratureRule::standard(200).unwrap())
    }

    fn boundary3() -> &'static BoundarySolution {
        static SOL: OnceLock<BoundarySolution> = OnceLock::new();
        SOL.get_or_init(|| solve_boundary(3, rule()).unwrap())
    }

    fn m3(beta: f64) -> ModelSpec {
        ModelSpec::new(3, beta).unwrap()
    }

    fn solve3(beta: f64) -> OneRsbSolution {
        solve_1rsb(&m3(beta), rule(), Some(boundary3()), None).unwrap()
    }

    #[test]
    fn reduces_to_rs_at_m_one() {
        let r = rule();
        for &(p, b) in &[(3, 1.1), (4, 0.9), (10, 1.4), (20, 1.15)] {
            let model = ModelSpec::new(p, b).unwrap();
            for &q in &[0.1, 0.5, 0.9, 0.9999] {
                let c = c1_1rsb(&model, r, 1.0, q).unwrap();
                let d = d1_1rsb(&model, r, 1.0, q).unwrap();
                assert!((c - c_raw(&model, r, q)).abs() < 1e-12, "p={p} q={q}");
                assert!((d - d_raw(&model, r, q)).abs() < 1e-12, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn vanish_as_q_goes_to_zero() {
        let model = m3(1.1);
        let c = c1_1rsb(&model, rule(), 0.6, 1e-9).unwrap();
        let d = d1_1rsb(&model, rule(), 0.6, 1e-9).unwrap();
        assert!(c.abs() < 1e-12 && d.abs() < 1e-8);
        assert!(c1_1rsb(&model, rule(), 0.0, 0.5).is_err());
        assert!(d1_1rsb(&model, rule(), 0.5, 1.0).is_err());
    }

    #[test]
    fn matches_monte_carlo() {
        let (m, q) = (0.9, 0.7);
        let model = m3(1.1);
        let y = model.y_of(q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_917);
        let n = 10_000_000usize;
        // running sums of (a, b, c) = (coshᵐ, coshᵐ log cosh, coshᵐ tanh²) and products
        let mut s = [0.0f64; 3];
        let mut ss = [[0.0f64; 3]; 3];
        for _ in 0..n {
            let g: f64 = StandardNormal.sample(&mut rng);
            let x = y * g;
            let w = (m * log_cosh(x)).exp();
            let v = [w, w * log_cosh(x), w * x.tanh() * x.tanh()];
            for i in 0..3 {
                s[i] += v[i];
                for j in 0..3 {
                    ss[i][j] += v[i] * v[j];
                }
            }
        }
        let nf = n as f64;
        let mean: Vec<f64> = s.iter().map(|v| v / nf).collect();
        let cov = |i: usize, j: usize| ss[i][j] / nf - mean[i] * mean[j];
        let (a, b, c) = (mean[0], mean[1], mean[2]);
        let theta = model.theta(q).unwrap();
        let mc_c1 = -a.ln() / (m * m) + b / (m * a) - 0.5 * theta;
        let mc_d1 = c / a - q;
        // delta-method standard errors
        let gc = [-1.0 / (m * m * a) - b / (m * a * a), 1.0 / (m * a), 0.0];
        let gd = [-c / (a * a), 0.0, 1.0 / a];
        let var = |g: [f64; 3]| {
            let mut v = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    v += g[i] * g[j] * cov(i, j);
                }
            }
            v / nf
        };
        let (se_c, se_d) = (var(gc).sqrt(), var(gd).sqrt());
        let c1 = c1_1rsb(&model, rule(), m, q).unwrap();
        let d1 = d1_1rsb(&model, rule(), m, q).unwrap();
        assert!((c1 - mc_c1).abs() < 3.0 * se_c, "{c1} vs {mc_c1} ± {se_c}");
        assert!((d1 - mc_d1).abs() < 3.0 * se_d, "{d1} vs {mc_d1} ± {se_d}");
    }

    #[test]
    fn m_derivative_at_one_is_g2() {
        let r = rule();
        let h = 1e-6;
        for &b in &[0.9, 1.1, 1.4] {
            let model = m3(b);
            for &q in &[0.2, 0.5, 0.8] {
                let fd = (residuals_raw(&model, r, 1.0 + h, q).0 - residuals_raw(&model, r, 1.0 - h, q).0)
                    / (2.0 * h);
                let want = g2(r, model.dxi(q)).unwrap();
                assert!((fd - want).abs() < 1e-6, "b={b} q={q}: {fd} vs {want}");
            }
        }
    }

    #[test]
    fn parisi_gradient_matches_system() {
        let r = rule();
        let model = m3(1.2);
        let h = 1e-5;
        let p = |m: f64, q: f64| parisi_functional(&DiscreteMeasure::one_rsb(m, q).unwrap(), &model, r).unwrap();
        for &(m, q) in &[(0.6, 0.7), (0.85, 0.5)] {
            let dm = (p(m + h, q) - p(m - h, q)) / (2.0 * h);
            let dq = (p(m, q + h) - p(m, q - h)) / (2.0 * h);
            let (c1, d1) = residuals_raw(&model, r, m, q);
            assert!((p(m, q) - parisi_two_atom(&model, r, m, q)).abs() < 1e-12);
            assert!((dm - c1).abs() < 1e-6, "{dm} vs {c1}");
            let want = 0.5 * model.xi_pp(q).unwrap() * (m - 1.0) * d1;
            assert!((dq - want).abs() < 1e-6, "{dq} vs {want}");
        }
    }

    #[test]
    fn solver_near_and_at_threshold() {
        let b = boundary3();
        let sol = solve3(b.beta1 + 1e-4);
        assert!(sol.m > 0.95 && sol.m < 1.0, "{sol:?}");
        assert!((sol.q - b.q1).abs() < 0.05);
        assert!(matches!(
            solve_1rsb(&m3(b.beta1), rule(), Some(b), None),
            Err(OneRsbError::BelowTransition { .. })
        ));
        assert!(matches!(
            solve_1rsb(&m3(1.0), rule(), None, None),
            Err(OneRsbError::BelowTransition { .. })
        ));
    }

    #[test]
    fn solver_residuals_hold_at_doubled_order() {
        let b = boundary3();
        let beta = b.beta1 + 0.05;
        let sol = solve3(beta);
        assert!(sol.m > 0.0 && sol.m < 1.0);
        assert!(sol.residual_c.abs() <= 1e-8 && sol.residual_d.abs() <= 1e-8);
        let fine = QuadratureRule::standard(400).unwrap();
        let (c, d) = residuals_raw(&m3(beta), &fine, sol.m, sol.q);
        assert!(c.abs() <= 1e-8 && d.abs() <= 1e-8);
        let again = solve_1rsb(&m3(beta), &fine, Some(b), None).unwrap();
        assert!((again.m - sol.m).abs() < 1e-8 && (again.q - sol.q).abs() < 1e-8);
    }

    #[test]
    fn solutions_vary_continuously() {
        let b = boundary3();
        let mut prev: Option<OneRsbSolution> = None;
        for k in 1..=20 {
            let beta = b.beta1 + 1e-3 * k as f64;
            let start = prev.map(|s| (s.m, s.q));
            let sol = solve_1rsb(&m3(beta), rule(), Some(b), start).unwrap();
            if let Some(p) = prev {
                assert!((sol.m - p.m).abs() <= 50.0 * 1e-3, "k={k}");
                assert!((sol.q - p.q).abs() <= 50.0 * 1e-3, "k={k}");
                assert!(sol.m < p.m);
            }
            prev = Some(sol);
        }
    }

    #[test]
    fn f_vanishes_on_support_and_is_concave_at_q() {
        let b = boundary3();
        let beta = b.beta1 + 0.01;
        let sol = solve3(beta);
        let model = m3(beta);
        let crit = TwoAtomCriterion::new(&model, rule(), sol.m, sol.q).unwrap();
        assert!(crit.f(0.0).unwrap().abs() < 1e-8);
        assert!(crit.f(sol.q).unwrap().abs() < 1e-8);
        let h = 1e-3;
        let second = crit.f(sol.q + h).unwrap() - 2.0 * crit.f(sol.q).unwrap() + crit.f(sol.q - h).unwrap();
        assert!(second < 0.0);
        // f(0) = −C¹ identically
        let (c1, _) = residuals_raw(&model, rule(), 0.7, 0.6);
        let other = TwoAtomCriterion::new(&model, rule(), 0.7, 0.6).unwrap();
        assert!((other.f(0.0).unwrap() + c1).abs() < 1e-12);
    }

    #[test]
    fn one_rsb_improves_on_annealed() {
        let model = m3(1.2);
        let sol = solve3(1.2);
        let mu = DiscreteMeasure::one_rsb(sol.m, sol.q).unwrap();
        let d0 = DiscreteMeasure::dirac(0.0).unwrap();
        let p1 = parisi_functional(&mu, &model, rule()).unwrap();
        let p0 = parisi_functional(&d0, &model, rule()).unwrap();
        assert!(p1 < p0 - 1e-10, "{p1} vs {p0}");
    }

    #[test]
    fn classify_examples() {
        let b = boundary3();
        let opts = ClassifyOptions {
            boundary: Some(b),
            ..Default::default()
        };
        let r = rule();
        assert_eq!(classify_phase(&m3(1.0), r, opts).phase, Phase::Rs);
        let c = classify_phase(&m3(b.beta1 + 0.02), r, opts);
        assert_eq!(c.phase, Phase::OneRsb);
        let check = c.solution.unwrap().f_check.unwrap();
        assert!(check.passes());
        let c = classify_phase(&m3(5.0), r, ClassifyOptions { grid: 201, ..opts });
        assert_ne!(c.phase, Phase::Rs);
        assert_eq!(serde_json::to_string(&Phase::OneRsb).unwrap(), "\"OneRSB\"");
    }
}
