//! Replica-symmetric criterion functions `C`, `D`, the split `C = C¹ − C²`,
//! the pivot `T`, and the auxiliary functions used by the structural lemmas.
//!
//! Every ratio `E[cosh(Yg) h(Yg)] / E[cosh(Yg)]` goes through the Gaussian
//! tilt in [`QuadratureRule::cosh_ratio_even`]; all integrands here are even.

use crate::model::{ModelError, ModelSpec};
use crate::quadrature::QuadratureRule;
use crate::special::{log_cosh, log_sum_exp, sech_sq, tanh_sq};

/// Smallest argument accepted by [`t_pivot`].
pub const T_FLOOR: f64 = 1e-8;

/// All replica-symmetric quantities at one overlap value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsEval {
    pub q: f64,
    pub c: f64,
    pub d: f64,
    pub c1: f64,
    pub c2: f64,
    /// `None` at `q ≤ T_FLOOR`.
    pub t: Option<f64>,
    pub dc_du: f64,
}

impl RsEval {
    pub fn new(model: &ModelSpec, rule: &QuadratureRule, q: f64) -> Result<Self, ModelError> {
        check_unit(q)?;
        let c1 = c1_raw(model, rule, q);
        let c2 = c2_raw(model, q);
        let d = d_raw(model, rule, q);
        Ok(Self {
            q,
            c: if q == 0.0 { 0.0 } else { c1 - c2 },
            d,
            c1,
            c2,
            t: t_pivot(model, rule, q).ok(),
            dc_du: 0.5 * model.d2xi(q) * d,
        })
    }
}

fn check_unit(q: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(ModelError::Domain {
            name: "q",
            value: q,
            domain: "[0, 1]",
        })
    }
}

pub(crate) fn c1_raw(model: &ModelSpec, rule: &QuadratureRule, q: f64) -> f64 {
    if q == 0.0 || model.beta() == 0.0 {
        return 0.0;
    }
    rule.cosh_ratio_even(model.y_raw(q), log_cosh)
}

pub(crate) fn c2_raw(model: &ModelSpec, q: f64) -> f64 {
    0.5 * model.dxi(q) + 0.5 * model.theta_raw(q)
}

pub(crate) fn c_raw(model: &ModelSpec, rule: &QuadratureRule, q: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    c1_raw(model, rule, q) - c2_raw(model, q)
}

/// `D = (1 − q) − E_tilt[sech²]`, which avoids the cancellation in
/// `E_tilt[tanh²] − q` when both are close to one.
pub(crate) fn d_raw(model: &ModelSpec, rule: &QuadratureRule, q: f64) -> f64 {
    if model.beta() == 0.0 {
        return -q;
    }
    (1.0 - q) - rule.cosh_ratio_even(model.y_raw(q), sech_sq)
}

/// `E[tanh²(Yg) cosh(Yg)] / E[cosh(Yg)]` at `Y = √ξ'(q)`.
pub(crate) fn tilted_tanh_sq(model: &ModelSpec, rule: &QuadratureRule, q: f64) -> f64 {
    rule.cosh_ratio_even(model.y_raw(q), tanh_sq)
}

/// `C_β(q) = E[cosh log cosh]/E[cosh] − ½ξ'(q) − ½θ(q)` with `Y = √ξ'(q)`.
pub fn c_beta(model: &ModelSpec, rule: &QuadratureRule, q: f64) -> Result<f64, ModelError> {
    check_unit(q)?;
    Ok(c_raw(model, rule, q))
}

/// `D_β(q) = E[tanh² cosh]/E[cosh] − q`.
pub fn d_beta(model: &ModelSpec, rule: &QuadratureRule, q: f64) -> Result<f64, ModelError> {
    check_unit(q)?;
    Ok(d_raw(model, rule, q))
}

pub fn c1(model: &ModelSpec, rule: &QuadratureRule, q: f64) -> Result<f64, ModelError> {
    check_unit(q)?;
    Ok(c1_raw(model, rule, q))
}

/// `½ξ'(q) + ½θ(q)`.
pub fn c2(model: &ModelSpec, q: f64) -> Result<f64, ModelError> {
    check_unit(q)?;
    Ok(c2_raw(model, q))
}

/// `d/dq C¹ = ½ξ''(q) (E[tanh² cosh]/E[cosh] + 1)`.
pub fn dc1_dq(model: &ModelSpec, rule: &QuadratureRule, q: f64) -> Result<f64, ModelError> {
    check_unit(q)?;
    if q == 0.0 {
        return Ok(0.5 * model.d2xi(0.0));
    }
    Ok(0.5 * model.d2xi(q) * (tilted_tanh_sq(model, rule, q) + 1.0))
}

/// `T(u) = u E[cosh]/E[tanh² cosh] − 1`, defined for `u > T_FLOOR`.
///
/// `T` and `D` have opposite signs. `u` may exceed one.
pub fn t_pivot(model: &ModelSpec, rule: &QuadratureRule, u: f64) -> Result<f64, ModelError> {
    if !(u > T_FLOOR) || !u.is_finite() {
        return Err(ModelError::Domain {
            name: "u",
            value: u,
            domain: "(1e-8, inf); T diverges as u -> 0+",
        });
    }
    model.require_positive_beta()?;
    Ok(u / tilted_tanh_sq(model, rule, u) - 1.0)
}

/// `a_k = E[coshᵏ(Yg)]` for `k ∈ {−5, …, 1}`, summed in log space.
pub fn a_k(rule: &QuadratureRule, y: f64, k: i32) -> Result<f64, ModelError> {
    if !(-5..=1).contains(&k) {
        return Err(ModelError::Domain {
            name: "k",
            value: f64::from(k),
            domain: "{-5, ..., 1}",
        });
    }
    if !(y >= 0.0) {
        return Err(ModelError::Domain {
            name: "Y",
            value: y,
            domain: "[0, inf)",
        });
    }
    let kf = f64::from(k);
    let logs: Vec<f64> = rule
        .nodes()
        .iter()
        .zip(rule.log_weights())
        .map(|(g, lw)| lw + kf * log_cosh(y * g))
        .collect();
    Ok(log_sum_exp(&logs).exp())
}

/// `G₁(t) = artanh t − 3t / (1 + 2(1 − t²) + 3 / (1 + 2/√(1 − t²)))`.
pub fn g1(t: f64) -> Result<f64, ModelError> {
    if !(0.0..1.0).contains(&t) {
        return Err(ModelError::Domain {
            name: "t",
            value: t,
            domain: "[0, 1)",
        });
    }
    let s = 1.0 - t * t;
    Ok(t.atanh() - 3.0 * t / (1.0 + 2.0 * s + 3.0 / (1.0 + 2.0 / s.sqrt())))
}

/// `G₂(x) = x − 2A + Var`, where `A` and `Var` are the mean and variance of
/// `log cosh(√x g)` under the `cosh(√x g)` tilt.
pub fn g2(rule: &QuadratureRule, x: f64) -> Result<f64, ModelError> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(ModelError::Domain {
            name: "x",
            value: x,
            domain: "[0, inf)",
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let y = x.sqrt();
    let mean = rule.cosh_ratio_even(y, log_cosh);
    let var = rule.cosh_ratio_even(y, |v| {
        let l = log_cosh(v) - mean;
        l * l
    });
    Ok(x - 2.0 * mean + var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn rule() -> QuadratureRule {
        QuadratureRule::standard(200).unwrap()
    }

    fn m(p: u32, beta: f64) -> ModelSpec {
        ModelSpec::new(p, beta).unwrap()
    }

    fn models() -> Vec<ModelSpec> {
        let mut v = Vec::new();
        for &p in &[3, 4, 10] {
            for &b in &[0.5, 1.0, 1.5] {
                v.push(m(p, b));
            }
        }
        v
    }

    #[test]
    fn c_examples() {
        let r = rule();
        for &b in &[0.0, 0.7, 1.3] {
            assert_eq!(c_beta(&m(3, b), &r, 0.0).unwrap(), 0.0);
        }
        assert!(c_beta(&m(3, 1.1), &r, 0.9).unwrap() > 0.0);
        assert!(c_beta(&m(3, 1.0), &r, 1.2).is_err());
    }

    #[test]
    fn c1_matches_monte_carlo() {
        let model = m(3, 0.5);
        let q = 0.5;
        let y = model.y_of(q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let n = 10_000_000usize;
        let (mut s, mut s2) = (0.0f64, 0.0f64);
        for _ in 0..n {
            let g: f64 = StandardNormal.sample(&mut rng);
            let v = (y * g).cosh() * log_cosh(y * g);
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        // E[cosh(Yg)] = e^{Y²/2} exactly
        let mc_c = mean / (0.5 * y * y).exp() - c2(&model, q).unwrap();
        let quad_c = c_beta(&model, &rule(), q).unwrap();
        let se_c = se / (0.5 * y * y).exp();
        assert!((mc_c - quad_c).abs() < 3.0 * se_c, "mc={mc_c} quad={quad_c} se={se_c}");
    }

    #[test]
    fn d_examples() {
        let r = rule();
        assert_eq!(d_beta(&m(3, 0.0), &r, 0.3).unwrap(), -0.3);
        let model = m(3, 1.05);
        let d = |q| d_beta(&model, &r, q).unwrap();
        assert!(d(0.733) > d(0.735));
        assert!(d(0.735) > 0.0);
        assert!(0.0 > d(0.739));
        assert!(d(0.739) > d(0.740));
        for model in models() {
            assert!(d_beta(&model, &r, 1.0).unwrap() < 0.0);
        }
    }

    #[test]
    fn c1_c2_examples() {
        let r = rule();
        let model = m(3, 1.0);
        assert_eq!(c1(&model, &r, 0.0).unwrap(), 0.0);
        assert_eq!(c2(&model, 0.0).unwrap(), 0.0);
        let oracle = 0.5 * (3.0 * 0.25) + 0.5 * (2.0 * 0.125);
        assert!((c2(&model, 0.5).unwrap() - oracle).abs() < 1e-15);
        let model = m(3, 1.05);
        assert!(c1(&model, &r, 0.739).unwrap() - c2(&model, 0.735).unwrap() < 0.0);
        for model in models() {
            for i in 0..=20 {
                let q = i as f64 / 20.0;
                let e = RsEval::new(&model, &r, q).unwrap();
                assert!((e.c1 - e.c2 - e.c).abs() < 1e-12);
                assert!((e.dc_du - 0.5 * model.xi_pp(q).unwrap() * e.d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dc1_dq_positive_and_matches_fd() {
        let r = rule();
        assert_eq!(dc1_dq(&m(3, 1.0), &r, 0.0).unwrap(), 0.0);
        let model = m(3, 1.05);
        let q = 0.7;
        let h = 1e-6;
        let fd = (c1(&model, &r, q + h).unwrap() - c1(&model, &r, q - h).unwrap()) / (2.0 * h);
        let exact = dc1_dq(&model, &r, q).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-6, "fd={fd} exact={exact}");
        for model in models() {
            for i in 1..=20 {
                assert!(dc1_dq(&model, &r, i as f64 / 20.0).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn compderiv_identity_on_grid() {
        let r = rule();
        let h = 1e-6;
        for model in models() {
            for i in 0..101 {
                let q = 0.01 + 0.98 * i as f64 / 100.0;
                let fd = (c_raw(&model, &r, q + h) - c_raw(&model, &r, q - h)) / (2.0 * h);
                let exact = 0.5 * model.d2xi(q) * d_raw(&model, &r, q);
                assert!((fd - exact).abs() < 1e-6, "{model:?} q={q}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn t_examples() {
        let r = rule();
        let model = m(3, 1.0);
        assert!(t_pivot(&model, &r, 1e-3).unwrap() > 10.0);
        assert!(t_pivot(&model, &r, 3.0).unwrap() > 2.0);
        assert!(t_pivot(&model, &r, 1e-8).is_err());
        assert!(t_pivot(&model, &r, 0.0).is_err());
        assert!(t_pivot(&m(3, 0.0), &r, 0.5).is_err());
        let model = m(3, 1.05);
        let t = t_pivot(&model, &r, 0.737).unwrap();
        let d = d_beta(&model, &r, 0.737).unwrap();
        assert_eq!(t.signum(), -d.signum());
    }

    #[test]
    fn t_sign_opposes_d() {
        let r = rule();
        for model in models() {
            for i in 1..100 {
                let e = RsEval::new(&model, &r, i as f64 / 100.0).unwrap();
                if e.d.abs() > 1e-9 {
                    assert_eq!(e.t.unwrap().signum(), -e.d.signum(), "{model:?} q={}", e.q);
                }
            }
        }
    }

    #[test]
    fn t_is_convex_with_single_minimum() {
        let r = rule();
        let h = 1e-4;
        for model in models() {
            let t = |u: f64| t_pivot(&model, &r, u).unwrap();
            let n = 9000;
            let mut slope_sign_changes = 0;
            let mut prev_slope: Option<f64> = None;
            for i in 0..=n {
                let u = 0.05 + 0.9 * i as f64 / n as f64;
                let second = t(u + h) - 2.0 * t(u) + t(u - h);
                assert!(second >= -1e-6, "{model:?} u={u}: {second}");
                let slope = t(u + h) - t(u);
                if let Some(ps) = prev_slope {
                    if ps.signum() != slope.signum() {
                        slope_sign_changes += 1;
                    }
                }
                prev_slope = Some(slope);
            }
            assert!(slope_sign_changes <= 1, "{model:?}");
        }
    }

    #[test]
    fn a_k_examples() {
        let r = rule();
        for k in -5..=1 {
            assert!((a_k(&r, 0.0, k).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((a_k(&r, 1.0, 1).unwrap() - 0.5f64.exp()).abs() < 1e-10);
        assert!(a_k(&r, 1.0, 2).is_err());
        assert!(a_k(&r, 1.0, -6).is_err());
        for &y in &[0.3, 1.0, 2.0] {
            let h = 1e-5;
            let fd = (a_k(&r, y + h, 1).unwrap() - a_k(&r, y - h, 1).unwrap()) / (2.0 * h);
            let exact = y * a_k(&r, y, 1).unwrap();
            assert!(((fd - exact) / exact).abs() < 1e-7);
        }
        // coshᵏ ≤ 1 for k ≤ 0, and a_k decreases in |k|
        for k in -5..0 {
            assert!(a_k(&r, 1.5, k).unwrap() < a_k(&r, 1.5, k + 1).unwrap());
        }
    }

    #[test]
    fn g1_examples_and_positivity() {
        assert_eq!(g1(0.0).unwrap(), 0.0);
        assert!(g1(0.5).unwrap() > 0.0);
        assert!(g1(0.99).unwrap() > g1(0.5).unwrap());
        assert!(g1(1.0 - 1e-12).unwrap() > 10.0);
        assert!(g1(0.999999).unwrap() > g1(0.99).unwrap());
        assert!(g1(1.0).is_err());
        for i in 1..1000 {
            let t = i as f64 / 1000.0;
            assert!(g1(t).unwrap() > 0.0, "t={t}");
        }
    }

    #[test]
    fn g2_examples() {
        let r = rule();
        assert_eq!(g2(&r, 0.0).unwrap(), 0.0);
        assert!(g2(&r, 1.0).unwrap() > 0.0);
        for &x in &[0.5, 5.0, 20.0] {
            let h = 1e-4;
            assert!(g2(&r, x + h).unwrap() - g2(&r, x - h).unwrap() > 0.0, "x={x}");
        }
        assert!(g2(&r, -1.0).is_err());
    }
}
