//! Numeric and exact checks behind the convexity lemma: T convexity, the
//! quintic root count, G₁ positivity and G₂ monotonicity.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::model::{ModelError, ModelSpec};
use crate::quadrature::QuadratureRule;
use crate::rs::{g2, t_pivot};
use crate::sturm::{count_roots, isolate_roots, quintic, verify_g1_structure, G1Report};

pub const DEFAULT_P_LIST: [u32; 3] = [3, 4, 10];
pub const CONVEXITY_BETAS: [f64; 3] = [0.5, 1.0, 1.5];
pub const CONVEXITY_STEP: f64 = 1e-4;
pub const CONVEXITY_TOL: f64 = -1e-6;
pub const CONVEXITY_POINTS: usize = 901;
pub const G2_POINTS: [f64; 3] = [0.5, 5.0, 20.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityCheck {
    pub p: u32,
    pub beta: f64,
    pub min_second_difference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G2Check {
    pub x: f64,
    pub slope: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub convexity: Vec<ConvexityCheck>,
    pub quintic_roots: usize,
    pub quintic_intervals: Vec<(f64, f64)>,
    pub g1: G1Report,
    pub g2: Vec<G2Check>,
}

/// Minimum second central difference of `T` over `points` equally spaced
/// `u ∈ [0.05, 0.95]`.
pub fn t_min_second_difference(model: &ModelSpec, rule: &QuadratureRule, points: usize) -> Result<f64, ModelError> {
    let h = CONVEXITY_STEP;
    let mut min = f64::INFINITY;
    for i in 0..points {
        let u = 0.05 + 0.9 * i as f64 / (points - 1) as f64;
        let d = t_pivot(model, rule, u + h)? - 2.0 * t_pivot(model, rule, u)? + t_pivot(model, rule, u - h)?;
        min = min.min(d);
    }
    Ok(min)
}

pub fn verify_lemmas(p_list: &[u32], rule: &QuadratureRule) -> Result<LemmaReport, ModelError> {
    let mut convexity = Vec::new();
    for &p in p_list {
        for &beta in &CONVEXITY_BETAS {
            let model = ModelSpec::new(p, beta)?;
            let min = t_min_second_difference(&model, rule, CONVEXITY_POINTS)?;
            convexity.push(ConvexityCheck {
                p,
                beta,
                min_second_difference: min,
                pass: min >= CONVEXITY_TOL,
            });
        }
    }
    let q = quintic();
    let (zero, one) = (BigRational::zero(), BigRational::one());
    let quintic_intervals = isolate_roots(&q, &zero, &one)
        .iter()
        .map(|(l, r)| (l.to_f64().unwrap_or(f64::NAN), r.to_f64().unwrap_or(f64::NAN)))
        .collect();
    let mut g2_checks = Vec::new();
    for &x in &G2_POINTS {
        let h = 1e-4 * x;
        let slope = (g2(rule, x + h)? - g2(rule, x - h)?) / (2.0 * h);
        g2_checks.push(G2Check {
            x,
            slope,
            pass: slope > 0.0,
        });
    }
    Ok(LemmaReport {
        convexity,
        quintic_roots: count_roots(&q, &zero, &one),
        quintic_intervals,
        g1: verify_g1_structure(),
        g2: g2_checks,
    })
}

impl LemmaReport {
    /// Names of the failed items; empty when everything passes.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in self.convexity.iter().filter(|c| !c.pass) {
            out.push(format!("t-convexity p={} beta={}", c.p, c.beta));
        }
        if self.quintic_roots != 2 {
            out.push("quintic-root-count".into());
        }
        let g = &self.g1;
        let items = [
            ("a2-b2-identity", g.identity_holds),
            ("quintic-isolation", g.intervals_inside_claimed && g.exact_sign_changes),
            ("g1-positive-on-grid", g.positive_on_grid),
            ("g1-local-max-in-[0.65,0.66]", g.local_max_in_interval),
            ("g1-local-min-in-[0.94,0.95]", g.local_min_in_interval),
            ("g1-refined-lower-bound", g.refined_bound > 0.0),
        ];
        out.extend(items.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.to_string()));
        for c in self.g2.iter().filter(|c| !c.pass) {
            out.push(format!("g2-increasing x={}", c.x));
        }
        out
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn render_text(&self) -> String {
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut s = String::new();
        for c in &self.convexity {
            let _ = writeln!(
                s,
                "{} t-convexity p={} beta={}: min second difference {:.3e}",
                mark(c.pass),
                c.p,
                c.beta,
                c.min_second_difference
            );
        }
        let _ = writeln!(s, "{} quintic root count in [0,1]: {}", mark(self.quintic_roots == 2), self.quintic_roots);
        for (l, r) in &self.quintic_intervals {
            let _ = writeln!(s, "     root in ({l:.9}, {r:.9})");
        }
        let g = &self.g1;
        let _ = writeln!(s, "{} A^2 - (1-t^2)B^2 identity", mark(g.identity_holds));
        let _ = writeln!(
            s,
            "{} quintic roots inside (0.4225, 0.4356) and (0.8836, 0.9025)",
            mark(g.intervals_inside_claimed && g.exact_sign_changes)
        );
        let _ = writeln!(
            s,
            "{} G1 > 0 on {} grid points (min {:.6e})",
            mark(g.positive_on_grid),
            g.grid_points,
            g.grid_min
        );
        let _ = writeln!(s, "{} G1 local max in [0.65, 0.66]", mark(g.local_max_in_interval));
        let _ = writeln!(s, "{} G1 local min in [0.94, 0.95]", mark(g.local_min_in_interval));
        let _ = writeln!(
            s,
            "{} G1 lower bound on [0.94, 0.95] over 10 subintervals: {:.6e} (single interval: {:.6e})",
            mark(g.refined_bound > 0.0),
            g.refined_bound,
            g.single_interval_bound
        );
        for c in &self.g2 {
            let _ = writeln!(s, "{} G2 slope at x={}: {:.6e}", mark(c.pass), c.x, c.slope);
        }
        s
    }
}
