//! Phase-diagram rows and β sweeps with continuation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cole_hopf::{criterion_curve, parisi_functional, DiscreteMeasure, MeasureError};
use crate::critical::{solve_boundary, BoundarySolution, CriticalError};
use crate::model::{ModelError, ModelSpec};
use crate::one_rsb::{classify_phase, ClassifyOptions, Phase};
use crate::quadrature::QuadratureRule;
use thiserror::Error;

pub const CSV_HEADER: &str = "p,beta,phase,m,q,max_f_violation,parisi_value";

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error(transparent)]
    Critical(#[from] CriticalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("invalid sweep: {0}")]
    Range(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub p: u32,
    pub beta: f64,
    pub phase: Phase,
    pub m: Option<f64>,
    pub q: Option<f64>,
    pub max_f_violation: f64,
    pub parisi_value: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub grid: usize,
    pub warm_start: bool,
}

/// Classifies one `(p, β)` and evaluates `𝒫` at the reported measure
/// (`δ₀` unless a 1RSB pair was found).
pub fn phase_point(
    model: &ModelSpec,
    rule: &QuadratureRule,
    boundary: &BoundarySolution,
    grid: usize,
    start: Option<(f64, f64)>,
) -> Result<PhasePoint, PhaseError> {
    model.require_positive_beta()?;
    let c = classify_phase(
        model,
        rule,
        ClassifyOptions {
            boundary: Some(boundary),
            start,
            grid,
        },
    );
    let (m, q, measure, violation) = match (c.phase, c.solution) {
        (Phase::Rs, _) | (_, None) => {
            let d0 = DiscreteMeasure::dirac(0.0)?;
            let v = criterion_curve(&d0, model, rule, grid)?.max_violation;
            (None, None, d0, v)
        }
        (_, Some(sol)) => {
            let mu = DiscreteMeasure::one_rsb(sol.m, sol.q)?;
            let v = sol.f_check.map_or(f64::NAN, |f| f.max_violation);
            (Some(sol.m), Some(sol.q), mu, v)
        }
    };
    Ok(PhasePoint {
        p: model.p(),
        beta: model.beta(),
        phase: c.phase,
        m,
        q,
        max_f_violation: violation,
        parisi_value: parisi_functional(&measure, model, rule)?,
    })
}

/// `steps` equally spaced β from `beta_min` to `beta_max`, classified in
/// order; with `warm_start` each 1RSB solve starts from the previous one.
pub fn sweep(
    p: u32,
    beta_min: f64,
    beta_max: f64,
    steps: usize,
    rule: &QuadratureRule,
    opts: SweepOptions,
) -> Result<Vec<PhasePoint>, PhaseError> {
    if !(beta_min > 0.0 && beta_min < beta_max && beta_max.is_finite()) {
        return Err(PhaseError::Range(format!("need 0 < beta-min < beta-max, got {beta_min}, {beta_max}")));
    }
    if steps < 2 {
        return Err(PhaseError::Range(format!("need steps >= 2, got {steps}")));
    }
    let boundary = solve_boundary(p, rule)?;
    let mut rows = Vec::with_capacity(steps);
    let mut start = None;
    for k in 0..steps {
        let beta = beta_min + (beta_max - beta_min) * k as f64 / (steps - 1) as f64;
        let model = ModelSpec::new(p, beta)?;
        let row = phase_point(&model, rule, &boundary, opts.grid, if opts.warm_start { start } else { None })?;
        if let (Some(m), Some(q)) = (row.m, row.q) {
            start = Some((m, q));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl PhasePoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.p,
            num(self.beta),
            self.phase,
            opt(self.m),
            opt(self.q),
            num(self.max_f_violation),
            num(self.parisi_value)
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("PhasePoint serializes")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let dash = || "-".to_string();
        let fields = [
            ("p", self.p.to_string()),
            ("beta", num(self.beta)),
            ("phase", self.phase.to_string()),
            ("m", self.m.map(num).unwrap_or_else(dash)),
            ("q", self.q.map(num).unwrap_or_else(dash)),
            ("max_f_violation", num(self.max_f_violation)),
            ("parisi_value", num(self.parisi_value)),
        ];
        for (k, v) in fields {
            let _ = writeln!(s, "{k:<16} {v}");
        }
        s
    }
}

pub fn render_csv(rows: &[PhasePoint]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Number of adjacent rows whose phase labels differ.
pub fn phase_flips(rows: &[PhasePoint]) -> usize {
    rows.windows(2).filter(|w| w[0].phase != w[1].phase).count()
}
