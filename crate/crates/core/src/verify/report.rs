use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};

/// Relative slack in the inequality verdict.
pub const VERDICT_REL_TOL: f64 = 1e-8;
/// Absolute slack in the inequality verdict.
pub const VERDICT_ABS_TOL: f64 = 1e-14;
/// Largest relative change of an integral under quadrature doubling.
pub const QUAD_CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// Quadrature did not settle; excluded from pass/fail counts.
    Unconverged,
}

pub fn inequality_holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + VERDICT_REL_TOL) + VERDICT_ABS_TOL
}

/// One instance of an inequality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub constants: BTreeMap<String, f64>,
    pub quad_n: usize,
    /// Largest relative change of the integrals when `quad_n` is doubled.
    pub quad_change: f64,
    pub verdict: Verdict,
    pub params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

impl InequalityReport {
    pub fn new(
        check: &str,
        lhs: f64,
        rhs: f64,
        constants: BTreeMap<String, f64>,
        quad_n: usize,
        quad_change: f64,
        params: serde_json::Value,
    ) -> Self {
        let verdict = if !(quad_change <= QUAD_CONVERGENCE_TOL) {
            Verdict::Unconverged
        } else if inequality_holds(lhs, rhs) {
            Verdict::Holds
        } else {
            Verdict::Fails
        };
        InequalityReport {
            check: check.to_string(),
            lhs,
            rhs,
            margin: rhs - lhs,
            constants,
            quad_n,
            quad_change,
            verdict,
            params,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// Relative change between two evaluations of the same integral.
pub(crate) fn relative_change(coarse: f64, fine: f64) -> f64 {
    let diff = (coarse - fine).abs();
    if diff <= 1e-300 {
        0.0
    } else {
        diff / fine.abs().max(coarse.abs()).max(1e-300)
    }
}

/// Least-squares fit of `log value = exponent * log h + log_constant`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub log_constant: f64,
    pub r2: f64,
}

pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(KornError::NonPositiveInput(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some((h, v)) = points.iter().find(|(h, v)| !(*h > 0.0) || !(*v > 0.0)) {
        return Err(KornError::NonPositiveInput(format!(
            "point ({h}, {v}) is not positive"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(KornError::NonPositiveInput("all h values coincide".into()));
    }
    let exponent = sxy / sxx;
    let log_constant = my - exponent * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - log_constant - exponent * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot <= 1e-30 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(ScalingFit {
        exponent,
        log_constant,
        r2,
    })
}

/// One sweep point: `ratio = lhs / rhs` is the quantity whose h-scaling is fitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Solver telemetry and secondary quantities.
    pub extra: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub check: String,
    pub rows: Vec<SweepRow>,
    pub fit: ScalingFit,
    pub window: [f64; 2],
    pub verdict: Verdict,
    /// Sweep-level quantities (secondary fits, pointwise bounds).
    pub summary: BTreeMap<String, f64>,
    pub params: serde_json::Value,
}

impl SweepReport {
    /// Fits `ratio` against `h` and judges the exponent against `window`.
    pub fn from_rows(
        check: &str,
        rows: Vec<SweepRow>,
        window: [f64; 2],
        params: serde_json::Value,
    ) -> Result<Self> {
        let fit = fit_scaling(&rows.iter().map(|r| (r.h, r.ratio)).collect::<Vec<_>>())?;
        let verdict = if fit.exponent >= window[0] && fit.exponent <= window[1] {
            Verdict::Holds
        } else {
            Verdict::Fails
        };
        Ok(SweepReport {
            check: check.to_string(),
            rows,
            fit,
            window,
            verdict,
            summary: BTreeMap::new(),
            params,
        })
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    /// CSV with header `h,lhs,rhs,ratio`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "h,lhs,rhs,ratio")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                r.h, r.lhs, r.rhs, r.ratio
            )?;
        }
        Ok(())
    }
}
