use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{
    martingale_sup_norm_lower, maximal_norm_lower, op_norm_power, sq_norm, EstimateKind,
    PowerConfig,
};
use crate::operators::OperatorKind;
use crate::weights::{char_a2, char_rh1, gen_power_weight};

const MAXIMAL_BUDGET: usize = 16;
const MARTINGALE_RESTARTS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepTarget {
    Square,
    Paraproduct,
    Martingale,
    Maximal,
}

impl SweepTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepTarget::Square => "square",
            SweepTarget::Paraproduct => "paraproduct",
            SweepTarget::Martingale => "martingale",
            SweepTarget::Maximal => "maximal",
        }
    }
}

impl fmt::Display for SweepTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(SweepTarget::Square),
            "paraproduct" => Ok(SweepTarget::Paraproduct),
            "martingale" => Ok(SweepTarget::Martingale),
            "maximal" => Ok(SweepTarget::Maximal),
            _ => Err(Error::InvalidParameter(format!(
                "unknown sweep target `{s}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    /// `[w_α]_{A₂}` computed on the tree.
    pub a2: f64,
    /// `1 / (1 - α²)`, the continuum value.
    pub a2_closed: f64,
    pub rh1_inv: f64,
    pub norm: f64,
    pub kind: EstimateKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub target: SweepTarget,
    pub depth: u32,
    pub points: Vec<SweepPoint>,
    /// Least-squares fit `ln norm ≈ slope · ln a2 + intercept`.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, rms)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::DegenerateFit(n));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let spread = x.iter().fold(0.0f64, |m, a| m.max((a - mx).abs()));
    if spread < 1e-9 {
        return Err(Error::DegenerateFit(n));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    Ok((slope, intercept, (ss / n as f64).sqrt()))
}

/// Norms of one operator family over one-weight power weights `u = v = w_α`.
/// The square function is estimated by converged power iteration; the other
/// targets use lower bounds or, for the paraproduct with `b = log w_α`,
/// power iteration.
pub fn sweep_power_scaling(
    target: SweepTarget,
    alphas: &[f64],
    depth: u32,
    cfg: &PowerConfig,
) -> Result<SweepResult> {
    if alphas.len() < 3 {
        return Err(Error::DegenerateFit(alphas.len()));
    }
    let mut points = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let w = gen_power_weight(alpha, depth)?;
        let est = match target {
            SweepTarget::Square => sq_norm(&w, &w, cfg)?,
            SweepTarget::Paraproduct => {
                let b = w.leaf_fn().map(f64::ln);
                op_norm_power(&OperatorKind::Paraproduct(b), &w, &w, cfg)?
            }
            SweepTarget::Martingale => {
                martingale_sup_norm_lower(&w, &w, MARTINGALE_RESTARTS, cfg.seed)?.1
            }
            SweepTarget::Maximal => maximal_norm_lower(&w, &w, MAXIMAL_BUDGET, cfg.seed)?,
        };
        points.push(SweepPoint {
            alpha,
            a2: char_a2(&w).value,
            a2_closed: 1.0 / (1.0 - alpha * alpha),
            rh1_inv: char_rh1(&w.reciprocal()).value,
            norm: est.value,
            kind: est.kind,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| p.a2.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.norm.ln()).collect();
    let (slope, intercept, residual) = fit_line(&x, &y)?;
    Ok(SweepResult {
        target,
        depth,
        points,
        slope,
        intercept,
        residual,
    })
}

pub fn write_sweep_csv<W: Write>(res: &SweepResult, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "target",
        "depth",
        "alpha",
        "a2",
        "a2_closed",
        "rh1_inv",
        "norm",
        "kind",
        "slope",
        "intercept",
        "residual",
    ])?;
    for p in &res.points {
        wr.write_record([
            res.target.as_str().to_string(),
            res.depth.to_string(),
            p.alpha.to_string(),
            p.a2.to_string(),
            p.a2_closed.to_string(),
            p.rh1_inv.to_string(),
            p.norm.to_string(),
            p.kind.as_str().to_string(),
            res.slope.to_string(),
            res.intercept.to_string(),
            res.residual.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
