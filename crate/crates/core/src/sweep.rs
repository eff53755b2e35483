//! Parameter sweeps of the success probability.
//!
//! Every grid point runs the ideal pipeline and evaluates the closed form;
//! rows come back in grid order whatever the execution strategy.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::ecp::{run_ecp, success_probability_closed_form, AngleParams};
use crate::error::{HybridError, Result};
use crate::exec::Execution;
use crate::optics::FidelityMode;

pub const CSV_HEADER: &str = "theta1,theta2,theta3,alpha,P_closed,P_sim";
pub const DEFAULT_POINTS: usize = 181;
pub const DEFAULT_ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Theta1,
    Theta2,
    Theta3,
    Alpha,
}

impl std::str::FromStr for SweepParam {
    type Err = HybridError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta1" => Ok(Self::Theta1),
            "theta2" => Ok(Self::Theta2),
            "theta3" => Ok(Self::Theta3),
            "alpha" => Ok(Self::Alpha),
            _ => Err(HybridError::InvalidParams(format!("unknown sweep axis {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Axis {
    /// `n` evenly spaced points on [lo, hi], endpoints included.
    pub fn linspace(param: SweepParam, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect(),
        };
        Self { param, values }
    }

    /// The default angle axis: 181 points on [0, π].
    pub fn angle(param: SweepParam) -> Self {
        Self::linspace(param, 0.0, PI, DEFAULT_POINTS)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// One or two axes; the second varies fastest.
    pub axes: Vec<Axis>,
    /// Values for the angles not on an axis.
    pub base: AngleParams,
    /// α values, used when α is not an axis; the outermost loop.
    pub alphas: Vec<f64>,
}

impl SweepSpec {
    pub fn one_d(param: SweepParam) -> Self {
        Self { axes: vec![Axis::angle(param)], base: AngleParams::default(), alphas: DEFAULT_ALPHAS.to_vec() }
    }

    pub fn two_d(p: SweepParam, q: SweepParam) -> Self {
        Self { axes: vec![Axis::angle(p), Axis::angle(q)], base: AngleParams::default(), alphas: DEFAULT_ALPHAS.to_vec() }
    }

    pub fn with_alphas(mut self, alphas: &[f64]) -> Self {
        self.alphas = alphas.to_vec();
        self
    }

    fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(HybridError::InvalidParams(format!("expected one or two axes, got {}", self.axes.len())));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return Err(HybridError::InvalidParams("axes must differ".into()));
        }
        if self.axes.iter().any(|a| a.values.is_empty()) {
            return Err(HybridError::InvalidParams("empty axis".into()));
        }
        let alpha_axis = self.axes.iter().any(|a| a.param == SweepParam::Alpha);
        if !alpha_axis && self.alphas.is_empty() {
            return Err(HybridError::InvalidParams("no alpha values".into()));
        }
        Ok(())
    }

    /// Grid points as (angles, α) in output order.
    pub fn points(&self) -> Result<Vec<(AngleParams, f64)>> {
        self.validate()?;
        let alpha_axis = self.axes.iter().any(|a| a.param == SweepParam::Alpha);
        let outer: Vec<Option<f64>> = if alpha_axis { vec![None] } else { self.alphas.iter().map(|&a| Some(a)).collect() };
        let inner: Vec<f64> = self.axes.get(1).map(|a| a.values.clone()).unwrap_or_else(|| vec![f64::NAN]);
        let mut out = Vec::with_capacity(outer.len() * self.axes[0].values.len() * inner.len());
        for a in &outer {
            for &u in &self.axes[0].values {
                for &v in &inner {
                    let mut angles = self.base;
                    let mut alpha = a.unwrap_or(f64::NAN);
                    let mut set = |param: SweepParam, x: f64| match param {
                        SweepParam::Theta1 => angles.theta1 = x,
                        SweepParam::Theta2 => angles.theta2 = x,
                        SweepParam::Theta3 => angles.theta3 = x,
                        SweepParam::Alpha => alpha = x,
                    };
                    set(self.axes[0].param, u);
                    if let Some(ax) = self.axes.get(1) {
                        set(ax.param, v);
                    }
                    out.push((angles, alpha));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub alpha: f64,
    #[serde(rename = "P_closed")]
    pub p_closed: f64,
    #[serde(rename = "P_sim")]
    pub p_sim: f64,
}

/// Closed form and ideal pipeline at one point.
pub fn evaluate(angles: &AngleParams, alpha: f64) -> Result<SweepRow> {
    let p = angles.to_params(alpha)?;
    let r = run_ecp(&p, FidelityMode::Ideal, None)?;
    Ok(SweepRow {
        theta1: angles.theta1,
        theta2: angles.theta2,
        theta3: angles.theta3,
        alpha,
        p_closed: success_probability_closed_form(&p),
        p_sim: r.success_probability_ideal,
    })
}

pub fn sweep_with(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepRow>> {
    let points = spec.points()?;
    exec.map(&points, |(a, alpha)| evaluate(a, *alpha)).into_iter().collect()
}

pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    sweep_with(spec, Execution::default())
}

/// Writes rows with 17 significant digits.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.theta1, r.theta2, r.theta3, r.alpha, r.p_closed, r.p_sim
        )?;
    }
    Ok(())
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii")
}

/// P at the default reference angles for each α, for side-by-side reading.
pub fn reference_report(alphas: &[f64]) -> Result<Vec<SweepRow>> {
    alphas.iter().map(|&a| evaluate(&AngleParams::default(), a)).collect()
}

/// Indices of interior strict local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1]).collect()
}
