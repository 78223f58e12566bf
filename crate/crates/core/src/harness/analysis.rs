//! Averaging of visibility curves and e_f distributions across runs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::RunRecord;
use crate::error::{Error, Result};
use crate::stepper::Variant;

/// How the 95% confidence band is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// `mean ± 1.96 · s / √k`.
    #[default]
    Normal,
    /// Student-t quantile with `k − 1` degrees of freedom in place of 1.96.
    StudentT,
}

impl CiMethod {
    fn quantile(self, k: usize) -> f64 {
        match self {
            CiMethod::Normal => 1.96,
            CiMethod::StudentT => StudentsT::new(0.0, 1.0, (k - 1) as f64)
                .expect("k ≥ 2")
                .inverse_cdf(0.975),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanCurve {
    pub time: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Number of averaged runs.
    pub runs: usize,
    /// Set when fewer than two runs were averaged and the band is empty.
    pub degenerate: bool,
}

/// Visibility of `record` at time `t`, linear between steps and constant
/// beyond the first and last.
pub fn interpolate(record: &RunRecord, t: f64) -> f64 {
    let rows = &record.rows;
    let Some(first) = rows.first() else {
        return 0.0;
    };
    if t <= first.sim_time {
        return first.visibility;
    }
    let k = rows.partition_point(|r| r.sim_time <= t);
    if k == rows.len() {
        return rows[k - 1].visibility;
    }
    let (a, b) = (&rows[k - 1], &rows[k]);
    let u = (t - a.sim_time) / (b.sim_time - a.sim_time);
    a.visibility + u * (b.visibility - a.visibility)
}

/// Grid `0, step, 2·step, …` up to the last recorded time of any run.
pub fn time_grid(records: &[RunRecord], grid_step: f64) -> Vec<f64> {
    let end = records
        .iter()
        .filter_map(|r| r.rows.last())
        .map(|r| r.sim_time)
        .fold(0.0, f64::max);
    let count = (end / grid_step + 1e-9).floor() as usize;
    (0..=count).map(|k| k as f64 * grid_step).collect()
}

pub fn interpolate_and_average(records: &[RunRecord], grid_step: f64) -> Result<MeanCurve> {
    interpolate_and_average_with(records, grid_step, CiMethod::Normal)
}

pub fn interpolate_and_average_with(
    records: &[RunRecord],
    grid_step: f64,
    ci: CiMethod,
) -> Result<MeanCurve> {
    if records.is_empty() {
        return Err(Error::config("no records to average"));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::config("grid_step must be positive"));
    }
    let time = time_grid(records, grid_step);
    let k = records.len();
    let degenerate = k < 2;
    let z = if degenerate { 0.0 } else { ci.quantile(k) };
    let (mut mean, mut lower, mut upper) = (vec![], vec![], vec![]);
    for &t in &time {
        let values: Vec<f64> = records.iter().map(|r| interpolate(r, t)).collect();
        let m = values.iter().sum::<f64>() / k as f64;
        let half = if degenerate {
            0.0
        } else {
            let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1) as f64;
            z * var.sqrt() / (k as f64).sqrt()
        };
        mean.push(m);
        lower.push(m - half);
        upper.push(m + half);
    }
    Ok(MeanCurve {
        time,
        mean,
        lower,
        upper,
        runs: k,
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfHistogram {
    pub counts: Vec<u64>,
}

impl EfHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let b = self.bins() as f64;
        (bin as f64 / b, (bin + 1) as f64 / b)
    }
}

/// Counts of e_f over `bins` uniform bins of `[0, 1]`, leader-following steps
/// only.
pub fn ef_histogram(records: &[RunRecord], bins: usize) -> EfHistogram {
    let bins = bins.max(1);
    let mut counts = vec![0; bins];
    for e in records.iter().flat_map(|r| r.pso_e_f()) {
        let b = ((e.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    EfHistogram { counts }
}

/// Median of the e_f values of leader-following steps.
pub fn median_e_f(record: &RunRecord) -> Option<f64> {
    let mut v: Vec<f64> = record.pso_e_f().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn mean_curve_csv(curve: &MeanCurve) -> String {
    let mut out = String::from("time_s,mean,lower,upper\n");
    for i in 0..curve.time.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            curve.time[i], curve.mean[i], curve.lower[i], curve.upper[i]
        );
    }
    out
}

pub fn histogram_csv(hist: &EfHistogram) -> String {
    let mut out = String::from("bin_lower,bin_upper,count\n");
    for (b, c) in hist.counts.iter().enumerate() {
        let (lo, hi) = hist.edges(b);
        let _ = writeln!(out, "{lo},{hi},{c}");
    }
    out
}

/// One column group per variant on a shared time grid, in the given order.
pub fn comparison_csv(curves: &[(Variant, MeanCurve)]) -> String {
    let mut out = String::from("time_s");
    for (v, _) in curves {
        let _ = write!(out, ",{v}_mean,{v}_lower,{v}_upper");
    }
    out.push('\n');
    let rows = curves.iter().map(|(_, c)| c.time.len()).max().unwrap_or(0);
    for i in 0..rows {
        let t = curves
            .iter()
            .find_map(|(_, c)| c.time.get(i))
            .copied()
            .unwrap_or_default();
        let _ = write!(out, "{t}");
        for (_, c) in curves {
            // Shorter curves hold their last value.
            let j = i.min(c.time.len().saturating_sub(1));
            match c.mean.get(j) {
                Some(m) => {
                    let _ = write!(out, ",{m},{},{}", c.lower[j], c.upper[j]);
                }
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}
