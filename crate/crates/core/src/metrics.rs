//! Adaptation time, trajectory error and bootstrap bands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sim::RunTrace;
use crate::trajectory::Trajectory;

/// Policy concentration that counts as consensus.
pub const CONSENSUS_THRESHOLD: f64 = 0.9;

pub const DEFAULT_RESAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptationSummary {
    /// Mean time to adapt, in epochs.
    pub mta: f64,
    pub success_rate: f64,
    /// First offset from the switch at which the target arm reached the
    /// threshold, or the horizon for runs that never did.
    pub per_run_k: Vec<usize>,
}

/// Mean time to adapt after a switch at `delta`.
///
/// Offsets are counted from the switch row itself (`k = 0` is the policy
/// at the moment of the switch). A run that never touches `threshold`
/// contributes `horizon`.
pub fn mta(
    traces: &[RunTrace],
    delta: usize,
    target_arm: usize,
    threshold: f64,
    horizon: usize,
) -> Result<AdaptationSummary> {
    if traces.is_empty() {
        return Err(Error::domain("mean time to adapt over zero runs"));
    }
    if delta >= horizon {
        return Err(Error::domain(format!(
            "switch epoch {delta} must precede the horizon {horizon}"
        )));
    }
    let mut per_run_k = Vec::with_capacity(traces.len());
    for trace in traces {
        if target_arm >= trace.num_arms() {
            return Err(Error::domain(format!("target arm {target_arm} out of range")));
        }
        let rows = trace.policy_history.rows();
        let k = (delta..rows)
            .find(|&row| trace.probability(row, target_arm) >= threshold)
            .map_or(horizon, |row| row - delta);
        per_run_k.push(k);
    }
    Ok(summarise(per_run_k, horizon))
}

fn summarise(per_run_k: Vec<usize>, horizon: usize) -> AdaptationSummary {
    let n = per_run_k.len() as f64;
    let mta = per_run_k.iter().map(|&k| k as f64).sum::<f64>() / n;
    let success_rate = per_run_k.iter().filter(|&&k| k < horizon).count() as f64 / n;
    AdaptationSummary {
        mta,
        success_rate,
        per_run_k,
    }
}

fn check_shapes(predicted: &Trajectory, target: &Trajectory) -> Result<()> {
    if predicted.shape() != target.shape() {
        return Err(Error::Shape {
            expected: format!("{:?}", target.shape()),
            actual: format!("{:?}", predicted.shape()),
        });
    }
    Ok(())
}

/// Fitting error: the plain sum of squared differences over every point.
///
/// This is the unnormalised form used as the DE fitness; see
/// [`mse_normalized`] for the per-point mean.
pub fn mse(predicted: &Trajectory, target: &Trajectory) -> Result<f64> {
    check_shapes(predicted, target)?;
    Ok(predicted
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// [`mse`] divided by the number of compared points.
pub fn mse_normalized(predicted: &Trajectory, target: &Trajectory) -> Result<f64> {
    let n = target.as_slice().len();
    if n == 0 {
        return Err(Error::domain("no points to compare"));
    }
    Ok(mse(predicted, target)? / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfidenceBand {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub confidence: f64,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap of the mean time series over runs.
///
/// `samples[r][t]` is run `r` at time `t`. Each resample draws runs with
/// replacement from its own stream derived from `rng`, so the result does not
/// depend on how resamples are scheduled. Bounds are clamped to contain the
/// empirical mean.
pub fn bootstrap_ci(
    samples: &[Vec<f64>],
    confidence: f64,
    resamples: usize,
    rng: &RngStream,
) -> Result<ConfidenceBand> {
    if samples.len() < 2 {
        return Err(Error::domain("bootstrap needs at least two runs"));
    }
    if resamples < 100 {
        return Err(Error::domain("bootstrap needs at least 100 resamples"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::domain(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let len = samples[0].len();
    if samples.iter().any(|s| s.len() != len) {
        return Err(Error::Shape {
            expected: format!("{len} time points per run"),
            actual: "ragged runs".into(),
        });
    }
    let runs = samples.len();
    let mean: Vec<f64> = (0..len)
        .map(|t| samples.iter().map(|s| s[t]).sum::<f64>() / runs as f64)
        .collect();

    let means: Vec<Vec<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng.child(b);
            let mut acc = vec![0.0; len];
            for _ in 0..runs {
                let pick = &samples[stream.index(runs)];
                for (a, x) in acc.iter_mut().zip(pick) {
                    *a += x;
                }
            }
            acc.iter_mut().for_each(|a| *a /= runs as f64);
            acc
        })
        .collect();

    let alpha = (1.0 - confidence) / 2.0;
    let mut lower = Vec::with_capacity(len);
    let mut upper = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(resamples);
    for t in 0..len {
        column.clear();
        column.extend(means.iter().map(|m| m[t]));
        column.sort_by(f64::total_cmp);
        lower.push(percentile(&column, alpha).min(mean[t]));
        upper.push(percentile(&column, 1.0 - alpha).max(mean[t]));
    }
    Ok(ConfidenceBand {
        mean,
        lower,
        upper,
        confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_hitting(target_row: Option<usize>, rows: usize) -> RunTrace {
        let mut t = Trajectory::new(3);
        for r in 0..rows {
            let p = if target_row.is_some_and(|h| r >= h) {
                [0.02, 0.03, 0.95]
            } else {
                [0.05, 0.9, 0.05]
            };
            t.push_row(&p).unwrap();
        }
        RunTrace {
            policy_history: t,
            run_seed: 0,
        }
    }

    #[test]
    fn all_adapt_at_five() {
        let traces: Vec<_> = (0..4).map(|_| trace_hitting(Some(105), 501)).collect();
        let s = mta(&traces, 100, 2, 0.9, 500).unwrap();
        assert_eq!(s.mta, 5.0);
        assert_eq!(s.success_rate, 1.0);
    }

    #[test]
    fn none_adapt() {
        let traces: Vec<_> = (0..3).map(|_| trace_hitting(None, 501)).collect();
        let s = mta(&traces, 100, 2, 0.9, 500).unwrap();
        assert_eq!(s.mta, 500.0);
        assert_eq!(s.success_rate, 0.0);
        assert_eq!(s.per_run_k, vec![500; 3]);
    }

    #[test]
    fn half_adapt() {
        let mut traces: Vec<_> = (0..5).map(|_| trace_hitting(Some(110), 501)).collect();
        traces.extend((0..5).map(|_| trace_hitting(None, 501)));
        let s = mta(&traces, 100, 2, 0.9, 500).unwrap();
        assert_eq!(s.mta, 255.0);
        assert_eq!(s.success_rate, 0.5);
    }

    #[test]
    fn switch_row_counts_as_zero() {
        let s = mta(&[trace_hitting(Some(0), 11)], 4, 2, 0.9, 10).unwrap();
        assert_eq!(s.per_run_k, vec![0]);
    }

    #[test]
    fn mta_errors() {
        assert!(mta(&[], 1, 0, 0.9, 10).is_err());
        assert!(mta(&[trace_hitting(None, 11)], 10, 0, 0.9, 10).is_err());
        assert!(mta(&[trace_hitting(None, 11)], 1, 3, 0.9, 10).is_err());
    }

    #[test]
    fn mse_examples() {
        let a = Trajectory::from_rows(&vec![vec![0.1, 0.2]; 5]).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let b = Trajectory::from_rows(&vec![vec![0.2, 0.3]; 5]).unwrap();
        assert!((mse(&b, &a).unwrap() - 0.1).abs() < 1e-15);
        assert!((mse_normalized(&b, &a).unwrap() - 0.01).abs() < 1e-15);
        let c = Trajectory::from_rows(&vec![vec![0.2, 0.3]; 4]).unwrap();
        assert!(matches!(mse(&c, &a), Err(Error::Shape { .. })));
    }

    #[test]
    fn identical_runs_collapse_band() {
        let s = vec![vec![0.1, 0.5, 0.9]; 6];
        let band = bootstrap_ci(&s, 0.95, 200, &RngStream::from_seed(1)).unwrap();
        assert_eq!(band.lower, band.mean);
        assert_eq!(band.upper, band.mean);
    }

    #[test]
    fn band_narrows_with_more_runs() {
        let width = |runs: usize| {
            let mut g = RngStream::from_seed(5);
            let s: Vec<Vec<f64>> = (0..runs).map(|_| vec![g.normal(0.0, 1.0)]).collect();
            let b = bootstrap_ci(&s, 0.95, 1000, &RngStream::from_seed(6)).unwrap();
            b.upper[0] - b.lower[0]
        };
        assert!(width(200) < width(2));
    }

    #[test]
    fn percentile_definition() {
        let sorted: Vec<f64> = (0..=1000).map(|i| i as f64).collect();
        assert_eq!(percentile(&sorted, 0.025), 25.0);
        assert_eq!(percentile(&sorted, 0.975), 975.0);
    }

    #[test]
    fn bootstrap_errors() {
        let r = RngStream::from_seed(0);
        assert!(bootstrap_ci(&[vec![1.0]], 0.95, 1000, &r).is_err());
        assert!(bootstrap_ci(&[vec![1.0], vec![2.0]], 0.95, 10, &r).is_err());
        assert!(bootstrap_ci(&[vec![1.0], vec![2.0, 3.0]], 0.95, 100, &r).is_err());
    }
}
