//! Cross-replication aggregation with an associative merge, so batches can
//! be reduced in parallel and re-combined deterministically.

use serde::Serialize;

use crate::estimators::EstimateReport;
use crate::numeric::{ks_distance_vs_std_normal, Welford};

/// Studentized-statistic histogram layout: 50 bins on [-5, 5] plus an
/// underflow and an overflow bin, fixed a priori so batch merging is exact.
pub const HIST_LO: f64 = -5.0;
pub const HIST_HI: f64 = 5.0;
pub const HIST_INNER_BINS: usize = 50;
pub const HIST_BINS: usize = HIST_INNER_BINS + 2;

/// Bin edges including the two unbounded overflow edges (length HIST_BINS+1).
pub fn histogram_bin_edges() -> Vec<f64> {
    let mut edges = Vec::with_capacity(HIST_BINS + 1);
    edges.push(f64::NEG_INFINITY);
    let width = (HIST_HI - HIST_LO) / HIST_INNER_BINS as f64;
    for i in 0..=HIST_INNER_BINS {
        edges.push(HIST_LO + width * i as f64);
    }
    edges.push(f64::INFINITY);
    edges
}

fn hist_index(x: f64) -> usize {
    if x < HIST_LO {
        0
    } else {
        let width = (HIST_HI - HIST_LO) / HIST_INNER_BINS as f64;
        let idx = ((x - HIST_LO) / width).floor() as usize;
        (idx + 1).min(HIST_BINS - 1)
    }
}

/// Order-preserving accumulator over per-replication reports.
#[derive(Debug, Clone)]
pub struct AggAccumulator {
    total: u64,
    defined: u64,
    point: Welford,
    sq_err: Welford,
    width: Welford,
    covered: u64,
    covered_denominator: u64,
    studentized: Vec<f64>,
    hist: Vec<u64>,
    infinite_sampling: Welford,
    lyapunov: Welford,
    variance_ratio: Welford,
}

impl Default for AggAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl AggAccumulator {
    pub fn new() -> Self {
        Self {
            total: 0,
            defined: 0,
            point: Welford::new(),
            sq_err: Welford::new(),
            width: Welford::new(),
            covered: 0,
            covered_denominator: 0,
            studentized: Vec::new(),
            hist: vec![0; HIST_BINS],
            infinite_sampling: Welford::new(),
            lyapunov: Welford::new(),
            variance_ratio: Welford::new(),
        }
    }

    /// Add one replication's report; `None` records a missing estimate, which
    /// counts toward the total but not toward any coverage denominator.
    pub fn push(&mut self, report: Option<&EstimateReport>, truth: Option<f64>) {
        self.total += 1;
        let Some(r) = report else { return };
        self.defined += 1;
        self.point.push(r.point);
        self.width.push(r.width());
        if let Some(q) = truth {
            let err = r.point - q;
            self.sq_err.push(err * err);
            self.covered_denominator += 1;
            if r.ci_lo <= q && q <= r.ci_hi {
                self.covered += 1;
            }
            if let Some(s) = r.studentized {
                self.studentized.push(s);
                self.hist[hist_index(s)] += 1;
            }
        }
        if let Some(d) = r.diagnostics {
            for (value, acc) in [
                (d.infinite_sampling_ratio, &mut self.infinite_sampling),
                (d.lyapunov_ratio, &mut self.lyapunov),
                (d.variance_ratio, &mut self.variance_ratio),
            ] {
                if let Some(v) = value {
                    if v.is_finite() {
                        acc.push(v);
                    }
                }
            }
        }
    }

    /// Append another accumulator (built over a later batch of replications).
    pub fn merge(&mut self, other: &AggAccumulator) {
        self.total += other.total;
        self.defined += other.defined;
        self.point.merge(&other.point);
        self.sq_err.merge(&other.sq_err);
        self.width.merge(&other.width);
        self.covered += other.covered;
        self.covered_denominator += other.covered_denominator;
        self.studentized.extend_from_slice(&other.studentized);
        for (a, b) in self.hist.iter_mut().zip(&other.hist) {
            *a += b;
        }
        self.infinite_sampling.merge(&other.infinite_sampling);
        self.lyapunov.merge(&other.lyapunov);
        self.variance_ratio.merge(&other.variance_ratio);
    }

    pub fn finalize(&self, truth: Option<f64>) -> AggregateStats {
        let defined = self.defined;
        let mean_point = if defined > 0 { self.point.mean() } else { f64::NAN };
        let (bias, bias_se) = match truth {
            Some(q) if defined > 0 => (Some(mean_point - q), Some(self.point.mean_se())),
            _ => (None, None),
        };
        let (rmse, rmse_se) = if self.sq_err.count() > 0 {
            let msq = self.sq_err.mean();
            let rmse = msq.sqrt();
            let se = if rmse > 0.0 { self.sq_err.mean_se() / (2.0 * rmse) } else { 0.0 };
            (Some(rmse), Some(se))
        } else {
            (None, None)
        };
        let (coverage, coverage_se) = if self.covered_denominator > 0 {
            let n = self.covered_denominator as f64;
            let p = self.covered as f64 / n;
            (Some(p), Some((p * (1.0 - p) / n).sqrt()))
        } else {
            (None, None)
        };
        let ks = if self.studentized.is_empty() {
            None
        } else {
            Some(ks_distance_vs_std_normal(&self.studentized))
        };
        AggregateStats {
            total_count: self.total,
            defined_count: defined,
            mean_point,
            mean_point_se: if defined > 1 { self.point.mean_se() } else { f64::NAN },
            bias,
            bias_se,
            rmse,
            rmse_se,
            coverage,
            coverage_se,
            mean_ci_width: if defined > 0 { self.width.mean() } else { f64::NAN },
            mean_ci_width_se: if defined > 1 { self.width.mean_se() } else { f64::NAN },
            ks_studentized: ks,
            studentized_count: self.studentized.len() as u64,
            histogram_counts: self.hist.clone(),
            mean_infinite_sampling_ratio: welford_mean(&self.infinite_sampling),
            mean_lyapunov_ratio: welford_mean(&self.lyapunov),
            mean_variance_ratio: welford_mean(&self.variance_ratio),
        }
    }

    /// The studentized statistics accumulated so far, in replication order.
    pub fn studentized_values(&self) -> &[f64] {
        &self.studentized
    }
}

fn welford_mean(w: &Welford) -> Option<f64> {
    if w.count() > 0 {
        Some(w.mean())
    } else {
        None
    }
}

/// Cross-replication summaries for one (estimator, target) cell. Every
/// aggregate carries its own Monte Carlo standard error.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateStats {
    pub total_count: u64,
    pub defined_count: u64,
    pub mean_point: f64,
    pub mean_point_se: f64,
    pub bias: Option<f64>,
    pub bias_se: Option<f64>,
    pub rmse: Option<f64>,
    pub rmse_se: Option<f64>,
    pub coverage: Option<f64>,
    pub coverage_se: Option<f64>,
    pub mean_ci_width: f64,
    pub mean_ci_width_se: f64,
    pub ks_studentized: Option<f64>,
    pub studentized_count: u64,
    /// Counts over [`histogram_bin_edges`]; sums to `studentized_count`.
    pub histogram_counts: Vec<u64>,
    pub mean_infinite_sampling_ratio: Option<f64>,
    pub mean_lyapunov_ratio: Option<f64>,
    pub mean_variance_ratio: Option<f64>,
}

/// Aggregate a cell of per-replication reports against an optional truth.
pub fn aggregate(reports: &[Option<EstimateReport>], truth: Option<f64>) -> AggregateStats {
    let mut acc = AggAccumulator::new();
    for r in reports {
        acc.push(r.as_ref(), truth);
    }
    acc.finalize(truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::Target;

    fn report(point: f64, variance: f64, truth: f64) -> EstimateReport {
        let stderr = variance.sqrt();
        let studentized = if variance > 0.0 { Some((point - truth) / stderr) } else { None };
        EstimateReport {
            estimator: "test".into(),
            target: Target::Arm(0),
            point,
            variance: Some(variance),
            stderr: Some(stderr),
            ci_lo: point - 1.96 * stderr,
            ci_hi: point + 1.96 * stderr,
            level: 0.95,
            truth: Some(truth),
            studentized,
            diagnostics: None,
        }
    }

    #[test]
    fn perfect_estimates_have_zero_bias_and_full_coverage() {
        let reports: Vec<Option<EstimateReport>> =
            (0..10).map(|_| Some(report(1.0, 0.0, 1.0))).collect();
        let stats = aggregate(&reports, Some(1.0));
        assert_eq!(stats.bias, Some(0.0));
        assert_eq!(stats.rmse, Some(0.0));
        assert_eq!(stats.coverage, Some(1.0));
        assert_eq!(stats.defined_count, 10);
        // zero-variance reports have no studentized statistic
        assert_eq!(stats.studentized_count, 0);
    }

    #[test]
    fn missing_reports_are_excluded_from_coverage_denominator() {
        let mut reports: Vec<Option<EstimateReport>> =
            (0..8).map(|_| Some(report(0.0, 1.0, 0.0))).collect();
        reports.push(None);
        reports.push(None);
        let stats = aggregate(&reports, Some(0.0));
        assert_eq!(stats.total_count, 10);
        assert_eq!(stats.defined_count, 8);
        assert_eq!(stats.coverage, Some(1.0)); // denominator is 8, not 10
    }

    #[test]
    fn histogram_counts_sum_to_studentized_count() {
        let reports: Vec<Option<EstimateReport>> = (0..100)
            .map(|i| Some(report(i as f64 * 0.2 - 10.0, 1.0, 0.0)))
            .collect();
        let stats = aggregate(&reports, Some(0.0));
        let total: u64 = stats.histogram_counts.iter().sum();
        assert_eq!(total, stats.studentized_count);
        assert_eq!(stats.histogram_counts.len(), HIST_BINS);
        // extreme studentized values landed in the overflow bins
        assert!(stats.histogram_counts[0] > 0);
        assert!(stats.histogram_counts[HIST_BINS - 1] > 0);
    }

    #[test]
    fn rmse_dominates_bias() {
        let reports: Vec<Option<EstimateReport>> =
            (0..50).map(|i| Some(report(0.5 + 0.01 * i as f64, 1.0, 0.0))).collect();
        let stats = aggregate(&reports, Some(0.0));
        let bias = stats.bias.unwrap();
        assert!(stats.rmse.unwrap().powi(2) >= bias * bias - 1e-12);
    }

    #[test]
    fn merge_equals_single_pass() {
        let reports: Vec<Option<EstimateReport>> = (0..101)
            .map(|i| {
                if i % 17 == 0 {
                    None
                } else {
                    Some(report((i as f64 * 0.37).sin(), 0.5 + (i % 7) as f64 * 0.1, 0.1))
                }
            })
            .collect();
        let whole = aggregate(&reports, Some(0.1));
        let mut left = AggAccumulator::new();
        let mut right = AggAccumulator::new();
        for r in &reports[..40] {
            left.push(r.as_ref(), Some(0.1));
        }
        for r in &reports[40..] {
            right.push(r.as_ref(), Some(0.1));
        }
        left.merge(&right);
        let merged = left.finalize(Some(0.1));
        assert_eq!(whole.defined_count, merged.defined_count);
        assert!((whole.bias.unwrap() - merged.bias.unwrap()).abs() < 1e-12);
        let rel = (whole.rmse.unwrap() - merged.rmse.unwrap()).abs() / whole.rmse.unwrap();
        assert!(rel < 1e-9);
        assert_eq!(whole.histogram_counts, merged.histogram_counts);
        assert_eq!(whole.ks_studentized, merged.ks_studentized);
    }

    #[test]
    fn bin_edges_are_consistent() {
        let edges = histogram_bin_edges();
        assert_eq!(edges.len(), HIST_BINS + 1);
        assert_eq!(edges[0], f64::NEG_INFINITY);
        assert_eq!(edges[edges.len() - 1], f64::INFINITY);
        assert!((edges[1] - HIST_LO).abs() < 1e-15);
        assert!((edges[edges.len() - 2] - HIST_HI).abs() < 1e-15);
    }
}
