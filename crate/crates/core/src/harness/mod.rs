//! Replication engine: configuration, deterministic parallel execution,
//! estimator dispatch, aggregation and file outputs.
//!
//! Replications are embarrassingly parallel. Work is split into fixed-size
//! batches; each batch runs sequentially and batch results are merged in
//! batch order, so outputs are identical whatever the parallelism degree.

pub mod aggregate;
pub mod figures;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

use crate::confseq::{contrast_union_interval, ConfSeqParams, ConfSeqState};
use crate::design::{Design, DesignError, ThompsonFloorConfig};
use crate::env::{make_setting, ArmOutcomeModel, EnvError, Noise, Setting};
use crate::estimators::{
    aw_report, contrast_estimate, sample_mean_report, w_decorrelation_report,
    weighted_average_report, EstimateReport,
};
use crate::history::BanditHistory;
use crate::rng::ReplicationRng;
use crate::scores::{PlugIn, ScoreKind, Target};
use crate::weights::{build_schedule, WeightScheme};

pub use aggregate::{aggregate, histogram_bin_edges, AggAccumulator, AggregateStats};
pub use figures::{replicate_figure, FigScale, FigureId};

/// Replications per parallel work item; fixed so results do not depend on
/// the number of threads.
const BATCH_SIZE: u64 = 128;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

/// Estimator families known to the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    SampleMean,
    UnweightedIpw,
    UnweightedAipw,
    AwConstant,
    AwTwoPoint,
    WeightedAverage,
    WDecorrelation,
    HowardCs,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 8] = [
        EstimatorKind::SampleMean,
        EstimatorKind::UnweightedIpw,
        EstimatorKind::UnweightedAipw,
        EstimatorKind::AwConstant,
        EstimatorKind::AwTwoPoint,
        EstimatorKind::WeightedAverage,
        EstimatorKind::WDecorrelation,
        EstimatorKind::HowardCs,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::SampleMean => "sample_mean",
            EstimatorKind::UnweightedIpw => "unweighted_ipw",
            EstimatorKind::UnweightedAipw => "unweighted_aipw",
            EstimatorKind::AwConstant => "aw_constant",
            EstimatorKind::AwTwoPoint => "aw_two_point",
            EstimatorKind::WeightedAverage => "weighted_average",
            EstimatorKind::WDecorrelation => "w_decorrelation",
            EstimatorKind::HowardCs => "howard_cs",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EstimatorKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown estimator `{s}`")))
    }
}

/// Reward model: a named preset or an explicit model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Preset(Setting),
    Custom(ArmOutcomeModel),
}

impl ModelSpec {
    pub fn build(&self) -> ArmOutcomeModel {
        match self {
            ModelSpec::Preset(s) => make_setting(*s),
            ModelSpec::Custom(m) => m.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ModelSpec::Preset(s) => s.name().to_string(),
            ModelSpec::Custom(_) => "custom".to_string(),
        }
    }
}

/// Full description of one simulation run.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub model: ModelSpec,
    pub design: Design,
    pub horizon: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub level: f64,
    pub estimators: Vec<EstimatorKind>,
    pub arms: Vec<usize>,
    pub contrasts: Vec<(usize, usize)>,
    /// Decay exponent assumed by two-point allocation; default: the design's
    /// floor exponent (0.7 for non-Thompson designs).
    pub two_point_alpha: Option<f64>,
    /// W-decorrelation tuning parameter; default: per-replication
    /// `T_w / (T ln T)`.
    pub wd_lambda: Option<f64>,
    /// Confidence-sequence target pull count; default
    /// `floor((1/K) sum_t t^-exponent)`.
    pub cs_t_opt: Option<u64>,
    /// Confidence-sequence scale; default: the known support width.
    pub cs_scale: Option<f64>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    pub parallelism: usize,
    /// Persist the first N replication histories as JSONL logs.
    pub save_logs: u64,
    pub out_dir: Option<PathBuf>,
}

impl SimulationConfig {
    /// A minimal config; callers adjust fields as needed.
    pub fn new(model: ModelSpec, design: Design, horizon: u64, replications: u64) -> Self {
        Self {
            model,
            design,
            horizon,
            replications,
            base_seed: 0,
            level: 0.95,
            estimators: vec![EstimatorKind::SampleMean],
            arms: vec![0],
            contrasts: vec![],
            two_point_alpha: None,
            wd_lambda: None,
            cs_t_opt: None,
            cs_scale: None,
            parallelism: 0,
            save_logs: 0,
            out_dir: None,
        }
    }

    /// Parse the flat key/value TOML config format (see the repo README).
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let raw: RawConfig = toml::from_str(text)?;
        raw.into_config()
    }

    /// Validate and precompute everything shared across replications.
    pub fn resolve(&self) -> Result<ResolvedConfig, HarnessError> {
        let model = self.model.build();
        let k = model.num_arms();
        if self.replications < 1 {
            return Err(HarnessError::Config("replications must be >= 1".into()));
        }
        if self.horizon < 1 {
            return Err(HarnessError::Config("horizon must be >= 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(HarnessError::Config("level must be in (0, 1)".into()));
        }
        if self.estimators.is_empty() {
            return Err(HarnessError::Config("no estimators requested".into()));
        }
        for &w in &self.arms {
            if w >= k {
                return Err(HarnessError::Config(format!("arm {w} out of range for {k} arms")));
            }
        }
        for &(w1, w2) in &self.contrasts {
            if w1 >= k || w2 >= k {
                return Err(HarnessError::Config(format!(
                    "contrast ({w1},{w2}) out of range for {k} arms"
                )));
            }
        }
        // validate design against the run shape
        self.design.start(k, self.horizon)?;

        let floor_exponent = match &self.design {
            Design::ThompsonFloor(cfg) => cfg.floor_exponent,
            _ => 0.7,
        };
        let two_point_alpha = self.two_point_alpha.unwrap_or(floor_exponent);
        if !(0.0..1.0).contains(&two_point_alpha) {
            return Err(HarnessError::Config("two_point_alpha must be in [0, 1)".into()));
        }

        let mut targets: Vec<Target> = Vec::new();
        targets.extend(self.arms.iter().map(|&w| Target::Arm(w)));
        targets.extend(self.contrasts.iter().map(|&(a, b)| Target::Contrast(a, b)));
        if targets.is_empty() {
            return Err(HarnessError::Config("no targets requested".into()));
        }

        let needs_cs = self.estimators.contains(&EstimatorKind::HowardCs);
        let cs = if needs_cs {
            let scale = match self.cs_scale {
                Some(c) if c > 0.0 => c,
                Some(_) => return Err(HarnessError::Config("cs_scale must be positive".into())),
                None => match model.support_bounds(0) {
                    Some((lo, hi)) => hi - lo,
                    None => {
                        return Err(HarnessError::Config(
                            "howard_cs needs a bounded-support model or cs_scale".into(),
                        ))
                    }
                },
            };
            let t_opt = self.cs_t_opt.unwrap_or_else(|| {
                let sum: f64 =
                    (1..=self.horizon).map(|t| (t as f64).powf(-floor_exponent)).sum();
                (sum / k as f64).floor() as u64
            });
            let v_opt = model.noise_variance() * t_opt as f64;
            let supports = (0..k).map(|w| model.support_bounds(w)).collect();
            Some(CsSetup::new(scale, v_opt, self.level, supports))
        } else {
            None
        };

        let mut cells = Vec::new();
        for &estimator in &self.estimators {
            for &target in &targets {
                let truth = match target {
                    Target::Arm(w) => model.mean(w),
                    Target::Contrast(w1, w2) => model.mean(w1) - model.mean(w2),
                };
                cells.push(CellSpec { estimator, target, truth });
            }
        }

        let ctx = EstimationContext {
            level: self.level,
            two_point_alpha,
            wd_lambda: self.wd_lambda,
            truths: Some(model.arm_means().to_vec()),
            cs,
        };
        Ok(ResolvedConfig {
            model,
            design: self.design.clone(),
            horizon: self.horizon,
            replications: self.replications,
            base_seed: self.base_seed,
            ctx,
            cells,
            parallelism: self.parallelism,
            save_logs: self.save_logs,
            out_dir: self.out_dir.clone(),
        })
    }
}

/// Confidence-sequence inputs shared across replications: per-arm boundary
/// parameters at the run level (arm reports) and at the halved miss
/// probability (union-bound contrast reports), plus known per-arm supports.
#[derive(Debug, Clone)]
pub struct CsSetup {
    arm_params: ConfSeqParams,
    contrast_params: ConfSeqParams,
    supports: Vec<Option<(f64, f64)>>,
}

impl CsSetup {
    pub fn new(scale: f64, v_opt: f64, level: f64, supports: Vec<Option<(f64, f64)>>) -> Self {
        Self {
            arm_params: ConfSeqParams::new(scale, v_opt, level),
            contrast_params: ConfSeqParams::new(scale, v_opt, 1.0 - (1.0 - level) / 2.0),
            supports,
        }
    }
}

/// Everything the estimator dispatch needs besides the history itself, so
/// external logs can be evaluated exactly like simulated ones.
#[derive(Debug, Clone)]
pub struct EstimationContext {
    pub level: f64,
    pub two_point_alpha: f64,
    pub wd_lambda: Option<f64>,
    /// Known per-arm truths, when simulating against a known model.
    pub truths: Option<Vec<f64>>,
    pub cs: Option<CsSetup>,
}

impl EstimationContext {
    pub fn new(level: f64) -> Self {
        Self { level, two_point_alpha: 0.7, wd_lambda: None, truths: None, cs: None }
    }

    fn truth_for(&self, target: Target) -> Option<f64> {
        let truths = self.truths.as_ref()?;
        Some(match target {
            Target::Arm(w) => truths[w],
            Target::Contrast(w1, w2) => truths[w1] - truths[w2],
        })
    }
}

/// Evaluate one estimator on a finished history (used by the CLI `estimate`
/// command and the replication engine alike). `None` is a missing estimate.
pub fn estimate_on_history(
    history: &BanditHistory,
    estimator: EstimatorKind,
    target: Target,
    ctx: &EstimationContext,
) -> Option<EstimateReport> {
    let cs_states = if estimator == EstimatorKind::HowardCs {
        Some(build_cs_states(ctx.cs.as_ref().expect("howard_cs needs a CsSetup"), history))
    } else {
        None
    };
    evaluate_cell(ctx, history, cs_states.as_ref(), estimator, target)
}

/// One (estimator, target) cell with its known truth.
#[derive(Debug, Clone, Copy)]
pub struct CellSpec {
    pub estimator: EstimatorKind,
    pub target: Target,
    pub truth: f64,
}

/// A validated configuration with shared precomputed state.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub model: ArmOutcomeModel,
    pub design: Design,
    pub horizon: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub ctx: EstimationContext,
    pub cells: Vec<CellSpec>,
    pub parallelism: usize,
    pub save_logs: u64,
    pub out_dir: Option<PathBuf>,
}

/// Simulate one replication's history under the configured design.
pub fn simulate_history(
    model: &ArmOutcomeModel,
    design: &Design,
    horizon: u64,
    rng: &mut ReplicationRng,
) -> BanditHistory {
    let mut state = design
        .start(model.num_arms(), horizon)
        .expect("design validated at resolve time");
    let mut history = BanditHistory::with_capacity(model.num_arms(), horizon as usize);
    for t in 1..=horizon {
        let probs = state.propensities(t, &mut rng.posterior);
        let arm = probs.sample_arm(&mut rng.design);
        let reward = model.draw_reward(arm, &mut rng.env);
        state.observe(t, arm, reward);
        history.push(probs.probs, arm, reward);
    }
    history
}

/// Everything produced by one replication.
#[derive(Debug, Clone)]
pub struct ReplicationOutput {
    /// One report per resolved cell, in cell order; `None` marks a missing
    /// (undefined) estimate.
    pub reports: Vec<Option<EstimateReport>>,
    /// Pulls per arm.
    pub pulls: Vec<u64>,
}

/// Run one replication end to end: simulate, then evaluate every cell.
/// Deterministic in `(config, replication_index)`.
pub fn run_replication(
    resolved: &ResolvedConfig,
    replication_index: u64,
) -> (ReplicationOutput, BanditHistory) {
    let mut rng = ReplicationRng::new(resolved.base_seed, replication_index);
    let history = simulate_history(&resolved.model, &resolved.design, resolved.horizon, &mut rng);
    let output = evaluate_cells(resolved, &history);
    (output, history)
}

fn evaluate_cells(resolved: &ResolvedConfig, history: &BanditHistory) -> ReplicationOutput {
    let cs_states = resolved.ctx.cs.as_ref().map(|setup| build_cs_states(setup, history));
    let reports = resolved
        .cells
        .iter()
        .map(|cell| {
            evaluate_cell(&resolved.ctx, history, cs_states.as_ref(), cell.estimator, cell.target)
        })
        .collect();
    ReplicationOutput { reports, pulls: history.pull_counts() }
}

struct CsStates {
    /// Per-arm sequences at the run level (arm reports).
    arm: Vec<ConfSeqState>,
    /// Per-arm sequences at the union-bound level (contrast reports).
    contrast: Vec<ConfSeqState>,
}

fn build_cs_states(setup: &CsSetup, history: &BanditHistory) -> CsStates {
    let k = history.num_arms();
    let mut arm: Vec<ConfSeqState> = (0..k)
        .map(|w| ConfSeqState::new(setup.arm_params.clone(), setup.supports[w]))
        .collect();
    let mut contrast: Vec<ConfSeqState> = (0..k)
        .map(|w| ConfSeqState::new(setup.contrast_params.clone(), setup.supports[w]))
        .collect();
    for rec in history.steps() {
        arm[rec.arm].update(rec.reward);
        contrast[rec.arm].update(rec.reward);
    }
    CsStates { arm, contrast }
}

fn evaluate_cell(
    ctx: &EstimationContext,
    history: &BanditHistory,
    cs_states: Option<&CsStates>,
    estimator: EstimatorKind,
    target: Target,
) -> Option<EstimateReport> {
    let level = ctx.level;
    let truth = ctx.truth_for(target);
    match target {
        Target::Arm(w) => evaluate_arm(ctx, history, cs_states, estimator, w, truth),
        Target::Contrast(w1, w2) => {
            if estimator == EstimatorKind::HowardCs {
                let states = cs_states.expect("cs states exist when howard_cs is configured");
                let (s1, s2) = (&states.contrast[w1], &states.contrast[w2]);
                if s1.count() == 0 || s2.count() == 0 {
                    return None;
                }
                let (lo, hi) = contrast_union_interval(s2.interval(), s1.interval());
                let point = s1.running_mean() - s2.running_mean();
                return Some(EstimateReport {
                    estimator: EstimatorKind::HowardCs.name().into(),
                    target,
                    point,
                    variance: None,
                    stderr: None,
                    ci_lo: lo,
                    ci_hi: hi,
                    level,
                    truth,
                    studentized: None,
                    diagnostics: None,
                });
            }
            let r1 = evaluate_arm(ctx, history, cs_states, estimator, w1, ctx.truth_for(Target::Arm(w1)))?;
            let r2 = evaluate_arm(ctx, history, cs_states, estimator, w2, ctx.truth_for(Target::Arm(w2)))?;
            Some(contrast_estimate(&r1, &r2))
        }
    }
}

fn evaluate_arm(
    ctx: &EstimationContext,
    history: &BanditHistory,
    cs_states: Option<&CsStates>,
    estimator: EstimatorKind,
    arm: usize,
    truth: Option<f64>,
) -> Option<EstimateReport> {
    let level = ctx.level;
    match estimator {
        EstimatorKind::SampleMean => sample_mean_report(history, arm, level, truth),
        EstimatorKind::UnweightedIpw => aw_report(
            history,
            arm,
            WeightScheme::Uniform,
            &PlugIn::Zero,
            ScoreKind::Ipw,
            EstimatorKind::UnweightedIpw.name(),
            level,
            truth,
        )
        .ok(),
        EstimatorKind::UnweightedAipw => aw_report(
            history,
            arm,
            WeightScheme::Uniform,
            &PlugIn::LaggedMean,
            ScoreKind::Aipw,
            EstimatorKind::UnweightedAipw.name(),
            level,
            truth,
        )
        .ok(),
        EstimatorKind::AwConstant => aw_report(
            history,
            arm,
            WeightScheme::ConstantAlloc,
            &PlugIn::LaggedMean,
            ScoreKind::Aipw,
            EstimatorKind::AwConstant.name(),
            level,
            truth,
        )
        .ok(),
        EstimatorKind::AwTwoPoint => aw_report(
            history,
            arm,
            WeightScheme::TwoPointAlloc { alpha: ctx.two_point_alpha },
            &PlugIn::LaggedMean,
            ScoreKind::Aipw,
            EstimatorKind::AwTwoPoint.name(),
            level,
            truth,
        )
        .ok(),
        EstimatorKind::WeightedAverage => {
            let schedule = build_schedule(
                history,
                arm,
                WeightScheme::TwoPointAlloc { alpha: ctx.two_point_alpha },
            )
            .ok()?;
            weighted_average_report(
                history,
                arm,
                &schedule,
                EstimatorKind::WeightedAverage.name(),
                level,
                truth,
            )
        }
        EstimatorKind::WDecorrelation => {
            w_decorrelation_report(history, arm, ctx.wd_lambda, level, truth)
        }
        EstimatorKind::HowardCs => {
            let states = cs_states.expect("cs states exist when howard_cs is configured");
            let s = &states.arm[arm];
            if s.count() == 0 {
                return None;
            }
            let (lo, hi) = s.interval();
            Some(EstimateReport {
                estimator: EstimatorKind::HowardCs.name().into(),
                target: Target::Arm(arm),
                point: s.running_mean(),
                variance: None,
                stderr: None,
                ci_lo: lo,
                ci_hi: hi,
                level,
                truth,
                studentized: None,
                diagnostics: None,
            })
        }
    }
}

/// One (estimator, target) cell across all replications.
#[derive(Debug, Clone)]
pub struct SimCell {
    pub estimator: EstimatorKind,
    pub target: Target,
    pub truth: f64,
    pub reports: Vec<Option<EstimateReport>>,
}

impl SimCell {
    pub fn aggregate(&self) -> AggregateStats {
        aggregate(&self.reports, Some(self.truth))
    }

    /// Studentized statistics of the defined reports, in replication order.
    pub fn studentized_values(&self) -> Vec<f64> {
        self.reports
            .iter()
            .flatten()
            .filter_map(|r| r.studentized)
            .collect()
    }

    /// Point estimates of the defined reports, in replication order.
    pub fn points(&self) -> Vec<f64> {
        self.reports.iter().flatten().map(|r| r.point).collect()
    }
}

/// All outputs of a simulation run.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub cells: Vec<SimCell>,
    /// Per-replication pull counts, indexed `[replication][arm]`.
    pub pulls: Vec<Vec<u64>>,
    pub wall_seconds: f64,
}

impl SimOutput {
    pub fn cell(&self, estimator: EstimatorKind, target: Target) -> Option<&SimCell> {
        self.cells.iter().find(|c| c.estimator == estimator && c.target == target)
    }

    pub fn mean_pulls(&self, arm: usize) -> f64 {
        let total: u64 = self.pulls.iter().map(|p| p[arm]).sum();
        total as f64 / self.pulls.len() as f64
    }
}

/// Run every replication of a config and collect per-cell reports.
///
/// Batches of [`BATCH_SIZE`] replications are distributed over a rayon pool
/// and recombined in batch order, so the output is bit-identical for any
/// parallelism degree.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimOutput, HarnessError> {
    let resolved = config.resolve()?;
    let started = Instant::now();

    if resolved.save_logs > 0 {
        if let Some(dir) = &resolved.out_dir {
            std::fs::create_dir_all(dir.join("logs"))?;
        }
    }

    let num_batches = resolved.replications.div_ceil(BATCH_SIZE);
    let run_batches = || -> Result<Vec<Vec<ReplicationOutput>>, HarnessError> {
        (0..num_batches)
            .into_par_iter()
            .map(|b| {
                let lo = b * BATCH_SIZE;
                let hi = ((b + 1) * BATCH_SIZE).min(resolved.replications);
                let mut outs = Vec::with_capacity((hi - lo) as usize);
                for rep in lo..hi {
                    let (out, history) = run_replication(&resolved, rep);
                    if rep < resolved.save_logs {
                        if let Some(dir) = &resolved.out_dir {
                            let path = dir.join("logs").join(format!("rep_{rep:06}.jsonl"));
                            let file = std::fs::File::create(path)?;
                            crate::history::write_log(&history, std::io::BufWriter::new(file))?;
                        }
                    }
                    outs.push(out);
                }
                Ok(outs)
            })
            .collect()
    };

    let batches = if resolved.parallelism > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(resolved.parallelism)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
            .install(run_batches)?
    } else {
        run_batches()?
    };

    let mut cells: Vec<SimCell> = resolved
        .cells
        .iter()
        .map(|spec| SimCell {
            estimator: spec.estimator,
            target: spec.target,
            truth: spec.truth,
            reports: Vec::with_capacity(resolved.replications as usize),
        })
        .collect();
    let mut pulls = Vec::with_capacity(resolved.replications as usize);
    for batch in batches {
        for rep_out in batch {
            for (cell, report) in cells.iter_mut().zip(rep_out.reports) {
                cell.reports.push(report);
            }
            pulls.push(rep_out.pulls);
        }
    }

    Ok(SimOutput { cells, pulls, wall_seconds: started.elapsed().as_secs_f64() })
}

/// Write `aggregates.csv`, `histograms.csv` and `manifest.json` for a run.
pub fn write_outputs(
    config: &SimulationConfig,
    output: &SimOutput,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let agg_path = out_dir.join("aggregates.csv");
    let mut w = csv::Writer::from_path(&agg_path)?;
    w.write_record([
        "estimator",
        "target",
        "total_count",
        "defined_count",
        "mean_point",
        "mean_point_se",
        "bias",
        "bias_se",
        "rmse",
        "rmse_se",
        "coverage",
        "coverage_se",
        "mean_ci_width",
        "mean_ci_width_se",
        "ks_studentized",
        "studentized_count",
        "mean_infinite_sampling_ratio",
        "mean_lyapunov_ratio",
        "mean_variance_ratio",
    ])?;
    for cell in &output.cells {
        let a = cell.aggregate();
        w.write_record([
            cell.estimator.name().to_string(),
            cell.target.to_string(),
            a.total_count.to_string(),
            a.defined_count.to_string(),
            fmt(a.mean_point),
            fmt(a.mean_point_se),
            fmt_opt(a.bias),
            fmt_opt(a.bias_se),
            fmt_opt(a.rmse),
            fmt_opt(a.rmse_se),
            fmt_opt(a.coverage),
            fmt_opt(a.coverage_se),
            fmt(a.mean_ci_width),
            fmt(a.mean_ci_width_se),
            fmt_opt(a.ks_studentized),
            a.studentized_count.to_string(),
            fmt_opt(a.mean_infinite_sampling_ratio),
            fmt_opt(a.mean_lyapunov_ratio),
            fmt_opt(a.mean_variance_ratio),
        ])?;
    }
    w.flush()?;
    written.push(agg_path);

    let hist_path = out_dir.join("histograms.csv");
    let mut w = csv::Writer::from_path(&hist_path)?;
    w.write_record(["estimator", "target", "bin_lo", "bin_hi", "count"])?;
    let edges = histogram_bin_edges();
    for cell in &output.cells {
        let a = cell.aggregate();
        for (i, &count) in a.histogram_counts.iter().enumerate() {
            w.write_record([
                cell.estimator.name().to_string(),
                cell.target.to_string(),
                fmt(edges[i]),
                fmt(edges[i + 1]),
                count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    written.push(hist_path);

    let manifest_path = out_dir.join("manifest.json");
    let manifest = run_manifest(config, output);
    let mut f = std::fs::File::create(&manifest_path)?;
    f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    f.write_all(b"\n")?;
    written.push(manifest_path);

    Ok(written)
}

/// The run manifest: config echo, seed, versions, wall time.
pub fn run_manifest(config: &SimulationConfig, output: &SimOutput) -> serde_json::Value {
    json!({
        "tool": "banditeval",
        "version": env!("CARGO_PKG_VERSION"),
        "setting": config.model.label(),
        "design": config.design.name(),
        "horizon": config.horizon,
        "replications": config.replications,
        "base_seed": config.base_seed,
        "level": config.level,
        "estimators": config.estimators.iter().map(|e| e.name()).collect::<Vec<_>>(),
        "arms": config.arms,
        "contrasts": config.contrasts,
        "git_hash": git_hash(),
        "created_unix": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "wall_seconds": output.wall_seconds,
    })
}

fn git_hash() -> Option<String> {
    let out = std::process::Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    if out.status.success() {
        Some(String::from_utf8_lossy(&out.stdout).trim().to_string())
    } else {
        None
    }
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Config(format!("json: {e}"))
    }
}

/// The flat key/value config file format. All keys are optional except the
/// model (either `setting` or `arm_means` + `noise`), `design`, `horizon`
/// and `replications`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    setting: Option<String>,
    arm_means: Option<Vec<f64>>,
    noise: Option<String>,
    design: String,
    horizon: u64,
    replications: u64,
    seed: Option<u64>,
    level: Option<f64>,
    estimators: Option<Vec<String>>,
    arms: Option<Vec<usize>>,
    contrasts: Option<Vec<String>>,
    floor_exponent: Option<f64>,
    floor_scale: Option<f64>,
    posterior_draws: Option<usize>,
    likelihood_variance: Option<f64>,
    batch_size: Option<u64>,
    two_point_alpha: Option<f64>,
    wd_lambda: Option<f64>,
    cs_t_opt: Option<u64>,
    cs_scale: Option<f64>,
    parallelism: Option<usize>,
    save_logs: Option<u64>,
    out: Option<String>,
}

impl RawConfig {
    fn into_config(self) -> Result<SimulationConfig, HarnessError> {
        let model = match (self.setting, self.arm_means) {
            (Some(name), None) => ModelSpec::Preset(
                name.parse::<Setting>().map_err(|e| HarnessError::Config(e.to_string()))?,
            ),
            (None, Some(means)) => {
                let noise = parse_noise(self.noise.as_deref().unwrap_or("uniform:1.0"))?;
                ModelSpec::Custom(ArmOutcomeModel::new(means, noise)?)
            }
            (Some(_), Some(_)) => {
                return Err(HarnessError::Config(
                    "give either `setting` or `arm_means`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(HarnessError::Config("missing `setting` or `arm_means`".into()))
            }
        };
        let mut design = Design::parse(&self.design)?;
        if let Design::ThompsonFloor(cfg) = &mut design {
            if let Some(x) = self.floor_exponent {
                cfg.floor_exponent = x;
            }
            cfg.floor_scale = self.floor_scale.or(cfg.floor_scale);
            if let Some(x) = self.posterior_draws {
                cfg.posterior_draws = x;
            }
            if let Some(x) = self.likelihood_variance {
                cfg.likelihood_variance = x;
            }
            if let Some(x) = self.batch_size {
                cfg.batch_size = x;
            }
        }
        let estimators = match self.estimators {
            Some(names) => names
                .iter()
                .map(|n| n.parse::<EstimatorKind>())
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![EstimatorKind::SampleMean, EstimatorKind::AwTwoPoint],
        };
        let contrasts = match self.contrasts {
            Some(items) => items
                .iter()
                .map(|s| parse_contrast(s))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![],
        };
        let mut config = SimulationConfig::new(model, design, self.horizon, self.replications);
        config.base_seed = self.seed.unwrap_or(0);
        config.level = self.level.unwrap_or(0.95);
        config.estimators = estimators;
        config.arms = self.arms.unwrap_or_else(|| vec![0]);
        config.contrasts = contrasts;
        config.two_point_alpha = self.two_point_alpha;
        config.wd_lambda = self.wd_lambda;
        config.cs_t_opt = self.cs_t_opt;
        config.cs_scale = self.cs_scale;
        config.parallelism = self.parallelism.unwrap_or(0);
        config.save_logs = self.save_logs.unwrap_or(0);
        config.out_dir = self.out.map(PathBuf::from);
        Ok(config)
    }
}

fn parse_noise(s: &str) -> Result<Noise, HarnessError> {
    let (kind, param) = s
        .split_once(':')
        .ok_or_else(|| HarnessError::Config(format!("noise `{s}` must be kind:param")))?;
    let param: f64 = param
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad noise parameter in `{s}`")))?;
    match kind {
        "uniform" => Ok(Noise::Uniform { half_width: param }),
        "normal" => Ok(Noise::Normal { sd: param }),
        _ => Err(HarnessError::Config(format!("unknown noise kind `{kind}`"))),
    }
}

fn parse_contrast(s: &str) -> Result<(usize, usize), HarnessError> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| HarnessError::Config(format!("contrast `{s}` must be `w1,w2`")))?;
    let w1 = a.trim().parse().map_err(|_| HarnessError::Config(format!("bad contrast `{s}`")))?;
    let w2 = b.trim().parse().map_err(|_| HarnessError::Config(format!("bad contrast `{s}`")))?;
    Ok((w1, w2))
}

/// Convenience constructor for the Thompson-floor design with a chosen
/// posterior draw count.
pub fn thompson_floor_design(posterior_draws: usize) -> Design {
    Design::ThompsonFloor(ThompsonFloorConfig { posterior_draws, ..Default::default() })
}
