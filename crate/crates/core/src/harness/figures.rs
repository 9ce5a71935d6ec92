//! Figure-data reproduction: tidy CSVs sufficient to redraw each headline
//! figure, at a quick desk scale or at full paper scale.
//!
//! Desk scale trades replication count, horizon and posterior-draw count for
//! wall time; the manifest written next to each CSV records the exact
//! parameters. Rendering is left to external tools.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::{
    run_simulation, thompson_floor_design, EstimatorKind, HarnessError, ModelSpec,
    SimulationConfig,
};
use crate::design::Design;
use crate::env::Setting;
use crate::harness::aggregate::histogram_bin_edges;
use crate::rng::ReplicationRng;
use crate::scores::Target;
use crate::weights::{build_schedule, WeightScheme};

/// Identifiers of the reproducible figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    /// Distribution of scaled and studentized intro-example estimates.
    Fig1Intro,
    /// Evolution of contrast estimates over experiment lengths.
    Fig2ContrastEvolution,
    /// Histograms of studentized contrast statistics.
    Fig3Histograms,
    /// Arm-value statistics at the final horizon.
    Fig4ArmValues,
    /// Per-step (T - t) * lambda_t paths of the two-point allocation.
    AppxLambdaPath,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [
        FigureId::Fig1Intro,
        FigureId::Fig2ContrastEvolution,
        FigureId::Fig3Histograms,
        FigureId::Fig4ArmValues,
        FigureId::AppxLambdaPath,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::Fig1Intro => "fig1_intro",
            FigureId::Fig2ContrastEvolution => "fig2_contrast_evolution",
            FigureId::Fig3Histograms => "fig3_histograms",
            FigureId::Fig4ArmValues => "fig4_arm_values",
            FigureId::AppxLambdaPath => "appx_lambda_path",
        }
    }
}

impl std::str::FromStr for FigureId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureId::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown figure id `{s}`")))
    }
}

/// Output scale: `Desk` runs in minutes on a laptop, `Paper` matches the
/// full-scale replication counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigScale {
    Desk,
    Paper,
}

impl FigScale {
    pub fn name(&self) -> &'static str {
        match self {
            FigScale::Desk => "desk",
            FigScale::Paper => "paper",
        }
    }
}

impl std::str::FromStr for FigScale {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(FigScale::Desk),
            "paper" => Ok(FigScale::Paper),
            other => Err(HarnessError::Config(format!("unknown scale `{other}`"))),
        }
    }
}

const SIM_SETTINGS: [Setting; 3] = [Setting::NoSignal, Setting::LowSignal, Setting::HighSignal];

struct ScaleParams {
    horizon: u64,
    replications: u64,
    posterior_draws: usize,
    horizons: Vec<u64>,
    lambda_horizon: u64,
}

fn scale_params(scale: FigScale) -> ScaleParams {
    match scale {
        FigScale::Desk => ScaleParams {
            horizon: 10_000,
            replications: 10_000,
            posterior_draws: 500,
            horizons: vec![1_000, 3_162, 10_000],
            lambda_horizon: 10_000,
        },
        FigScale::Paper => ScaleParams {
            horizon: 100_000,
            replications: 100_000,
            posterior_draws: 10_000,
            horizons: vec![1_000, 3_162, 10_000, 31_623, 100_000],
            lambda_horizon: 20_000,
        },
    }
}

/// Produce the CSV (plus a manifest) for one figure. Returns the files
/// written.
pub fn replicate_figure(
    id: FigureId,
    scale: FigScale,
    out_dir: &Path,
    base_seed: u64,
    parallelism: usize,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let params = scale_params(scale);
    let csv_path = out_dir.join(format!("{}.csv", id.name()));
    let mut manifest = json!({
        "figure": id.name(),
        "scale": scale.name(),
        "base_seed": base_seed,
        "tool": "banditeval",
        "version": env!("CARGO_PKG_VERSION"),
    });

    match id {
        FigureId::Fig1Intro => {
            let (horizon, replications) = match scale {
                FigScale::Desk => (10_000, 100_000),
                FigScale::Paper => (1_000_000, 1_000_000),
            };
            let mut cfg = SimulationConfig::new(
                ModelSpec::Preset(Setting::IntroNormal),
                Design::TwoStage,
                horizon,
                replications,
            );
            cfg.base_seed = base_seed;
            cfg.parallelism = parallelism;
            cfg.estimators = vec![
                EstimatorKind::SampleMean,
                EstimatorKind::UnweightedIpw,
                EstimatorKind::AwConstant,
            ];
            cfg.arms = vec![0];
            let out = run_simulation(&cfg)?;
            let mut w = csv::Writer::from_path(&csv_path)?;
            w.write_record(["estimator", "replication", "scaled_estimate", "studentized"])?;
            let sqrt_t = (horizon as f64).sqrt();
            for cell in &out.cells {
                for (rep, report) in cell.reports.iter().enumerate() {
                    let Some(r) = report else { continue };
                    w.write_record([
                        cell.estimator.name().to_string(),
                        rep.to_string(),
                        format!("{}", sqrt_t * r.point),
                        r.studentized.map(|s| format!("{s}")).unwrap_or_default(),
                    ])?;
                }
            }
            w.flush()?;
            manifest["horizon"] = json!(horizon);
            manifest["replications"] = json!(replications);
        }
        FigureId::Fig2ContrastEvolution => {
            let mut w = csv::Writer::from_path(&csv_path)?;
            w.write_record(["setting", "estimator", "horizon", "metric", "value", "mc_se"])?;
            for setting in SIM_SETTINGS {
                for &horizon in &params.horizons {
                    let mut cfg = SimulationConfig::new(
                        ModelSpec::Preset(setting),
                        thompson_floor_design(params.posterior_draws),
                        horizon,
                        params.replications,
                    );
                    cfg.base_seed = base_seed;
                    cfg.parallelism = parallelism;
                    cfg.estimators = vec![
                        EstimatorKind::SampleMean,
                        EstimatorKind::UnweightedAipw,
                        EstimatorKind::AwConstant,
                        EstimatorKind::AwTwoPoint,
                        EstimatorKind::HowardCs,
                    ];
                    cfg.arms = vec![];
                    cfg.contrasts = vec![(2, 0)];
                    let out = run_simulation(&cfg)?;
                    for cell in &out.cells {
                        let a = cell.aggregate();
                        let rows: [(&str, Option<f64>, Option<f64>); 5] = [
                            ("mean_point", Some(a.mean_point), Some(a.mean_point_se)),
                            ("bias", a.bias, a.bias_se),
                            ("rmse", a.rmse, a.rmse_se),
                            ("coverage", a.coverage, a.coverage_se),
                            ("mean_ci_width", Some(a.mean_ci_width), Some(a.mean_ci_width_se)),
                        ];
                        for (metric, value, se) in rows {
                            w.write_record([
                                setting.name().to_string(),
                                cell.estimator.name().to_string(),
                                horizon.to_string(),
                                metric.to_string(),
                                value.map(|v| format!("{v}")).unwrap_or_default(),
                                se.map(|v| format!("{v}")).unwrap_or_default(),
                            ])?;
                        }
                    }
                }
            }
            w.flush()?;
            manifest["horizons"] = json!(params.horizons);
            manifest["replications"] = json!(params.replications);
            manifest["posterior_draws"] = json!(params.posterior_draws);
        }
        FigureId::Fig3Histograms => {
            let mut w = csv::Writer::from_path(&csv_path)?;
            w.write_record(["setting", "estimator", "bin_lo", "bin_hi", "count"])?;
            let edges = histogram_bin_edges();
            for setting in SIM_SETTINGS {
                let mut cfg = SimulationConfig::new(
                    ModelSpec::Preset(setting),
                    thompson_floor_design(params.posterior_draws),
                    params.horizon,
                    params.replications,
                );
                cfg.base_seed = base_seed;
                cfg.parallelism = parallelism;
                cfg.estimators = vec![
                    EstimatorKind::SampleMean,
                    EstimatorKind::UnweightedAipw,
                    EstimatorKind::AwConstant,
                    EstimatorKind::AwTwoPoint,
                ];
                cfg.arms = vec![];
                cfg.contrasts = vec![(2, 0)];
                let out = run_simulation(&cfg)?;
                for cell in &out.cells {
                    let a = cell.aggregate();
                    for (i, &count) in a.histogram_counts.iter().enumerate() {
                        w.write_record([
                            setting.name().to_string(),
                            cell.estimator.name().to_string(),
                            format!("{}", edges[i]),
                            format!("{}", edges[i + 1]),
                            count.to_string(),
                        ])?;
                    }
                }
            }
            w.flush()?;
            manifest["horizon"] = json!(params.horizon);
            manifest["replications"] = json!(params.replications);
            manifest["posterior_draws"] = json!(params.posterior_draws);
        }
        FigureId::Fig4ArmValues => {
            let mut w = csv::Writer::from_path(&csv_path)?;
            w.write_record(["setting", "estimator", "arm", "metric", "value", "mc_se"])?;
            for setting in SIM_SETTINGS {
                let mut cfg = SimulationConfig::new(
                    ModelSpec::Preset(setting),
                    thompson_floor_design(params.posterior_draws),
                    params.horizon,
                    params.replications,
                );
                cfg.base_seed = base_seed;
                cfg.parallelism = parallelism;
                cfg.estimators = vec![
                    EstimatorKind::SampleMean,
                    EstimatorKind::UnweightedAipw,
                    EstimatorKind::AwConstant,
                    EstimatorKind::AwTwoPoint,
                    EstimatorKind::WDecorrelation,
                    EstimatorKind::HowardCs,
                ];
                cfg.arms = vec![0, 2];
                let out = run_simulation(&cfg)?;
                for cell in &out.cells {
                    let Target::Arm(arm) = cell.target else { continue };
                    let a = cell.aggregate();
                    let rows: [(&str, Option<f64>, Option<f64>); 4] = [
                        ("bias", a.bias, a.bias_se),
                        ("rmse", a.rmse, a.rmse_se),
                        ("coverage", a.coverage, a.coverage_se),
                        ("mean_ci_width", Some(a.mean_ci_width), Some(a.mean_ci_width_se)),
                    ];
                    for (metric, value, se) in rows {
                        w.write_record([
                            setting.name().to_string(),
                            cell.estimator.name().to_string(),
                            arm.to_string(),
                            metric.to_string(),
                            value.map(|v| format!("{v}")).unwrap_or_default(),
                            se.map(|v| format!("{v}")).unwrap_or_default(),
                        ])?;
                    }
                }
            }
            w.flush()?;
            manifest["horizon"] = json!(params.horizon);
            manifest["replications"] = json!(params.replications);
            manifest["posterior_draws"] = json!(params.posterior_draws);
        }
        FigureId::AppxLambdaPath => {
            let mut w = csv::Writer::from_path(&csv_path)?;
            w.write_record(["setting", "arm", "t", "lambda", "scaled_lambda"])?;
            let horizon = params.lambda_horizon;
            for setting in SIM_SETTINGS {
                let cfg = SimulationConfig::new(
                    ModelSpec::Preset(setting),
                    thompson_floor_design(10_000),
                    horizon,
                    1,
                );
                let resolved = {
                    let mut c = cfg;
                    c.base_seed = base_seed;
                    c.resolve()?
                };
                let mut rng = ReplicationRng::new(resolved.base_seed, 0);
                let history = super::simulate_history(
                    &resolved.model,
                    &resolved.design,
                    resolved.horizon,
                    &mut rng,
                );
                for arm in [0usize, 2] {
                    let sched = build_schedule(
                        &history,
                        arm,
                        WeightScheme::TwoPointAlloc { alpha: resolved.ctx.two_point_alpha },
                    )
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                    for (i, &lam) in sched.lambda.iter().enumerate() {
                        let t = (i + 1) as u64;
                        let scaled = (horizon - t) as f64 * lam;
                        w.write_record([
                            setting.name().to_string(),
                            arm.to_string(),
                            t.to_string(),
                            format!("{lam}"),
                            format!("{scaled}"),
                        ])?;
                    }
                }
            }
            w.flush()?;
            manifest["horizon"] = json!(horizon);
            manifest["replications"] = json!(1);
            manifest["posterior_draws"] = json!(10_000);
        }
    }

    let manifest_path = out_dir.join(format!("{}_manifest.json", id.name()));
    let mut f = std::fs::File::create(&manifest_path)?;
    f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(vec![csv_path, manifest_path])
}
