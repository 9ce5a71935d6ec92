//! Command-line interface: run simulations, estimate from logs, reproduce
//! figure data.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use banditeval::harness::{
    estimate_on_history, replicate_figure, run_simulation, write_outputs, CsSetup,
    EstimationContext, EstimatorKind, FigScale, FigureId, SimulationConfig,
};
use banditeval::scores::Target;

#[derive(Parser)]
#[command(name = "banditeval", version, about = "Adaptive-experiment simulation and inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated simulation described by a TOML config file.
    Simulate(SimulateArgs),
    /// Evaluate one estimator on a JSONL experiment log.
    Estimate(EstimateArgs),
    /// Reproduce the data behind one of the built-in figures.
    ReplicateFigure(ReplicateFigureArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config file (see README for the key reference).
    #[arg(long)]
    config: PathBuf,
    /// Override the number of replications.
    #[arg(long)]
    reps: Option<u64>,
    /// Override the horizon T.
    #[arg(long)]
    horizon: Option<u64>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the worker thread count (0 = all cores).
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct EstimateArgs {
    /// JSONL experiment log.
    #[arg(long)]
    log: PathBuf,
    /// Target arm (0-based).
    #[arg(long)]
    arm: Option<usize>,
    /// Target contrast `w1,w2`, estimating Q(w1) - Q(w2).
    #[arg(long)]
    contrast: Option<String>,
    /// Estimator name (sample_mean, unweighted_ipw, unweighted_aipw,
    /// aw_constant, aw_two_point, weighted_average, w_decorrelation,
    /// howard_cs).
    #[arg(long)]
    estimator: String,
    /// Confidence level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Two-point allocation decay exponent.
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    /// W-decorrelation tuning parameter (default: T_w / (T ln T)).
    #[arg(long)]
    wd_lambda: Option<f64>,
    /// Known support width (scale) for howard_cs.
    #[arg(long)]
    cs_scale: Option<f64>,
    /// Intrinsic time the howard_cs boundary is tuned for.
    #[arg(long)]
    cs_v_opt: Option<f64>,
    /// Known outcome variance; with --cs-t-opt it derives cs_v_opt.
    #[arg(long)]
    outcome_variance: Option<f64>,
    /// Expected pull count the howard_cs boundary is tuned for.
    #[arg(long)]
    cs_t_opt: Option<u64>,
    /// Known outcome support `lo,hi` (cold-start interval for howard_cs).
    #[arg(long)]
    support: Option<String>,
}

#[derive(Args)]
struct ReplicateFigureArgs {
    /// Figure id: fig1_intro, fig2_contrast_evolution, fig3_histograms,
    /// fig4_arm_values, appx_lambda_path.
    #[arg(long)]
    id: String,
    /// desk (minutes) or paper (full-scale).
    #[arg(long, default_value = "desk")]
    scale: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Base seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Estimate(args) => estimate(args),
        Command::ReplicateFigure(args) => figure(args),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = SimulationConfig::from_toml(&text)?;
    if let Some(r) = args.reps {
        config.replications = r;
    }
    if let Some(t) = args.horizon {
        config.horizon = t;
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    if let Some(out) = args.out {
        config.out_dir = Some(out);
    }
    if let Some(p) = args.parallelism {
        config.parallelism = p;
    }
    let out_dir = config
        .out_dir
        .clone()
        .context("no output directory: set `out` in the config or pass --out")?;
    let output = run_simulation(&config)?;
    let written = write_outputs(&config, &output, &out_dir)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    eprintln!(
        "{} replications x {} cells in {:.1}s",
        config.replications,
        output.cells.len(),
        output.wall_seconds
    );
    Ok(())
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let file = std::fs::File::open(&args.log)
        .with_context(|| format!("opening {}", args.log.display()))?;
    let history = banditeval::read_log(std::io::BufReader::new(file))?;

    let target = match (args.arm, &args.contrast) {
        (Some(w), None) => Target::Arm(w),
        (None, Some(c)) => {
            let (a, b) = c.split_once(',').context("--contrast must be `w1,w2`")?;
            Target::Contrast(a.trim().parse()?, b.trim().parse()?)
        }
        _ => bail!("give exactly one of --arm or --contrast"),
    };
    let estimator: EstimatorKind =
        args.estimator.parse().map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut ctx = EstimationContext::new(args.level);
    ctx.two_point_alpha = args.alpha;
    ctx.wd_lambda = args.wd_lambda;
    if estimator == EstimatorKind::HowardCs {
        let scale = args.cs_scale.context("howard_cs needs --cs-scale (support width)")?;
        let v_opt = match (args.cs_v_opt, args.outcome_variance, args.cs_t_opt) {
            (Some(v), _, _) => v,
            (None, Some(var), Some(t_opt)) => var * t_opt as f64,
            _ => bail!("howard_cs needs --cs-v-opt, or --outcome-variance with --cs-t-opt"),
        };
        let support = match &args.support {
            Some(s) => {
                let (lo, hi) = s.split_once(',').context("--support must be `lo,hi`")?;
                Some((lo.trim().parse::<f64>()?, hi.trim().parse::<f64>()?))
            }
            None => None,
        };
        ctx.cs = Some(CsSetup::new(scale, v_opt, args.level, vec![support; history.num_arms()]));
    }

    match estimate_on_history(&history, estimator, target, &ctx) {
        Some(report) => println!("{}", serde_json::to_string_pretty(&report)?),
        None => {
            println!(
                "{}",
                serde_json::json!({
                    "estimator": estimator.name(),
                    "target": target.to_string(),
                    "defined": false,
                })
            );
        }
    }
    Ok(())
}

fn figure(args: ReplicateFigureArgs) -> Result<()> {
    let id: FigureId = args.id.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
    let scale: FigScale = args.scale.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
    let written = replicate_figure(id, scale, &args.out, args.seed, args.parallelism)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
