use banditeval::env::Setting;
use banditeval::harness::*;
use banditeval::numeric::Welford;
use banditeval::scores::Target;

fn main() {
    let contrast = Target::Contrast(2, 0);
    let mut cfg = SimulationConfig::new(
        ModelSpec::Preset(Setting::HighSignal),
        thompson_floor_design(200),
        100_000,
        1200,
    );
    cfg.base_seed = 321;
    cfg.estimators = vec![EstimatorKind::AwTwoPoint];
    cfg.arms = vec![0];
    cfg.contrasts = vec![(2, 0)];
    let out = run_simulation(&cfg).unwrap();
    let cell = out.cell(EstimatorKind::AwTwoPoint, contrast).unwrap();
    let agg = cell.aggregate();
    // variance calibration: mean estimated variance vs realized point variance
    let mut points = Welford::new();
    let mut vbar = Welford::new();
    for r in cell.reports.iter().flatten() {
        points.push(r.point);
        vbar.push(r.variance.unwrap());
    }
    println!(
        "high_signal T=1e5: cov={:.4}±{:.4} pulls0={:.1} mean(Vhat)={:.3e} var(points)={:.3e} ratio={:.3}",
        agg.coverage.unwrap(), agg.coverage_se.unwrap(),
        out.mean_pulls(0),
        vbar.mean(),
        points.variance(),
        vbar.mean() / points.variance(),
    );
}
