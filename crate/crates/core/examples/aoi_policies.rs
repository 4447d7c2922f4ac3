// Compares the three AoI schedulers on one shared channel setup.

use contextsim::aoi::{tune_threshold, AoiConfig, PolicyKind, Threshold};
use contextsim::sim::{replicate, ScenarioSpec, SimConfig};

pub fn run_example() -> Vec<(PolicyKind, f64)> {
    let sim = SimConfig::new(11, 3000, 4);
    let base = AoiConfig { p: 0.4, num_devices: 16, ..AoiConfig::default() };
    let grid: Vec<Threshold> = (0..=40).step_by(4).map(Threshold).collect();
    let tuned = tune_threshold(&base, &grid, 2, sim.horizon, sim.seed).unwrap();
    let mut out = Vec::new();
    for policy in [PolicyKind::Optimal, PolicyKind::Autonomous, PolicyKind::Threshold] {
        let cfg = AoiConfig { policy, threshold: tuned.best, ..base.clone() };
        let agg = replicate(&sim, &ScenarioSpec::Aoi(cfg)).unwrap();
        println!("{:<10} AAoI {:>8.3}  PAoI {:>8.3}", policy.as_str(), agg.mean("aaoi"), agg.mean("paoi"));
        out.push((policy, agg.mean("aaoi")));
    }
    println!("tuned threshold {}", tuned.best.0);
    out
}

#[allow(dead_code)]
fn main() {
    run_example();
}
