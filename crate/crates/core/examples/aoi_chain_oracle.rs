// Exact single-device AoI from the Markov chain against simulation.

use contextsim::aoi::{renewal_aaoi, simulate, AoiConfig, ChainOracle, PolicyKind, Threshold};

pub fn run_example() -> Vec<(f64, f64)> {
    let (p, eps) = (0.3, 0.2);
    let mut out = Vec::new();
    for threshold in [0, 2, 5] {
        let exact = ChainOracle::new(p, eps, threshold).solve().aaoi;
        let cfg = AoiConfig {
            policy: PolicyKind::Threshold,
            p,
            epsilon: eps,
            num_devices: 1,
            num_channels: 1,
            threshold: Threshold(threshold),
            ..AoiConfig::default()
        };
        let sim = simulate(&cfg, 5, 200_000).unwrap().stats().aaoi().unwrap();
        println!(
            "threshold {threshold}: chain {exact:.4}  renewal {:.4}  simulated {sim:.4}",
            renewal_aaoi(p, eps, threshold)
        );
        out.push((exact, sim));
    }
    out
}

#[allow(dead_code)]
fn main() {
    run_example();
}
