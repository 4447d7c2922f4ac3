// Blind duty cycling against context-aware wake-up on the same field.

use contextsim::event::{blind_duty, EventConfig, EventPolicy};
use contextsim::sim::{replicate, ScenarioSpec, SimConfig};

pub fn run_example() -> Vec<(EventPolicy, f64, f64)> {
    let sim = SimConfig::new(3, 4000, 4);
    let base = EventConfig { density: 100.0, lambda: 0.02, coverage_grid: 40, ..EventConfig::default() };
    let duty = blind_duty(&EventConfig { tune_reps: 1, ..base.clone() }, 2000);
    println!("blind duty cycle: {} of every {} slots", duty.active, duty.period);
    let mut out = Vec::new();
    for policy in [EventPolicy::Blind, EventPolicy::Context] {
        let cfg = EventConfig { policy, ..base.clone() }.with_blind_duty(duty);
        let agg = replicate(&sim, &ScenarioSpec::Event(cfg)).unwrap();
        println!(
            "{:<8} detection {:.3}  latency {:>7.2} ms  MTTF(10%) {:.2} s  control bits {:.0}",
            policy.as_str(),
            agg.mean("detect_prob"),
            agg.mean("mean_latency_ms"),
            agg.mean("mttf10_s"),
            agg.mean("overhead_bits"),
        );
        out.push((policy, agg.mean("detect_prob"), agg.mean("mttf10_s")));
    }
    out
}

#[allow(dead_code)]
fn main() {
    run_example();
}
