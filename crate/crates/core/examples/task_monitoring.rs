// Trains the task-aware poller briefly and compares it with round-robin
// polling.

use contextsim::task::{run_with_table, train, Scheduler, TaskConfig};

pub fn run_example() -> Vec<(Scheduler, f64, f64)> {
    let cfg = TaskConfig { train_episodes: 300, episode_slots: 2000, ..TaskConfig::default() };
    let table = train(&cfg).unwrap();
    let mut out = Vec::new();
    let baseline = contextsim::task::run(&TaskConfig { scheduler: Scheduler::Baseline, ..cfg.clone() }, 9, 5000).unwrap();
    let aware = run_with_table(&cfg, &table, 9, 5000).unwrap();
    for (scheduler, r) in [(Scheduler::Baseline, baseline), (Scheduler::TaskAware, aware)] {
        println!(
            "{:<10} response {:.2} ms  energy {:>6.0} E0  poll gap {:.2} ms  answer MSE {:.4}",
            scheduler.as_str(),
            r.value("avg_response_ms"),
            r.value("energy_E0_units"),
            r.value("mttf_ms"),
            r.value("eval_mse"),
        );
        out.push((scheduler, r.value("energy_E0_units"), r.value("mttf_ms")));
    }
    out
}

#[allow(dead_code)]
fn main() {
    run_example();
}
