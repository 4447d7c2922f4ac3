// Each example is compiled in here and its `run_example` checked.

mod aoi_policies {
    include!("../examples/aoi_policies.rs");
}
mod aoi_chain_oracle {
    include!("../examples/aoi_chain_oracle.rs");
}
mod event_detection {
    include!("../examples/event_detection.rs");
}
mod task_monitoring {
    include!("../examples/task_monitoring.rs");
}
mod context_protocol {
    include!("../examples/context_protocol.rs");
}
mod energy_budget {
    include!("../examples/energy_budget.rs");
}
mod replication {
    include!("../examples/replication.rs");
}

use contextsim::aoi::PolicyKind;
use contextsim::event::EventPolicy;
use contextsim::task::Scheduler;

#[test]
fn aoi_policies_rank() {
    let r = aoi_policies::run_example();
    let get = |k| r.iter().find(|(p, _)| *p == k).unwrap().1;
    assert!(get(PolicyKind::Optimal) < get(PolicyKind::Autonomous));
    assert!(get(PolicyKind::Autonomous) < get(PolicyKind::Threshold));
}

#[test]
fn aoi_chain_oracle_agrees() {
    for (exact, sim) in aoi_chain_oracle::run_example() {
        assert!((exact - sim).abs() / exact < 0.02, "{exact} vs {sim}");
    }
}

#[test]
fn event_detection_context_wins() {
    let r = event_detection::run_example();
    assert_eq!((r[0].0, r[1].0), (EventPolicy::Blind, EventPolicy::Context));
    assert!(r[1].1 > r[0].1);
    assert!(r[1].2 >= r[0].2);
}

#[test]
fn task_monitoring_runs() {
    let r = task_monitoring::run_example();
    assert_eq!((r[0].0, r[1].0), (Scheduler::Baseline, Scheduler::TaskAware));
    assert!(r.iter().all(|&(_, e, gap)| e > 0.0 && gap > 0.0));
}

#[test]
fn context_protocol_sizes() {
    let frames = context_protocol::run_example();
    let bits: usize = frames.iter().map(|f| f.len() * 8).sum();
    assert_eq!(bits, 48 + 40 + 24);
}

#[test]
fn energy_budget_depletes() {
    let (intervals, harvested) = energy_budget::run_example();
    assert!(intervals > 10 && intervals < 100_000);
    assert!(harvested >= 0.0);
}

#[test]
fn replication_interval_is_finite() {
    let (mean, half) = replication::run_example();
    assert!(mean > 1.0 && half > 0.0 && half < mean);
}
