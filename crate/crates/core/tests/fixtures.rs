//! Checks against recorded fixture files. Run with `CONTEXTSIM_BLESS=1` to
//! rewrite them after an intended change.

use std::path::PathBuf;

use contextsim::event::{simulate, tune_blind, DutyCycle, EventConfig, EventPolicy};
use contextsim::report::round_sig9;
use contextsim::sim::derive_seed;
use contextsim::sweep::{AOI_COLUMNS, EVENT_COLUMNS, EVENT_RATIO_COLUMNS, TASK_COLUMNS};
use contextsim::task::{train, QTable, TaskConfig, QTABLE_HEADER};
use serde_json::{json, Value};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures")).join(name)
}

fn bless() -> bool {
    std::env::var_os("CONTEXTSIM_BLESS").is_some()
}

fn check_or_bless(name: &str, actual: &str) {
    let path = fixture(name);
    if bless() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from the recorded fixture");
}

fn small_blind() -> (EventConfig, u64) {
    let cfg = EventConfig {
        policy: EventPolicy::Blind,
        density: 40.0,
        lambda: 0.02,
        tune_reps: 2,
        ..EventConfig::default()
    };
    (cfg, 3000)
}

#[test]
fn blind_grid_search_matches_brute_force() {
    let (cfg, horizon) = small_blind();
    // Brute force: every (T, a) with a <= T, same replication seeds.
    let mut curve = Vec::new();
    for t in [10u32, 20, 50, 100, 200] {
        for a in [1u32, 2, 5, 10] {
            if a > t {
                continue;
            }
            let duty = DutyCycle::new(t, a);
            let mean = (0..cfg.tune_reps)
                .map(|r| {
                    simulate(&cfg, derive_seed(cfg.tune_seed, r as u64), horizon, duty)
                        .detect_prob()
                        .unwrap_or(0.0)
                })
                .sum::<f64>()
                / cfg.tune_reps as f64;
            curve.push((t, a, mean));
        }
    }
    let mut best = curve[0];
    for &c in &curve {
        if c.2 > best.2 {
            best = c;
        }
    }
    let tuned = tune_blind(&cfg, horizon);
    assert_eq!(tuned.best, DutyCycle::new(best.0, best.1));
    assert_eq!(tuned.curve.len(), curve.len());
    for ((duty, v), (t, a, m)) in tuned.curve.iter().zip(&curve) {
        assert_eq!((duty.period, duty.active), (*t, *a));
        assert_eq!(v, m);
    }
    let recorded = json!({
        "density": cfg.density,
        "lambda": cfg.lambda,
        "horizon": horizon,
        "tune_reps": cfg.tune_reps,
        "best": { "period": best.0, "active": best.1 },
        "curve": curve.iter().map(|&(t, a, m)| json!([t, a, round_sig9(m)])).collect::<Vec<_>>(),
    });
    check_or_bless("blind_grid.json", &(serde_json::to_string_pretty(&recorded).unwrap() + "\n"));
}

#[test]
fn csv_columns_match_schema() {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(fixture("csv_schema.json")).unwrap()).unwrap();
    let cols = |k: &str| -> Vec<String> {
        schema[k]["columns"]
            .as_array()
            .unwrap_or_else(|| panic!("schema lacks {k}"))
            .iter()
            .map(|c| c.as_str().unwrap().to_string())
            .collect()
    };
    assert_eq!(cols("aoi_sweep"), AOI_COLUMNS);
    assert_eq!(cols("event_sim"), EVENT_COLUMNS);
    assert_eq!(cols("event_ratios"), EVENT_RATIO_COLUMNS);
    assert_eq!(cols("task_sim"), TASK_COLUMNS);
}

fn small_task() -> TaskConfig {
    TaskConfig {
        train_episodes: 10,
        episode_slots: 300,
        ..TaskConfig::default()
    }
}

#[test]
fn trained_qtable_matches_fixture() {
    let table = train(&small_task()).unwrap();
    let text = table.to_text();
    assert!(text.starts_with(QTABLE_HEADER));
    check_or_bless("qtable_small.txt", &text);
    let back = QTable::from_text(&std::fs::read_to_string(fixture("qtable_small.txt")).unwrap()).unwrap();
    assert_eq!(back, table);
}
