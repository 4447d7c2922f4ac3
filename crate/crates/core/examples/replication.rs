// Paired replications from a scenario file, with 95% intervals.

use contextsim::config::ScenarioFile;
use contextsim::sim::replicate;

const SCENARIO: &str = r#"
[sim]
seed = 42
horizon = 2000
replications = 8

[aoi]
policy = "autonomous"
p = 0.5
N = 8
F = 1
"#;

pub fn run_example() -> (f64, f64) {
    let file = ScenarioFile::parse(SCENARIO).unwrap();
    let mut result = (0.0, 0.0);
    for spec in file.scenarios() {
        let agg = replicate(&file.sim, &spec).unwrap();
        for m in &agg.summary {
            println!("{:<16} {:>10.4} +/- {:.4}", m.name, m.value, (m.ci_high - m.ci_low) / 2.0);
        }
        let aaoi = agg.get("aaoi").unwrap();
        result = (aaoi.value, (aaoi.ci_high - aaoi.ci_low) / 2.0);
    }
    result
}

#[allow(dead_code)]
fn main() {
    run_example();
}
