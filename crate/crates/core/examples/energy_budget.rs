// Drains one device with periodic sensing and reports when it depletes.

use contextsim::energy::{Activity, ConsumeOutcome, EnergyConfig, EnergyState};
use contextsim::sim::{stream_rng, Stream};

pub fn run_example() -> (u64, f64) {
    let cfg = EnergyConfig::default();
    let profile = cfg.profile();
    let harvest = cfg.harvest_model();
    let mut rng = stream_rng(21, Stream::Harvest);
    let mut store = EnergyState::full();
    let mut harvested = 0.0;
    let mut interval = 0;
    while !store.is_depleted(&profile) && interval < 100_000 {
        interval += 1;
        let _ = store.consume(Activity::WurListen, &profile);
        if interval % 10 == 0 && store.consume(Activity::Sense, &profile) == ConsumeOutcome::Consumed {
            let _ = store.consume(Activity::Communicate, &profile);
        }
        harvested += store.harvest(&harvest, &mut rng).as_fraction();
    }
    println!("depleted after {interval} intervals, harvested {harvested:.4} of capacity on the way");
    (interval, harvested)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
