// Encodes and decodes the three control frames.

use contextsim::protocol::golden::hex_encode;
use contextsim::protocol::{
    quantize_energy, storage_capacity_uj, ContextUpdate, ControlFrame, ControlKind, RegistrationRecord, SensingMode, SensorInterface,
    UpdateFlags,
};

pub fn run_example() -> Vec<Vec<u8>> {
    let reg = RegistrationRecord {
        device_id: 258,
        storage_capacity_code: 72,
        processor_speed_idx: 5,
        tx_power_idx: 7,
        memory_size_code: 80,
        sensor_mask: (1 << SensorInterface::Temperature as u8) | (1 << SensorInterface::Motion as u8),
    };
    let update = ContextUpdate {
        device_id: 258,
        energy_level_q: quantize_energy(0.62),
        sensing_mode: SensingMode::EventDriven,
        buffer_age_q: ContextUpdate::saturating_age(12),
        flags: UpdateFlags { has_packet: true, depleted_warning: false },
    };
    let poll = ControlFrame { device_id: 258, kind: ControlKind::Poll };

    let frames = vec![reg.encode().unwrap(), update.encode().unwrap(), poll.encode()];
    assert_eq!(RegistrationRecord::decode(&frames[0]).unwrap(), reg);
    assert_eq!(ContextUpdate::decode(&frames[1]).unwrap(), update);
    assert_eq!(ControlFrame::decode(&frames[2]).unwrap(), poll);
    for (name, bytes) in ["registration", "context update", "poll"].iter().zip(&frames) {
        println!("{name:<15} {:>2} bytes  {}", bytes.len(), hex_encode(bytes));
    }
    println!(
        "device 258: {:?} MHz, {:?} dBm, {:.0} uJ store, update says {:.2} of capacity",
        reg.cpu_speed_mhz(),
        reg.tx_power_dbm(),
        storage_capacity_uj(reg.storage_capacity_code),
        update.energy_fraction()
    );
    frames
}

#[allow(dead_code)]
fn main() {
    run_example();
}
