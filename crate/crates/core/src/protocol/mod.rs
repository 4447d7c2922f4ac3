//! Two-step context protocol: a one-time hardware registration frame and a
//! recurring context-update frame, plus the 3-byte control frames (wake-up
//! signal, poll, request-to-send) and control-plane overhead accounting.
//!
//! All frames are stateless and fixed length. Fields are packed MSB first in
//! declaration order, so the first field occupies the leading bits of byte 0.
//!
//! | frame            | bytes | layout (bits)                                                            |
//! |------------------|-------|--------------------------------------------------------------------------|
//! | registration     | 6     | device_id 16, storage 8, cpu_speed_idx 4, tx_power_idx 4, memory 8, sensors 8 |
//! | context update   | 5     | device_id 16, energy_q 7, sensing_mode 2, buffer_age 8, flags 3, pad 4   |
//! | wus / poll / rts | 3     | device_id 16, opcode 8                                                   |

mod bits;
mod control;
pub mod golden;
mod overhead;
mod registration;
mod update;

pub use control::{ControlFrame, ControlKind, CONTROL_LEN};
pub use overhead::{FrameKind, FrameTrace, OverheadBits};
pub use registration::{
    memory_bytes, storage_capacity_uj, RegistrationRecord, SensorInterface, CPU_SPEED_MHZ,
    REGISTRATION_LEN, TX_POWER_DBM,
};
pub use update::{quantize_energy, ContextUpdate, SensingMode, UpdateFlags, CONTEXT_UPDATE_LEN};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("field `{field}` value {value} is out of range")]
    FieldRange { field: &'static str, value: u64 },
    #[error("frame must be {expected} bytes, got {actual}")]
    Framing { expected: usize, actual: usize },
    #[error("reserved value in `{field}`: {value:#x}")]
    Reserved { field: &'static str, value: u64 },
}
