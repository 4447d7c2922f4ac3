use serde::{Deserialize, Serialize};

use super::bits::{BitReader, BitWriter};
use super::CodecError;

pub const CONTEXT_UPDATE_LEN: usize = 5;

/// Full scale of the 7-bit energy field.
const ENERGY_Q_MAX: u8 = 127;

/// `floor(level * 127)`, with `level` clamped to `[0, 1]`.
pub fn quantize_energy(level: f64) -> u8 {
    (level.clamp(0.0, 1.0) * ENERGY_Q_MAX as f64).floor() as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingMode {
    #[default]
    Passive = 0,
    EventDriven = 1,
    Periodic = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct UpdateFlags {
    pub has_packet: bool,
    pub depleted_warning: bool,
}

/// Application-specific context, reported repeatedly during operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ContextUpdate {
    pub device_id: u16,
    /// Quantized energy level, 0..=127 of capacity.
    pub energy_level_q: u8,
    pub sensing_mode: SensingMode,
    /// Age in slots of the oldest unsent packet, saturating at 255.
    pub buffer_age_q: u8,
    pub flags: UpdateFlags,
}

impl ContextUpdate {
    pub fn energy_fraction(&self) -> f64 {
        self.energy_level_q as f64 / ENERGY_Q_MAX as f64
    }

    pub fn saturating_age(age_slots: u64) -> u8 {
        age_slots.min(u8::MAX as u64) as u8
    }

    pub fn encode(&self) -> Result<Vec<u8>, CodecError> {
        let mut w = BitWriter::new();
        w.put("device_id", self.device_id as u64, 16)?;
        w.put("energy_level_q", self.energy_level_q as u64, 7)?;
        w.put("sensing_mode", self.sensing_mode as u64, 2)?;
        w.put("buffer_age_q", self.buffer_age_q as u64, 8)?;
        let flags = (self.flags.has_packet as u64) << 2 | (self.flags.depleted_warning as u64) << 1;
        w.put("flags", flags, 3)?;
        Ok(w.finish(CONTEXT_UPDATE_LEN))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = BitReader::new(bytes, CONTEXT_UPDATE_LEN)?;
        let device_id = r.take(16) as u16;
        let energy_level_q = r.take(7) as u8;
        let sensing_mode = match r.take(2) {
            0 => SensingMode::Passive,
            1 => SensingMode::EventDriven,
            2 => SensingMode::Periodic,
            v => return Err(CodecError::Reserved { field: "sensing_mode", value: v }),
        };
        let buffer_age_q = r.take(8) as u8;
        let flags = r.take(3);
        if flags & 1 != 0 {
            return Err(CodecError::Reserved { field: "flags", value: flags });
        }
        let pad = r.take(4);
        if pad != 0 {
            return Err(CodecError::Reserved { field: "padding", value: pad });
        }
        Ok(Self {
            device_id,
            energy_level_q,
            sensing_mode,
            buffer_age_q,
            flags: UpdateFlags {
                has_packet: flags & 0b100 != 0,
                depleted_warning: flags & 0b010 != 0,
            },
        })
    }
}
