use serde::{Deserialize, Serialize};

use super::bits::{BitReader, BitWriter};
use super::CodecError;

pub const REGISTRATION_LEN: usize = 6;

/// Processor operating points, indexed by `processor_speed_idx`.
/// Indices 12..=15 are reserved.
pub const CPU_SPEED_MHZ: [u32; 12] = [1, 2, 4, 8, 16, 24, 32, 48, 64, 80, 120, 160];

/// Transmit power operating points, indexed by `tx_power_idx`.
/// Indices 13..=15 are reserved.
pub const TX_POWER_DBM: [i8; 13] = [-20, -16, -12, -8, -4, 0, 2, 4, 6, 8, 10, 12, 14];

/// Energy storage capacity for a code: `10^(code / 24)` microjoules,
/// i.e. 24 codes per decade from 1 uJ up to about 40 kJ.
pub fn storage_capacity_uj(code: u8) -> f64 {
    10f64.powf(code as f64 / 24.0)
}

/// Memory size for a code: `2^(code / 8)` bytes, 8 codes per doubling.
pub fn memory_bytes(code: u8) -> f64 {
    2f64.powf(code as f64 / 8.0)
}

/// Bits of `sensor_mask`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensorInterface {
    Temperature = 0,
    Humidity = 1,
    Motion = 2,
    Vibration = 3,
    Co2 = 4,
    Light = 5,
    Pressure = 6,
    Acoustic = 7,
}

/// Hardware constraints exchanged once, when the device joins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RegistrationRecord {
    pub device_id: u16,
    pub storage_capacity_code: u8,
    pub processor_speed_idx: u8,
    pub tx_power_idx: u8,
    pub memory_size_code: u8,
    pub sensor_mask: u8,
}

impl RegistrationRecord {
    pub fn has_sensor(&self, sensor: SensorInterface) -> bool {
        self.sensor_mask & (1 << sensor as u8) != 0
    }

    pub fn cpu_speed_mhz(&self) -> Option<u32> {
        CPU_SPEED_MHZ.get(self.processor_speed_idx as usize).copied()
    }

    pub fn tx_power_dbm(&self) -> Option<i8> {
        TX_POWER_DBM.get(self.tx_power_idx as usize).copied()
    }

    pub fn encode(&self) -> Result<Vec<u8>, CodecError> {
        check_index("processor_speed_idx", self.processor_speed_idx, CPU_SPEED_MHZ.len())?;
        check_index("tx_power_idx", self.tx_power_idx, TX_POWER_DBM.len())?;
        let mut w = BitWriter::new();
        w.put("device_id", self.device_id as u64, 16)?;
        w.put("storage_capacity_code", self.storage_capacity_code as u64, 8)?;
        w.put("processor_speed_idx", self.processor_speed_idx as u64, 4)?;
        w.put("tx_power_idx", self.tx_power_idx as u64, 4)?;
        w.put("memory_size_code", self.memory_size_code as u64, 8)?;
        w.put("sensor_mask", self.sensor_mask as u64, 8)?;
        Ok(w.finish(REGISTRATION_LEN))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = BitReader::new(bytes, REGISTRATION_LEN)?;
        let record = Self {
            device_id: r.take(16) as u16,
            storage_capacity_code: r.take(8) as u8,
            processor_speed_idx: r.take(4) as u8,
            tx_power_idx: r.take(4) as u8,
            memory_size_code: r.take(8) as u8,
            sensor_mask: r.take(8) as u8,
        };
        if record.processor_speed_idx as usize >= CPU_SPEED_MHZ.len() {
            return Err(CodecError::Reserved {
                field: "processor_speed_idx",
                value: record.processor_speed_idx as u64,
            });
        }
        if record.tx_power_idx as usize >= TX_POWER_DBM.len() {
            return Err(CodecError::Reserved {
                field: "tx_power_idx",
                value: record.tx_power_idx as u64,
            });
        }
        Ok(record)
    }
}

fn check_index(field: &'static str, idx: u8, len: usize) -> Result<(), CodecError> {
    if idx as usize >= len {
        return Err(CodecError::FieldRange {
            field,
            value: idx as u64,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_record_is_six_zero_bytes() {
        assert_eq!(RegistrationRecord::default().encode().unwrap(), vec![0; 6]);
    }

    #[test]
    fn device_id_leads_the_frame() {
        let r = RegistrationRecord {
            device_id: 0x0102,
            ..Default::default()
        };
        assert_eq!(r.encode().unwrap(), vec![0x01, 0x02, 0, 0, 0, 0]);
    }

    #[test]
    fn index_nibbles_share_a_byte() {
        let r = RegistrationRecord {
            processor_speed_idx: 0xA,
            tx_power_idx: 0x3,
            ..Default::default()
        };
        assert_eq!(r.encode().unwrap(), vec![0, 0, 0, 0xA3, 0, 0]);
    }

    #[test]
    fn out_of_table_index_is_an_encoding_error() {
        let r = RegistrationRecord {
            tx_power_idx: 13,
            ..Default::default()
        };
        assert_eq!(
            r.encode(),
            Err(CodecError::FieldRange { field: "tx_power_idx", value: 13 })
        );
    }

    #[test]
    fn short_frame_is_a_framing_error() {
        assert_eq!(
            RegistrationRecord::decode(&[0; 5]),
            Err(CodecError::Framing { expected: 6, actual: 5 })
        );
    }

    #[test]
    fn reserved_index_is_a_decode_error() {
        assert_eq!(
            RegistrationRecord::decode(&[0, 0, 0, 0xC0, 0, 0]),
            Err(CodecError::Reserved { field: "processor_speed_idx", value: 12 })
        );
    }

    #[test]
    fn lookup_tables() {
        let r = RegistrationRecord {
            processor_speed_idx: 11,
            tx_power_idx: 5,
            sensor_mask: 0b0001_0001,
            ..Default::default()
        };
        assert_eq!(r.cpu_speed_mhz(), Some(160));
        assert_eq!(r.tx_power_dbm(), Some(0));
        assert!(r.has_sensor(SensorInterface::Temperature));
        assert!(r.has_sensor(SensorInterface::Co2));
        assert!(!r.has_sensor(SensorInterface::Motion));
        assert!((storage_capacity_uj(24) - 10.0).abs() < 1e-9);
        assert!((memory_bytes(80) - 1024.0).abs() < 1e-9);
    }
}
