use serde::{Deserialize, Serialize};

use super::bits::{BitReader, BitWriter};
use super::CodecError;

pub const CONTROL_LEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlKind {
    /// Wake-up signal, edge to device.
    Wus = 0x01,
    /// Poll request, edge to device.
    Poll = 0x02,
    /// Request-to-send, device to edge.
    Rts = 0x03,
}

impl ControlKind {
    fn from_opcode(op: u64) -> Option<Self> {
        match op {
            0x01 => Some(Self::Wus),
            0x02 => Some(Self::Poll),
            0x03 => Some(Self::Rts),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ControlFrame {
    pub device_id: u16,
    pub kind: ControlKind,
}

impl ControlFrame {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = BitWriter::new();
        // Both fields are full-width, so neither put can fail.
        w.put("device_id", self.device_id as u64, 16).expect("16-bit field");
        w.put("opcode", self.kind as u64, 8).expect("8-bit field");
        w.finish(CONTROL_LEN)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = BitReader::new(bytes, CONTROL_LEN)?;
        let device_id = r.take(16) as u16;
        let op = r.take(8);
        let kind = ControlKind::from_opcode(op).ok_or(CodecError::Reserved { field: "opcode", value: op })?;
        Ok(Self { device_id, kind })
    }
}
