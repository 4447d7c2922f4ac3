use serde::{Deserialize, Serialize};

use super::{CONTEXT_UPDATE_LEN, CONTROL_LEN, REGISTRATION_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    Registration,
    ContextUpdate,
    Wus,
    Poll,
    Rts,
}

impl FrameKind {
    pub const fn bits(self) -> u64 {
        let bytes = match self {
            FrameKind::Registration => REGISTRATION_LEN,
            FrameKind::ContextUpdate => CONTEXT_UPDATE_LEN,
            FrameKind::Wus | FrameKind::Poll | FrameKind::Rts => CONTROL_LEN,
        };
        bytes as u64 * 8
    }
}

/// Control-plane bit totals, split by frame kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OverheadBits {
    pub registration: u64,
    pub context_update: u64,
    pub wus: u64,
    pub poll: u64,
    pub rts: u64,
}

impl OverheadBits {
    pub fn total(&self) -> u64 {
        self.registration + self.context_update + self.wus + self.poll + self.rts
    }

    pub fn merge(&mut self, other: &OverheadBits) {
        self.registration += other.registration;
        self.context_update += other.context_update;
        self.wus += other.wus;
        self.poll += other.poll;
        self.rts += other.rts;
    }
}

/// Running count of protocol frames sent during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameTrace {
    pub registration: u64,
    pub context_update: u64,
    pub wus: u64,
    pub poll: u64,
    pub rts: u64,
}

impl FrameTrace {
    pub fn record(&mut self, kind: FrameKind) {
        self.record_n(kind, 1);
    }

    pub fn record_n(&mut self, kind: FrameKind, n: u64) {
        let slot = match kind {
            FrameKind::Registration => &mut self.registration,
            FrameKind::ContextUpdate => &mut self.context_update,
            FrameKind::Wus => &mut self.wus,
            FrameKind::Poll => &mut self.poll,
            FrameKind::Rts => &mut self.rts,
        };
        *slot += n;
    }

    pub fn overhead_bits(&self) -> OverheadBits {
        OverheadBits {
            registration: self.registration * FrameKind::Registration.bits(),
            context_update: self.context_update * FrameKind::ContextUpdate.bits(),
            wus: self.wus * FrameKind::Wus.bits(),
            poll: self.poll * FrameKind::Poll.bits(),
            rts: self.rts * FrameKind::Rts.bits(),
        }
    }
}
