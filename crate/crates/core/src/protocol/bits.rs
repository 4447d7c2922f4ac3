use super::CodecError;

/// MSB-first packer for frames of at most 64 bits.
pub(crate) struct BitWriter {
    acc: u64,
    used: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self { acc: 0, used: 0 }
    }

    pub fn put(&mut self, field: &'static str, value: u64, width: u32) -> Result<(), CodecError> {
        debug_assert!(self.used + width <= 64);
        if width < 64 && value >> width != 0 {
            return Err(CodecError::FieldRange { field, value });
        }
        self.acc = (self.acc << width) | value;
        self.used += width;
        Ok(())
    }

    /// Pads with zeros to `len` bytes and emits big-endian.
    pub fn finish(self, len: usize) -> Vec<u8> {
        let total = len as u32 * 8;
        debug_assert!(self.used <= total);
        let word = self.acc << (total - self.used);
        word.to_be_bytes()[8 - len..].to_vec()
    }
}

pub(crate) struct BitReader {
    word: u64,
    remaining: u32,
}

impl BitReader {
    pub fn new(bytes: &[u8], expected: usize) -> Result<Self, CodecError> {
        if bytes.len() != expected {
            return Err(CodecError::Framing {
                expected,
                actual: bytes.len(),
            });
        }
        let word = bytes.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64);
        Ok(Self {
            word,
            remaining: expected as u32 * 8,
        })
    }

    pub fn take(&mut self, width: u32) -> u64 {
        debug_assert!(width <= self.remaining);
        self.remaining -= width;
        (self.word >> self.remaining) & ((1u64 << width) - 1)
    }
}
