//! Golden frame fixtures: a decoded frame next to its exact wire bytes.
//!
//! ```json
//! { "name": "...", "frame": "context_update", "fields": { ... }, "hex": "00070a3c20" }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CodecError, ContextUpdate, ControlFrame, RegistrationRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", content = "fields", rename_all = "snake_case")]
pub enum GoldenFrame {
    Registration(RegistrationRecord),
    ContextUpdate(ContextUpdate),
    Control(ControlFrame),
}

impl GoldenFrame {
    pub fn encode(&self) -> Result<Vec<u8>, CodecError> {
        match self {
            GoldenFrame::Registration(r) => r.encode(),
            GoldenFrame::ContextUpdate(u) => u.encode(),
            GoldenFrame::Control(c) => Ok(c.encode()),
        }
    }

    /// Decodes `bytes` as the same kind of frame as `self`.
    pub fn decode_like(&self, bytes: &[u8]) -> Result<GoldenFrame, CodecError> {
        Ok(match self {
            GoldenFrame::Registration(_) => GoldenFrame::Registration(RegistrationRecord::decode(bytes)?),
            GoldenFrame::ContextUpdate(_) => GoldenFrame::ContextUpdate(ContextUpdate::decode(bytes)?),
            GoldenFrame::Control(_) => GoldenFrame::Control(ControlFrame::decode(bytes)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenCase {
    pub name: String,
    #[serde(flatten)]
    pub frame: GoldenFrame,
    pub hex: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenResult {
    pub path: PathBuf,
    pub name: String,
    /// `None` when encoding and decoding both reproduce the fixture.
    pub mismatch: Option<String>,
}

impl GoldenCase {
    /// Encodes `fields` and decodes `hex`, requiring both to match exactly.
    pub fn check(&self) -> Option<String> {
        let bytes = match hex_decode(&self.hex) {
            Ok(b) => b,
            Err(e) => return Some(e),
        };
        match self.frame.encode() {
            Ok(enc) if enc == bytes => {}
            Ok(enc) => return Some(format!("encoded {} but fixture says {}", hex_encode(&enc), self.hex)),
            Err(e) => return Some(format!("encode failed: {e}")),
        }
        match self.frame.decode_like(&bytes) {
            Ok(dec) if dec == self.frame => None,
            Ok(dec) => Some(format!("decoded {dec:?}, fixture says {:?}", self.frame)),
            Err(e) => Some(format!("decode failed: {e}")),
        }
    }
}

pub fn hex_encode(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hex_decode(text: &str) -> Result<Vec<u8>, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.len() % 2 != 0 {
        return Err(format!("odd-length hex `{text}`"));
    }
    (0..t.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&t[i..i + 2], 16).map_err(|e| format!("bad hex `{text}`: {e}")))
        .collect()
}

/// Checks every `*.json` fixture in `dir`, in file-name order.
pub fn check_dir(dir: &Path) -> std::io::Result<Vec<GoldenResult>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path)?;
        let result = match serde_json::from_str::<GoldenCase>(&text) {
            Ok(case) => GoldenResult {
                mismatch: case.check(),
                name: case.name,
                path,
            },
            Err(e) => GoldenResult {
                name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                mismatch: Some(format!("unreadable fixture: {e}")),
                path,
            },
        };
        out.push(result);
    }
    Ok(out)
}
