//! Raw signal lines: one strict JSON object per line.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::diag::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSignal {
    pub seq: u64,
    pub kind: String,
    pub payload: Map<String, Value>,
    pub wall_time_ms: u64,
}

impl RawSignal {
    /// Bytes of the hex string in `payload.raw`, if present and well formed.
    pub fn raw_bytes(&self) -> Option<Vec<u8>> {
        hex::decode(self.payload.get("raw")?.as_str()?).ok()
    }
}

/// Parses one line; `line` is used only for the diagnostic position.
pub fn parse_signal(text: &str, line: u32) -> Result<RawSignal, Diagnostic> {
    serde_json::from_str(text).map_err(|e| {
        Diagnostic::error(Span::new(line, e.column() as u32), format!("malformed signal: {e}"))
    })
}

/// Parses a `.jsonl` stream, skipping blank lines.
pub fn parse_signals(src: &str) -> Result<Vec<RawSignal>, Diagnostic> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_signal(l, i as u32 + 1))
        .collect()
}
