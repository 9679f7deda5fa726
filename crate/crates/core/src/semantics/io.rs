//! JSONL trace files.
//!
//! The first line is a header `{"delta_small", "T", "delta_sample", "actions"?}`;
//! every following line is one segment `{"t_min", "atoms": {name: bool}}`.
//! Times are rationals written as strings (`"5"`, `"10/3"`).

use serde::{Deserialize, Serialize};

use super::trace::{Assignment, DenseTrace, Segment, TraceError};
use crate::grid::TimedAction;
use crate::logic::Duration;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub delta_small: Duration,
    #[serde(rename = "T")]
    pub horizon: Duration,
    pub delta_sample: Duration,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<TimedAction>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentLine {
    t_min: Duration,
    atoms: Assignment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub dense: DenseTrace,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceIoError {
    #[error("trace file is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid trace: {0}")]
    Trace(#[from] TraceError),
}

pub fn write_trace_jsonl(header: &TraceHeader, dense: &DenseTrace) -> String {
    let mut out = serde_json::to_string(header).expect("header serializes");
    out.push('\n');
    for seg in dense.segments() {
        let line = SegmentLine {
            t_min: seg.start,
            atoms: seg.atoms.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("segment serializes"));
        out.push('\n');
    }
    out
}

pub fn read_trace_jsonl(text: &str) -> Result<TraceFile, TraceIoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (header_line, header_text) = lines.next().ok_or(TraceIoError::Empty)?;
    let header: TraceHeader = serde_json::from_str(header_text).map_err(|e| TraceIoError::Line {
        line: header_line,
        message: format!("bad header: {e}"),
    })?;
    let mut segments = Vec::new();
    for (line, text) in lines {
        let seg: SegmentLine = serde_json::from_str(text).map_err(|e| TraceIoError::Line {
            line,
            message: e.to_string(),
        })?;
        segments.push(Segment {
            start: seg.t_min,
            atoms: seg.atoms,
        });
    }
    let dense = DenseTrace::new(header.delta_small, header.horizon, segments)?;
    Ok(TraceFile { header, dense })
}
