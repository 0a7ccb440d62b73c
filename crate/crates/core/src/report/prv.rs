//! Folded samples as a minimal Paraver-style event trace.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::folding::FoldedRegion;
use crate::object_map::{ObjectMap, ObjectRef};
use crate::trace::{Access, SampleKind};

/// Time units spanning the folded iteration.
pub const PRV_TIME_SPAN: u64 = 1_000_000_000;
pub const PRV_HEADER: &str = "#Paraver (01/01/00 at 00:00):1000000000:1:1:1(1:1)";

pub const TYPE_CODE_LINE: u32 = 70_000_001;
pub const TYPE_OBJECT: u32 = 70_000_002;
pub const TYPE_LATENCY: u32 = 70_000_003;
pub const TYPE_LEVEL: u32 = 70_000_004;
pub const TYPE_KIND: u32 = 70_000_005;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrvRecord {
    pub time: u64,
    pub event_type: u32,
    pub value: u64,
}

#[derive(Debug, Error)]
pub enum PrvError {
    #[error("missing or unexpected header")]
    Header,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn prv_time(norm_time: f64) -> u64 {
    ((norm_time.clamp(0.0, 1.0) * PRV_TIME_SPAN as f64).round() as u64).min(PRV_TIME_SPAN)
}

/// Records of every folded access sample, in time order.
pub fn folded_records(folded: &FoldedRegion, map: &ObjectMap) -> Vec<PrvRecord> {
    let mut out = Vec::new();
    for f in folded.access_samples() {
        let time = prv_time(f.norm_time);
        let mut push = |event_type, value| {
            out.push(PrvRecord {
                time,
                event_type,
                value,
            })
        };
        if let Some(frame) = f.sample.innermost() {
            push(TYPE_CODE_LINE, u64::from(frame.line));
        }
        if let ObjectRef::Object { id, .. } = map.resolve(f.sample.address, f.timestamp) {
            push(TYPE_OBJECT, u64::from(id));
        }
        if let Access::Load {
            latency_cycles,
            level,
        } = f.sample.access
        {
            push(TYPE_LATENCY, u64::from(latency_cycles));
            push(TYPE_LEVEL, level.index() as u64 + 1);
        }
        push(
            TYPE_KIND,
            match f.sample.kind() {
                SampleKind::Load => 0,
                SampleKind::Store => 1,
            },
        );
    }
    out
}

pub fn write_prv<W: Write>(records: &[PrvRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{PRV_HEADER}")?;
    for r in records {
        writeln!(w, "2:0:1:1:1:{}:{}:{}", r.time, r.event_type, r.value)?;
    }
    w.flush()
}

/// Writes the folded trace to `path`.
pub fn emit_folded_trace(folded: &FoldedRegion, map: &ObjectMap, path: &Path) -> io::Result<()> {
    let records = folded_records(folded, map);
    write_prv(&records, BufWriter::new(File::create(path)?))
}

/// Reads back the subset written by [`write_prv`].
pub fn read_folded_trace(text: &str) -> Result<Vec<PrvRecord>, PrvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == PRV_HEADER => {}
        _ => return Err(PrvError::Header),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let syntax = |message: &str| PrvError::Syntax {
            line: idx + 1,
            message: message.to_string(),
        };
        let f: Vec<&str> = line.split(':').collect();
        if f.len() != 8 || f[..5] != ["2", "0", "1", "1", "1"] {
            return Err(syntax("expected 2:0:1:1:1:<time>:<type>:<value>"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| syntax("invalid number"));
        out.push(PrvRecord {
            time: num(f[5])?,
            event_type: u32::try_from(num(f[6])?).map_err(|_| syntax("type out of range"))?,
            value: num(f[7])?,
        });
    }
    Ok(out)
}
