//! MTF v1 reader and writer.
//!
//! Line-oriented, `|`-separated records; `#` starts a comment line.
//!
//! ```text
//! H|<version>|<process_id>|<freq_mhz>
//! O|<name>|<base_hex>|<size>
//! A|<ts>|<base_hex>|<size>|<callsite>
//! F|<ts>|<base_hex>
//! W|<ts>|<begin_hex>|<end_hex>|<label>
//! R|<ts>|<region_id>|E|X
//! M|<ts>|L|S
//! S|<ts>|L|<addr_hex>|<lat>|<level>|<counters>|<frames>
//! S|<ts>|S|<addr_hex>|<hit>|<counters>|<frames>
//! ```

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{
    Access, AllocEvent, CounterSet, EventPayload, Frame, FreeEvent, Level, MemorySample,
    MultiplexWindow, RegionEdge, RegionMarker, SampleKind, StaticObjectDecl, Trace, TraceEvent,
    TraceHeader, WrappedRegionEvent, MTF_VERSION,
};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}, field `{field}`: {message}")]
    Syntax {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("trace has no header line")]
    MissingHeader,
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
}

impl ParseError {
    /// 1-based input line the error refers to, when there is one.
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { line, .. } => Some(*line),
            _ => None,
        }
    }
}

fn syntax(line: usize, field: &'static str, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        field,
        message: message.into(),
    }
}

struct Fields<'a> {
    line: usize,
    parts: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn expect_len(&self, tag: &str, n: usize) -> Result<(), ParseError> {
        if self.parts.len() != n {
            return Err(syntax(
                self.line,
                "record",
                format!(
                    "`{tag}` record needs {n} fields, found {}",
                    self.parts.len()
                ),
            ));
        }
        Ok(())
    }

    fn str(&self, i: usize) -> &'a str {
        self.parts[i]
    }

    fn int<T: std::str::FromStr>(&self, i: usize, field: &'static str) -> Result<T, ParseError> {
        self.parts[i]
            .parse()
            .map_err(|_| syntax(self.line, field, format!("invalid integer `{}`", self.parts[i])))
    }

    fn hex(&self, i: usize, field: &'static str) -> Result<u64, ParseError> {
        let raw = self.parts[i];
        let digits = raw
            .strip_prefix("0x")
            .ok_or_else(|| syntax(self.line, field, format!("expected 0x-prefixed hex, found `{raw}`")))?;
        u64::from_str_radix(digits, 16)
            .map_err(|_| syntax(self.line, field, format!("invalid hex `{raw}`")))
    }
}

fn parse_counters(line: usize, raw: &str) -> Result<CounterSet, ParseError> {
    let parts: Vec<&str> = raw.split(';').collect();
    if parts.len() != 6 {
        return Err(syntax(
            line,
            "counters",
            format!("expected 6 `;`-separated counters, found {}", parts.len()),
        ));
    }
    let mut values = [0u64; 6];
    for (slot, p) in values.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| syntax(line, "counters", format!("invalid counter `{p}`")))?;
    }
    Ok(CounterSet::from_array(values))
}

fn parse_frames(line: usize, raw: &str) -> Result<Vec<Frame>, ParseError> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|frame| {
            let (routine, rest) = frame
                .split_once(':')
                .ok_or_else(|| syntax(line, "frame", format!("expected routine:file:line, found `{frame}`")))?;
            let (file, lineno) = rest
                .rsplit_once(':')
                .ok_or_else(|| syntax(line, "frame", format!("expected routine:file:line, found `{frame}`")))?;
            let lineno = lineno
                .parse()
                .map_err(|_| syntax(line, "frame", format!("invalid line number in `{frame}`")))?;
            Ok(Frame::new(routine, file, lineno))
        })
        .collect()
}

fn parse_header(f: &Fields<'_>) -> Result<TraceHeader, ParseError> {
    f.expect_len("H", 4)?;
    let version: u32 = f.int(1, "version")?;
    if version != MTF_VERSION {
        return Err(syntax(
            f.line,
            "version",
            format!("unsupported MTF version {version}, expected {MTF_VERSION}"),
        ));
    }
    let process_id = f.int(2, "process_id")?;
    let nominal_freq_mhz: u32 = f.int(3, "freq_mhz")?;
    if nominal_freq_mhz == 0 {
        return Err(syntax(f.line, "freq_mhz", "frequency must be positive"));
    }
    Ok(TraceHeader {
        version,
        process_id,
        nominal_freq_mhz,
    })
}

fn parse_event(f: &Fields<'_>) -> Result<TraceEvent, ParseError> {
    let tag = f.str(0);
    if tag == "O" {
        f.expect_len("O", 4)?;
        let size: u64 = f.int(3, "size")?;
        if size == 0 {
            return Err(syntax(f.line, "size", "object size must be positive"));
        }
        return Ok(TraceEvent::new(
            0,
            EventPayload::Static(StaticObjectDecl {
                name: f.str(1).to_string(),
                base_address: f.hex(2, "base")?,
                size,
            }),
        ));
    }
    if f.parts.len() < 2 {
        return Err(syntax(f.line, "record", format!("`{tag}` record is missing its timestamp")));
    }
    let ts: u64 = f.int(1, "timestamp")?;
    let payload = match tag {
        "A" => {
            f.expect_len("A", 5)?;
            let size: u64 = f.int(3, "size")?;
            if size == 0 {
                return Err(syntax(f.line, "size", "allocation size must be positive"));
            }
            EventPayload::Alloc(AllocEvent {
                base_address: f.hex(2, "base")?,
                size,
                callsite: f.str(4).to_string(),
            })
        }
        "F" => {
            f.expect_len("F", 3)?;
            EventPayload::Free(FreeEvent {
                base_address: f.hex(2, "base")?,
            })
        }
        "W" => {
            f.expect_len("W", 5)?;
            let begin_address = f.hex(2, "begin")?;
            let end_address = f.hex(3, "end")?;
            if begin_address >= end_address {
                return Err(syntax(f.line, "end", "wrapped region must have begin < end"));
            }
            EventPayload::Wrap(WrappedRegionEvent {
                begin_address,
                end_address,
                label: f.str(4).to_string(),
            })
        }
        "R" => {
            f.expect_len("R", 4)?;
            let edge = match f.str(3) {
                "E" => RegionEdge::Enter,
                "X" => RegionEdge::Exit,
                other => return Err(syntax(f.line, "edge", format!("expected E or X, found `{other}`"))),
            };
            EventPayload::Region(RegionMarker {
                region_id: f.int(2, "region_id")?,
                edge,
            })
        }
        "M" => {
            f.expect_len("M", 3)?;
            let kind = f
                .str(2)
                .parse()
                .map_err(|_| syntax(f.line, "kind", format!("expected L or S, found `{}`", f.str(2))))?;
            EventPayload::Multiplex(MultiplexWindow { kind })
        }
        "S" => {
            if f.parts.len() < 3 {
                return Err(syntax(f.line, "kind", "sample record is missing its kind"));
            }
            let kind: SampleKind = f
                .str(2)
                .parse()
                .map_err(|_| syntax(f.line, "kind", format!("expected L or S, found `{}`", f.str(2))))?;
            let (access, rest) = match kind {
                SampleKind::Load => {
                    f.expect_len("S|L", 8)?;
                    let level = f
                        .str(5)
                        .parse::<Level>()
                        .map_err(|_| syntax(f.line, "level", format!("unknown level `{}`", f.str(5))))?;
                    let access = Access::Load {
                        latency_cycles: f.int(4, "latency")?,
                        level,
                    };
                    (access, 6)
                }
                SampleKind::Store => {
                    f.expect_len("S|S", 7)?;
                    let l1_hit = match f.str(4) {
                        "0" => false,
                        "1" => true,
                        other => {
                            return Err(syntax(f.line, "hit", format!("expected 0 or 1, found `{other}`")))
                        }
                    };
                    (Access::Store { l1_hit }, 5)
                }
            };
            EventPayload::Sample(MemorySample {
                address: f.hex(3, "address")?,
                access,
                counters: parse_counters(f.line, f.str(rest))?,
                callstack: parse_frames(f.line, f.str(rest + 1))?,
            })
        }
        other => return Err(syntax(f.line, "tag", format!("unknown record tag `{other}`"))),
    };
    Ok(TraceEvent::new(ts, payload))
}

/// Reads an MTF v1 stream. Stops at the first malformed line.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Trace, ParseError> {
    let mut header: Option<TraceHeader> = None;
    let mut events: Vec<TraceEvent> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim_end_matches('\r');
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        let fields = Fields {
            line: lineno,
            parts: text.split('|').collect(),
        };
        if fields.str(0) == "H" {
            if header.is_some() {
                return Err(syntax(
                    lineno,
                    "tag",
                    "second header line; traces must describe a single process",
                ));
            }
            header = Some(parse_header(&fields)?);
            continue;
        }
        if header.is_none() {
            return Err(syntax(lineno, "tag", "first record must be the `H` header"));
        }
        let event = parse_event(&fields)?;
        if let Some(prev) = events.last() {
            if event.timestamp < prev.timestamp {
                return Err(syntax(
                    lineno,
                    "timestamp",
                    format!(
                        "timestamp {} out of order (previous record at {})",
                        event.timestamp, prev.timestamp
                    ),
                ));
            }
        }
        events.push(event);
    }
    let header = header.ok_or(ParseError::MissingHeader)?;
    Ok(Trace { header, events })
}

pub fn parse_str(text: &str) -> Result<Trace, ParseError> {
    parse_trace(text.as_bytes())
}

fn write_frames<W: Write>(out: &mut W, frames: &[Frame]) -> io::Result<()> {
    for (i, fr) in frames.iter().enumerate() {
        if i > 0 {
            out.write_all(b",")?;
        }
        write!(out, "{fr}")?;
    }
    Ok(())
}

fn write_counters<W: Write>(out: &mut W, c: &CounterSet) -> io::Result<()> {
    let a = c.to_array();
    write!(out, "{};{};{};{};{};{}", a[0], a[1], a[2], a[3], a[4], a[5])
}

/// Writes `trace` as MTF v1, one record per line.
pub fn emit_trace<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    let h = &trace.header;
    writeln!(out, "H|{}|{}|{}", h.version, h.process_id, h.nominal_freq_mhz)?;
    for ev in &trace.events {
        let ts = ev.timestamp;
        match &ev.payload {
            EventPayload::Static(o) => {
                writeln!(out, "O|{}|{:#x}|{}", o.name, o.base_address, o.size)?
            }
            EventPayload::Alloc(a) => writeln!(
                out,
                "A|{ts}|{:#x}|{}|{}",
                a.base_address, a.size, a.callsite
            )?,
            EventPayload::Free(fr) => writeln!(out, "F|{ts}|{:#x}", fr.base_address)?,
            EventPayload::Wrap(w) => writeln!(
                out,
                "W|{ts}|{:#x}|{:#x}|{}",
                w.begin_address, w.end_address, w.label
            )?,
            EventPayload::Region(r) => {
                let edge = match r.edge {
                    RegionEdge::Enter => 'E',
                    RegionEdge::Exit => 'X',
                };
                writeln!(out, "R|{ts}|{}|{edge}", r.region_id)?
            }
            EventPayload::Multiplex(m) => writeln!(out, "M|{ts}|{}", m.kind.code())?,
            EventPayload::Sample(s) => {
                match s.access {
                    Access::Load {
                        latency_cycles,
                        level,
                    } => write!(out, "S|{ts}|L|{:#x}|{latency_cycles}|{level}|", s.address)?,
                    Access::Store { l1_hit } => {
                        write!(out, "S|{ts}|S|{:#x}|{}|", s.address, u8::from(l1_hit))?
                    }
                }
                write_counters(&mut out, &s.counters)?;
                out.write_all(b"|")?;
                write_frames(&mut out, &s.callstack)?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

pub fn to_mtf_string(trace: &Trace) -> String {
    let mut buf = Vec::new();
    emit_trace(trace, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("MTF output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_load_sample() {
        let t = parse_str("H|1|1|2500\nS|100|L|0x1000|7|L1|12;40;1;0;0;3|main:stream.c:300\n").unwrap();
        assert_eq!(t.header, TraceHeader::new(1, 2500));
        assert_eq!(t.events.len(), 1);
        let ev = &t.events[0];
        assert_eq!(ev.timestamp, 100);
        let s = ev.as_sample().unwrap();
        assert_eq!(s.address, 0x1000);
        assert_eq!(s.load_info(), Some((7, Level::L1)));
        assert_eq!(s.counters.to_array(), [12, 40, 1, 0, 0, 3]);
        assert_eq!(s.callstack, vec![Frame::new("main", "stream.c", 300)]);
    }

    #[test]
    fn parses_alloc_record() {
        let t = parse_str("H|1|1|2500\nA|50|0x2ab000|1048576|stream.c:181\n").unwrap();
        assert_eq!(
            t.events[0],
            TraceEvent::new(
                50,
                EventPayload::Alloc(AllocEvent {
                    base_address: 0x2ab000,
                    size: 1048576,
                    callsite: "stream.c:181".into(),
                })
            )
        );
    }

    #[test]
    fn rejects_out_of_order_timestamps() {
        let text = "H|1|1|2500\n\
                    S|90|L|0x1000|7|L1|1;1;0;0;0;0|main:s.c:1\n\
                    S|80|L|0x1000|7|L1|2;2;0;0;0;0|main:s.c:1\n";
        let err = parse_str(text).unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert!(err.to_string().contains("out of order"), "{err}");
    }

    #[test]
    fn rejects_version_mismatch() {
        let err = parse_str("H|2|1|2500\n").unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn rejects_unknown_tag_with_position() {
        let err = parse_str("H|1|1|2500\n# note\nQ|5|x\n").unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert!(err.to_string().contains("unknown record tag"));
    }

    #[test]
    fn rejects_second_header() {
        let err = parse_str("H|1|1|2500\nH|1|2|2500\n").unwrap_err();
        assert!(err.to_string().contains("single process"));
    }

    #[test]
    fn store_sample_has_single_hit_field() {
        let t = parse_str("H|1|1|2500\nS|5|S|0xff|1|1;2;3;4;5;6|f:a.c:1,main:a.c:9\n").unwrap();
        let s = t.events[0].as_sample().unwrap();
        assert_eq!(s.access, Access::Store { l1_hit: true });
        assert_eq!(s.callstack.len(), 2);
        // a load-shaped store record is malformed
        assert!(parse_str("H|1|1|2500\nS|5|S|0xff|7|L1|1;2;3;4;5;6|f:a.c:1\n").is_err());
    }

    #[test]
    fn empty_trace_emits_header_only() {
        let t = Trace::new(TraceHeader::new(3, 2500));
        assert_eq!(to_mtf_string(&t), "H|1|3|2500\n");
    }

    #[test]
    fn one_of_each_record_kind() {
        let counters = CounterSet::from_array([1, 2, 3, 4, 5, 6]);
        let mut t = Trace::new(TraceHeader::new(1, 2500));
        t.events = vec![
            TraceEvent::new(0, EventPayload::Static(StaticObjectDecl { name: "grid".into(), base_address: 0x601000, size: 4096 })),
            TraceEvent::new(1, EventPayload::Alloc(AllocEvent { base_address: 0x2ab000, size: 65536, callsite: "a.c:10".into() })),
            TraceEvent::new(2, EventPayload::Wrap(WrappedRegionEvent { begin_address: 0x5000, end_address: 0x9000, label: "sparse matrix".into() })),
            TraceEvent::new(3, EventPayload::Multiplex(MultiplexWindow { kind: SampleKind::Load })),
            TraceEvent::new(4, EventPayload::Region(RegionMarker { region_id: 1, edge: RegionEdge::Enter })),
            TraceEvent::new(5, EventPayload::Sample(MemorySample { address: 0x2ab010, access: Access::Load { latency_cycles: 7, level: Level::L1 }, counters, callstack: vec![Frame::new("k", "a.c", 20)] })),
            TraceEvent::new(7, EventPayload::Free(FreeEvent { base_address: 0x2ab000 })),
        ];
        let text = to_mtf_string(&t);
        assert_eq!(text.lines().count(), 8);
        assert_eq!(
            text,
            "H|1|1|2500\n\
             O|grid|0x601000|4096\n\
             A|1|0x2ab000|65536|a.c:10\n\
             W|2|0x5000|0x9000|sparse matrix\n\
             M|3|L\n\
             R|4|1|E\n\
             S|5|L|0x2ab010|7|L1|1;2;3;4;5;6|k:a.c:20\n\
             F|7|0x2ab000\n"
        );
        assert_eq!(parse_str(&text).unwrap(), t);
    }

    #[test]
    fn frame_file_may_contain_colons() {
        let t = parse_str("H|1|1|1\nS|5|L|0x10|3|L2|0;0;0;0;0;0|k:C:/src/a.c:4\n").unwrap();
        let s = t.events[0].as_sample().unwrap();
        assert_eq!(s.callstack[0], Frame::new("k", "C:/src/a.c", 4));
    }
}
