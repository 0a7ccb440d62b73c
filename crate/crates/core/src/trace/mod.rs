//! Event-trace data model and the MTF v1 text format.
//!
//! A [`Trace`] holds the records of a single process: region markers,
//! allocation lifecycle, wrapped regions, static object declarations,
//! load/store multiplex windows and the sampled memory references
//! themselves. Everything downstream consumes this model.

mod mtf;
mod validate;

use std::fmt;
use std::str::FromStr;

pub use self::mtf::{emit_trace, parse_str, parse_trace, to_mtf_string, ParseError};
pub use self::validate::{validate_trace, Diagnostic, Severity};

/// Only MTF version understood by this crate.
pub const MTF_VERSION: u32 = 1;

/// Trace preamble.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceHeader {
    pub version: u32,
    pub process_id: u32,
    /// Nominal core frequency, i.e. cycles per microsecond.
    pub nominal_freq_mhz: u32,
}

impl TraceHeader {
    pub fn new(process_id: u32, nominal_freq_mhz: u32) -> Self {
        TraceHeader {
            version: MTF_VERSION,
            process_id,
            nominal_freq_mhz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionEdge {
    Enter,
    Exit,
}

/// Kind of a sampled memory reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SampleKind {
    Load,
    Store,
}

impl SampleKind {
    pub fn code(self) -> &'static str {
        match self {
            SampleKind::Load => "L",
            SampleKind::Store => "S",
        }
    }
}

impl FromStr for SampleKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "L" => Ok(SampleKind::Load),
            "S" => Ok(SampleKind::Store),
            _ => Err(()),
        }
    }
}

/// Part of the memory hierarchy that served a sampled load.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    L1,
    /// Line-fill buffer: the line was already in flight.
    Lfb,
    L2,
    L3,
    Dram,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::L1, Level::Lfb, Level::L2, Level::L3, Level::Dram];

    pub fn name(self) -> &'static str {
        match self {
            Level::L1 => "L1",
            Level::Lfb => "LFB",
            Level::L2 => "L2",
            Level::L3 => "L3",
            Level::Dram => "DRAM",
        }
    }

    /// Position in [`Level::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "L1" => Ok(Level::L1),
            "LFB" => Ok(Level::Lfb),
            "L2" => Ok(Level::L2),
            "L3" => Ok(Level::L3),
            "DRAM" => Ok(Level::Dram),
            _ => Err(()),
        }
    }
}

/// Cumulative hardware counter readings since process start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CounterSet {
    pub instructions: u64,
    pub cycles: u64,
    pub l1d_misses: u64,
    pub l2_misses: u64,
    pub l3_misses: u64,
    pub branch_instructions: u64,
}

impl CounterSet {
    pub fn to_array(&self) -> [u64; 6] {
        [
            self.instructions,
            self.cycles,
            self.l1d_misses,
            self.l2_misses,
            self.l3_misses,
            self.branch_instructions,
        ]
    }

    pub fn from_array(a: [u64; 6]) -> Self {
        CounterSet {
            instructions: a[0],
            cycles: a[1],
            l1d_misses: a[2],
            l2_misses: a[3],
            l3_misses: a[4],
            branch_instructions: a[5],
        }
    }

    /// Element-wise difference, clamped at zero.
    pub fn saturating_delta(&self, earlier: &CounterSet) -> CounterSet {
        let now = self.to_array();
        let then = earlier.to_array();
        let mut out = [0u64; 6];
        for i in 0..6 {
            out[i] = now[i].saturating_sub(then[i]);
        }
        CounterSet::from_array(out)
    }

    /// Name of the first counter that is lower than in `earlier`, if any.
    pub fn regression_from(&self, earlier: &CounterSet) -> Option<&'static str> {
        const NAMES: [&str; 6] = [
            "instructions",
            "cycles",
            "l1d_misses",
            "l2_misses",
            "l3_misses",
            "branch_instructions",
        ];
        let now = self.to_array();
        let then = earlier.to_array();
        (0..6).find(|&i| now[i] < then[i]).map(|i| NAMES[i])
    }

    pub fn accumulate(&mut self, other: &CounterSet) {
        self.instructions += other.instructions;
        self.cycles += other.cycles;
        self.l1d_misses += other.l1d_misses;
        self.l2_misses += other.l2_misses;
        self.l3_misses += other.l3_misses;
        self.branch_instructions += other.branch_instructions;
    }
}

/// One call-stack frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frame {
    pub routine: String,
    pub file: String,
    pub line: u32,
}

impl Frame {
    pub fn new(routine: impl Into<String>, file: impl Into<String>, line: u32) -> Self {
        Frame {
            routine: routine.into(),
            file: file.into(),
            line,
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.routine, self.file, self.line)
    }
}

/// Kind-specific part of a sample. Loads carry cost and serving level,
/// stores only whether they hit in L1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Access {
    Load { latency_cycles: u32, level: Level },
    Store { l1_hit: bool },
}

/// A sampled memory reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemorySample {
    pub address: u64,
    pub access: Access,
    pub counters: CounterSet,
    /// Innermost frame first.
    pub callstack: Vec<Frame>,
}

impl MemorySample {
    pub fn kind(&self) -> SampleKind {
        match self.access {
            Access::Load { .. } => SampleKind::Load,
            Access::Store { .. } => SampleKind::Store,
        }
    }

    /// Counter-only snapshot taken at a region enter. These use address 0
    /// and never count as memory references.
    pub fn is_pseudo(&self) -> bool {
        self.address == 0
    }

    pub fn innermost(&self) -> Option<&Frame> {
        self.callstack.first()
    }

    pub fn load_info(&self) -> Option<(u32, Level)> {
        match self.access {
            Access::Load {
                latency_cycles,
                level,
            } => Some((latency_cycles, level)),
            Access::Store { .. } => None,
        }
    }

    /// Counter snapshot used as the baseline at a region enter.
    pub fn pseudo(counters: CounterSet) -> Self {
        MemorySample {
            address: 0,
            access: Access::Load {
                latency_cycles: 0,
                level: Level::L1,
            },
            counters,
            callstack: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMarker {
    pub region_id: u32,
    pub edge: RegionEdge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllocEvent {
    pub base_address: u64,
    pub size: u64,
    /// `file:line` of the allocation site.
    pub callsite: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeEvent {
    pub base_address: u64,
}

/// Analyst-declared region `[begin_address, end_address)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrappedRegionEvent {
    pub begin_address: u64,
    pub end_address: u64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticObjectDecl {
    pub name: String,
    pub base_address: u64,
    pub size: u64,
}

/// Which sample kind is collected from this point until the next window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplexWindow {
    pub kind: SampleKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventPayload {
    Region(RegionMarker),
    Alloc(AllocEvent),
    Free(FreeEvent),
    Wrap(WrappedRegionEvent),
    Static(StaticObjectDecl),
    Multiplex(MultiplexWindow),
    Sample(MemorySample),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    /// Nanoseconds since trace start.
    pub timestamp: u64,
    pub payload: EventPayload,
}

impl TraceEvent {
    pub fn new(timestamp: u64, payload: EventPayload) -> Self {
        TraceEvent { timestamp, payload }
    }

    pub fn as_sample(&self) -> Option<&MemorySample> {
        match &self.payload {
            EventPayload::Sample(s) => Some(s),
            _ => None,
        }
    }
}

/// Single-process event trace, sorted by timestamp.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new(header: TraceHeader) -> Self {
        Trace {
            header,
            events: Vec::new(),
        }
    }

    /// `(timestamp, sample)` for every sample record, in trace order.
    pub fn samples(&self) -> impl Iterator<Item = (u64, &MemorySample)> + '_ {
        self.events
            .iter()
            .filter_map(|e| e.as_sample().map(|s| (e.timestamp, s)))
    }

    /// `(timestamp, kind)` for every multiplex window record.
    pub fn multiplex_windows(&self) -> Vec<(u64, SampleKind)> {
        self.events
            .iter()
            .filter_map(|e| match &e.payload {
                EventPayload::Multiplex(w) => Some((e.timestamp, w.kind)),
                _ => None,
            })
            .collect()
    }
}
