use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{CounterSet, EventPayload, RegionEdge, SampleKind, Trace, MTF_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Index into `Trace::events`; `None` for header or end-of-trace findings.
    pub event_index: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    fn error(event_index: Option<usize>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            event_index,
            message: message.into(),
        }
    }

    fn warning(event_index: Option<usize>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            event_index,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.event_index {
            Some(i) => write!(f, "{} at event {}: {}", self.severity, i, self.message),
            None => write!(f, "{}: {}", self.severity, self.message),
        }
    }
}

fn text_ok(s: &str, forbidden: &[char]) -> bool {
    !s.contains(|c: char| c == '|' || c == '\n' || c == '\r' || forbidden.contains(&c))
}

/// Checks every trace invariant. An empty result means the trace is valid.
pub fn validate_trace(trace: &Trace) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let h = &trace.header;
    if h.version != MTF_VERSION {
        diags.push(Diagnostic::error(
            None,
            format!("unsupported version {}", h.version),
        ));
    }
    if h.nominal_freq_mhz == 0 {
        diags.push(Diagnostic::error(None, "nominal frequency must be positive"));
    }

    let mut prev_ts = 0u64;
    let mut open_regions: HashSet<u32> = HashSet::new();
    let mut live_allocs: HashMap<u64, usize> = HashMap::new();
    let mut last_window: Option<SampleKind> = None;
    let mut last_counters: Option<CounterSet> = None;

    for (i, ev) in trace.events.iter().enumerate() {
        let at = Some(i);
        if ev.timestamp < prev_ts {
            diags.push(Diagnostic::error(
                at,
                format!("timestamp {} out of order (previous {})", ev.timestamp, prev_ts),
            ));
        }
        prev_ts = prev_ts.max(ev.timestamp);

        match &ev.payload {
            EventPayload::Static(o) => {
                if ev.timestamp != 0 {
                    diags.push(Diagnostic::error(at, "static object declared after time 0"));
                }
                if o.size == 0 {
                    diags.push(Diagnostic::error(at, "static object with zero size"));
                }
                if !text_ok(&o.name, &[]) {
                    diags.push(Diagnostic::error(at, "static object name is not serializable"));
                }
            }
            EventPayload::Alloc(a) => {
                if a.size == 0 {
                    diags.push(Diagnostic::error(at, "allocation with zero size"));
                }
                if !text_ok(&a.callsite, &[]) {
                    diags.push(Diagnostic::error(at, "allocation callsite is not serializable"));
                }
                if live_allocs.insert(a.base_address, i).is_some() {
                    diags.push(Diagnostic::warning(
                        at,
                        format!("allocation at {:#x} while a block with that base is live", a.base_address),
                    ));
                }
            }
            EventPayload::Free(f) => {
                if live_allocs.remove(&f.base_address).is_none() {
                    diags.push(Diagnostic::warning(
                        at,
                        format!("free of {:#x} without a live allocation", f.base_address),
                    ));
                }
            }
            EventPayload::Wrap(w) => {
                if w.begin_address >= w.end_address {
                    diags.push(Diagnostic::error(at, "wrapped region with begin >= end"));
                }
                if !text_ok(&w.label, &[]) {
                    diags.push(Diagnostic::error(at, "wrapped region label is not serializable"));
                }
            }
            EventPayload::Region(r) => {
                let balanced = match r.edge {
                    RegionEdge::Enter => open_regions.insert(r.region_id),
                    RegionEdge::Exit => open_regions.remove(&r.region_id),
                };
                if !balanced {
                    diags.push(Diagnostic::error(
                        at,
                        format!("unbalanced region marker for region {}", r.region_id),
                    ));
                }
            }
            EventPayload::Multiplex(m) => {
                if last_window == Some(m.kind) {
                    diags.push(Diagnostic::error(
                        at,
                        "consecutive multiplex windows of the same kind",
                    ));
                }
                last_window = Some(m.kind);
            }
            EventPayload::Sample(s) => {
                if let Some(prev) = &last_counters {
                    if let Some(name) = s.counters.regression_from(prev) {
                        diags.push(Diagnostic::error(
                            at,
                            format!("counter regression in {name}"),
                        ));
                    }
                }
                last_counters = Some(s.counters);
                for fr in &s.callstack {
                    if !text_ok(&fr.routine, &[':', ',']) || !text_ok(&fr.file, &[',']) {
                        diags.push(Diagnostic::error(at, "call-stack frame is not serializable"));
                        break;
                    }
                }
            }
        }
    }

    let mut still_open: Vec<u32> = open_regions.into_iter().collect();
    still_open.sort_unstable();
    for id in still_open {
        diags.push(Diagnostic::error(
            None,
            format!("unbalanced region marker: region {id} never exits"),
        ));
    }
    diags
}
