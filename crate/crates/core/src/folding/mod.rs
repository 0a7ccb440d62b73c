//! Folding of a repetitive region.
//!
//! Every instance of an instrumented region is mapped onto normalized time
//! `[0, 1]`, and the sparse samples of all retained instances are stacked
//! into one synthetic iteration. Counter deltas between consecutive samples
//! give binned rate curves; innermost frames give the source profile and
//! the phase partition.

mod curves;
mod phases;

use std::cmp::Ordering;

use thiserror::Error;

use crate::trace::{CounterSet, EventPayload, MemorySample, RegionEdge, Trace};

pub use self::curves::{fold_counters, MetricCurves};
pub use self::phases::{detect_phases, fold_source_profile, Phase, SourceProfile};
pub(crate) use self::phases::group_label;

pub const DEFAULT_BINS: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 0.2;
pub const DEFAULT_MIN_PHASE_WIDTH: f64 = 0.03;
pub const DEFAULT_SMOOTHING_WINDOW: usize = 5;
/// Fewer bins than this cannot resolve phases meaningfully.
pub const MIN_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum FoldError {
    #[error("unmatched {edge} marker for region {region_id} at t={timestamp}")]
    UnmatchedMarker {
        region_id: u32,
        timestamp: u64,
        edge: &'static str,
    },
    #[error("instance of region {region_id} entered at t={timestamp} has zero duration")]
    EmptyInstance { region_id: u32, timestamp: u64 },
    #[error("no instances of region {0} in trace")]
    NoInstances(u32),
    #[error("{0} bins requested, at least {MIN_BINS} required")]
    TooFewBins(usize),
    #[error("invalid fold parameter: {0}")]
    BadParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionInstance {
    pub index: usize,
    pub enter_ts: u64,
    pub exit_ts: u64,
    pub duration: u64,
}

impl RegionInstance {
    pub fn new(index: usize, enter_ts: u64, exit_ts: u64) -> Self {
        RegionInstance {
            index,
            enter_ts,
            exit_ts,
            duration: exit_ts - enter_ts,
        }
    }

    pub fn contains(&self, ts: u64) -> bool {
        ts >= self.enter_ts && ts <= self.exit_ts
    }
}

/// A sample projected onto the synthetic iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldedSample {
    pub norm_time: f64,
    /// `RegionInstance::index` of the instance the sample came from.
    pub instance: usize,
    pub timestamp: u64,
    pub sample: MemorySample,
    /// Counter increase since the previous sample of the same instance.
    pub deltas: CounterSet,
    pub delta_time: u64,
}

/// Finds the enter/exit pairs of `region_id`, in trace order.
pub fn detect_instances(trace: &Trace, region_id: u32) -> Result<Vec<RegionInstance>, FoldError> {
    let mut out = Vec::new();
    let mut open: Option<u64> = None;
    for ev in &trace.events {
        let EventPayload::Region(r) = &ev.payload else {
            continue;
        };
        if r.region_id != region_id {
            continue;
        }
        match (r.edge, open) {
            (RegionEdge::Enter, None) => open = Some(ev.timestamp),
            (RegionEdge::Exit, Some(enter)) => {
                if ev.timestamp <= enter {
                    return Err(FoldError::EmptyInstance {
                        region_id,
                        timestamp: enter,
                    });
                }
                out.push(RegionInstance::new(out.len(), enter, ev.timestamp));
                open = None;
            }
            (RegionEdge::Enter, Some(_)) => {
                return Err(FoldError::UnmatchedMarker {
                    region_id,
                    timestamp: ev.timestamp,
                    edge: "enter",
                })
            }
            (RegionEdge::Exit, None) => {
                return Err(FoldError::UnmatchedMarker {
                    region_id,
                    timestamp: ev.timestamp,
                    edge: "exit",
                })
            }
        }
    }
    if let Some(enter) = open {
        return Err(FoldError::UnmatchedMarker {
            region_id,
            timestamp: enter,
            edge: "enter",
        });
    }
    Ok(out)
}

/// Median instance duration; mean of the two middle values for even counts.
pub fn median_duration(instances: &[RegionInstance]) -> f64 {
    if instances.is_empty() {
        return 0.0;
    }
    let mut d: Vec<u64> = instances.iter().map(|i| i.duration).collect();
    d.sort_unstable();
    let n = d.len();
    if n % 2 == 1 {
        d[n / 2] as f64
    } else {
        (d[n / 2 - 1] as f64 + d[n / 2] as f64) / 2.0
    }
}

/// Keeps instances whose duration lies within `±tolerance` of the median.
/// At least the instance closest to the median always survives.
pub fn filter_instances(instances: &[RegionInstance], tolerance: f64) -> Vec<RegionInstance> {
    if instances.is_empty() {
        return Vec::new();
    }
    let median = median_duration(instances);
    let lo = (1.0 - tolerance) * median;
    let hi = (1.0 + tolerance) * median;
    let kept: Vec<RegionInstance> = instances
        .iter()
        .filter(|i| {
            let d = i.duration as f64;
            d >= lo && d <= hi
        })
        .copied()
        .collect();
    if !kept.is_empty() {
        return kept;
    }
    let closest = instances
        .iter()
        .min_by(|a, b| {
            let da = (a.duration as f64 - median).abs();
            let db = (b.duration as f64 - median).abs();
            da.partial_cmp(&db).unwrap_or(Ordering::Equal)
        })
        .expect("non-empty");
    vec![*closest]
}

/// Projects timestamp-sorted samples onto the retained instances.
///
/// Samples outside every retained instance are dropped. When an exit and
/// the next enter share a timestamp, a sample at that instant belongs to the
/// entering instance. The first sample of an instance has zero deltas; it
/// serves as the counter baseline.
pub fn fold_samples<'a, I>(retained: &[RegionInstance], samples: I) -> Vec<FoldedSample>
where
    I: IntoIterator<Item = (u64, &'a MemorySample)>,
{
    let mut out = Vec::new();
    let mut last: Option<(usize, u64, CounterSet)> = None;
    for (ts, s) in samples {
        let pos = retained.partition_point(|i| i.enter_ts <= ts);
        if pos == 0 {
            continue;
        }
        let inst = &retained[pos - 1];
        if !inst.contains(ts) {
            continue;
        }
        let (deltas, delta_time) = match last {
            Some((idx, prev_ts, prev)) if idx == inst.index => {
                (s.counters.saturating_delta(&prev), ts - prev_ts)
            }
            _ => (CounterSet::default(), 0),
        };
        last = Some((inst.index, ts, s.counters));
        out.push(FoldedSample {
            norm_time: (ts - inst.enter_ts) as f64 / inst.duration as f64,
            instance: inst.index,
            timestamp: ts,
            sample: s.clone(),
            deltas,
            delta_time,
        });
    }
    // stable: ties keep (instance, time) order
    out.sort_by(|a, b| a.norm_time.total_cmp(&b.norm_time));
    out
}

/// Bin holding normalized time `t`.
pub(crate) fn bin_of(t: f64, bins: usize) -> usize {
    ((t * bins as f64) as usize).min(bins - 1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoldConfig {
    pub bins: usize,
    /// Allowed relative deviation from the median instance duration.
    pub tolerance: f64,
    pub min_phase_width: f64,
    pub smoothing_window: usize,
}

impl Default for FoldConfig {
    fn default() -> Self {
        FoldConfig {
            bins: DEFAULT_BINS,
            tolerance: DEFAULT_TOLERANCE,
            min_phase_width: DEFAULT_MIN_PHASE_WIDTH,
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
        }
    }
}

impl FoldConfig {
    pub fn validate(&self) -> Result<(), FoldError> {
        if self.bins < MIN_BINS {
            return Err(FoldError::TooFewBins(self.bins));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(FoldError::BadParameter(format!("tolerance {}", self.tolerance)));
        }
        if !(0.0..1.0).contains(&self.min_phase_width) {
            return Err(FoldError::BadParameter(format!(
                "min phase width {}",
                self.min_phase_width
            )));
        }
        if self.smoothing_window == 0 {
            return Err(FoldError::BadParameter("smoothing window 0".into()));
        }
        Ok(())
    }
}

/// A region folded onto one synthetic iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldedRegion {
    pub region_id: u32,
    pub detected_instances: usize,
    pub instances: Vec<RegionInstance>,
    pub median_duration: f64,
    /// Sorted by `norm_time`; includes counter-only pseudo-samples.
    pub samples: Vec<FoldedSample>,
    pub curves: MetricCurves,
    pub profile: SourceProfile,
    pub phases: Vec<Phase>,
}

impl FoldedRegion {
    /// Folded samples that are real memory references.
    pub fn access_samples(&self) -> impl Iterator<Item = &FoldedSample> + '_ {
        self.samples.iter().filter(|f| !f.sample.is_pseudo())
    }

    /// Wall-clock length of `[start, end)` in the median iteration.
    pub fn span_ns(&self, start: f64, end: f64) -> f64 {
        (end - start) * self.median_duration
    }
}

/// Runs the whole folding stage for one region.
pub fn fold_region(trace: &Trace, region_id: u32, config: &FoldConfig) -> Result<FoldedRegion, FoldError> {
    config.validate()?;
    let detected = detect_instances(trace, region_id)?;
    if detected.is_empty() {
        return Err(FoldError::NoInstances(region_id));
    }
    let retained = filter_instances(&detected, config.tolerance);
    let samples = fold_samples(&retained, trace.samples());
    let curves = fold_counters(&samples, config.bins, config.smoothing_window)?;
    let profile = fold_source_profile(&samples, config.bins);
    let phases = detect_phases(&profile, config.min_phase_width);
    Ok(FoldedRegion {
        region_id,
        detected_instances: detected.len(),
        median_duration: median_duration(&retained),
        instances: retained,
        samples,
        curves,
        profile,
        phases,
    })
}
