//! Quantitative products of a folded region: access classification per
//! phase and hierarchy level, latency modes, traversal patterns per
//! (object, phase), bandwidth of linear sweeps, object ranking and
//! multiplex-aware event count extrapolation.

mod classify;
mod multiplex;
mod pattern;

use thiserror::Error;

use crate::folding::{detect_instances, FoldError, FoldedRegion};
use crate::object_map::{rank_objects, ObjectMap, Ranking};
use crate::trace::{SampleKind, Trace};

pub use self::classify::{
    classify_accesses, detect_latency_modes, AccessRow, AccessTable, ModeConfig,
    DEFAULT_MODE_BIN_WIDTH, DEFAULT_PEAK_SHARE,
};
pub use self::multiplex::{extrapolate_counts, Extrapolation};
pub use self::pattern::{
    detect_patterns, estimate_bandwidth, fit_access_pattern, BandwidthEstimate, PatternClass,
    PatternFit, PatternResult, BANDWIDTH_MIN_COVERAGE, DEFAULT_MIN_PATTERN_SAMPLES, LINEAR_R2,
    RANDOM_R2,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("latency mode detection needs at least one sample")]
    EmptyLatencies,
    #[error("sampling period must be positive")]
    ZeroPeriod,
    #[error("extrapolation span is empty")]
    EmptySpan,
    #[error("{0:?} samples present but their kind was never active")]
    ZeroDuty(SampleKind),
    #[error("{sample:?} sample at t={timestamp} falls in a {active:?} multiplex window")]
    InconsistentWindow {
        timestamp: u64,
        sample: SampleKind,
        active: Option<SampleKind>,
    },
    #[error(transparent)]
    Fold(#[from] FoldError),
}

/// Sampling periods in events per sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplingPeriods {
    pub load: u64,
    pub store: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub modes: ModeConfig,
    pub min_pattern_samples: usize,
    /// Needed for count extrapolation, which is skipped without them.
    pub periods: Option<SamplingPeriods>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            modes: ModeConfig::default(),
            min_pattern_samples: DEFAULT_MIN_PATTERN_SAMPLES,
            periods: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub access: AccessTable,
    pub ranking: Ranking,
    pub patterns: Vec<PatternResult>,
    pub bandwidth: Vec<BandwidthEstimate>,
    pub extrapolation: Option<Extrapolation>,
}

/// Runs every analysis over a folded region.
pub fn analyze(
    trace: &Trace,
    map: &ObjectMap,
    folded: &FoldedRegion,
    config: &AnalysisConfig,
) -> Result<Analysis, AnalysisError> {
    let access = classify_accesses(folded, config.modes);
    let ranking = rank_objects(
        map,
        folded.access_samples().map(|f| (f.timestamp, &f.sample)),
    );
    let patterns = detect_patterns(folded, map, config.min_pattern_samples);
    let bandwidth = patterns
        .iter()
        .filter_map(|p| {
            let phase = folded.phases.iter().find(|ph| ph.label == p.phase)?;
            let object = map.get(p.object_id)?;
            estimate_bandwidth(p, object, folded.span_ns(phase.start_frac, phase.end_frac))
        })
        .collect();

    let extrapolation = match config.periods {
        None => None,
        Some(periods) => {
            let spans: Vec<(u64, u64)> = detect_instances(trace, folded.region_id)?
                .iter()
                .map(|i| (i.enter_ts, i.exit_ts))
                .collect();
            let samples: Vec<(u64, SampleKind)> = trace
                .samples()
                .filter(|(_, s)| !s.is_pseudo())
                .map(|(ts, s)| (ts, s.kind()))
                .collect();
            Some(extrapolate_counts(
                &samples,
                periods.load,
                periods.store,
                &trace.multiplex_windows(),
                &spans,
            )?)
        }
    };

    Ok(Analysis {
        access,
        ranking,
        patterns,
        bandwidth,
        extrapolation,
    })
}
