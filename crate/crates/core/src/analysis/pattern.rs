use std::collections::BTreeMap;
use std::fmt;

use crate::folding::FoldedRegion;
use crate::object_map::{DataObject, ObjectMap, ObjectRef};

pub const DEFAULT_MIN_PATTERN_SAMPLES: usize = 30;
/// Minimum r² for a linear traversal.
pub const LINEAR_R2: f64 = 0.8;
/// Below this r² the accesses are considered random.
pub const RANDOM_R2: f64 = 0.3;
/// Fraction of the object a sweep must span before the whole object is
/// assumed traversed.
pub const BANDWIDTH_MIN_COVERAGE: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PatternClass {
    Ascending,
    Descending,
    Random,
    Insufficient,
}

impl PatternClass {
    pub fn name(self) -> &'static str {
        match self {
            PatternClass::Ascending => "ascending",
            PatternClass::Descending => "descending",
            PatternClass::Random => "random",
            PatternClass::Insufficient => "insufficient",
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, PatternClass::Ascending | PatternClass::Descending)
    }
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Least-squares fit of byte offset against normalized time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternFit {
    pub class: PatternClass,
    /// Bytes per unit of normalized time.
    pub slope: f64,
    pub r2: f64,
    /// Spanned offsets as a fraction of the object size.
    pub coverage: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternResult {
    pub object_id: u32,
    pub phase: String,
    pub fit: PatternFit,
}

/// Classifies `(norm_time, offset)` points of one object.
pub fn fit_access_pattern(points: &[(f64, u64)], object_size: u64, min_samples: usize) -> PatternFit {
    let n = points.len();
    let coverage = match (
        points.iter().map(|p| p.1).min(),
        points.iter().map(|p| p.1).max(),
    ) {
        (Some(lo), Some(hi)) if object_size > 0 => (hi - lo) as f64 / object_size as f64,
        _ => 0.0,
    };
    let insufficient = PatternFit {
        class: PatternClass::Insufficient,
        slope: 0.0,
        r2: 0.0,
        coverage,
        samples: n,
    };
    if n < min_samples.max(2) {
        return insufficient;
    }
    let nf = n as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1 as f64).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in points {
        let dt = t - mt;
        let dy = y as f64 - my;
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return insufficient;
    }
    let slope = sxy / sxx;
    let r2 = ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0);
    let class = if r2 >= LINEAR_R2 && slope > 0.0 {
        PatternClass::Ascending
    } else if r2 >= LINEAR_R2 && slope < 0.0 {
        PatternClass::Descending
    } else if r2 < RANDOM_R2 {
        PatternClass::Random
    } else {
        PatternClass::Insufficient
    };
    PatternFit {
        class,
        slope,
        r2,
        coverage,
        samples: n,
    }
}

/// Fits every (object, phase) pair touched by the folded loads and stores.
pub fn detect_patterns(folded: &FoldedRegion, map: &ObjectMap, min_samples: usize) -> Vec<PatternResult> {
    let mut points: BTreeMap<(usize, u32), Vec<(f64, u64)>> = BTreeMap::new();
    for f in folded.access_samples() {
        let ObjectRef::Object { id, offset } = map.resolve(f.sample.address, f.timestamp) else {
            continue;
        };
        if let Some(pi) = folded.phases.iter().position(|p| p.contains(f.norm_time)) {
            points.entry((pi, id)).or_default().push((f.norm_time, offset));
        }
    }
    points
        .into_iter()
        .map(|((pi, id), pts)| {
            let size = map.get(id).map_or(0, |o| o.size);
            PatternResult {
                object_id: id,
                phase: folded.phases[pi].label.clone(),
                fit: fit_access_pattern(&pts, size, min_samples),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandwidthEstimate {
    pub object_id: u32,
    pub phase: String,
    pub bytes_traversed: u64,
    pub duration_ns: f64,
    /// 10^6 bytes per second.
    pub mb_per_s: f64,
}

/// Bandwidth of a linear sweep, assuming the whole object is traversed
/// during the phase. Only sweeps spanning most of the object qualify.
pub fn estimate_bandwidth(
    pattern: &PatternResult,
    object: &DataObject,
    phase_duration_ns: f64,
) -> Option<BandwidthEstimate> {
    if !pattern.fit.class.is_linear()
        || pattern.fit.coverage < BANDWIDTH_MIN_COVERAGE
        || phase_duration_ns <= 0.0
    {
        return None;
    }
    Some(BandwidthEstimate {
        object_id: object.id,
        phase: pattern.phase.clone(),
        bytes_traversed: object.size,
        duration_ns: phase_duration_ns,
        mb_per_s: object.size as f64 * 1e3 / phase_duration_ns,
    })
}
