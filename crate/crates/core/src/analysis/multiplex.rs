use super::AnalysisError;
use crate::trace::SampleKind;

/// Estimated event totals from multiplexed sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrapolation {
    pub load_samples: u64,
    pub store_samples: u64,
    /// Fraction of the spans during which loads were sampled.
    pub load_duty: f64,
    pub store_duty: f64,
    pub est_loads: f64,
    pub est_stores: f64,
}

fn active_kind(windows: &[(u64, SampleKind)], ts: u64) -> Option<SampleKind> {
    let pos = windows.partition_point(|w| w.0 <= ts);
    (pos > 0).then(|| windows[pos - 1].1)
}

/// Time within `[start, end)` during which each kind was active.
fn active_time(windows: &[(u64, SampleKind)], start: u64, end: u64) -> (u64, u64) {
    let (mut load, mut store) = (0u64, 0u64);
    for (i, &(from, kind)) in windows.iter().enumerate() {
        let to = windows.get(i + 1).map_or(u64::MAX, |w| w.0);
        let lo = from.max(start);
        let hi = to.min(end);
        if hi <= lo {
            continue;
        }
        match kind {
            SampleKind::Load => load += hi - lo,
            SampleKind::Store => store += hi - lo,
        }
    }
    (load, store)
}

/// Scales sample counts by sampling period and multiplex duty cycle.
///
/// `spans` are the `[start, end]` intervals the estimate covers (usually the
/// region instances); samples outside them are ignored. Without any window
/// both kinds are taken as sampled all the time. A sample inside a window of
/// the other kind is an error.
pub fn extrapolate_counts(
    samples: &[(u64, SampleKind)],
    load_period: u64,
    store_period: u64,
    windows: &[(u64, SampleKind)],
    spans: &[(u64, u64)],
) -> Result<Extrapolation, AnalysisError> {
    if load_period == 0 || store_period == 0 {
        return Err(AnalysisError::ZeroPeriod);
    }
    let total: u64 = spans.iter().map(|&(s, e)| e.saturating_sub(s)).sum();
    if total == 0 {
        return Err(AnalysisError::EmptySpan);
    }
    let (load_duty, store_duty) = if windows.is_empty() {
        (1.0, 1.0)
    } else {
        let (l, s) = spans
            .iter()
            .map(|&(a, b)| active_time(windows, a, b))
            .fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
        (l as f64 / total as f64, s as f64 / total as f64)
    };

    let (mut loads, mut stores) = (0u64, 0u64);
    for &(ts, kind) in samples {
        if !spans.iter().any(|&(a, b)| ts >= a && ts <= b) {
            continue;
        }
        if !windows.is_empty() {
            match active_kind(windows, ts) {
                Some(k) if k == kind => {}
                active => {
                    return Err(AnalysisError::InconsistentWindow {
                        timestamp: ts,
                        sample: kind,
                        active,
                    })
                }
            }
        }
        match kind {
            SampleKind::Load => loads += 1,
            SampleKind::Store => stores += 1,
        }
    }

    let estimate = |n: u64, period: u64, duty: f64, kind| {
        if n == 0 {
            Ok(0.0)
        } else if duty <= 0.0 {
            Err(AnalysisError::ZeroDuty(kind))
        } else {
            Ok(n as f64 * period as f64 / duty)
        }
    };
    Ok(Extrapolation {
        load_samples: loads,
        store_samples: stores,
        load_duty,
        store_duty,
        est_loads: estimate(loads, load_period, load_duty, SampleKind::Load)?,
        est_stores: estimate(stores, store_period, store_duty, SampleKind::Store)?,
    })
}
