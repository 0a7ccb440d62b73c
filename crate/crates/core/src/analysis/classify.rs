use std::collections::{BTreeMap, BTreeSet};

use super::AnalysisError;
use crate::folding::FoldedRegion;
use crate::trace::Level;

pub const DEFAULT_MODE_BIN_WIDTH: u32 = 10;
pub const DEFAULT_PEAK_SHARE: f64 = 0.15;

/// One (phase, level) cell of the access table.
#[derive(Clone, Debug, PartialEq)]
pub struct AccessRow {
    pub phase: String,
    pub level: Level,
    /// Fraction of the phase's load samples served by `level`.
    pub share: f64,
    pub samples: u64,
    /// Mean latency in cycles; `None` when no sample hit the level.
    pub mean_cost: Option<f64>,
    pub modes: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AccessTable {
    pub rows: Vec<AccessRow>,
    pub warnings: Vec<String>,
}

impl AccessTable {
    pub fn rows_for<'a>(&'a self, phase: &'a str) -> impl Iterator<Item = &'a AccessRow> + 'a {
        self.rows.iter().filter(move |r| r.phase == phase)
    }

    pub fn row(&self, phase: &str, level: Level) -> Option<&AccessRow> {
        self.rows
            .iter()
            .find(|r| r.phase == phase && r.level == level)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeConfig {
    pub bin_width: u32,
    pub peak_share: f64,
}

impl Default for ModeConfig {
    fn default() -> Self {
        ModeConfig {
            bin_width: DEFAULT_MODE_BIN_WIDTH,
            peak_share: DEFAULT_PEAK_SHARE,
        }
    }
}

/// Peaks of a fixed-width latency histogram.
///
/// A local-maximum bin becomes a mode when the bins within two of it hold at
/// least `peak_share` of all samples. Peaks are taken largest first and each
/// claims its neighborhood, so one population never yields two modes. The
/// mode value is the rounded mean of the samples in the claimed bins.
pub fn detect_latency_modes(latencies: &[u32], config: ModeConfig) -> Result<Vec<u32>, AnalysisError> {
    if latencies.is_empty() {
        return Err(AnalysisError::EmptyLatencies);
    }
    let width = config.bin_width.max(1);
    // bin -> (count, sum)
    let mut hist: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    for &l in latencies {
        let e = hist.entry(l / width).or_default();
        e.0 += 1;
        e.1 += u64::from(l);
    }
    let count = |b: Option<u32>| b.and_then(|b| hist.get(&b)).map_or(0, |e| e.0);

    let mut peaks: Vec<(u32, u64)> = hist
        .iter()
        .filter(|(&b, &(c, _))| c >= count(b.checked_sub(1)) && c >= count(b.checked_add(1)))
        .map(|(&b, &(c, _))| (b, c))
        .collect();
    peaks.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let need = config.peak_share * latencies.len() as f64;
    let mut claimed: BTreeSet<u32> = BTreeSet::new();
    let mut modes = Vec::new();
    for (peak, _) in peaks {
        if claimed.contains(&peak) {
            continue;
        }
        let window: Vec<u32> = (peak.saturating_sub(2)..=peak.saturating_add(2))
            .filter(|b| !claimed.contains(b) && hist.contains_key(b))
            .collect();
        let (n, sum) = window
            .iter()
            .map(|b| hist[b])
            .fold((0u64, 0u64), |(n, s), (c, t)| (n + c, s + t));
        if (n as f64) < need {
            continue;
        }
        claimed.extend(window);
        modes.push((sum as f64 / n as f64).round() as u32);
    }
    modes.sort_unstable();
    modes.dedup();
    Ok(modes)
}

/// Per-phase share of load samples served by each hierarchy level, with
/// mean cost and latency modes. Pseudo-samples are excluded.
pub fn classify_accesses(folded: &FoldedRegion, modes: ModeConfig) -> AccessTable {
    let mut table = AccessTable::default();
    for phase in &folded.phases {
        let mut per_level: [Vec<u32>; 5] = Default::default();
        for f in folded.access_samples() {
            if !phase.contains(f.norm_time) {
                continue;
            }
            if let Some((lat, level)) = f.sample.load_info() {
                per_level[level.index()].push(lat);
            }
        }
        let total: usize = per_level.iter().map(Vec::len).sum();
        if total == 0 {
            table
                .warnings
                .push(format!("phase {} has no load samples", phase.label));
            for level in Level::ALL {
                table.rows.push(AccessRow {
                    phase: phase.label.clone(),
                    level,
                    share: 0.0,
                    samples: 0,
                    mean_cost: None,
                    modes: Vec::new(),
                });
            }
            continue;
        }
        for level in Level::ALL {
            let lats = &per_level[level.index()];
            if lats.is_empty() {
                continue;
            }
            let mean = lats.iter().map(|&l| f64::from(l)).sum::<f64>() / lats.len() as f64;
            table.rows.push(AccessRow {
                phase: phase.label.clone(),
                level,
                share: lats.len() as f64 / total as f64,
                samples: lats.len() as u64,
                mean_cost: Some(mean),
                modes: detect_latency_modes(lats, modes).expect("non-empty"),
            });
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modes(l: &[u32]) -> Vec<u32> {
        detect_latency_modes(l, ModeConfig::default()).unwrap()
    }

    #[test]
    fn constant_latency_is_one_mode() {
        assert_eq!(modes(&[7; 100]), vec![7]);
    }

    #[test]
    fn bimodal_dram() {
        let mut l = Vec::new();
        for i in 0..500u32 {
            l.push(345 + i % 11);
            l.push(795 + i % 11);
        }
        assert_eq!(modes(&l), vec![350, 800]);
    }

    #[test]
    fn uniform_has_no_mode() {
        let l: Vec<u32> = (0..1000).collect();
        assert!(modes(&l).is_empty());
    }

    #[test]
    fn adjacent_bins_do_not_double_count() {
        // 349 and 350 fall in neighboring bins with equal counts
        let l: Vec<u32> = (0..100).map(|i| if i % 2 == 0 { 349 } else { 350 }).collect();
        assert_eq!(modes(&l), vec![350]);
    }

    #[test]
    fn minor_population_below_share_is_ignored() {
        let mut l = vec![7u32; 90];
        l.extend([400u32; 10]);
        assert_eq!(modes(&l), vec![7]);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(detect_latency_modes(&[], ModeConfig::default()).is_err());
    }
}
