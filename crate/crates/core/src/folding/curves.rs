use super::{bin_of, FoldError, FoldedSample, MIN_BINS};

/// Binned rate curves of the folded iteration. `None` marks a bin without
/// any sample that measured elapsed time.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricCurves {
    pub bins: usize,
    /// Samples per bin that contributed a non-empty interval.
    pub support: Vec<u32>,
    /// Instructions per microsecond.
    pub mips: Vec<Option<f64>>,
    pub l1d_per_instr: Vec<Option<f64>>,
    pub l2_per_instr: Vec<Option<f64>>,
    pub l3_per_instr: Vec<Option<f64>>,
    pub branch_per_instr: Vec<Option<f64>>,
    pub ipc: Vec<Option<f64>>,
}

impl MetricCurves {
    pub fn is_empty_bin(&self, bin: usize) -> bool {
        self.support[bin] == 0
    }

    /// Center of `bin` in normalized time.
    pub fn bin_center(&self, bin: usize) -> f64 {
        (bin as f64 + 0.5) / self.bins as f64
    }
}

#[derive(Clone, Copy, Default)]
struct BinSums {
    time_ns: u64,
    instructions: u64,
    cycles: u64,
    l1d: u64,
    l2: u64,
    l3: u64,
    branches: u64,
    support: u32,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Centered moving average over the non-empty bins of a `window`-wide
/// neighborhood. Empty bins stay empty.
fn smooth(raw: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let half = window / 2;
    (0..raw.len())
        .map(|i| {
            raw[i]?;
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(raw.len() - 1);
            let (sum, n) = raw[lo..=hi]
                .iter()
                .flatten()
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            Some(sum / n as f64)
        })
        .collect()
}

/// Accumulates counter deltas per bin and converts them to rates.
pub fn fold_counters(
    folded: &[FoldedSample],
    bins: usize,
    window: usize,
) -> Result<MetricCurves, FoldError> {
    if bins < MIN_BINS {
        return Err(FoldError::TooFewBins(bins));
    }
    let mut sums = vec![BinSums::default(); bins];
    for f in folded {
        if f.delta_time == 0 {
            continue;
        }
        let b = &mut sums[bin_of(f.norm_time, bins)];
        let d = &f.deltas;
        b.time_ns += f.delta_time;
        b.instructions += d.instructions;
        b.cycles += d.cycles;
        b.l1d += d.l1d_misses;
        b.l2 += d.l2_misses;
        b.l3 += d.l3_misses;
        b.branches += d.branch_instructions;
        b.support += 1;
    }
    let raw = |f: &dyn Fn(&BinSums) -> f64| -> Vec<Option<f64>> {
        sums.iter()
            .map(|b| (b.support > 0).then(|| f(b)))
            .collect()
    };
    let window = window.max(1);
    Ok(MetricCurves {
        bins,
        support: sums.iter().map(|b| b.support).collect(),
        mips: smooth(&raw(&|b| b.instructions as f64 * 1000.0 / b.time_ns as f64), window),
        l1d_per_instr: smooth(&raw(&|b| ratio(b.l1d, b.instructions)), window),
        l2_per_instr: smooth(&raw(&|b| ratio(b.l2, b.instructions)), window),
        l3_per_instr: smooth(&raw(&|b| ratio(b.l3, b.instructions)), window),
        branch_per_instr: smooth(&raw(&|b| ratio(b.branches, b.instructions)), window),
        ipc: smooth(&raw(&|b| ratio(b.instructions, b.cycles)), window),
    })
}
