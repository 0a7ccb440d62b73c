/// Address axis with the unused space between occupied ranges squeezed.
///
/// Any gap wider than `gap_threshold` is shortened to exactly
/// `gap_threshold`, so distinct covered addresses keep their order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddressAxis {
    /// Merged `[lo, hi)` ranges with the compressed position of `lo`.
    segments: Vec<(u64, u64, u64)>,
    gap_threshold: u64,
}

impl AddressAxis {
    pub fn new(ranges: impl IntoIterator<Item = (u64, u64)>, gap_threshold: u64) -> Self {
        let mut ranges: Vec<(u64, u64)> = ranges.into_iter().filter(|r| r.1 > r.0).collect();
        ranges.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::new();
        for (lo, hi) in ranges {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        let mut segments = Vec::with_capacity(merged.len());
        let mut pos = 0u64;
        let mut prev_hi: Option<u64> = None;
        for (lo, hi) in merged {
            if let Some(p) = prev_hi {
                pos += (lo - p).min(gap_threshold);
            }
            segments.push((lo, hi, pos));
            pos += hi - lo;
            prev_hi = Some(hi);
        }
        AddressAxis {
            segments,
            gap_threshold,
        }
    }

    pub fn gap_threshold(&self) -> u64 {
        self.gap_threshold
    }

    /// Covered ranges, merged and sorted.
    pub fn ranges(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.segments.iter().map(|s| (s.0, s.1))
    }

    /// Position on the compressed axis. Strictly monotone over covered
    /// addresses; addresses inside a squeezed gap are clamped to its start.
    pub fn compress(&self, address: u64) -> u64 {
        let i = self.segments.partition_point(|s| s.0 <= address);
        if i == 0 {
            return 0;
        }
        let (lo, hi, pos) = self.segments[i - 1];
        if address < hi {
            pos + (address - lo)
        } else {
            let gap_end = self.segments.get(i).map_or(u64::MAX, |s| s.0);
            pos + (hi - lo) + (address - hi).min(self.gap_threshold).min(gap_end - hi)
        }
    }
}
