use std::collections::HashMap;

use super::{bin_of, FoldedSample};
use crate::trace::Frame;

/// Time-based profile of the sampled code lines.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceProfile {
    pub bins: usize,
    /// Modal innermost frame per bin.
    pub dominant: Vec<Option<Frame>>,
    /// Every `(norm_time, innermost frame)` pair, sorted by time.
    pub scatter: Vec<(f64, Frame)>,
}

/// A sub-interval of the folded iteration dominated by one routine.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    /// `A`, `B`, ... or `a1`, `a2`, ... for a phase split on its hot line.
    pub label: String,
    /// Top-level label; equals `label` for unsplit phases.
    pub group: String,
    pub start_frac: f64,
    pub end_frac: f64,
    pub routine: String,
    /// Most observed code line.
    pub mocl: Option<(String, u32)>,
}

impl Phase {
    pub fn width(&self) -> f64 {
        self.end_frac - self.start_frac
    }

    /// Half-open membership, with the final phase closed at 1.
    pub fn contains(&self, norm_time: f64) -> bool {
        norm_time >= self.start_frac
            && (norm_time < self.end_frac || (self.end_frac >= 1.0 && norm_time <= 1.0))
    }
}

/// Most frequent key; ties resolved by the smaller key.
fn modal<K: Ord + Clone + std::hash::Hash>(items: impl IntoIterator<Item = K>) -> Option<K> {
    let mut counts: HashMap<K, usize> = HashMap::new();
    for k in items {
        *counts.entry(k).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|(ka, ca), (kb, cb)| ca.cmp(cb).then_with(|| kb.cmp(ka)))
        .map(|(k, _)| k)
}

fn frame_key(f: &Frame) -> (&str, u32, &str) {
    (f.file.as_str(), f.line, f.routine.as_str())
}

/// Per-bin dominant frame plus the full line scatter. Pseudo-samples and
/// samples without a call stack do not take part.
pub fn fold_source_profile(folded: &[FoldedSample], bins: usize) -> SourceProfile {
    let scatter: Vec<(f64, Frame)> = folded
        .iter()
        .filter(|f| !f.sample.is_pseudo())
        .filter_map(|f| f.sample.innermost().map(|fr| (f.norm_time, fr.clone())))
        .collect();
    let mut per_bin: Vec<Vec<&Frame>> = vec![Vec::new(); bins];
    for (t, fr) in &scatter {
        per_bin[bin_of(*t, bins)].push(fr);
    }
    let dominant = per_bin
        .iter()
        .map(|frames| {
            modal(frames.iter().map(|f| frame_key(f)))
                .map(|(file, line, routine)| Frame::new(routine, file, line))
        })
        .collect();
    SourceProfile {
        bins,
        dominant,
        scatter,
    }
}

/// Run of bins `[start, end)` sharing a key.
#[derive(Clone, Debug)]
struct Run<K> {
    start: usize,
    end: usize,
    key: K,
}

/// Fills gaps forward, then leading gaps backward.
fn fill_gaps<K: Clone>(keys: Vec<Option<K>>) -> Option<Vec<K>> {
    let first = keys.iter().flatten().next()?.clone();
    let mut cur = first;
    Some(
        keys.into_iter()
            .map(|k| {
                if let Some(k) = k {
                    cur = k;
                }
                cur.clone()
            })
            .collect(),
    )
}

fn runs_of<K: Clone + PartialEq>(keys: &[K], offset: usize) -> Vec<Run<K>> {
    let mut runs: Vec<Run<K>> = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.key == *k => r.end = offset + i + 1,
            _ => runs.push(Run {
                start: offset + i,
                end: offset + i + 1,
                key: k.clone(),
            }),
        }
    }
    runs
}

fn coalesce<K: PartialEq>(runs: Vec<Run<K>>) -> Vec<Run<K>> {
    let mut out: Vec<Run<K>> = Vec::with_capacity(runs.len());
    for r in runs {
        match out.last_mut() {
            Some(prev) if prev.key == r.key => prev.end = r.end,
            _ => out.push(r),
        }
    }
    out
}

/// Folds runs narrower than `min_bins` into the preceding run (or the
/// following one for a leading run) until none remain.
fn merge_narrow<K: PartialEq>(mut runs: Vec<Run<K>>, min_bins: f64) -> Vec<Run<K>> {
    loop {
        if runs.len() <= 1 {
            return runs;
        }
        let Some(i) = runs
            .iter()
            .position(|r| ((r.end - r.start) as f64) < min_bins - 1e-9)
        else {
            return runs;
        };
        let narrow = runs.remove(i);
        if i > 0 {
            runs[i - 1].end = narrow.end;
        } else {
            runs[0].start = narrow.start;
        }
        runs = coalesce(runs);
    }
}

pub(crate) fn group_label(i: usize) -> String {
    let mut n = i;
    let mut s = Vec::new();
    loop {
        s.push(b'A' + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    s.reverse();
    String::from_utf8(s).expect("ascii")
}

/// Splits the folded iteration into phases of consecutive bins sharing a
/// dominant routine. A phase whose hot line changes between stable sub-runs
/// is split into sub-phases (`a1`, `a2`, ...).
pub fn detect_phases(profile: &SourceProfile, min_width: f64) -> Vec<Phase> {
    let bins = profile.bins;
    let frac = |b: usize| b as f64 / bins as f64;
    let min_bins = min_width * bins as f64;

    let routines = profile
        .dominant
        .iter()
        .map(|d| d.as_ref().map(|f| f.routine.clone()))
        .collect();
    let Some(routines) = fill_gaps(routines) else {
        return vec![Phase {
            label: "A".into(),
            group: "A".into(),
            start_frac: 0.0,
            end_frac: 1.0,
            routine: String::new(),
            mocl: None,
        }];
    };

    let mut by_bin: Vec<Vec<&Frame>> = vec![Vec::new(); bins];
    for (t, fr) in &profile.scatter {
        by_bin[bin_of(*t, bins)].push(fr);
    }
    let mocl = |start: usize, end: usize| {
        modal(
            by_bin[start..end]
                .iter()
                .flatten()
                .map(|f| (f.file.clone(), f.line)),
        )
    };

    let runs = merge_narrow(runs_of(&routines, 0), min_bins);
    let mut phases = Vec::new();
    for (gi, run) in runs.iter().enumerate() {
        let group = group_label(gi);
        let lines: Vec<Option<(String, u32)>> = by_bin[run.start..run.end]
            .iter()
            .map(|frames| {
                modal(
                    frames
                        .iter()
                        .filter(|f| f.routine == run.key)
                        .map(|f| (f.file.clone(), f.line)),
                )
            })
            .collect();
        let subruns = fill_gaps(lines)
            .map(|l| merge_narrow(runs_of(&l, run.start), min_bins))
            .unwrap_or_default();
        if subruns.len() >= 2 {
            let lower = group.to_lowercase();
            for (si, sub) in subruns.iter().enumerate() {
                phases.push(Phase {
                    label: format!("{lower}{}", si + 1),
                    group: group.clone(),
                    start_frac: frac(sub.start),
                    end_frac: frac(sub.end),
                    routine: run.key.clone(),
                    mocl: mocl(sub.start, sub.end),
                });
            }
        } else {
            phases.push(Phase {
                label: group.clone(),
                group,
                start_frac: frac(run.start),
                end_frac: frac(run.end),
                routine: run.key.clone(),
                mocl: mocl(run.start, run.end),
            });
        }
    }
    phases
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(spec: &[(&str, u32, usize)], bins: usize) -> SourceProfile {
        // spec: (routine, line, number of bins), 3 samples per bin
        let mut scatter = Vec::new();
        let mut bin = 0;
        for &(routine, line, n) in spec {
            for _ in 0..n {
                for k in 0..3 {
                    let t = (bin as f64 + (k as f64 + 0.5) / 3.0) / bins as f64;
                    scatter.push((t, Frame::new(routine, "x.c", line)));
                }
                bin += 1;
            }
        }
        let mut per_bin: Vec<Vec<&Frame>> = vec![Vec::new(); bins];
        for (t, f) in &scatter {
            per_bin[bin_of(*t, bins)].push(f);
        }
        let dominant = per_bin
            .iter()
            .map(|v| modal(v.iter().map(|f| frame_key(f))).map(|(file, line, r)| Frame::new(r, file, line)))
            .collect();
        SourceProfile { bins, dominant, scatter }
    }

    #[test]
    fn two_routines() {
        let p = profile(&[("R1", 10, 40), ("R2", 20, 60)], 100);
        let ph = detect_phases(&p, 0.03);
        assert_eq!(ph.len(), 2);
        assert_eq!((ph[0].label.as_str(), ph[0].routine.as_str()), ("A", "R1"));
        assert_eq!((ph[0].start_frac, ph[0].end_frac), (0.0, 0.4));
        assert_eq!((ph[1].label.as_str(), ph[1].routine.as_str()), ("B", "R2"));
        assert_eq!((ph[1].start_frac, ph[1].end_frac), (0.4, 1.0));
        assert_eq!(ph[1].mocl, Some(("x.c".into(), 20)));
    }

    #[test]
    fn narrow_run_merges_into_predecessor() {
        let p = profile(&[("R1", 1, 50), ("R9", 2, 2), ("R2", 3, 48)], 100);
        let ph = detect_phases(&p, 0.03);
        assert_eq!(ph.len(), 2);
        assert_eq!(ph[0].end_frac, 0.52);
    }

    #[test]
    fn leading_narrow_run_merges_forward() {
        let p = profile(&[("R9", 2, 1), ("R1", 1, 99)], 100);
        let ph = detect_phases(&p, 0.03);
        assert_eq!(ph.len(), 1);
        assert_eq!(ph[0].routine, "R1");
        assert_eq!((ph[0].start_frac, ph[0].end_frac), (0.0, 1.0));
    }

    #[test]
    fn hot_line_change_splits_into_subphases() {
        let p = profile(&[("SYMGS", 76, 30), ("SYMGS", 95, 30), ("SPMV", 5, 40)], 100);
        let ph = detect_phases(&p, 0.03);
        let labels: Vec<_> = ph.iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["a1", "a2", "B"]);
        assert_eq!(ph[0].group, "A");
        assert_eq!(ph[0].mocl, Some(("x.c".into(), 76)));
        assert_eq!(ph[1].mocl, Some(("x.c".into(), 95)));
        assert_eq!(ph[1].end_frac, 0.6);
    }

    #[test]
    fn empty_profile_is_one_phase() {
        let p = SourceProfile { bins: 10, dominant: vec![None; 10], scatter: Vec::new() };
        let ph = detect_phases(&p, 0.03);
        assert_eq!(ph.len(), 1);
        assert_eq!((ph[0].start_frac, ph[0].end_frac), (0.0, 1.0));
    }

    #[test]
    fn gaps_take_previous_routine() {
        let mut p = profile(&[("R1", 1, 50), ("R2", 2, 50)], 100);
        for d in &mut p.dominant[45..55] {
            *d = None;
        }
        let ph = detect_phases(&p, 0.03);
        assert_eq!(ph[0].end_frac, 0.55);
    }

    #[test]
    fn tie_prefers_smaller_file_line() {
        let items = [("b.c", 1), ("a.c", 9), ("b.c", 1), ("a.c", 9)];
        assert_eq!(modal(items), Some(("a.c", 9)));
    }

    #[test]
    fn labels_past_z() {
        assert_eq!(group_label(0), "A");
        assert_eq!(group_label(25), "Z");
        assert_eq!(group_label(26), "AA");
    }
}
