use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use super::spec::{KernelSpec, Pattern, WorkloadSpec, STACK_TARGET};
use crate::folding::group_label;
use crate::report::{format_modes, format_number, format_share, write_csv};
use crate::trace::{Level, SampleKind};

/// Threshold on a latency population's weight for it to count as a mode.
pub const TRUTH_MODE_WEIGHT: f64 = 0.15;

#[derive(Clone, Debug, PartialEq)]
pub struct TruthPhase {
    pub label: String,
    pub group: String,
    pub routine: String,
    pub file: String,
    pub hot_line: u32,
    pub start_frac: f64,
    pub end_frac: f64,
    /// Nanoseconds per iteration.
    pub duration_ns: f64,
    /// Indices into the workload's kernels.
    pub kernels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruthAccessRow {
    pub phase: String,
    pub level: Level,
    pub share: f64,
    pub mean_cost: f64,
    pub modes: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruthPattern {
    pub phase: String,
    pub routine: String,
    /// Workload object name, or `stack`.
    pub object: String,
    pub kind: SampleKind,
    pub pattern: Pattern,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelMetrics {
    pub routine: String,
    pub hot_line: u32,
    pub mips: f64,
    pub l1d_per_instr: f64,
    pub l2_per_instr: f64,
    pub l3_per_instr: f64,
    pub branch_per_instr: f64,
    pub ipc: f64,
}

/// Sampled references that landed in one workload object.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectShare {
    pub object: String,
    pub label: String,
    pub size: u64,
    pub samples: u64,
    pub share: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Totals {
    /// Final instruction counter.
    pub instructions: u64,
    /// Loads executed inside the region, sampled or not.
    pub loads: f64,
    pub stores: f64,
    pub load_samples: u64,
    pub store_samples: u64,
}

/// Exact description of a generated trace.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub seed: u64,
    /// Effective periods after prime snapping.
    pub load_period: u64,
    pub store_period: u64,
    pub iteration_ns: u64,
    pub phases: Vec<TruthPhase>,
    pub access: Vec<TruthAccessRow>,
    pub patterns: Vec<TruthPattern>,
    pub metrics: Vec<KernelMetrics>,
    /// Sorted by sample count, largest first.
    pub objects: Vec<ObjectShare>,
    pub stack_share: f64,
    pub totals: Totals,
}

impl GroundTruth {
    pub fn phase(&self, label: &str) -> Option<&TruthPhase> {
        self.phases.iter().find(|p| p.label == label)
    }

    pub fn access_row(&self, phase: &str, level: Level) -> Option<&TruthAccessRow> {
        self.access
            .iter()
            .find(|r| r.phase == phase && r.level == level)
    }

    pub fn pattern(&self, routine: &str, object: &str) -> Option<Pattern> {
        self.patterns
            .iter()
            .find(|p| p.routine == routine && p.object == object)
            .map(|p| p.pattern)
    }

    pub fn object(&self, name: &str) -> Option<&ObjectShare> {
        self.objects.iter().find(|o| o.object == name)
    }
}

/// Phases implied by the kernel sequence: consecutive kernels of one
/// routine form a phase, split into numbered sub-phases when the hot line
/// changes inside it.
pub(crate) fn truth_phases(spec: &WorkloadSpec) -> Vec<TruthPhase> {
    let total: u64 = spec.kernels.iter().map(|k| k.duration).sum();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, k) in spec.kernels.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if spec.kernels[g[0]].routine == k.routine => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let mut phases = Vec::new();
    let mut offset = 0u64;
    for (gi, group) in groups.iter().enumerate() {
        let label = group_label(gi);
        let mut runs: Vec<Vec<usize>> = Vec::new();
        for &i in group {
            match runs.last_mut() {
                Some(r) if spec.kernels[r[0]].hot_line == spec.kernels[i].hot_line => r.push(i),
                _ => runs.push(vec![i]),
            }
        }
        let split = runs.len() > 1;
        for (ri, run) in runs.into_iter().enumerate() {
            let k = &spec.kernels[run[0]];
            let dur: u64 = run.iter().map(|&i| spec.kernels[i].duration).sum();
            phases.push(TruthPhase {
                label: if split {
                    format!("{}{}", label.to_lowercase(), ri + 1)
                } else {
                    label.clone()
                },
                group: label.clone(),
                routine: k.routine.clone(),
                file: k.file.clone(),
                hot_line: k.hot_line,
                start_frac: offset as f64 / total as f64,
                end_frac: (offset + dur) as f64 / total as f64,
                duration_ns: dur as f64,
                kernels: run,
            });
            offset += dur;
        }
    }
    phases
}

/// Load-weighted mixture of the kernels' level and latency distributions.
pub(crate) fn truth_access(spec: &WorkloadSpec, phases: &[TruthPhase]) -> Vec<TruthAccessRow> {
    let mut rows = Vec::new();
    for phase in phases {
        let kernels: Vec<&KernelSpec> = phase.kernels.iter().map(|&i| &spec.kernels[i]).collect();
        let weights: Vec<f64> = kernels
            .iter()
            .map(|k| k.load_rate() * k.duration as f64)
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            continue;
        }
        for level in Level::ALL {
            let li = level.index();
            let level_weight: f64 = kernels
                .iter()
                .zip(&weights)
                .map(|(k, w)| w * k.level_distribution[li])
                .sum();
            if level_weight <= 0.0 {
                continue;
            }
            let mut points: BTreeMap<u32, f64> = BTreeMap::new();
            let mut mean = 0.0;
            for (k, w) in kernels.iter().zip(&weights) {
                let kw = w * k.level_distribution[li] / level_weight;
                for p in &k.latency_distribution[li] {
                    *points.entry(p.value).or_default() += kw * p.weight;
                    mean += kw * p.weight * f64::from(p.value);
                }
            }
            rows.push(TruthAccessRow {
                phase: phase.label.clone(),
                level,
                share: level_weight / total,
                mean_cost: mean,
                modes: points
                    .into_iter()
                    .filter(|&(_, w)| w >= TRUTH_MODE_WEIGHT)
                    .map(|(v, _)| v)
                    .collect(),
            });
        }
    }
    rows
}

pub(crate) fn truth_patterns(spec: &WorkloadSpec, phases: &[TruthPhase]) -> Vec<TruthPattern> {
    let mut out: Vec<TruthPattern> = Vec::new();
    for phase in phases {
        for &ki in &phase.kernels {
            let k = &spec.kernels[ki];
            let tagged = k
                .loads
                .iter()
                .map(|t| (t, SampleKind::Load))
                .chain(k.stores.iter().map(|t| (t, SampleKind::Store)));
            for (t, kind) in tagged {
                let seen = out
                    .iter()
                    .any(|p| p.phase == phase.label && p.routine == k.routine && p.object == t.object);
                if !seen {
                    out.push(TruthPattern {
                        phase: phase.label.clone(),
                        routine: k.routine.clone(),
                        object: t.object.clone(),
                        kind,
                        pattern: t.pattern,
                    });
                }
            }
        }
    }
    out
}

pub(crate) fn kernel_metrics(spec: &WorkloadSpec) -> Vec<KernelMetrics> {
    spec.kernels
        .iter()
        .map(|k| KernelMetrics {
            routine: k.routine.clone(),
            hot_line: k.hot_line,
            mips: k.mips,
            l1d_per_instr: k.l1d_mpi,
            l2_per_instr: k.l2_mpi,
            l3_per_instr: k.l3_mpi,
            branch_per_instr: k.branch_ratio,
            ipc: k.mips / f64::from(spec.freq_mhz),
        })
        .collect()
}

/// Writes `truth_access.csv`, `truth_ranking.csv`, `truth_phases.csv`,
/// `truth_patterns.csv` and `truth_totals.csv` into `dir`. The first three
/// share their headers with the analysis tables.
pub fn emit_ground_truth(gt: &GroundTruth, dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut paths = Vec::new();

    let access: Vec<Vec<String>> = gt
        .access
        .iter()
        .map(|r| {
            vec![
                r.phase.clone(),
                r.level.to_string(),
                format_share(r.share),
                format_number(r.mean_cost),
                format_modes(&r.modes),
            ]
        })
        .collect();
    paths.push(write_csv(
        &dir.join("truth_access.csv"),
        &["phase", "level", "share", "mean_cost", "modes"],
        &access,
    )?);

    let mut ranking: Vec<Vec<String>> = gt
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| {
            vec![
                (i + 1).to_string(),
                o.label.clone(),
                o.size.to_string(),
                format_share(o.share),
            ]
        })
        .collect();
    ranking.push(vec![
        String::new(),
        STACK_TARGET.to_string(),
        String::new(),
        format_share(gt.stack_share),
    ]);
    paths.push(write_csv(
        &dir.join("truth_ranking.csv"),
        &["rank", "label", "size_bytes", "share"],
        &ranking,
    )?);

    let phases: Vec<Vec<String>> = gt
        .phases
        .iter()
        .map(|p| {
            vec![
                p.label.clone(),
                p.routine.clone(),
                p.file.clone(),
                p.hot_line.to_string(),
                format_number(p.duration_ns / 1e6),
            ]
        })
        .collect();
    paths.push(write_csv(
        &dir.join("truth_phases.csv"),
        &["label", "routine", "mocl_file", "mocl_line", "duration_ms"],
        &phases,
    )?);

    let patterns: Vec<Vec<String>> = gt
        .patterns
        .iter()
        .map(|p| {
            vec![
                p.phase.clone(),
                p.routine.clone(),
                p.object.clone(),
                p.pattern.name().to_string(),
            ]
        })
        .collect();
    paths.push(write_csv(
        &dir.join("truth_patterns.csv"),
        &["phase", "routine", "object", "pattern"],
        &patterns,
    )?);

    let t = gt.totals;
    let totals = vec![
        vec!["instructions".to_string(), t.instructions.to_string()],
        vec!["loads".to_string(), format_number(t.loads)],
        vec!["stores".to_string(), format_number(t.stores)],
        vec!["load_samples".to_string(), t.load_samples.to_string()],
        vec!["store_samples".to_string(), t.store_samples.to_string()],
        vec!["load_period".to_string(), gt.load_period.to_string()],
        vec!["store_period".to_string(), gt.store_period.to_string()],
    ];
    paths.push(write_csv(&dir.join("truth_totals.csv"), &["quantity", "value"], &totals)?);
    Ok(paths)
}
