//! Workload description and its text format.
//!
//! Flat `key = value` lines configure the run; each `[object]` and
//! `[kernel]` section opens a new declaration. `#` starts a comment.
//!
//! ```text
//! iterations = 30
//! load_period = 1370
//!
//! [object]
//! name = a
//! kind = dynamic
//! size = 160000000
//! label = stream.c:181
//!
//! [kernel]
//! routine = Copy
//! file = stream.c
//! hot_line = 300
//! duration = 8000000
//! target = a
//! pattern = descending
//! levels = L1:0.76, LFB:0.225, L2:0.01, DRAM:0.005
//! latency.LFB = 28:0.5, 40:0.5
//! ```

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::trace::Level;

/// Target name reserved for the stack region above `stack_floor`.
pub const STACK_TARGET: &str = "stack";

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("kernel `{kernel}`: {message}")]
    Kernel { kernel: String, message: String },
    #[error("object `{object}`: {message}")]
    Object { object: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    Ascending,
    Descending,
    Random,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::Ascending => "ascending",
            Pattern::Descending => "descending",
            Pattern::Random => "random",
        }
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ascending" => Ok(Pattern::Ascending),
            "descending" => Ok(Pattern::Descending),
            "random" => Ok(Pattern::Random),
            other => Err(format!("unknown pattern `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectSpecKind {
    Static,
    Dynamic,
    Wrapped,
}

impl ObjectSpecKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectSpecKind::Static => "static",
            ObjectSpecKind::Dynamic => "dynamic",
            ObjectSpecKind::Wrapped => "wrapped",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectSpec {
    /// Handle used by kernel targets.
    pub name: String,
    pub kind: ObjectSpecKind,
    pub size: u64,
    /// Allocation callsite, wrap label or variable name in the trace.
    /// Defaults to `name`.
    pub label: Option<String>,
    /// Fixed base address; otherwise laid out automatically.
    pub base: Option<u64>,
    /// Allocated right before this iteration starts.
    pub alloc_iteration: u32,
    /// Freed right after this iteration ends.
    pub free_iteration: Option<u32>,
    /// Wrapped objects only: number of equal allocations inside the wrap.
    pub pieces: u32,
}

impl ObjectSpec {
    pub fn new(name: impl Into<String>, kind: ObjectSpecKind, size: u64) -> Self {
        ObjectSpec {
            name: name.into(),
            kind,
            size,
            label: None,
            base: None,
            alloc_iteration: 0,
            free_iteration: None,
            pieces: 0,
        }
    }

    pub fn trace_label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

/// Where a share of a kernel's references goes.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub object: String,
    pub pattern: Pattern,
    pub weight: f64,
}

/// One latency population: `value ± spread` cycles, uniform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyPoint {
    pub value: u32,
    pub spread: u32,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub routine: String,
    pub file: String,
    pub hot_line: u32,
    /// Nanoseconds per iteration.
    pub duration: u64,
    pub loads: Vec<TargetSpec>,
    pub stores: Vec<TargetSpec>,
    /// Shares over `Level::ALL`.
    pub level_distribution: [f64; 5],
    pub latency_distribution: [Vec<LatencyPoint>; 5],
    /// Instructions per microsecond.
    pub mips: f64,
    pub l1d_mpi: f64,
    pub l2_mpi: f64,
    pub l3_mpi: f64,
    pub branch_ratio: f64,
    /// Loads per instruction.
    pub load_fraction: f64,
    /// Stores per instruction.
    pub store_fraction: f64,
    /// Probability that a sampled store hits L1.
    pub store_l1_hit: f64,
}

impl KernelSpec {
    pub fn new(routine: impl Into<String>, file: impl Into<String>, hot_line: u32, duration: u64) -> Self {
        let mut latency: [Vec<LatencyPoint>; 5] = Default::default();
        latency[Level::L1.index()] = vec![LatencyPoint { value: 7, spread: 0, weight: 1.0 }];
        KernelSpec {
            routine: routine.into(),
            file: file.into(),
            hot_line,
            duration,
            loads: Vec::new(),
            stores: Vec::new(),
            level_distribution: [1.0, 0.0, 0.0, 0.0, 0.0],
            latency_distribution: latency,
            mips: 2000.0,
            l1d_mpi: 0.01,
            l2_mpi: 0.005,
            l3_mpi: 0.001,
            branch_ratio: 0.1,
            load_fraction: 0.3,
            store_fraction: 0.1,
            store_l1_hit: 0.9,
        }
    }

    /// Same target and pattern for loads and stores.
    pub fn with_target(mut self, object: &str, pattern: Pattern) -> Self {
        let t = TargetSpec {
            object: object.to_string(),
            pattern,
            weight: 1.0,
        };
        self.loads = vec![t.clone()];
        self.stores = vec![t];
        self
    }

    /// Loads per nanosecond.
    pub fn load_rate(&self) -> f64 {
        self.mips / 1000.0 * self.load_fraction
    }

    pub fn store_rate(&self) -> f64 {
        self.mips / 1000.0 * self.store_fraction
    }

    pub fn instructions_per_iteration(&self) -> f64 {
        self.mips * self.duration as f64 / 1000.0
    }

    /// Expected latency of loads served by `level`.
    pub fn mean_latency(&self, level: Level) -> Option<f64> {
        let pts = &self.latency_distribution[level.index()];
        if pts.is_empty() {
            return None;
        }
        Some(pts.iter().map(|p| p.weight * f64::from(p.value)).sum())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub iterations: u32,
    pub region_id: u32,
    pub process_id: u32,
    pub freq_mhz: u32,
    /// Loads between two load samples.
    pub load_period: u64,
    /// Stores between two store samples.
    pub store_period: u64,
    /// Replace periods by the nearest prime before generating.
    pub snap_periods: bool,
    /// Nanoseconds per load/store multiplex window; 0 samples both kinds
    /// all the time.
    pub multiplex_window: u64,
    pub seed: u64,
    pub stack_floor: Option<u64>,
    /// Idle nanoseconds between iterations.
    pub iteration_gap: u64,
    pub kernels: Vec<KernelSpec>,
    pub objects: Vec<ObjectSpec>,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            iterations: 10,
            region_id: 1,
            process_id: 1,
            freq_mhz: 2500,
            load_period: 1370,
            store_period: 82310,
            snap_periods: true,
            multiplex_window: 5_000_000,
            seed: 1,
            stack_floor: None,
            iteration_gap: 0,
            kernels: Vec::new(),
            objects: Vec::new(),
        }
    }
}

fn sums_to_one(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let s: f64 = values.into_iter().sum();
    ((s - 1.0).abs() > SUM_TOLERANCE).then_some(s)
}

impl WorkloadSpec {
    pub fn object(&self, name: &str) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.kernels.is_empty() {
            return Err(SpecError::Invalid("workload needs at least one kernel".into()));
        }
        if self.iterations == 0 {
            return Err(SpecError::Invalid("iterations must be at least 1".into()));
        }
        if self.load_period == 0 || self.store_period == 0 {
            return Err(SpecError::Invalid("sampling periods must be positive".into()));
        }
        if self.freq_mhz == 0 {
            return Err(SpecError::Invalid("freq_mhz must be positive".into()));
        }
        for (i, o) in self.objects.iter().enumerate() {
            let err = |message: String| SpecError::Object {
                object: o.name.clone(),
                message,
            };
            if o.name == STACK_TARGET {
                return Err(err(format!("`{STACK_TARGET}` is reserved")));
            }
            if self.objects[..i].iter().any(|p| p.name == o.name) {
                return Err(err("duplicate object name".into()));
            }
            if o.size == 0 {
                return Err(err("size must be positive".into()));
            }
            if o.kind == ObjectSpecKind::Wrapped && o.pieces > 0 && o.size / u64::from(o.pieces) == 0 {
                return Err(err("too many pieces for the wrapped size".into()));
            }
            if o.kind == ObjectSpecKind::Static && (o.alloc_iteration != 0 || o.free_iteration.is_some()) {
                return Err(err("static objects live for the whole run".into()));
            }
            if let Some(f) = o.free_iteration {
                if f < o.alloc_iteration {
                    return Err(err("freed before allocated".into()));
                }
            }
        }
        for k in &self.kernels {
            let err = |message: String| SpecError::Kernel {
                kernel: k.routine.clone(),
                message,
            };
            if k.duration == 0 {
                return Err(err("duration must be positive".into()));
            }
            if k.mips.is_nan() || k.mips <= 0.0 {
                return Err(err("mips must be positive".into()));
            }
            for (name, v) in [
                ("l1d_mpi", k.l1d_mpi),
                ("l2_mpi", k.l2_mpi),
                ("l3_mpi", k.l3_mpi),
                ("branch_ratio", k.branch_ratio),
                ("load_fraction", k.load_fraction),
                ("store_fraction", k.store_fraction),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(err(format!("{name} must be non-negative")));
                }
            }
            if !(0.0..=1.0).contains(&k.store_l1_hit) {
                return Err(err("store_l1_hit must be a probability".into()));
            }
            if k.level_distribution.iter().any(|&s| s < 0.0) {
                return Err(err("negative level share".into()));
            }
            if let Some(s) = sums_to_one(k.level_distribution) {
                return Err(err(format!("level shares sum to {s}, expected 1")));
            }
            for level in Level::ALL {
                let pts = &k.latency_distribution[level.index()];
                if k.level_distribution[level.index()] > 0.0 && pts.is_empty() {
                    return Err(err(format!("no latency distribution for level {level}")));
                }
                if !pts.is_empty() {
                    if let Some(s) = sums_to_one(pts.iter().map(|p| p.weight)) {
                        return Err(err(format!("latency weights for {level} sum to {s}, expected 1")));
                    }
                }
                if pts.iter().any(|p| p.spread > p.value) {
                    return Err(err(format!("latency spread exceeds value for {level}")));
                }
            }
            for (what, targets, rate) in [("loads", &k.loads, k.load_fraction), ("stores", &k.stores, k.store_fraction)] {
                if targets.is_empty() {
                    if rate > 0.0 {
                        return Err(err(format!("{what} have no target")));
                    }
                    continue;
                }
                if let Some(s) = sums_to_one(targets.iter().map(|t| t.weight)) {
                    return Err(err(format!("{what} target weights sum to {s}, expected 1")));
                }
                for t in targets {
                    if t.object == STACK_TARGET {
                        if self.stack_floor.is_none() {
                            return Err(err("stack target requires stack_floor".into()));
                        }
                    } else if self.object(&t.object).is_none() {
                        return Err(err(format!("unknown target object `{}`", t.object)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses the text format and validates the result.
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let spec = parse_spec(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.replace('_', "");
    match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|_| format!("invalid integer `{s}`"))
}

fn parse_num<T: TryFrom<u64>>(s: &str) -> Result<T, String> {
    let v = parse_u64(s)?;
    T::try_from(v).map_err(|_| format!("`{s}` out of range"))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("invalid number `{s}`"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("invalid boolean `{s}`")),
    }
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

fn parse_levels(s: &str) -> Result<[f64; 5], String> {
    let mut out = [0.0; 5];
    for item in list(s) {
        let (name, share) = item
            .split_once(':')
            .ok_or_else(|| format!("expected LEVEL:share, found `{item}`"))?;
        let level: Level = name.trim().parse().map_err(|_| format!("unknown level `{name}`"))?;
        out[level.index()] = parse_f64(share.trim())?;
    }
    Ok(out)
}

fn parse_latency(s: &str) -> Result<Vec<LatencyPoint>, String> {
    list(s)
        .map(|item| {
            let (value, weight) = item
                .split_once(':')
                .ok_or_else(|| format!("expected cycles[~spread]:weight, found `{item}`"))?;
            let (value, spread) = match value.split_once('~') {
                Some((v, sp)) => (v, sp.trim()),
                None => (value, "0"),
            };
            Ok(LatencyPoint {
                value: parse_num(value.trim())?,
                spread: parse_num(spread)?,
                weight: parse_f64(weight.trim())?,
            })
        })
        .collect()
}

fn parse_targets(s: &str) -> Result<Vec<TargetSpec>, String> {
    list(s)
        .map(|item| {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let (object, pattern, weight) = match parts.as_slice() {
                [o, p] => (*o, *p, 1.0),
                [o, p, w] => (*o, *p, parse_f64(w)?),
                _ => return Err(format!("expected object:pattern[:weight], found `{item}`")),
            };
            Ok(TargetSpec {
                object: object.to_string(),
                pattern: pattern.parse()?,
                weight,
            })
        })
        .collect()
}

enum Section {
    Global,
    Object(ObjectSpec),
    Kernel(Box<KernelSpec>, Option<String>, Option<Pattern>),
}

fn finish(section: Section, spec: &mut WorkloadSpec) {
    match section {
        Section::Global => {}
        Section::Object(o) => spec.objects.push(o),
        Section::Kernel(mut k, target, pattern) => {
            if let Some(t) = target {
                let pattern = pattern.unwrap_or(Pattern::Ascending);
                let ts = TargetSpec {
                    object: t,
                    pattern,
                    weight: 1.0,
                };
                if k.loads.is_empty() {
                    k.loads = vec![ts.clone()];
                }
                if k.stores.is_empty() {
                    k.stores = vec![ts];
                }
            }
            spec.kernels.push(*k);
        }
    }
}

fn apply_global(spec: &mut WorkloadSpec, key: &str, value: &str) -> Result<(), String> {
    match key {
        "iterations" => spec.iterations = parse_num(value)?,
        "region_id" => spec.region_id = parse_num(value)?,
        "process_id" => spec.process_id = parse_num(value)?,
        "freq_mhz" => spec.freq_mhz = parse_num(value)?,
        "load_period" => spec.load_period = parse_u64(value)?,
        "store_period" => spec.store_period = parse_u64(value)?,
        "snap_periods" => spec.snap_periods = parse_bool(value)?,
        "multiplex_window" => spec.multiplex_window = parse_u64(value)?,
        "seed" => spec.seed = parse_u64(value)?,
        "stack_floor" => spec.stack_floor = Some(parse_u64(value)?),
        "iteration_gap" => spec.iteration_gap = parse_u64(value)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn apply_object(o: &mut ObjectSpec, key: &str, value: &str) -> Result<(), String> {
    match key {
        "name" => o.name = value.to_string(),
        "kind" => {
            o.kind = match value {
                "static" => ObjectSpecKind::Static,
                "dynamic" => ObjectSpecKind::Dynamic,
                "wrapped" => ObjectSpecKind::Wrapped,
                _ => return Err(format!("unknown object kind `{value}`")),
            }
        }
        "size" => o.size = parse_u64(value)?,
        "label" => o.label = Some(value.to_string()),
        "base" => o.base = Some(parse_u64(value)?),
        "alloc_iteration" => o.alloc_iteration = parse_num(value)?,
        "free_iteration" => o.free_iteration = Some(parse_num(value)?),
        "pieces" => o.pieces = parse_num(value)?,
        _ => return Err(format!("unknown object key `{key}`")),
    }
    Ok(())
}

fn apply_kernel(
    k: &mut KernelSpec,
    target: &mut Option<String>,
    pattern: &mut Option<Pattern>,
    key: &str,
    value: &str,
) -> Result<(), String> {
    if let Some(level) = key.strip_prefix("latency.") {
        let level: Level = level.parse().map_err(|_| format!("unknown level `{level}`"))?;
        k.latency_distribution[level.index()] = parse_latency(value)?;
        return Ok(());
    }
    match key {
        "routine" => k.routine = value.to_string(),
        "file" => k.file = value.to_string(),
        "hot_line" => k.hot_line = parse_num(value)?,
        "duration" => k.duration = parse_u64(value)?,
        "target" => *target = Some(value.to_string()),
        "pattern" => *pattern = Some(value.parse()?),
        "loads" => k.loads = parse_targets(value)?,
        "stores" => k.stores = parse_targets(value)?,
        "levels" => k.level_distribution = parse_levels(value)?,
        "mips" => k.mips = parse_f64(value)?,
        "l1d_mpi" => k.l1d_mpi = parse_f64(value)?,
        "l2_mpi" => k.l2_mpi = parse_f64(value)?,
        "l3_mpi" => k.l3_mpi = parse_f64(value)?,
        "branch_ratio" => k.branch_ratio = parse_f64(value)?,
        "load_fraction" => k.load_fraction = parse_f64(value)?,
        "store_fraction" => k.store_fraction = parse_f64(value)?,
        "store_l1_hit" => k.store_l1_hit = parse_f64(value)?,
        _ => return Err(format!("unknown kernel key `{key}`")),
    }
    Ok(())
}

fn parse_spec(text: &str) -> Result<WorkloadSpec, SpecError> {
    let mut spec = WorkloadSpec::default();
    let mut section = Section::Global;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let syntax = |message: String| SpecError::Syntax { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            let next = match content {
                "[object]" => Section::Object(ObjectSpec::new("", ObjectSpecKind::Dynamic, 0)),
                "[kernel]" => Section::Kernel(Box::new(KernelSpec::new("", "", 0, 0)), None, None),
                other => return Err(syntax(format!("unknown section `{other}`"))),
            };
            finish(std::mem::replace(&mut section, next), &mut spec);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected key = value, found `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match &mut section {
            Section::Global => apply_global(&mut spec, key, value),
            Section::Object(o) => apply_object(o, key, value),
            Section::Kernel(k, t, p) => apply_kernel(k, t, p, key, value),
        }
        .map_err(syntax)?;
    }
    finish(section, &mut spec);
    for (i, o) in spec.objects.iter().enumerate() {
        if o.name.is_empty() {
            return Err(SpecError::Invalid(format!("object #{} has no name", i + 1)));
        }
    }
    for (i, k) in spec.kernels.iter().enumerate() {
        if k.routine.is_empty() {
            return Err(SpecError::Invalid(format!("kernel #{} has no routine", i + 1)));
        }
    }
    Ok(spec)
}

fn write_targets(out: &mut String, key: &str, targets: &[TargetSpec]) -> fmt::Result {
    if targets.is_empty() {
        return Ok(());
    }
    let items: Vec<String> = targets
        .iter()
        .map(|t| format!("{}:{}:{}", t.object, t.pattern.name(), t.weight))
        .collect();
    writeln!(out, "{key} = {}", items.join(", "))
}

impl fmt::Display for WorkloadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "iterations = {}", self.iterations)?;
        writeln!(out, "region_id = {}", self.region_id)?;
        writeln!(out, "process_id = {}", self.process_id)?;
        writeln!(out, "freq_mhz = {}", self.freq_mhz)?;
        writeln!(out, "load_period = {}", self.load_period)?;
        writeln!(out, "store_period = {}", self.store_period)?;
        writeln!(out, "snap_periods = {}", self.snap_periods)?;
        writeln!(out, "multiplex_window = {}", self.multiplex_window)?;
        writeln!(out, "seed = {}", self.seed)?;
        if let Some(floor) = self.stack_floor {
            writeln!(out, "stack_floor = {floor:#x}")?;
        }
        writeln!(out, "iteration_gap = {}", self.iteration_gap)?;
        for o in &self.objects {
            writeln!(out, "\n[object]")?;
            writeln!(out, "name = {}", o.name)?;
            writeln!(out, "kind = {}", o.kind.name())?;
            writeln!(out, "size = {}", o.size)?;
            if let Some(label) = &o.label {
                writeln!(out, "label = {label}")?;
            }
            if let Some(base) = o.base {
                writeln!(out, "base = {base:#x}")?;
            }
            writeln!(out, "alloc_iteration = {}", o.alloc_iteration)?;
            if let Some(fi) = o.free_iteration {
                writeln!(out, "free_iteration = {fi}")?;
            }
            if o.pieces > 0 {
                writeln!(out, "pieces = {}", o.pieces)?;
            }
        }
        for k in &self.kernels {
            writeln!(out, "\n[kernel]")?;
            writeln!(out, "routine = {}", k.routine)?;
            writeln!(out, "file = {}", k.file)?;
            writeln!(out, "hot_line = {}", k.hot_line)?;
            writeln!(out, "duration = {}", k.duration)?;
            write_targets(&mut out, "loads", &k.loads)?;
            write_targets(&mut out, "stores", &k.stores)?;
            let levels: Vec<String> = Level::ALL
                .iter()
                .map(|l| format!("{l}:{}", k.level_distribution[l.index()]))
                .collect();
            writeln!(out, "levels = {}", levels.join(", "))?;
            for l in Level::ALL {
                let pts = &k.latency_distribution[l.index()];
                if pts.is_empty() {
                    continue;
                }
                let items: Vec<String> = pts
                    .iter()
                    .map(|p| format!("{}~{}:{}", p.value, p.spread, p.weight))
                    .collect();
                writeln!(out, "latency.{l} = {}", items.join(", "))?;
            }
            writeln!(out, "mips = {}", k.mips)?;
            writeln!(out, "l1d_mpi = {}", k.l1d_mpi)?;
            writeln!(out, "l2_mpi = {}", k.l2_mpi)?;
            writeln!(out, "l3_mpi = {}", k.l3_mpi)?;
            writeln!(out, "branch_ratio = {}", k.branch_ratio)?;
            writeln!(out, "load_fraction = {}", k.load_fraction)?;
            writeln!(out, "store_fraction = {}", k.store_fraction)?;
            writeln!(out, "store_l1_hit = {}", k.store_l1_hit)?;
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
iterations = 3
seed = 7
stack_floor = 0x7ff000000000

[object]
name = a
size = 65536
label = s.c:10

[kernel]
routine = Copy
file = s.c
hot_line = 300
duration = 100000
target = a
pattern = descending
levels = L1:0.5, DRAM:0.5
latency.DRAM = 350~5:0.5, 800~5:0.5
";

    #[test]
    fn parses_sections() {
        let s = WorkloadSpec::parse(SMALL).unwrap();
        assert_eq!(s.iterations, 3);
        assert_eq!(s.stack_floor, Some(0x7ff0_0000_0000));
        assert_eq!(s.objects[0].trace_label(), "s.c:10");
        let k = &s.kernels[0];
        assert_eq!(k.loads[0].pattern, Pattern::Descending);
        assert_eq!(k.stores[0].object, "a");
        assert_eq!(k.level_distribution, [0.5, 0.0, 0.0, 0.0, 0.5]);
        assert_eq!(k.mean_latency(Level::Dram), Some(575.0));
    }

    #[test]
    fn display_round_trips() {
        let s = WorkloadSpec::parse(SMALL).unwrap();
        assert_eq!(WorkloadSpec::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn bad_shares_name_the_kernel() {
        let text = SMALL.replace("L1:0.5, DRAM:0.5", "L1:0.4, DRAM:0.5");
        let err = WorkloadSpec::parse(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Copy") && msg.contains("0.9"), "{msg}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = WorkloadSpec::parse("iterations = 2\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
    }

    #[test]
    fn needs_a_kernel() {
        assert!(WorkloadSpec::parse("iterations = 2\n").is_err());
    }

    #[test]
    fn unknown_target_rejected() {
        let text = SMALL.replace("target = a", "target = zz");
        assert!(WorkloadSpec::parse(&text).is_err());
    }
}
