#![allow(dead_code)]

use std::collections::BTreeMap;

use memfold::analysis::{analyze, Analysis, AnalysisConfig, SamplingPeriods};
use memfold::folding::{fold_region, FoldConfig, FoldedRegion};
use memfold::object_map::{build_object_map, MapConfig, ObjectMap};
use memfold::synthgen::{
    KernelSpec, LatencyPoint, ObjectSpec, ObjectSpecKind, Pattern, SplitMix64, TargetSpec, WorkloadSpec,
};
use memfold::trace::{Level, Trace};

pub const STACK_FLOOR: u64 = 0x7ff0_0000_0000;

pub struct Run {
    pub trace: Trace,
    pub map: ObjectMap,
    pub folded: FoldedRegion,
    pub analysis: Analysis,
}

/// Map, fold and analyze `trace` with default settings.
pub fn run_pipeline(trace: Trace, periods: Option<SamplingPeriods>) -> Run {
    run_with(trace, Some(STACK_FLOOR), periods)
}

pub fn run_with(trace: Trace, stack_floor: Option<u64>, periods: Option<SamplingPeriods>) -> Run {
    let map = build_object_map(
        &trace,
        MapConfig {
            stack_floor,
            ..MapConfig::default()
        },
    )
    .expect("object map");
    let folded = fold_region(&trace, 1, &FoldConfig::default()).expect("fold");
    let cfg = AnalysisConfig {
        periods,
        ..AnalysisConfig::default()
    };
    let analysis = analyze(&trace, &map, &folded, &cfg).expect("analysis");
    Run {
        trace,
        map,
        folded,
        analysis,
    }
}

pub fn lat(value: u32, spread: u32, weight: f64) -> LatencyPoint {
    LatencyPoint {
        value,
        spread,
        weight,
    }
}

pub fn target(object: &str, pattern: Pattern, weight: f64) -> TargetSpec {
    TargetSpec {
        object: object.to_string(),
        pattern,
        weight,
    }
}

pub fn base_spec() -> WorkloadSpec {
    WorkloadSpec {
        multiplex_window: 0,
        stack_floor: Some(STACK_FLOOR),
        ..WorkloadSpec::default()
    }
}

const PATTERNS: [Pattern; 3] = [Pattern::Ascending, Pattern::Descending, Pattern::Random];

/// Small workload with randomized kernels, objects and sampling setup.
pub fn random_spec(seed: u64) -> WorkloadSpec {
    let mut r = SplitMix64::new(seed);
    let mut s = base_spec();
    s.iterations = 2 + r.below(3) as u32;
    s.load_period = 200 + r.below(400);
    s.store_period = 500 + r.below(2000);
    s.snap_periods = r.below(2) == 0;
    s.multiplex_window = if r.below(2) == 0 { 0 } else { 20_000 + r.below(50_000) };
    s.iteration_gap = r.below(3) * 500;
    s.process_id = 1 + r.below(1000) as u32;
    let n_obj = 1 + r.below(3) as usize;
    for i in 0..n_obj {
        let kind = match r.below(3) {
            0 => ObjectSpecKind::Static,
            1 => ObjectSpecKind::Dynamic,
            _ => ObjectSpecKind::Wrapped,
        };
        let mut o = ObjectSpec::new(format!("o{i}"), kind, 40_000 + r.below(1 << 20));
        o.label = Some(format!("gen.c:{}", 100 + i));
        if kind == ObjectSpecKind::Wrapped {
            o.pieces = 1 + r.below(4) as u32;
        }
        if kind == ObjectSpecKind::Dynamic && r.below(2) == 0 {
            o.free_iteration = Some(s.iterations - 1);
        }
        s.objects.push(o);
    }
    let n_k = 1 + r.below(3) as usize;
    for k in 0..n_k {
        let mut ks = KernelSpec::new(format!("k{k}"), "gen.c", 10 + r.below(50) as u32, 20_000 + r.below(40_000));
        let obj = format!("o{}", r.below(n_obj as u64));
        let p = PATTERNS[r.below(3) as usize];
        ks.loads = vec![target(&obj, p, 0.75), target("stack", Pattern::Random, 0.25)];
        ks.stores = vec![target(&obj, p, 1.0)];
        let l1 = 0.5 + r.next_f64() * 0.4;
        ks.level_distribution = [l1, 1.0 - l1, 0.0, 0.0, 0.0];
        ks.latency_distribution[Level::Lfb.index()] = vec![lat(40, 3, 1.0)];
        ks.mips = 500.0 + r.below(3000) as f64;
        s.kernels.push(ks);
    }
    s
}

/// `(phase, level) -> share` over all five levels, zeros included.
pub fn share_grid(rows: impl IntoIterator<Item = (String, Level, f64)>) -> BTreeMap<(String, usize), f64> {
    let mut g = BTreeMap::new();
    for (p, l, s) in rows {
        g.insert((p, l.index()), s);
    }
    g
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}
