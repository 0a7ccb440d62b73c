//! Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use common::{base_spec, lat, random_spec, rel_err, run_pipeline, target, Run, STACK_FLOOR};
use memfold::analysis::{detect_latency_modes, detect_patterns, ModeConfig, PatternClass, SamplingPeriods};
use memfold::object_map::{ObjectKind, ObjectRef, DEFAULT_THRESHOLD};
use memfold::synthgen::{generate, preset, KernelSpec, ObjectSpec, ObjectSpecKind, Pattern, SplitMix64};
use memfold::trace::{parse_str, to_mtf_string, EventPayload, Level, SampleKind, Trace};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1_round_trip() -> Outcome {
    let start = Instant::now();
    let mut samples = 0;
    for seed in 0..100u64 {
        let spec = random_spec(seed);
        let (trace, _) = generate(&spec, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        samples += trace.samples().count();
        let back = parse_str(&to_mtf_string(&trace)).map_err(|e| format!("seed {seed}: {e}"))?;
        check(back == trace, || format!("seed {seed}: parsed trace differs"))?;
    }
    let took = start.elapsed();
    check(took < Duration::from_secs(10), || format!("took {took:.2?}"))?;
    Ok(format!("100 traces, {samples} samples, {took:.2?}"))
}

fn ac2_stream_table() -> Outcome {
    let start = Instant::now();
    let spec = preset("stream").unwrap();
    let (trace, truth) = generate(&spec, spec.seed).map_err(|e| e.to_string())?;
    let run = run_pipeline(trace, None);
    let mut worst_share: f64 = 0.0;
    let mut worst_cost: f64 = 0.0;
    for phase in &truth.phases {
        let loads = run
            .folded
            .access_samples()
            .filter(|f| f.sample.kind() == SampleKind::Load)
            .filter(|f| run.folded.phases.iter().any(|p| p.label == phase.label && p.contains(f.norm_time)))
            .count();
        check(loads >= 20_000, || format!("{} has only {loads} load samples", phase.routine))?;
        for level in Level::ALL {
            let want = truth.access_row(&phase.label, level);
            let got = run.analysis.access.row(&phase.label, level);
            let (ws, gs) = (want.map_or(0.0, |r| r.share), got.map_or(0.0, |r| r.share));
            worst_share = worst_share.max((ws - gs).abs());
            check((ws - gs).abs() <= 0.02, || {
                format!("{} {level}: share {gs:.4} vs {ws:.4}", phase.routine)
            })?;
            if let (Some(w), Some(g)) = (want, got.and_then(|r| r.mean_cost)) {
                let e = rel_err(g, w.mean_cost);
                worst_cost = worst_cost.max(e);
                check(e <= 0.05, || format!("{} {level}: cost {g:.1} vs {:.1}", phase.routine, w.mean_cost))?;
            }
        }
    }
    let scale_lfb = run.analysis.access.row("B", Level::Lfb).map_or(0.0, |r| r.share);
    let took = start.elapsed();
    check(took < Duration::from_secs(30), || format!("took {took:.2?}"))?;
    Ok(format!(
        "max share error {:.2} pts, max cost error {:.1}%, Scale LFB {:.1}%, {took:.2?}",
        worst_share * 100.0,
        worst_cost * 100.0,
        scale_lfb * 100.0
    ))
}

fn ac3_bimodal() -> Outcome {
    let mut spec = base_spec();
    spec.iterations = 10;
    spec.objects.push(ObjectSpec::new("v", ObjectSpecKind::Dynamic, 1 << 24));
    let mut k = KernelSpec::new("Scale", "stream.c", 328, 500_000).with_target("v", Pattern::Random);
    k.level_distribution = [0.0, 0.0, 0.0, 0.0, 1.0];
    k.latency_distribution[Level::Dram.index()] = vec![lat(350, 10, 0.5), lat(800, 10, 0.5)];
    spec.kernels.push(k);
    let (trace, _) = generate(&spec, 3).map_err(|e| e.to_string())?;
    let lats: Vec<u32> = trace
        .samples()
        .filter(|(_, s)| !s.is_pseudo())
        .filter_map(|(_, s)| s.load_info())
        .filter(|l| l.1 == Level::Dram)
        .map(|l| l.0)
        .collect();
    let modes = detect_latency_modes(&lats, ModeConfig::default()).map_err(|e| e.to_string())?;
    check(modes.len() == 2, || format!("modes {modes:?}"))?;
    check(modes[0].abs_diff(350) <= 10 && modes[1].abs_diff(800) <= 10, || format!("modes {modes:?}"))?;
    let run = run_pipeline(trace, None);
    let row = run.analysis.access.row("A", Level::Dram).ok_or("no DRAM row")?;
    check(row.modes == modes, || format!("table modes {:?}", row.modes))?;
    Ok(format!("{} samples, modes {modes:?}", lats.len()))
}

fn pattern_spec() -> memfold::synthgen::WorkloadSpec {
    let mut spec = base_spec();
    spec.iterations = 6;
    for (name, routine, p) in [
        ("p", "forward", Pattern::Ascending),
        ("q", "backward", Pattern::Descending),
        ("r", "gather", Pattern::Random),
    ] {
        spec.objects.push(ObjectSpec::new(name, ObjectSpecKind::Dynamic, 1 << 20));
        spec.kernels
            .push(KernelSpec::new(routine, "pat.c", 10, 100_000).with_target(name, p));
    }
    spec
}

fn ac4_patterns() -> Outcome {
    let spec = pattern_spec();
    let want = [
        ("forward", PatternClass::Ascending),
        ("backward", PatternClass::Descending),
        ("gather", PatternClass::Random),
    ];
    let mut min_samples = usize::MAX;
    for seed in 0..100u64 {
        let (trace, truth) = generate(&spec, seed).map_err(|e| e.to_string())?;
        let run = run_pipeline(trace, None);
        let found = detect_patterns(&run.folded, &run.map, 30);
        for (routine, class) in want {
            let phase = run
                .folded
                .phases
                .iter()
                .find(|p| p.routine == routine)
                .ok_or_else(|| format!("seed {seed}: no phase for {routine}"))?;
            let p = found
                .iter()
                .filter(|p| p.phase == phase.label)
                .max_by_key(|p| p.fit.samples)
                .ok_or_else(|| format!("seed {seed}: no pattern for {routine}"))?;
            min_samples = min_samples.min(p.fit.samples);
            check(p.fit.samples >= 200, || format!("seed {seed}: {routine} has {} samples", p.fit.samples))?;
            check(p.fit.class == class, || {
                format!("seed {seed}: {routine} classified {} (r2 {:.3})", p.fit.class, p.fit.r2)
            })?;
            let configured = truth.patterns.iter().find(|t| t.routine == routine).unwrap().pattern;
            check(configured.name() == class.name(), || format!("truth mismatch for {routine}"))?;
        }
    }
    Ok(format!("300/300 classifications, >= {min_samples} samples each"))
}

fn ac5_bandwidth() -> Outcome {
    let mut spec = base_spec();
    spec.iterations = 5;
    spec.objects.push(ObjectSpec::new("a", ObjectSpecKind::Dynamic, 160_000_000));
    spec.objects.push(ObjectSpec::new("b", ObjectSpecKind::Dynamic, 160_000_000));
    spec.kernels
        .push(KernelSpec::new("Copy", "stream.c", 318, 8_000_000).with_target("a", Pattern::Descending));
    spec.kernels
        .push(KernelSpec::new("Scale", "stream.c", 328, 8_000_000).with_target("b", Pattern::Random));
    let (trace, _) = generate(&spec, 5).map_err(|e| e.to_string())?;
    let run = run_pipeline(trace, None);
    let a = run.map.objects().iter().find(|o| o.size == 160_000_000 && o.base < run.map.objects()[1].base);
    let a = a.ok_or("object a missing")?;
    let bw = run
        .analysis
        .bandwidth
        .iter()
        .find(|b| b.object_id == a.id)
        .ok_or("no bandwidth for the linear sweep")?;
    let expected = 160_000_000.0 * 1e3 / 8_000_000.0;
    check(rel_err(bw.mb_per_s, expected) <= 0.01, || {
        format!("{:.1} MB/s vs {expected:.1}", bw.mb_per_s)
    })?;
    check(run.analysis.bandwidth.len() == 1, || {
        format!("random kernel got a bandwidth: {:?}", run.analysis.bandwidth)
    })?;
    let random = run.analysis.patterns.iter().find(|p| p.object_id != a.id).ok_or("no random pattern")?;
    check(random.fit.class == PatternClass::Random, || format!("random kernel classified {}", random.fit.class))?;
    Ok(format!("{:.1} MB/s vs {expected:.1} MB/s; random kernel n/a", bw.mb_per_s))
}

fn ac6_curves() -> Outcome {
    let mut spec = base_spec();
    spec.iterations = 60;
    spec.objects.push(ObjectSpec::new("v", ObjectSpecKind::Dynamic, 1 << 20));
    let mut fast = KernelSpec::new("fast", "c.c", 1, 500_000).with_target("v", Pattern::Ascending);
    fast.mips = 4000.0;
    (fast.l1d_mpi, fast.l2_mpi, fast.l3_mpi) = (0.01, 0.004, 0.002);
    let mut slow = KernelSpec::new("slow", "c.c", 2, 500_000).with_target("v", Pattern::Ascending);
    slow.mips = 1000.0;
    (slow.l1d_mpi, slow.l2_mpi, slow.l3_mpi) = (0.05, 0.02, 0.01);
    spec.kernels = vec![fast.clone(), slow.clone()];
    let (trace, _) = generate(&spec, 6).map_err(|e| e.to_string())?;
    let run = run_pipeline(trace, None);
    let c = &run.folded.curves;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for b in 0..c.bins {
        let center = c.bin_center(b);
        if (center - 0.5).abs() <= 0.03 {
            continue;
        }
        let k = if center < 0.5 { &fast } else { &slow };
        for (name, got, want) in [
            ("MIPS", c.mips[b], k.mips),
            ("L1D", c.l1d_per_instr[b], k.l1d_mpi),
            ("L2", c.l2_per_instr[b], k.l2_mpi),
            ("L3", c.l3_per_instr[b], k.l3_mpi),
        ] {
            let got = got.ok_or_else(|| format!("bin {b} empty"))?;
            let e = rel_err(got, want);
            worst = worst.max(e);
            check(e <= 0.10, || format!("bin {b} {name}: {got:.5} vs {want}"))?;
        }
        checked += 1;
    }
    Ok(format!("{checked} bins, max relative error {:.2}%", worst * 100.0))
}

fn ac7_multiplex() -> Outcome {
    let mut spec = base_spec();
    spec.iterations = 40;
    spec.load_period = 1367;
    spec.store_period = 4099;
    spec.multiplex_window = 370_000;
    spec.objects.push(ObjectSpec::new("v", ObjectSpecKind::Dynamic, 1 << 20));
    let mut k = KernelSpec::new("k", "m.c", 1, 1_000_000).with_target("v", Pattern::Ascending);
    k.store_fraction = 0.2;
    spec.kernels.push(k);
    let (trace, truth) = generate(&spec, 7).map_err(|e| e.to_string())?;
    let periods = SamplingPeriods {
        load: truth.load_period,
        store: truth.store_period,
    };
    let run = run_pipeline(trace, Some(periods));
    let e = run.analysis.extrapolation.ok_or("no extrapolation")?;
    check(e.load_samples >= 1000 && e.store_samples >= 1000, || {
        format!("{} load / {} store samples", e.load_samples, e.store_samples)
    })?;
    let (el, es) = (rel_err(e.est_loads, truth.totals.loads), rel_err(e.est_stores, truth.totals.stores));
    check(el <= 0.05 && es <= 0.05, || {
        format!("loads {:.0} vs {:.0}, stores {:.0} vs {:.0}", e.est_loads, truth.totals.loads, e.est_stores, truth.totals.stores)
    })?;
    Ok(format!(
        "duty {:.3}/{:.3}, load error {:.2}%, store error {:.2}%",
        e.load_duty,
        e.store_duty,
        el * 100.0,
        es * 100.0
    ))
}

/// Independent timeline of tracked objects: `(base, end, start, stop, label)`.
fn oracle_timeline(trace: &Trace) -> Vec<(u64, u64, u64, u64, String)> {
    let mut out = Vec::new();
    let mut open: Vec<(u64, u64, u64, String)> = Vec::new();
    for e in &trace.events {
        match &e.payload {
            EventPayload::Static(s) => out.push((s.base_address, s.base_address + s.size, 0, u64::MAX, s.name.clone())),
            EventPayload::Alloc(a) if a.size >= DEFAULT_THRESHOLD => {
                open.push((a.base_address, a.base_address + a.size, e.timestamp, a.callsite.clone()))
            }
            EventPayload::Free(f) => {
                if let Some(i) = open.iter().position(|o| o.0 == f.base_address) {
                    let (b, end, start, label) = open.remove(i);
                    out.push((b, end, start, e.timestamp, label));
                }
            }
            _ => {}
        }
    }
    out.extend(open.into_iter().map(|(b, end, start, l)| (b, end, start, u64::MAX, l)));
    out
}

fn ac8_reuse() -> Outcome {
    let base = 0x2aaa_0000_0000u64;
    let mut spec = base_spec();
    spec.iterations = 9;
    spec.iteration_gap = 2000;
    for (i, (alloc, free)) in [(0, Some(2)), (3, Some(5)), (6, None)].into_iter().enumerate() {
        let mut o = ObjectSpec::new(format!("x{i}"), ObjectSpecKind::Dynamic, 1 << 20);
        o.base = Some(base);
        o.label = Some(format!("reuse.c:{}", 10 * (i + 1)));
        o.alloc_iteration = alloc;
        o.free_iteration = free;
        spec.objects.push(o);
    }
    let mut other = ObjectSpec::new("table", ObjectSpecKind::Static, 200_000);
    other.label = Some("lookup_table".into());
    spec.objects.push(other);
    let mut k = KernelSpec::new("k", "reuse.c", 40, 200_000);
    k.loads = vec![target("x0", Pattern::Random, 0.8), target("table", Pattern::Random, 0.2)];
    k.stores = vec![target("x0", Pattern::Random, 1.0)];
    spec.kernels.push(k);
    let (trace, _) = generate(&spec, 8).map_err(|e| e.to_string())?;
    let run = run_pipeline(trace, None);
    let timeline = oracle_timeline(&run.trace);
    let brute = |addr: u64, t: u64| -> Option<(String, u64)> {
        timeline
            .iter()
            .find(|o| addr >= o.0 && addr < o.1 && t >= o.2 && t < o.3)
            .map(|o| (o.4.clone(), o.2))
    };
    let via_map = |addr: u64, t: u64| run.map.lookup(addr, t).map(|o| (o.label.clone(), o.lifetime.start));

    // every sample lands in the object live during its iteration
    let enters: Vec<u64> = run.folded.instances.iter().map(|i| i.enter_ts).collect();
    let mut sampled = 0;
    for (ts, s) in run.trace.samples().filter(|(_, s)| !s.is_pseudo()) {
        if s.address < base || s.address >= base + (1 << 20) {
            continue;
        }
        let it = enters.partition_point(|&e| e <= ts) - 1;
        let want = format!("reuse.c:{}", 10 * (it / 3 + 1));
        let got = via_map(s.address, ts).map(|g| g.0);
        check(got.as_deref() == Some(want.as_str()), || format!("t={ts}: {got:?} vs {want}"))?;
        sampled += 1;
    }

    let end = run.trace.events.last().unwrap().timestamp + 5000;
    let mut r = SplitMix64::new(88);
    for q in 0..10_000 {
        let addr = match r.below(3) {
            0 => base - 8192 + r.below((1 << 20) + 16384),
            1 => 0x60_0000 - 4096 + r.below(200_000 + 8192),
            _ => r.below(1 << 47),
        };
        let t = r.below(end);
        check(via_map(addr, t) == brute(addr, t), || {
            format!("query {q} ({addr:#x}, {t}): map {:?} oracle {:?}", via_map(addr, t), brute(addr, t))
        })?;
    }
    Ok(format!("{sampled} samples on the reused base, 10000 random queries agree"))
}

fn hpcg_run() -> Result<(Run, memfold::synthgen::GroundTruth), String> {
    let spec = preset("hpcg").unwrap();
    let (trace, truth) = generate(&spec, spec.seed).map_err(|e| e.to_string())?;
    Ok((run_pipeline(trace, None), truth))
}

fn ac9_wrapping(run: &Run) -> Outcome {
    let wrap = run
        .map
        .objects()
        .iter()
        .find(|o| o.kind == ObjectKind::Wrapped && o.label == "GenerateProblem_ref.cpp 124")
        .ok_or("wrap missing")?;
    let inner_tracked = run
        .map
        .objects()
        .iter()
        .filter(|o| o.kind == ObjectKind::Dynamic && o.base >= wrap.base && o.end() <= wrap.end())
        .count();
    check(inner_tracked == 0, || format!("{inner_tracked} allocations inside the wrap were tracked"))?;
    let small_allocs: Vec<(u64, u64)> = run
        .trace
        .events
        .iter()
        .filter_map(|e| match &e.payload {
            EventPayload::Alloc(a) if a.size < DEFAULT_THRESHOLD => Some((a.base_address, a.base_address + a.size)),
            _ => None,
        })
        .collect();
    let (mut in_wrap, mut loose) = (0, 0);
    for f in run.folded.access_samples() {
        let a = f.sample.address;
        let Some(&(lo, _)) = small_allocs.iter().find(|(lo, hi)| a >= *lo && a < *hi) else {
            continue;
        };
        let r = run.map.resolve(a, f.timestamp);
        let owner = run
            .map
            .objects()
            .iter()
            .find(|o| o.kind == ObjectKind::Wrapped && lo >= o.base && lo < o.end());
        if let Some(owner) = owner {
            in_wrap += 1;
            check(matches!(r, ObjectRef::Object { id, .. } if id == owner.id), || format!("{a:#x} -> {r:?}"))?;
        } else {
            loose += 1;
            check(r == ObjectRef::Unnamed, || format!("{a:#x} -> {r:?}"))?;
        }
    }
    check(in_wrap > 1000 && loose > 100, || format!("{in_wrap} wrapped / {loose} loose samples"))?;
    let top = &run.analysis.ranking.rows[0];
    check(top.label == "GenerateProblem_ref.cpp 124" && (top.share - 0.4621).abs() <= 0.02, || {
        format!("top row {} {:.4}", top.label, top.share)
    })?;
    Ok(format!(
        "{in_wrap} samples in small wrapped allocations all resolve to the wrap, {loose} unwrapped unresolved, top share {:.2}%",
        top.share * 100.0
    ))
}

fn ac10_phases(run: &Run, truth: &memfold::synthgen::GroundTruth) -> Outcome {
    let labels: Vec<&str> = run.folded.phases.iter().map(|p| p.label.as_str()).collect();
    let want: Vec<&str> = truth.phases.iter().map(|p| p.label.as_str()).collect();
    check(labels == want, || format!("phases {labels:?} vs {want:?}"))?;
    for (sub, line) in [("a1", 76), ("a2", 95)] {
        let p = run.folded.phases.iter().find(|p| p.label == sub).unwrap();
        check(p.group == "A" && p.routine == "ComputeSYMGS_ref", || format!("{sub}: {p:?}"))?;
        check(p.mocl == Some(("ComputeSYMGS_ref.cpp".into(), line)), || format!("{sub} MOCL {:?}", p.mocl))?;
    }
    let mut worst: f64 = 0.0;
    for (p, t) in run.folded.phases.iter().zip(&truth.phases) {
        let got = run.folded.span_ns(p.start_frac, p.end_frac);
        let e = rel_err(got, t.duration_ns);
        worst = worst.max(e);
        check(e <= 0.05, || format!("{}: {:.3} ms vs {:.3} ms", p.label, got / 1e6, t.duration_ns / 1e6))?;
    }
    Ok(format!("{labels:?}, MOCL 76/95, max duration error {:.2}%", worst * 100.0))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn ac11_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for n in 0..2 {
        let dir = tmp.path().join(format!("run{n}"));
        let d = dir.to_str().unwrap();
        let trace = format!("{d}/trace.mtf");
        let report = format!("{d}/report");
        let status = memfold::cli::run(["memfold", "generate", "--preset", "hpcg", "--seed", "11", "--out", d]);
        check(status == 0, || format!("generate exited {status}"))?;
        let status = memfold::cli::run([
            "memfold",
            "analyze",
            trace.as_str(),
            "--out",
            report.as_str(),
            "--stack-floor",
            &STACK_FLOOR.to_string(),
            "--load-period",
            "1367",
            "--store-period",
            "82307",
        ]);
        check(status == 0, || format!("analyze exited {status}"))?;
        trees.push(read_tree(&dir));
    }
    check(trees[0].keys().eq(trees[1].keys()), || "different file sets".into())?;
    for (name, bytes) in &trees[0] {
        check(&trees[1][name] == bytes, || format!("{name} differs"))?;
    }
    Ok(format!("{} files byte-identical", trees[0].len()))
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let mut results: Vec<(&str, &str, Outcome)> = vec![
        ("AC1", "round-trip parse(emit(t)) == t", ac1_round_trip()),
        ("AC2", "Stream access table vs ground truth", ac2_stream_table()),
        ("AC3", "bimodal DRAM latency modes", ac3_bimodal()),
        ("AC4", "ascending/descending/random classification", ac4_patterns()),
        ("AC5", "linear-sweep bandwidth", ac5_bandwidth()),
        ("AC6", "folded MIPS and miss-ratio curves", ac6_curves()),
        ("AC7", "multiplex extrapolation", ac7_multiplex()),
        ("AC8", "address reuse resolution", ac8_reuse()),
    ];
    match hpcg_run() {
        Ok((run, truth)) => {
            results.push(("AC9", "threshold and wrapped regions", ac9_wrapping(&run)));
            results.push(("AC10", "sub-phase detection and durations", ac10_phases(&run, &truth)));
        }
        Err(e) => {
            results.push(("AC9", "threshold and wrapped regions", Err(e.clone())));
            results.push(("AC10", "sub-phase detection and durations", Err(e)));
        }
    }
    results.push(("AC11", "pipeline determinism", ac11_determinism()));

    let mut failed = 0;
    for (id, name, r) in &results {
        match r {
            Ok(detail) => println!("{id:<5} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id:<5} FAIL  {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
