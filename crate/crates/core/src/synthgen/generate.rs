use log::info;

use super::rng::{nearest_prime, SplitMix64};
use super::spec::{KernelSpec, ObjectSpecKind, Pattern, SpecError, TargetSpec, WorkloadSpec, STACK_TARGET};
use super::truth::{kernel_metrics, truth_access, truth_patterns, truth_phases, GroundTruth, ObjectShare, Totals};
use crate::trace::{
    Access, AllocEvent, CounterSet, EventPayload, Frame, FreeEvent, Level, MemorySample, MultiplexWindow,
    RegionEdge, RegionMarker, SampleKind, StaticObjectDecl, Trace, TraceEvent, TraceHeader,
    WrappedRegionEvent,
};

pub const STATIC_BASE: u64 = 0x60_0000;
pub const HEAP_BASE: u64 = 0x2aaa_0000_0000;
/// Unused space left between two heap objects.
pub const HEAP_GAP: u64 = 4 << 20;
/// Sampled stack references fall in `[floor + STACK_OFFSET, .. + STACK_SPAN)`.
pub const STACK_OFFSET: u64 = 0x1000;
pub const STACK_SPAN: u64 = 64 << 10;
/// Timestamp of the first region enter.
pub const LOOP_START: u64 = 1000;

const PAGE: u64 = 4096;

// Ties at one timestamp are ordered by rank, then by emission order.
const RANK_MULTIPLEX: u8 = 0;
const RANK_EXIT: u8 = 1;
const RANK_FREE: u8 = 2;
const RANK_ALLOC: u8 = 3;
const RANK_ENTER: u8 = 4;
const RANK_PSEUDO: u8 = 5;
const RANK_SAMPLE: u8 = 6;

fn round_up(x: u64, to: u64) -> u64 {
    x.div_ceil(to) * to
}

/// Base address of every workload object.
fn layout(spec: &WorkloadSpec) -> Vec<u64> {
    let mut statics = STATIC_BASE;
    let mut heap = HEAP_BASE;
    spec.objects
        .iter()
        .map(|o| {
            if let Some(b) = o.base {
                return b;
            }
            let cursor = if o.kind == ObjectSpecKind::Static {
                &mut statics
            } else {
                &mut heap
            };
            let base = *cursor;
            *cursor += round_up(o.size, PAGE);
            if o.kind != ObjectSpecKind::Static {
                *cursor += HEAP_GAP;
            }
            base
        })
        .collect()
}

fn snap(period: u64, snap: bool, what: &str) -> u64 {
    if !snap {
        return period;
    }
    let p = nearest_prime(period);
    if p != period {
        info!("{what} period {period} snapped to prime {p}");
    }
    p
}

/// Continuous counter state; `cycles` is derived from time.
#[derive(Clone, Copy, Default)]
struct Accum {
    instructions: f64,
    l1d: f64,
    l2: f64,
    l3: f64,
    branches: f64,
}

impl Accum {
    fn advance(&self, k: &KernelSpec, ns: f64) -> Accum {
        let instr = k.mips / 1000.0 * ns;
        Accum {
            instructions: self.instructions + instr,
            l1d: self.l1d + instr * k.l1d_mpi,
            l2: self.l2 + instr * k.l2_mpi,
            l3: self.l3 + instr * k.l3_mpi,
            branches: self.branches + instr * k.branch_ratio,
        }
    }

    fn snapshot(&self, ts: u64, freq_mhz: u32) -> CounterSet {
        CounterSet {
            instructions: self.instructions as u64,
            cycles: (ts as f64 * f64::from(freq_mhz) / 1000.0) as u64,
            l1d_misses: self.l1d as u64,
            l2_misses: self.l2 as u64,
            l3_misses: self.l3 as u64,
            branch_instructions: self.branches as u64,
        }
    }
}

struct Gen<'a> {
    spec: &'a WorkloadSpec,
    bases: Vec<u64>,
    rng: SplitMix64,
    events: Vec<(u64, u8, TraceEvent)>,
    /// References per workload object; the extra last slot is the stack.
    hits: Vec<u64>,
    load_samples: u64,
    store_samples: u64,
}

impl Gen<'_> {
    fn push(&mut self, ts: u64, rank: u8, payload: EventPayload) {
        self.events.push((ts, rank, TraceEvent::new(ts, payload)));
    }

    fn allocate(&mut self, i: usize, ts: u64) {
        let o = &self.spec.objects[i];
        let base = self.bases[i];
        let label = o.trace_label().to_string();
        match o.kind {
            ObjectSpecKind::Static => self.push(
                ts,
                RANK_ALLOC,
                EventPayload::Static(StaticObjectDecl {
                    name: label,
                    base_address: base,
                    size: o.size,
                }),
            ),
            ObjectSpecKind::Dynamic => self.push(
                ts,
                RANK_ALLOC,
                EventPayload::Alloc(AllocEvent {
                    base_address: base,
                    size: o.size,
                    callsite: label,
                }),
            ),
            ObjectSpecKind::Wrapped => {
                let (size, pieces) = (o.size, u64::from(o.pieces));
                self.push(
                    ts,
                    RANK_ALLOC,
                    EventPayload::Wrap(WrappedRegionEvent {
                        begin_address: base,
                        end_address: base + size,
                        label: label.clone(),
                    }),
                );
                for (b, s) in pieces_of(base, size, pieces) {
                    self.push(
                        ts,
                        RANK_ALLOC,
                        EventPayload::Alloc(AllocEvent {
                            base_address: b,
                            size: s,
                            callsite: label.clone(),
                        }),
                    );
                }
            }
        }
    }

    fn free(&mut self, i: usize, ts: u64) {
        let o = &self.spec.objects[i];
        let base = self.bases[i];
        let bases: Vec<u64> = match o.kind {
            ObjectSpecKind::Static => Vec::new(),
            ObjectSpecKind::Dynamic => vec![base],
            ObjectSpecKind::Wrapped => pieces_of(base, o.size, u64::from(o.pieces))
                .map(|(b, _)| b)
                .collect(),
        };
        for b in bases {
            self.push(ts, RANK_FREE, EventPayload::Free(FreeEvent { base_address: b }));
        }
    }

    /// Address of one reference to `target` at fraction `frac` of the kernel.
    fn address(&mut self, target: &TargetSpec, frac: f64) -> u64 {
        let (slot, base, size) = if target.object == STACK_TARGET {
            let floor = self.spec.stack_floor.expect("validated");
            (self.spec.objects.len(), floor + STACK_OFFSET, STACK_SPAN)
        } else {
            let i = self
                .spec
                .objects
                .iter()
                .position(|o| o.name == target.object)
                .expect("validated");
            (i, self.bases[i], self.spec.objects[i].size)
        };
        self.hits[slot] += 1;
        let linear = ((frac * size as f64) as u64).min(size - 1);
        let offset = match target.pattern {
            Pattern::Ascending => linear & !7,
            Pattern::Descending => (size - 1 - linear) & !7,
            Pattern::Random => self.rng.below((size / 8).max(1)) * 8,
        };
        base + offset
    }

    fn sample(&mut self, k: &KernelSpec, kind: SampleKind, ts: u64, frac: f64, counters: CounterSet) {
        let targets = match kind {
            SampleKind::Load => &k.loads,
            SampleKind::Store => &k.stores,
        };
        let weights: Vec<f64> = targets.iter().map(|t| t.weight).collect();
        let target = &targets[self.rng.choose(&weights)];
        let address = self.address(target, frac);
        let access = match kind {
            SampleKind::Load => {
                let level = Level::ALL[self.rng.choose(&k.level_distribution)];
                let pts = &k.latency_distribution[level.index()];
                let w: Vec<f64> = pts.iter().map(|p| p.weight).collect();
                let p = pts[self.rng.choose(&w)];
                let jitter = self.rng.below(2 * u64::from(p.spread) + 1) as u32;
                self.load_samples += 1;
                Access::Load {
                    latency_cycles: p.value - p.spread + jitter,
                    level,
                }
            }
            SampleKind::Store => {
                self.store_samples += 1;
                Access::Store {
                    l1_hit: self.rng.next_f64() < k.store_l1_hit,
                }
            }
        };
        let sample = MemorySample {
            address,
            access,
            counters,
            callstack: vec![Frame::new(&k.routine, &k.file, k.hot_line)],
        };
        self.push(ts, RANK_SAMPLE, EventPayload::Sample(sample));
    }
}

/// `pieces` consecutive equal allocations spanning `[base, base + size)`,
/// the last one taking the remainder.
fn pieces_of(base: u64, size: u64, pieces: u64) -> impl Iterator<Item = (u64, u64)> {
    let each = size.checked_div(pieces).unwrap_or(0);
    (0..pieces).map(move |j| {
        let b = base + j * each;
        let s = if j + 1 == pieces { size - j * each } else { each };
        (b, s)
    })
}

/// Kind collected at time `t` and the end of that window. `None` means both
/// kinds are collected for good.
fn window_at(window: u64, t: f64) -> Option<(SampleKind, f64)> {
    if window == 0 {
        return None;
    }
    let w = window as f64;
    let idx = (t / w).floor() as u64;
    let kind = if idx.is_multiple_of(2) {
        SampleKind::Load
    } else {
        SampleKind::Store
    };
    Some((kind, (idx + 1) as f64 * w))
}

/// Emulates a sampled run of `spec`.
///
/// Loads and stores are counted down per kind while that kind's multiplex
/// window is active; the countdown carries over between kernels and
/// iterations. Linear sweeps cover their target once per kernel instance.
pub fn generate(spec: &WorkloadSpec, seed: u64) -> Result<(Trace, GroundTruth), SpecError> {
    spec.validate()?;
    let load_period = snap(spec.load_period, spec.snap_periods, "load");
    let store_period = snap(spec.store_period, spec.snap_periods, "store");

    let mut g = Gen {
        spec,
        bases: layout(spec),
        rng: SplitMix64::new(seed),
        events: Vec::new(),
        hits: vec![0; spec.objects.len() + 1],
        load_samples: 0,
        store_samples: 0,
    };

    for i in 0..spec.objects.len() {
        if spec.objects[i].alloc_iteration == 0 {
            g.allocate(i, 0);
        }
    }

    let iteration_ns: u64 = spec.kernels.iter().map(|k| k.duration).sum();
    let mut acc = Accum::default();
    let mut load_left = load_period as f64;
    let mut store_left = store_period as f64;
    let (mut true_loads, mut true_stores) = (0.0, 0.0);
    let mut t0 = LOOP_START;
    let mut last_ts = 0;

    for it in 0..spec.iterations {
        for i in 0..spec.objects.len() {
            if it > 0 && spec.objects[i].alloc_iteration == it {
                g.allocate(i, t0);
            }
        }
        g.push(
            t0,
            RANK_ENTER,
            EventPayload::Region(RegionMarker {
                region_id: spec.region_id,
                edge: RegionEdge::Enter,
            }),
        );
        let snapshot = acc.snapshot(t0, spec.freq_mhz);
        g.push(t0, RANK_PSEUDO, EventPayload::Sample(MemorySample::pseudo(snapshot)));

        let mut start = t0;
        for k in &spec.kernels {
            let end = start + k.duration;
            let kernel_acc = acc;
            let (a, b) = (start as f64, end as f64);
            true_loads += k.load_rate() * k.duration as f64;
            true_stores += k.store_rate() * k.duration as f64;

            let mut t = a;
            while t < b {
                let (active, seg_end) = match window_at(spec.multiplex_window, t) {
                    Some((kind, w_end)) => (Some(kind), w_end.min(b)),
                    None => (None, b),
                };
                for kind in [SampleKind::Load, SampleKind::Store] {
                    if active.is_some_and(|a| a != kind) {
                        continue;
                    }
                    let (rate, left, period) = match kind {
                        SampleKind::Load => (k.load_rate(), &mut load_left, load_period),
                        SampleKind::Store => (k.store_rate(), &mut store_left, store_period),
                    };
                    if rate <= 0.0 {
                        continue;
                    }
                    let mut cur = t;
                    let mut hits = Vec::new();
                    loop {
                        let next = cur + *left / rate;
                        if next < seg_end {
                            hits.push(next);
                            cur = next;
                            *left = period as f64;
                        } else {
                            *left -= (seg_end - cur) * rate;
                            break;
                        }
                    }
                    for h in hits {
                        let ts = h as u64;
                        let counters = kernel_acc.advance(k, ts as f64 - a).snapshot(ts, spec.freq_mhz);
                        g.sample(k, kind, ts, (h - a) / (b - a), counters);
                    }
                }
                t = seg_end;
            }
            acc = kernel_acc.advance(k, k.duration as f64);
            start = end;
        }

        g.push(
            start,
            RANK_EXIT,
            EventPayload::Region(RegionMarker {
                region_id: spec.region_id,
                edge: RegionEdge::Exit,
            }),
        );
        for i in 0..spec.objects.len() {
            if spec.objects[i].free_iteration == Some(it) {
                g.free(i, start);
            }
        }
        last_ts = start;
        t0 = start + spec.iteration_gap;
    }

    if spec.multiplex_window > 0 {
        let mut j = 0u64;
        while j * spec.multiplex_window <= last_ts {
            let kind = if j.is_multiple_of(2) {
                SampleKind::Load
            } else {
                SampleKind::Store
            };
            g.push(
                j * spec.multiplex_window,
                RANK_MULTIPLEX,
                EventPayload::Multiplex(MultiplexWindow { kind }),
            );
            j += 1;
        }
    }

    let mut events = std::mem::take(&mut g.events);
    events.sort_by_key(|e| (e.0, e.1));
    let mut trace = Trace::new(TraceHeader::new(spec.process_id, spec.freq_mhz));
    trace.events = events.into_iter().map(|e| e.2).collect();

    let phases = truth_phases(spec);
    let total_refs: u64 = g.hits.iter().sum();
    let share = |n: u64| {
        if total_refs == 0 {
            0.0
        } else {
            n as f64 / total_refs as f64
        }
    };
    let mut objects: Vec<ObjectShare> = spec
        .objects
        .iter()
        .zip(&g.hits)
        .map(|(o, &n)| ObjectShare {
            object: o.name.clone(),
            label: o.trace_label().to_string(),
            size: o.size,
            samples: n,
            share: share(n),
        })
        .collect();
    objects.sort_by_key(|o| std::cmp::Reverse(o.samples));

    let truth = GroundTruth {
        seed,
        load_period,
        store_period,
        iteration_ns,
        access: truth_access(spec, &phases),
        patterns: truth_patterns(spec, &phases),
        metrics: kernel_metrics(spec),
        phases,
        objects,
        stack_share: share(g.hits[spec.objects.len()]),
        totals: Totals {
            instructions: acc.instructions as u64,
            loads: true_loads,
            stores: true_stores,
            load_samples: g.load_samples,
            store_samples: g.store_samples,
        },
    };
    Ok((trace, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::spec::{ObjectSpec, LatencyPoint};
    use crate::trace::{to_mtf_string, validate_trace, Severity};

    fn one_kernel(pattern: Pattern) -> WorkloadSpec {
        let mut s = WorkloadSpec {
            iterations: 5,
            load_period: 101,
            store_period: 997,
            multiplex_window: 0,
            stack_floor: Some(0x7ff0_0000_0000),
            ..WorkloadSpec::default()
        };
        s.objects.push(ObjectSpec::new("a", ObjectSpecKind::Dynamic, 1 << 20));
        s.kernels.push(KernelSpec::new("k", "k.c", 10, 200_000).with_target("a", pattern));
        s
    }

    #[test]
    fn all_l1_ascending() {
        let (trace, truth) = generate(&one_kernel(Pattern::Ascending), 3).unwrap();
        assert!(truth.totals.load_samples > 100);
        let mut prev: Option<(u64, u64)> = None;
        let mut enter = 0;
        for e in &trace.events {
            match &e.payload {
                EventPayload::Region(r) if r.edge == RegionEdge::Enter => {
                    enter = e.timestamp;
                    prev = None;
                }
                EventPayload::Sample(s) if !s.is_pseudo() && s.kind() == SampleKind::Load => {
                    assert_eq!(s.load_info(), Some((7, Level::L1)));
                    if let Some((_, a)) = prev {
                        assert!(s.address > a, "offsets must grow within an iteration");
                    }
                    prev = Some((enter, s.address));
                }
                _ => {}
            }
        }
    }

    #[test]
    fn deterministic() {
        let s = one_kernel(Pattern::Random);
        let (t1, g1) = generate(&s, 11).unwrap();
        let (t2, g2) = generate(&s, 11).unwrap();
        assert_eq!(to_mtf_string(&t1), to_mtf_string(&t2));
        assert_eq!(g1, g2);
        let (t3, _) = generate(&s, 12).unwrap();
        assert_ne!(t1, t3);
    }

    #[test]
    fn output_validates() {
        let mut s = one_kernel(Pattern::Descending);
        s.multiplex_window = 150_000;
        s.objects[0].free_iteration = Some(2);
        s.objects.push(ObjectSpec {
            alloc_iteration: 3,
            ..ObjectSpec::new("b", ObjectSpecKind::Dynamic, 1 << 20)
        });
        s.kernels.push(KernelSpec::new("j", "k.c", 20, 100_000).with_target("b", Pattern::Random));
        s.kernels[0].loads = vec![TargetSpec { object: "stack".into(), pattern: Pattern::Random, weight: 1.0 }];
        let (trace, _) = generate(&s, 1).unwrap();
        let errors: Vec<_> = validate_trace(&trace)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        assert!(errors.is_empty(), "{errors:?}");
    }

    #[test]
    fn sampling_clock_counts() {
        let s = one_kernel(Pattern::Ascending);
        let (_, truth) = generate(&s, 5).unwrap();
        // 2000 MIPS * 0.3 loads/instr * 200 us * 5 iterations = 600_000 loads
        assert_eq!(truth.totals.loads, 600_000.0);
        let period = truth.load_period;
        assert_eq!(truth.totals.load_samples, 600_000 / period);
        assert_eq!(truth.totals.instructions, 2_000_000);
    }

    #[test]
    fn latency_spread_stays_in_range() {
        let mut s = one_kernel(Pattern::Random);
        s.kernels[0].latency_distribution[0] = vec![LatencyPoint { value: 30, spread: 4, weight: 1.0 }];
        let (trace, _) = generate(&s, 2).unwrap();
        let lats: Vec<u32> = trace
            .samples()
            .filter(|(_, s)| !s.is_pseudo())
            .filter_map(|(_, s)| s.load_info().map(|l| l.0))
            .collect();
        assert!(lats.iter().all(|&l| (26..=34).contains(&l)));
        assert!(lats.contains(&26) && lats.contains(&34));
    }
}
