// Build an object map by hand: statics, reused heap addresses, small
// allocations below the threshold and a wrapped region that groups them.

use memfold::object_map::{build_object_map, MapConfig, ObjectRef};
use memfold::trace::{
    AllocEvent, EventPayload, FreeEvent, StaticObjectDecl, Trace, TraceEvent, TraceHeader, WrappedRegionEvent,
};

const HEAP: u64 = 0x2aaa_0000_0000;

fn alloc(ts: u64, base: u64, size: u64, site: &str) -> TraceEvent {
    TraceEvent::new(
        ts,
        EventPayload::Alloc(AllocEvent {
            base_address: base,
            size,
            callsite: site.into(),
        }),
    )
}

fn free(ts: u64, base: u64) -> TraceEvent {
    TraceEvent::new(ts, EventPayload::Free(FreeEvent { base_address: base }))
}

pub fn run_example() -> anyhow::Result<()> {
    let mut trace = Trace::new(TraceHeader::new(7, 2500));
    trace.events.push(TraceEvent::new(
        0,
        EventPayload::Static(StaticObjectDecl {
            name: "lookup".into(),
            base_address: 0x60_0000,
            size: 256 * 1024,
        }),
    ));
    // same base handed out twice
    trace.events.push(alloc(100, HEAP, 4 << 20, "mesh.c:40"));
    trace.events.push(free(5_000, HEAP));
    trace.events.push(alloc(6_000, HEAP, 8 << 20, "mesh.c:88"));
    // tiny blocks, the last three under a wrap
    let small = HEAP + (16 << 20);
    trace.events.push(alloc(6_100, small, 4096, "list.c:12"));
    trace.events.push(TraceEvent::new(
        6_200,
        EventPayload::Wrap(WrappedRegionEvent {
            begin_address: small + 4096,
            end_address: small + 4 * 4096,
            label: "node pool".into(),
        }),
    ));
    for i in 1..4 {
        trace.events.push(alloc(6_200 + i, small + i * 4096, 4096, "list.c:12"));
    }

    let map = build_object_map(
        &trace,
        MapConfig {
            stack_floor: Some(0x7ff0_0000_0000),
            ..MapConfig::default()
        },
    )?;
    println!("threshold {} bytes, {} tracked objects", map.threshold(), map.objects().len());
    for o in map.objects() {
        let end = o.lifetime.end.map(|e| e.to_string()).unwrap_or_else(|| "-".into());
        println!("  {o} live [{}, {end})", o.lifetime.start);
    }

    let queries = [
        (HEAP + 64, 1_000),
        (HEAP + 64, 5_000),
        (HEAP + 64, 9_000),
        (HEAP + (6 << 20), 9_000),
        (small + 8, 9_000),
        (small + 2 * 4096 + 8, 9_000),
        (0x60_0010, 1),
        (0x7ff0_0000_1000, 9_000),
    ];
    for (addr, t) in queries {
        let what = match map.resolve(addr, t) {
            ObjectRef::Object { id, offset } => format!("`{}` + {offset}", map.get(id).unwrap().label),
            ObjectRef::Stack => "stack".into(),
            ObjectRef::Unnamed => "unnamed".into(),
        };
        println!("  {addr:#014x} at t={t:>5}: {what}");
    }
    assert_eq!(map.lookup(HEAP, 1_000).unwrap().label, "mesh.c:40");
    assert_eq!(map.lookup(HEAP, 9_000).unwrap().label, "mesh.c:88");
    assert!(map.lookup(HEAP, 5_500).is_none());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
