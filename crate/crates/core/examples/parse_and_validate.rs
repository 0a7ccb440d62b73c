// Parse a hand-written trace, check it, then break it on purpose.

use memfold::trace::{parse_str, to_mtf_string, validate_trace, EventPayload, FreeEvent, TraceEvent};

const TRACE: &str = "\
H|1|42|2500
R|0|1|E
S|0|L|0x0|0|L1|0;0;0;0;0;0|
A|100|0x2aaa00000000|1048576|main.c:17
S|400|L|0x2aaa00000040|7|L1|800;1000;4;1;0;120|sum:main.c:31
S|900|L|0x2aaa00001000|212|DRAM|1800;2250;9;5;3;270|sum:main.c:31
S|1200|S|0x2aaa00000080|1|2400;3000;11;5;3;360|sum:main.c:33
F|1500|0x2aaa00000000
R|1600|1|X
";

pub fn run_example() -> anyhow::Result<()> {
    let trace = parse_str(TRACE)?;
    println!(
        "pid {} at {} MHz: {} events, {} samples",
        trace.header.process_id,
        trace.header.nominal_freq_mhz,
        trace.events.len(),
        trace.samples().filter(|(_, s)| !s.is_pseudo()).count()
    );
    for (ts, s) in trace.samples().filter(|(_, s)| !s.is_pseudo()) {
        let site = s.innermost().map(|f| format!("{}:{}", f.file, f.line)).unwrap_or_default();
        match s.load_info() {
            Some((lat, level)) => println!("  t={ts:>5} load  {:#x} {lat:>4} cycles from {level} ({site})", s.address),
            None => println!("  t={ts:>5} store {:#x} ({site})", s.address),
        }
    }
    let diags = validate_trace(&trace);
    println!("validation: {} diagnostics", diags.len());
    assert!(diags.is_empty());

    // emitting gives back the same text
    assert_eq!(to_mtf_string(&trace), TRACE);

    let mut broken = trace.clone();
    broken
        .events
        .insert(5, TraceEvent::new(950, EventPayload::Free(FreeEvent { base_address: 0xdead_0000 })));
    for d in validate_trace(&broken) {
        println!("  {d}");
    }

    match parse_str(&TRACE.replace("|212|", "|lots|")) {
        Ok(_) => anyhow::bail!("bad latency accepted"),
        Err(e) => println!("parse error: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
