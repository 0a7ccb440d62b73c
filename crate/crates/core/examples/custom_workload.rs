// Describe a workload in the text format, generate its trace and ground
// truth on disk, and read the trace back.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use memfold::synthgen::{emit_ground_truth, generate, WorkloadSpec};
use memfold::trace::{emit_trace, parse_trace};

const WORKLOAD: &str = "\
# a gather followed by an in-place transpose
iterations = 8
load_period = 1500
store_period = 9000
multiplex_window = 0
stack_floor = 0x7ff000000000

[object]
name = index
kind = static
size = 0x40000
label = idx

[object]
name = matrix
kind = dynamic
size = 16_777_216
label = transpose.c:21

[kernel]
routine = gather
file = transpose.c
hot_line = 48
duration = 400000
loads = index:ascending:0.3, matrix:random:0.6, stack:random:0.1
stores = matrix:random
levels = L1:0.5, LFB:0.2, L2:0.1, L3:0.1, DRAM:0.1
latency.LFB = 60~5:1
latency.L2 = 14:1
latency.L3 = 45~4:1
latency.DRAM = 300~15:0.7, 520~15:0.3

[kernel]
routine = transpose
file = transpose.c
hot_line = 77
duration = 600000
target = matrix
pattern = descending
mips = 1400
";

pub fn run_example() -> anyhow::Result<()> {
    let spec = WorkloadSpec::parse(WORKLOAD)?;
    // the printed form parses back to the same spec
    assert_eq!(WorkloadSpec::parse(&spec.to_string())?, spec);

    let (trace, truth) = generate(&spec, 2024)?;
    let dir = std::env::temp_dir().join("memfold-custom-workload");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("trace.mtf");
    let mut w = BufWriter::new(File::create(&path)?);
    emit_trace(&trace, &mut w)?;
    w.flush()?;
    let written = emit_ground_truth(&truth, &dir)?;

    let back = parse_trace(BufReader::new(File::open(&path)?))?;
    assert_eq!(back, trace);
    println!("{} events written to {}", trace.events.len(), path.display());
    for p in written {
        println!("  {}", p.file_name().unwrap().to_string_lossy());
    }
    for p in &truth.phases {
        println!("phase {} {} {:.3}-{:.3}", p.label, p.routine, p.start_frac, p.end_frac);
    }
    for o in &truth.objects {
        println!("object {:<8} {:>6.2}% of sampled references", o.object, o.share * 100.0);
    }
    println!("stack  {:>6.2}%", truth.stack_share * 100.0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
