// Fold a synthetic three-kernel loop and read back its phases and
// counter curves.

use memfold::folding::{fold_region, FoldConfig};
use memfold::synthgen::{generate, KernelSpec, ObjectSpec, ObjectSpecKind, Pattern, WorkloadSpec};

fn workload() -> WorkloadSpec {
    let mut spec = WorkloadSpec {
        iterations: 25,
        multiplex_window: 0,
        ..WorkloadSpec::default()
    };
    spec.objects.push(ObjectSpec::new("field", ObjectSpecKind::Dynamic, 8 << 20));
    let mut stencil = KernelSpec::new("stencil", "solver.c", 120, 600_000).with_target("field", Pattern::Ascending);
    stencil.mips = 3200.0;
    let mut reduce = KernelSpec::new("reduce", "solver.c", 210, 250_000).with_target("field", Pattern::Random);
    reduce.mips = 900.0;
    reduce.l1d_mpi = 0.08;
    let mut update = KernelSpec::new("update", "solver.c", 260, 150_000).with_target("field", Pattern::Descending);
    update.mips = 2100.0;
    spec.kernels = vec![stencil, reduce, update];
    spec
}

pub fn run_example() -> anyhow::Result<()> {
    let (trace, truth) = generate(&workload(), 1)?;
    let folded = fold_region(&trace, 1, &FoldConfig::default())?;
    println!(
        "{} of {} instances kept, median {:.3} ms, {} folded samples",
        folded.instances.len(),
        folded.detected_instances,
        folded.median_duration / 1e6,
        folded.samples.len()
    );

    println!("phase  span          routine   MOCL          ms (configured)");
    for (p, t) in folded.phases.iter().zip(&truth.phases) {
        let mocl = p.mocl.as_ref().map(|(f, l)| format!("{f}:{l}")).unwrap_or_default();
        println!(
            "{:<6} {:.3}-{:.3}   {:<9} {mocl:<13} {:.3} ({:.3})",
            p.label,
            p.start_frac,
            p.end_frac,
            p.routine,
            folded.span_ns(p.start_frac, p.end_frac) / 1e6,
            t.duration_ns / 1e6
        );
    }

    // one row per ten bins keeps the output short
    let c = &folded.curves;
    println!("bin   MIPS   L1D/instr");
    for b in (0..c.bins).step_by(10) {
        let show = |v: Option<f64>, scale: f64| v.map(|x| format!("{:.1}", x * scale)).unwrap_or_else(|| "?".into());
        println!("{:<5} {:>6} {:>8}", b, show(c.mips[b], 1.0), show(c.l1d_per_instr[b], 1000.0) + "e-3");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
