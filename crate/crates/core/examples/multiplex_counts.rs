// Loads and stores are sampled in alternating windows. Scale the sample
// counts back up by period and duty cycle and compare with what the
// generator actually executed.

use memfold::analysis::extrapolate_counts;
use memfold::folding::detect_instances;
use memfold::synthgen::{generate, KernelSpec, ObjectSpec, ObjectSpecKind, Pattern, WorkloadSpec};

pub fn run_example() -> anyhow::Result<()> {
    let mut spec = WorkloadSpec {
        iterations: 30,
        multiplex_window: 450_000,
        load_period: 2000,
        store_period: 6000,
        ..WorkloadSpec::default()
    };
    spec.objects.push(ObjectSpec::new("buf", ObjectSpecKind::Dynamic, 32 << 20));
    let mut k = KernelSpec::new("pack", "pack.c", 55, 1_200_000).with_target("buf", Pattern::Ascending);
    k.store_fraction = 0.25;
    spec.kernels.push(k);
    let (trace, truth) = generate(&spec, 9)?;
    println!("periods snapped to {} / {}", truth.load_period, truth.store_period);

    let samples: Vec<_> = trace
        .samples()
        .filter(|(_, s)| !s.is_pseudo())
        .map(|(ts, s)| (ts, s.kind()))
        .collect();
    let spans: Vec<(u64, u64)> = detect_instances(&trace, 1)?
        .iter()
        .map(|i| (i.enter_ts, i.exit_ts))
        .collect();
    let windows = trace.multiplex_windows();
    println!("{} windows over {} region instances", windows.len(), spans.len());

    let e = extrapolate_counts(&samples, truth.load_period, truth.store_period, &windows, &spans)?;
    for (kind, n, duty, est, actual) in [
        ("loads", e.load_samples, e.load_duty, e.est_loads, truth.totals.loads),
        ("stores", e.store_samples, e.store_duty, e.est_stores, truth.totals.stores),
    ] {
        println!(
            "{kind:<6} {n:>6} samples, duty {duty:.3}: estimate {est:.4e}, executed {actual:.4e} ({:+.2}%)",
            (est / actual - 1.0) * 100.0
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
