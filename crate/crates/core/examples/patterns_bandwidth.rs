// Access patterns per phase and object for the HPCG preset, with the
// sweep bandwidth wherever a sweep covers its whole object.

use memfold::analysis::{analyze, AnalysisConfig};
use memfold::folding::{fold_region, FoldConfig};
use memfold::object_map::{build_object_map, MapConfig};
use memfold::synthgen::{generate, preset};

pub fn run_example() -> anyhow::Result<()> {
    let spec = preset("hpcg").expect("bundled preset");
    let (trace, _) = generate(&spec, spec.seed)?;
    let map = build_object_map(
        &trace,
        MapConfig {
            stack_floor: spec.stack_floor,
            ..MapConfig::default()
        },
    )?;
    let folded = fold_region(&trace, 1, &FoldConfig::default())?;
    let analysis = analyze(&trace, &map, &folded, &AnalysisConfig::default())?;

    println!("phase  object                          pattern       r2   cover  samples  MB/s");
    for p in &analysis.patterns {
        let o = map.get(p.object_id).unwrap();
        let bw = analysis
            .bandwidth
            .iter()
            .find(|b| b.phase == p.phase && b.object_id == p.object_id)
            .map(|b| format!("{:.0}", b.mb_per_s))
            .unwrap_or_default();
        println!(
            "{:<6} #{:<2} {:<28} {:<12} {:.3}  {:.2}  {:>7}  {bw}",
            p.phase,
            o.id,
            o.label,
            p.fit.class.name(),
            p.fit.r2,
            p.fit.coverage,
            p.fit.samples
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
