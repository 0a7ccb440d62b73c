// Where did the loads of each Stream kernel get served from, and at what
// cost? Prints the folded access table next to the configured values.

use memfold::analysis::{analyze, AnalysisConfig};
use memfold::folding::{fold_region, FoldConfig};
use memfold::object_map::{build_object_map, MapConfig};
use memfold::synthgen::{generate, preset};
use memfold::trace::Level;

pub fn run_example() -> anyhow::Result<()> {
    let spec = preset("stream").expect("bundled preset");
    let (trace, truth) = generate(&spec, spec.seed)?;
    let map = build_object_map(&trace, MapConfig::default())?;
    let folded = fold_region(&trace, 1, &FoldConfig::default())?;
    let analysis = analyze(&trace, &map, &folded, &AnalysisConfig::default())?;

    for phase in &folded.phases {
        println!("{} ({})", phase.label, phase.routine);
        println!("  level   share   truth    cost   modes");
        for level in Level::ALL {
            let want = truth.access_row(&phase.label, level).map_or(0.0, |r| r.share);
            let Some(row) = analysis.access.row(&phase.label, level) else {
                continue;
            };
            let cost = row.mean_cost.map(|c| format!("{c:.1}")).unwrap_or_default();
            let modes: Vec<String> = row.modes.iter().map(u32::to_string).collect();
            println!(
                "  {:<6} {:>5.1}%  {:>5.1}%  {cost:>6}   {}",
                level.name(),
                row.share * 100.0,
                want * 100.0,
                modes.join(",")
            );
        }
    }
    for w in &analysis.access.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
