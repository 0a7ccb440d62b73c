// Full report for the Lulesh preset: gnuplot script, data files, CSV
// tables and the folded trace. Render with `gnuplot folded.gp` inside
// the printed directory.

use std::fs;

use memfold::analysis::{analyze, AnalysisConfig, SamplingPeriods};
use memfold::folding::{fold_region, FoldConfig};
use memfold::object_map::{build_object_map, MapConfig};
use memfold::report::{write_report, ReportConfig};
use memfold::synthgen::{generate, preset};

pub fn run_example() -> anyhow::Result<()> {
    let spec = preset("lulesh").expect("bundled preset");
    let (trace, truth) = generate(&spec, spec.seed)?;
    let map = build_object_map(
        &trace,
        MapConfig {
            stack_floor: spec.stack_floor,
            ..MapConfig::default()
        },
    )?;
    let folded = fold_region(&trace, 1, &FoldConfig::default())?;
    let cfg = AnalysisConfig {
        periods: Some(SamplingPeriods {
            load: truth.load_period,
            store: truth.store_period,
        }),
        ..AnalysisConfig::default()
    };
    let analysis = analyze(&trace, &map, &folded, &cfg)?;

    let out = std::env::temp_dir().join("memfold-lulesh-report");
    let bundle = write_report(&folded, &map, &analysis, &out, &ReportConfig::default())?;
    println!("report in {}", out.display());
    let mut files = vec![bundle.plot_script.clone()];
    files.extend(bundle.data_files().iter().map(|p| p.to_path_buf()));
    files.extend(bundle.tables.iter().cloned());
    files.extend(bundle.folded_trace.clone());
    for f in &files {
        let len = fs::metadata(f)?.len();
        println!("  {:<14} {len:>10} bytes", f.file_name().unwrap().to_string_lossy());
    }
    print!("{}", fs::read_to_string(out.join("phases.csv"))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
