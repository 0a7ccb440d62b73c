use std::io;
use std::path::{Path, PathBuf};

use crate::analysis::Analysis;
use crate::folding::FoldedRegion;
use crate::object_map::ObjectMap;

/// `x` with four significant digits.
pub fn format_share(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".to_string();
    }
    let decimals = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn format_number(x: f64) -> String {
    format!("{x:.2}")
}

pub fn format_modes(modes: &[u32]) -> String {
    modes
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes `rows` under `header` and returns the path.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<PathBuf> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// Writes `access.csv`, `ranking.csv`, `phases.csv` and `patterns.csv`, plus
/// `counts.csv` when event counts were extrapolated.
pub fn emit_summary_tables(
    folded: &FoldedRegion,
    map: &ObjectMap,
    analysis: &Analysis,
    out_dir: &Path,
) -> io::Result<Vec<PathBuf>> {
    let mut paths = Vec::new();

    let access: Vec<Vec<String>> = analysis
        .access
        .rows
        .iter()
        .map(|r| {
            vec![
                r.phase.clone(),
                r.level.to_string(),
                format_share(r.share),
                r.mean_cost.map(format_number).unwrap_or_default(),
                format_modes(&r.modes),
            ]
        })
        .collect();
    paths.push(write_csv(
        &out_dir.join("access.csv"),
        &["phase", "level", "share", "mean_cost", "modes"],
        &access,
    )?);

    let ranking = &analysis.ranking;
    let mut rows: Vec<Vec<String>> = ranking
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.label.clone(),
                r.size.to_string(),
                format_share(r.share),
            ]
        })
        .collect();
    for (label, share) in [("stack", ranking.stack_share), ("unnamed", ranking.unnamed_share)] {
        rows.push(vec![String::new(), label.to_string(), String::new(), format_share(share)]);
    }
    paths.push(write_csv(
        &out_dir.join("ranking.csv"),
        &["rank", "label", "size_bytes", "share"],
        &rows,
    )?);

    let phases: Vec<Vec<String>> = folded
        .phases
        .iter()
        .map(|p| {
            let (file, line) = match &p.mocl {
                Some((f, l)) => (f.clone(), l.to_string()),
                None => (String::new(), String::new()),
            };
            vec![
                p.label.clone(),
                p.routine.clone(),
                file,
                line,
                format_number(folded.span_ns(p.start_frac, p.end_frac) / 1e6),
            ]
        })
        .collect();
    paths.push(write_csv(
        &out_dir.join("phases.csv"),
        &["label", "routine", "mocl_file", "mocl_line", "duration_ms"],
        &phases,
    )?);

    let patterns: Vec<Vec<String>> = analysis
        .patterns
        .iter()
        .map(|p| {
            let label = map.get(p.object_id).map_or("", |o| o.label.as_str());
            let bw = analysis
                .bandwidth
                .iter()
                .find(|b| b.object_id == p.object_id && b.phase == p.phase)
                .map(|b| format_number(b.mb_per_s))
                .unwrap_or_default();
            vec![
                p.phase.clone(),
                label.to_string(),
                p.fit.class.to_string(),
                format!("{:.4}", p.fit.r2),
                format!("{:.4}", p.fit.coverage),
                p.fit.samples.to_string(),
                bw,
            ]
        })
        .collect();
    paths.push(write_csv(
        &out_dir.join("patterns.csv"),
        &["phase", "label", "pattern", "r2", "coverage", "samples", "mb_per_s"],
        &patterns,
    )?);

    if let Some(e) = &analysis.extrapolation {
        let rows = vec![
            vec![
                "load".to_string(),
                e.load_samples.to_string(),
                format!("{:.4}", e.load_duty),
                format_number(e.est_loads),
            ],
            vec![
                "store".to_string(),
                e.store_samples.to_string(),
                format!("{:.4}", e.store_duty),
                format_number(e.est_stores),
            ],
        ];
        paths.push(write_csv(
            &out_dir.join("counts.csv"),
            &["kind", "samples", "duty", "estimate"],
            &rows,
        )?);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_digits() {
        assert_eq!(format_share(0.4621), "0.4621");
        assert_eq!(format_share(0.76), "0.7600");
        assert_eq!(format_share(1.0), "1.000");
        assert_eq!(format_share(0.005), "0.005000");
        assert_eq!(format_share(0.0), "0");
    }

    #[test]
    fn modes_join_with_commas() {
        assert_eq!(format_modes(&[350, 800]), "350,800");
        assert_eq!(format_modes(&[]), "");
    }

    #[test]
    fn csv_quotes_mode_lists() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(&dir.path().join("t.csv"), &["a", "modes"], &[vec!["x".into(), "350,800".into()]]).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "a,modes\nx,\"350,800\"\n");
    }
}
