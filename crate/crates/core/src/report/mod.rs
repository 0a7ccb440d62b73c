//! Plot-ready output: a gnuplot script over plain data files, CSV summary
//! tables and a folded trace in a Paraver-like event format.

mod axis;
mod prv;
mod tables;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::Analysis;
use crate::folding::FoldedRegion;
use crate::object_map::{ObjectMap, ObjectRef};
use crate::trace::{Access, Frame};

pub use self::axis::AddressAxis;
pub use self::prv::{
    emit_folded_trace, folded_records, prv_time, read_folded_trace, write_prv, PrvError, PrvRecord, PRV_HEADER,
    PRV_TIME_SPAN, TYPE_CODE_LINE, TYPE_KIND, TYPE_LATENCY, TYPE_LEVEL, TYPE_OBJECT,
};
pub use self::tables::{emit_summary_tables, format_modes, format_number, format_share, write_csv};

pub const DEFAULT_GAP_THRESHOLD: u64 = 1 << 20;

pub const PLOT_SCRIPT: &str = "folded.gp";
pub const SOURCE_DAT: &str = "source.dat";
pub const LOADS_DAT: &str = "loads.dat";
pub const STORES_DAT: &str = "stores.dat";
pub const METRICS_DAT: &str = "metrics.dat";
pub const OBJECTS_DAT: &str = "objects.dat";
pub const FOLDED_PRV: &str = "folded.prv";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("folded region has no instances")]
    Empty,
    #[error("cannot write report: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReportConfig {
    /// Unused address ranges wider than this are squeezed on the plot.
    pub gap_threshold: u64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            gap_threshold: DEFAULT_GAP_THRESHOLD,
        }
    }
}

/// Files written for one folded region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportBundle {
    pub plot_script: PathBuf,
    pub source: PathBuf,
    pub loads: PathBuf,
    pub stores: PathBuf,
    pub metrics: PathBuf,
    pub objects: PathBuf,
    pub tables: Vec<PathBuf>,
    pub folded_trace: Option<PathBuf>,
}

impl ReportBundle {
    pub fn data_files(&self) -> [&Path; 5] {
        [&self.source, &self.loads, &self.stores, &self.metrics, &self.objects]
    }
}

/// One band on the address panel.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectBand {
    pub label: String,
    pub size: u64,
    pub lo: u64,
    pub hi: u64,
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'"))
}

fn human_size(bytes: u64) -> String {
    const UNITS: [&str; 4] = ["B", "KiB", "MiB", "GiB"];
    let mut v = bytes as f64;
    let mut u = 0;
    while v >= 1024.0 && u + 1 < UNITS.len() {
        v /= 1024.0;
        u += 1;
    }
    if u == 0 {
        format!("{bytes} B")
    } else {
        format!("{v:.1} {}", UNITS[u])
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "?".to_string(), |x| format!("{x:.6}"))
}

/// Address axis and labeled bands covering every object hit by a sample,
/// the sampled stack range and any unnamed address.
pub fn address_layout(folded: &FoldedRegion, map: &ObjectMap, gap_threshold: u64) -> (AddressAxis, Vec<ObjectBand>) {
    let mut touched: Vec<u32> = Vec::new();
    let mut stack: Option<(u64, u64)> = None;
    let mut loose: Vec<(u64, u64)> = Vec::new();
    for f in folded.access_samples() {
        let a = f.sample.address;
        match map.resolve(a, f.timestamp) {
            ObjectRef::Object { id, .. } => touched.push(id),
            ObjectRef::Stack => {
                stack = Some(stack.map_or((a, a + 1), |(lo, hi)| (lo.min(a), hi.max(a + 1))));
            }
            ObjectRef::Unnamed => loose.push((a, a + 1)),
        }
    }
    touched.sort_unstable();
    touched.dedup();
    let mut ranges: Vec<(u64, u64)> = Vec::new();
    let mut raw_bands: Vec<(String, u64, u64, u64)> = Vec::new();
    for id in touched {
        if let Some(o) = map.get(id) {
            ranges.push((o.base, o.end()));
            raw_bands.push((o.label.clone(), o.size, o.base, o.end()));
        }
    }
    if let Some((lo, hi)) = stack {
        ranges.push((lo, hi));
        raw_bands.push(("stack".to_string(), hi - lo, lo, hi));
    }
    ranges.extend(loose);
    let axis = AddressAxis::new(ranges, gap_threshold);
    let mut bands: Vec<ObjectBand> = raw_bands
        .into_iter()
        .map(|(label, size, lo, hi)| ObjectBand {
            label,
            size,
            lo: axis.compress(lo),
            hi: axis.compress(hi - 1) + 1,
        })
        .collect();
    bands.sort_by_key(|b| (b.lo, b.hi));
    (axis, bands)
}

fn routine_runs(dominant: &[Option<Frame>]) -> Vec<(usize, usize, String)> {
    let mut runs: Vec<(usize, usize, String)> = Vec::new();
    for (i, f) in dominant.iter().enumerate() {
        let Some(f) = f else { continue };
        match runs.last_mut() {
            Some(r) if r.2 == f.routine && r.1 == i => r.1 = i + 1,
            _ => runs.push((i, i + 1, f.routine.clone())),
        }
    }
    runs
}

fn source_data(folded: &FoldedRegion) -> String {
    let mut s = String::from("# norm_time line routine\n");
    for (t, frame) in &folded.profile.scatter {
        let _ = writeln!(s, "{t:.6} {} {}", frame.line, quoted(&frame.routine));
    }
    s.push_str("\n\n# start end routine\n");
    let bins = folded.profile.bins as f64;
    for (a, b, routine) in routine_runs(&folded.profile.dominant) {
        let _ = writeln!(s, "{:.6} {:.6} {}", a as f64 / bins, b as f64 / bins, quoted(&routine));
    }
    s
}

fn scatter_data(folded: &FoldedRegion, axis: &AddressAxis) -> (String, String) {
    let mut loads = String::from("# norm_time axis address latency level\n");
    let mut stores = String::from("# norm_time axis address l1_hit\n");
    for f in folded.access_samples() {
        let a = f.sample.address;
        let pos = axis.compress(a);
        match f.sample.access {
            Access::Load {
                latency_cycles,
                level,
            } => {
                let _ = writeln!(
                    loads,
                    "{:.6} {pos} {a} {latency_cycles} {}",
                    f.norm_time,
                    level.index() + 1
                );
            }
            Access::Store { l1_hit } => {
                let _ = writeln!(stores, "{:.6} {pos} {a} {}", f.norm_time, u8::from(l1_hit));
            }
        }
    }
    (loads, stores)
}

fn metrics_data(folded: &FoldedRegion) -> String {
    let c = &folded.curves;
    let mut s = String::from("# center mips l1d_per_instr l2_per_instr l3_per_instr branch_per_instr ipc\n");
    for i in 0..c.bins {
        let _ = writeln!(
            s,
            "{:.6} {} {} {} {} {} {}",
            c.bin_center(i),
            opt(c.mips[i]),
            opt(c.l1d_per_instr[i]),
            opt(c.l2_per_instr[i]),
            opt(c.l3_per_instr[i]),
            opt(c.branch_per_instr[i]),
            opt(c.ipc[i]),
        );
    }
    s
}

fn objects_data(bands: &[ObjectBand]) -> String {
    let mut s = String::from("# lo hi label size_bytes\n");
    for b in bands {
        let _ = writeln!(s, "{} {} {} {}", b.lo, b.hi, quoted(&b.label), b.size);
    }
    s
}

fn plot_script(folded: &FoldedRegion, bands: &[ObjectBand]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# folded region {}", folded.region_id);
    s.push_str(
        "set terminal pngcairo size 1200,1500\n\
         set output 'folded.png'\n\
         set datafile missing '?'\n\
         set multiplot layout 3,1\n\
         set xrange [0:1]\n\
         set key outside right\n\n",
    );
    s.push_str("set title 'Source code references'\nset ylabel 'line'\n");
    let bins = folded.profile.bins as f64;
    for (i, (a, b, routine)) in routine_runs(&folded.profile.dominant).into_iter().enumerate() {
        let shade = if i % 2 == 0 { "#dde8f5" } else { "#f5e8dd" };
        let _ = writeln!(
            s,
            "set object {} rect from {:.6},graph 0 to {:.6},graph 1 fc rgb '{shade}' fs solid 0.5 noborder behind",
            i + 1,
            a as f64 / bins,
            b as f64 / bins
        );
        let _ = writeln!(
            s,
            "set label {} {} at {:.6},graph 0.95 center",
            i + 1,
            quoted(&routine),
            (a + b) as f64 / 2.0 / bins
        );
    }
    s.push_str("plot 'source.dat' index 0 using 1:2 with points pt 7 ps 0.3 lc rgb 'dark-red' notitle\n");
    s.push_str("unset object\nunset label\n\n");

    s.push_str(
        "set title 'Address space references'\n\
         set ylabel ''\n\
         set palette defined (0 'green', 1 'blue')\n\
         set cblabel 'cost (cycles)'\n",
    );
    if bands.is_empty() {
        s.push_str("set ytics autofreq\n");
    } else {
        let tics: Vec<String> = bands
            .iter()
            .map(|b| {
                format!(
                    "{} {}",
                    quoted(&format!("{} ({})", b.label, human_size(b.size))),
                    (b.lo + b.hi) / 2
                )
            })
            .collect();
        let _ = writeln!(s, "set ytics ({})", tics.join(", "));
    }
    s.push_str(
        "plot 'objects.dat' using (0.5):(($1+$2)/2):(0.5):(($2-$1)/2) with boxxyerror fs transparent solid 0.1 lc rgb 'gray' notitle, \\\n\
         \x20    'loads.dat' using 1:2:4 with points pt 7 ps 0.3 lc palette title 'loads', \\\n\
         \x20    'stores.dat' using 1:2 with points pt 7 ps 0.3 lc rgb 'black' title 'stores'\n\
         unset colorbox\nset ytics autofreq\n\n",
    );

    s.push_str(
        "set title 'Performance metrics'\n\
         set xlabel 'normalized time'\n\
         set ylabel 'events per instruction'\n\
         set y2label 'MIPS'\n\
         set y2tics\n\
         plot 'metrics.dat' using 1:2 axes x1y2 with lines lw 2 title 'MIPS', \\\n\
         \x20    '' using 1:3 with lines title 'L1D misses', \\\n\
         \x20    '' using 1:4 with lines title 'L2 misses', \\\n\
         \x20    '' using 1:5 with lines title 'L3 misses', \\\n\
         \x20    '' using 1:6 with lines title 'branches'\n\
         unset multiplot\n",
    );
    s
}

/// Writes the plot script and its five data files into `out_dir`.
pub fn render_report(
    folded: &FoldedRegion,
    map: &ObjectMap,
    out_dir: &Path,
    config: &ReportConfig,
) -> Result<ReportBundle, ReportError> {
    if folded.instances.is_empty() {
        return Err(ReportError::Empty);
    }
    fs::create_dir_all(out_dir)?;
    let (axis, bands) = address_layout(folded, map, config.gap_threshold);
    let (loads, stores) = scatter_data(folded, &axis);
    let write = |name: &str, body: String| -> io::Result<PathBuf> {
        let p = out_dir.join(name);
        fs::write(&p, body)?;
        Ok(p)
    };
    Ok(ReportBundle {
        source: write(SOURCE_DAT, source_data(folded))?,
        loads: write(LOADS_DAT, loads)?,
        stores: write(STORES_DAT, stores)?,
        metrics: write(METRICS_DAT, metrics_data(folded))?,
        objects: write(OBJECTS_DAT, objects_data(&bands))?,
        plot_script: write(PLOT_SCRIPT, plot_script(folded, &bands))?,
        tables: Vec::new(),
        folded_trace: None,
    })
}

/// Plot, tables and folded trace in one go.
pub fn write_report(
    folded: &FoldedRegion,
    map: &ObjectMap,
    analysis: &Analysis,
    out_dir: &Path,
    config: &ReportConfig,
) -> Result<ReportBundle, ReportError> {
    let mut bundle = render_report(folded, map, out_dir, config)?;
    bundle.tables = emit_summary_tables(folded, map, analysis, out_dir)?;
    let prv = out_dir.join(FOLDED_PRV);
    emit_folded_trace(folded, map, &prv)?;
    bundle.folded_trace = Some(prv);
    Ok(bundle)
}

/// Data lines (not comments or blanks) of a written data file.
pub fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.is_empty() && !l.starts_with('#'))
}
