//! CSV persistence and matplotlib plot-script emission.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::PointResult;
use crate::error::Result;

/// Header written by [`write_csv`].
pub const CSV_HEADER: &str = "snr_db,iteration,ber,fer,bit_errors,bits,frame_errors,frames,seconds";

/// One row of the results file: the error counts of one outer iteration at
/// one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub iteration: usize,
    pub ber: f64,
    pub fer: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub frame_errors: u64,
    pub frames: u64,
    /// Wall time of the whole SNR point.
    pub seconds: f64,
}

impl BerRecord {
    /// One record per outer iteration of a point.
    pub fn from_point(point: &PointResult) -> Vec<BerRecord> {
        point
            .tallies
            .iter()
            .enumerate()
            .map(|(i, t)| BerRecord {
                snr_db: point.snr_db,
                iteration: i + 1,
                ber: t.ber(),
                fer: t.fer(),
                bit_errors: t.bit_errors,
                bits: t.bits,
                frame_errors: t.frame_errors,
                frames: t.frames,
                seconds: point.seconds,
            })
            .collect()
    }
}

/// Flattens sweep results into records ordered by SNR point, then iteration.
pub fn records_from_points(points: &[PointResult]) -> Vec<BerRecord> {
    points.iter().flat_map(BerRecord::from_point).collect()
}

pub fn write_csv_to<W: std::io::Write>(records: &[BerRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(records: &[BerRecord], path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(records, std::fs::File::create(path)?)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

/// A labelled set of records, e.g. one detector/CSI configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub records: Vec<BerRecord>,
}

fn py_list(values: impl Iterator<Item = String>) -> String {
    format!("[{}]", values.collect::<Vec<_>>().join(", "))
}

/// Writes a standalone Python script that plots BER against SNR on a log
/// axis with one curve per (series, iteration). Points with zero errors are
/// left out since they cannot be drawn on a log scale.
pub fn emit_plot_script(series: &[Series], path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::new();
    s.push_str("#!/usr/bin/env python3\n");
    s.push_str("import matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n");
    s.push_str("curves = [\n");
    for set in series {
        let mut iterations: Vec<usize> = set.records.iter().map(|r| r.iteration).collect();
        iterations.sort_unstable();
        iterations.dedup();
        for it in iterations {
            let rows: Vec<&BerRecord> = set
                .records
                .iter()
                .filter(|r| r.iteration == it && r.bit_errors > 0)
                .collect();
            let _ = writeln!(
                s,
                "    ({:?}, {}, {}),",
                format!("{} it{}", set.label, it),
                py_list(rows.iter().map(|r| format!("{:?}", r.snr_db))),
                py_list(rows.iter().map(|r| format!("{:e}", r.ber))),
            );
        }
    }
    s.push_str("]\n\n");
    s.push_str("fig, ax = plt.subplots(figsize=(7, 5))\n");
    s.push_str("for label, snr, ber in curves:\n");
    s.push_str("    if snr:\n");
    s.push_str("        ax.semilogy(snr, ber, marker=\"o\", label=label)\n");
    s.push_str("ax.set_xlabel(\"SNR [dB]\")\nax.set_ylabel(\"BER\")\n");
    s.push_str("ax.grid(True, which=\"both\", alpha=0.3)\nax.legend()\n");
    let png = path.as_ref().with_extension("png");
    let _ = writeln!(s, "fig.savefig({:?}, dpi=150, bbox_inches=\"tight\")", png.to_string_lossy());
    std::fs::write(path, s)?;
    Ok(())
}
