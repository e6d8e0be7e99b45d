//! CSV encodings of records, grids and reports.
//!
//! Floats use Rust's shortest round-trip formatting, so a value read back is
//! bit-identical to the value written. Unknown values are empty fields.

use std::path::Path;

use ghostimg_core::metrics::{EvalRow, SweepReport};
use ghostimg_core::{BucketRecord, BudgetReport, IlluminationMode, NoiseModel, SquareGrid};

use crate::error::{CliError, Result};

pub const RECORD_HEADER: [&str; 2] = ["m", "bucket_value"];
pub const REPORT_HEADER: [&str; 6] = ["tier", "M", "mse", "psnr_db", "pearson_r", "achieved_dsnr_db"];

pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        String::new()
    } else if a == 0.0 || a.is_infinite() || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("writing to memory cannot fail")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn push(w: &mut csv::Writer<Vec<u8>>, row: &[String]) {
    w.write_record(row).expect("writing to memory cannot fail");
}

pub fn record_csv(record: &BucketRecord) -> Vec<u8> {
    let mut w = writer();
    push(&mut w, &RECORD_HEADER.map(String::from));
    for (m, b) in record.entries() {
        push(&mut w, &[m.0.to_string(), fmt_f64(b)]);
    }
    finish(w)
}

pub fn parse_record(bytes: &[u8], path: &Path, top_tier: u32, mode: IlluminationMode) -> Result<BucketRecord> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header = r.headers().map_err(|e| CliError::format(path, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != RECORD_HEADER {
        return Err(CliError::format(path, format!("expected header m,bucket_value, found {header:?}")));
    }
    let mut entries = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(|e| CliError::format(path, e.to_string()))?;
        let bad = || CliError::format(path, format!("row {}: cannot parse {row:?}", line + 2));
        if row.len() != 2 {
            return Err(bad());
        }
        let m: u64 = row[0].parse().map_err(|_| bad())?;
        let b: f64 = row[1].parse().map_err(|_| bad())?;
        entries.push((m, b));
    }
    BucketRecord::from_entries(&entries, top_tier, mode, 0, NoiseModel::none())
        .map_err(|e| CliError::format(path, e.to_string()))
}

/// One row per image row, no header.
pub fn grid_csv(grid: &SquareGrid<f64>) -> Vec<u8> {
    let mut w = writer();
    for x in 0..grid.side() {
        push(&mut w, &grid.row(x).iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>());
    }
    finish(w)
}

pub fn parse_grid(bytes: &[u8], path: &Path) -> Result<SquareGrid<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(bytes);
    let mut data = Vec::new();
    let mut rows = 0;
    for row in r.records() {
        let row = row.map_err(|e| CliError::format(path, e.to_string()))?;
        for field in row.iter() {
            data.push(field.parse::<f64>().map_err(|_| CliError::format(path, format!("not a number: {field:?}")))?);
        }
        rows += 1;
    }
    SquareGrid::from_vec(rows, data).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn report_csv(rows: &[EvalRow]) -> Vec<u8> {
    let mut w = writer();
    push(&mut w, &REPORT_HEADER.map(String::from));
    for r in rows {
        push(
            &mut w,
            &[
                r.tier.to_string(),
                r.measurements.to_string(),
                fmt_f64(r.mse),
                fmt_f64(r.psnr_db),
                fmt_opt(r.pearson_r),
                fmt_f64(r.achieved_dsnr_db),
            ],
        );
    }
    finish(w)
}

pub fn fwhm_csv(rows: &[(u32, usize, usize)]) -> Vec<u8> {
    let mut w = writer();
    push(&mut w, &["tier", "M", "fwhm"].map(String::from));
    for &(t, m, f) in rows {
        push(&mut w, &[t.to_string(), m.to_string(), f.to_string()]);
    }
    finish(w)
}

pub fn budget_csv(b: &BudgetReport) -> Vec<u8> {
    let mut w = writer();
    push(&mut w, &["scheme", "measurements", "projections"].map(String::from));
    let k = b.projections_per_measurement;
    for (name, m) in [
        ("lock", b.lock_measurements),
        ("roi", b.roi_measurements),
        ("roi_total", b.roi_total_measurements),
        ("full_frame_progressive", b.full_frame_measurements),
        ("full_frame_conventional", b.conventional_measurements),
    ] {
        push(&mut w, &[name.to_string(), m.to_string(), (m * k).to_string()]);
    }
    finish(w)
}

/// Every `(dsnr, seed, tier)` row of a sweep.
pub fn sweep_csv(sweep: &SweepReport) -> Vec<u8> {
    let mut w = writer();
    let mut header = vec!["target_dsnr_db".to_string(), "seed".to_string()];
    header.extend(REPORT_HEADER.map(String::from));
    push(&mut w, &header);
    for cell in &sweep.cells {
        for r in &cell.report.rows {
            push(
                &mut w,
                &[
                    fmt_f64(cell.dsnr_db),
                    cell.report.seed.to_string(),
                    r.tier.to_string(),
                    r.measurements.to_string(),
                    fmt_f64(r.mse),
                    fmt_f64(r.psnr_db),
                    fmt_opt(r.pearson_r),
                    fmt_f64(r.achieved_dsnr_db),
                ],
            );
        }
    }
    finish(w)
}

pub fn sweep_summary_csv(sweep: &SweepReport) -> Vec<u8> {
    let mut w = writer();
    push(&mut w, &["target_dsnr_db", "tier", "mean_psnr_db", "std_psnr_db"].map(String::from));
    for s in &sweep.summary {
        push(
            &mut w,
            &[fmt_f64(s.dsnr_db), s.tier.to_string(), fmt_f64(s.mean_psnr_db), fmt_f64(s.std_psnr_db)],
        );
    }
    finish(w)
}
