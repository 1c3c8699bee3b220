use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use super::bench::ReportRow;
use crate::error::{Error, Result};

pub const REPORT_HEADER: [&str; 7] = ["id", "method", "psnr_db", "ssim", "charbonnier", "census", "wall_ms"];

/// Six significant digits, trailing zeros kept. Positional notation for
/// magnitudes in `[1e-5, 1e6)`, scientific otherwise.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if v == 0.0 {
        return "0.00000".to_string();
    }
    let sci = format!("{v:.5e}");
    let exp: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-5..6).contains(&exp) {
        format!("{v:.*}", (5 - exp) as usize)
    } else {
        sci
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

/// Writes rows as CSV with [`REPORT_HEADER`]. Failed rows keep their id and
/// method with empty metric cells.
pub fn write_report(rows: &[ReportRow], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
    let to_io = |e: csv::Error| Error::Io { path: path.to_path_buf(), source: e.into() };
    w.write_record(REPORT_HEADER).map_err(to_io)?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.method.to_string(),
            cell(r.psnr),
            cell(r.ssim),
            cell(r.charbonnier),
            cell(r.census),
            cell(r.wall_ms),
        ])
        .map_err(to_io)?;
    }
    w.flush().map_err(io_err)
}
