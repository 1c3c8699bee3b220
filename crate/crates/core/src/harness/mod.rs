//! Evaluation plumbing: triplet datasets, synthetic scenes with known
//! motion, benchmark runs and CSV reports.

mod bench;
mod dataset;
mod report;
mod synthetic;

pub use bench::{run_benchmark, BenchConfig, ReportRow, MEAN_ROW_ID};
pub use dataset::{load_png, load_triplet_dir, save_png, save_triplet, Triplet};
pub use report::{format_value, write_report, REPORT_HEADER};
pub use synthetic::{gen_synthetic, SceneKind, SyntheticScene};
#[cfg(test)]
pub(crate) use synthetic::noise_frame;
