use std::time::Instant;

use rayon::prelude::*;

use super::dataset::Triplet;
use crate::error::{ensure, Result};
use crate::estimator::SearchParams;
use crate::metrics::{census_distance, charbonnier, psnr, ssim, CHARBONNIER_ALPHA, CHARBONNIER_EPS};
use crate::raster::Frame;
use crate::synthesis::{interpolate, FilterParams, Method};

/// Triplet id of the per-method aggregate rows.
pub const MEAN_ROW_ID: &str = "mean";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchConfig {
    pub search: SearchParams,
    pub filters: FilterParams,
}

/// One line of a benchmark report. Metric fields are `None` when the run
/// failed, in which case `error` says why.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub method: Method,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub charbonnier: Option<f64>,
    pub census: Option<f64>,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn is_aggregate(&self) -> bool {
        self.id == MEAN_ROW_ID
    }
}

struct Scores {
    psnr: f64,
    ssim: f64,
    charbonnier: f64,
    census: f64,
}

fn score(out: &Frame, gt: &Frame) -> Result<Scores> {
    Ok(Scores {
        psnr: psnr(out, gt)?,
        ssim: ssim(out, gt)?,
        charbonnier: charbonnier(out, gt, CHARBONNIER_ALPHA, CHARBONNIER_EPS)?,
        census: census_distance(out, gt)?,
    })
}

fn run_one(t: &Triplet, method: Method, config: &BenchConfig) -> ReportRow {
    let start = Instant::now();
    let result = interpolate(&t.frame0, &t.frame1, t.t, &config.search, config.filters, method)
        .and_then(|out| score(&out, &t.gt));
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut row = ReportRow {
        id: t.id.clone(),
        method,
        psnr: None,
        ssim: None,
        charbonnier: None,
        census: None,
        wall_ms: Some(wall_ms),
        error: None,
    };
    match result {
        Ok(s) => {
            row.psnr = Some(s.psnr);
            row.ssim = Some(s.ssim);
            row.charbonnier = Some(s.charbonnier);
            row.census = Some(s.census);
        }
        Err(e) => {
            log::error!("{} / {method}: {e}", t.id);
            row.error = Some(e.to_string());
        }
    }
    row
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn aggregate(rows: &[ReportRow], method: Method) -> ReportRow {
    let ok: Vec<&ReportRow> = rows.iter().filter(|r| r.method == method && r.error.is_none()).collect();
    let column = |f: fn(&ReportRow) -> Option<f64>| mean(ok.iter().filter_map(|r| f(r)));
    ReportRow {
        id: MEAN_ROW_ID.to_string(),
        method,
        psnr: column(|r| r.psnr),
        ssim: column(|r| r.ssim),
        charbonnier: column(|r| r.charbonnier),
        census: column(|r| r.census),
        wall_ms: column(|r| r.wall_ms),
        error: ok.is_empty().then(|| "no successful runs".to_string()),
    }
}

/// Runs every method on every triplet. Rows come back ordered by triplet,
/// then by method, followed by one aggregate row per method; the order does
/// not depend on the rayon pool size.
pub fn run_benchmark(triplets: &[Triplet], methods: &[Method], config: &BenchConfig) -> Result<Vec<ReportRow>> {
    ensure!(!triplets.is_empty(), "no triplets to benchmark");
    ensure!(!methods.is_empty(), "no methods to benchmark");
    config.search.validate()?;

    let per_triplet: Vec<Vec<ReportRow>> = triplets
        .par_iter()
        .map(|t| methods.iter().map(|&m| run_one(t, m, config)).collect())
        .collect();
    let mut rows: Vec<ReportRow> = per_triplet.into_iter().flatten().collect();
    let aggregates: Vec<ReportRow> = methods.iter().map(|&m| aggregate(&rows, m)).collect();
    rows.extend(aggregates);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(seed: usize) -> Triplet {
        let f = |s: usize| {
            Frame::from_fn(24, 24, 3, move |x, y, c| 0.5 + 0.3 * (((x + s) as f64 * 0.4).sin() * (y as f64 * 0.3 + c as f64).cos()))
                .unwrap()
        };
        Triplet::new(f(seed), f(seed + 1), f(seed + 2), 0.5, format!("s{seed}")).unwrap()
    }

    fn config() -> BenchConfig {
        BenchConfig { search: SearchParams { levels: 2, working_scale: 1, patch: 5, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn one_triplet_one_method() {
        let rows = run_benchmark(&[scene(0)], &[Method::Sbmf], &config()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].id, "s0");
        assert!(rows[1].is_aggregate());
        assert_eq!(rows[0].psnr, rows[1].psnr);
        assert_eq!(rows[0].ssim, rows[1].ssim);
    }

    #[test]
    fn repeated_triplet_gives_identical_metrics() {
        let rows = run_benchmark(&[scene(1), scene(1)], &[Method::Abmf], &config()).unwrap();
        assert_eq!(rows[0].psnr, rows[1].psnr);
        assert_eq!(rows[0].census, rows[1].census);
    }

    #[test]
    fn aggregates_are_means_and_order_is_stable() {
        let ts = [scene(0), scene(3), scene(5)];
        let methods = [Method::Approx1, Method::Sbmf];
        let rows = run_benchmark(&ts, &methods, &config()).unwrap();
        assert_eq!(rows.len(), 3 * 2 + 2);
        let ids: Vec<(&str, Method)> = rows.iter().map(|r| (r.id.as_str(), r.method)).collect();
        assert_eq!(
            ids,
            [
                ("s0", Method::Approx1),
                ("s0", Method::Sbmf),
                ("s3", Method::Approx1),
                ("s3", Method::Sbmf),
                ("s5", Method::Approx1),
                ("s5", Method::Sbmf),
                ("mean", Method::Approx1),
                ("mean", Method::Sbmf),
            ]
        );
        for (k, m) in methods.iter().enumerate() {
            let data: Vec<&ReportRow> = rows.iter().filter(|r| r.method == *m && !r.is_aggregate()).collect();
            let agg = &rows[6 + k];
            let expect = data.iter().map(|r| r.psnr.unwrap()).sum::<f64>() / 3.0;
            assert!((agg.psnr.unwrap() - expect).abs() < 1e-9);
            let expect = data.iter().map(|r| r.ssim.unwrap()).sum::<f64>() / 3.0;
            assert!((agg.ssim.unwrap() - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn failures_become_rows() {
        // 8x8 frames are below the SSIM window.
        let f = Frame::filled(8, 8, 3, 0.5).unwrap();
        let t = Triplet::new(f.clone(), f.clone(), f, 0.5, "tiny").unwrap();
        let cfg = BenchConfig { search: SearchParams { levels: 1, working_scale: 0, patch: 3, ..Default::default() }, ..Default::default() };
        let rows = run_benchmark(&[t, scene(0)], &[Method::Sbmf], &cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].error.is_some() && rows[0].psnr.is_none());
        assert!(rows[1].error.is_none());
        assert_eq!(rows[2].psnr, rows[1].psnr);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(run_benchmark(&[], &[Method::Sbmf], &config()).is_err());
        assert!(run_benchmark(&[scene(0)], &[], &config()).is_err());
    }
}
