use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use vfi_core::harness::{
    gen_synthetic, load_png, load_triplet_dir, run_benchmark, save_png, save_triplet, write_report, BenchConfig,
    SceneKind,
};
use vfi_core::synthesis::interpolate;
use vfi_core::{CostKind, FilterParams, Method, SearchParams, SymmetricGrid};

#[derive(Parser)]
#[command(name = "vfi", version, about = "Bilateral-motion video frame interpolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the frame at time `t` between two PNG frames.
    Interpolate {
        #[arg(long)]
        frame0: PathBuf,
        #[arg(long)]
        frame1: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long, default_value = "full", value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Score methods on a directory of `im1/im2/im3.png` triplet folders.
    Bench {
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',', default_value = "approx1,approx2,sbmf,abmf,full", value_parser = parse_method)]
        methods: Vec<Method>,
        #[arg(long)]
        report: PathBuf,
        /// Fill the wall_ms column. Timings vary run to run, so reports are
        /// only reproducible without this flag.
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Write seeded synthetic triplets with known motion.
    Synth {
        /// First seed; scenes use `seed .. seed + count`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_kind)]
        kind: SceneKind,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Sad,
    Census,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Displacement,
    Field,
}

/// Search and fusion settings shared by `interpolate` and `bench`.
#[derive(Args, Default)]
struct Tuning {
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    patch: Option<usize>,
    #[arg(long, value_enum)]
    cost: Option<CostArg>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    no_subpixel: bool,
    #[arg(long, value_enum)]
    grid: Option<GridArg>,
    #[arg(long)]
    working_scale: Option<usize>,
    #[arg(long)]
    refine_levels: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    levels: Option<usize>,
    radius: Option<usize>,
    patch: Option<usize>,
    cost: Option<String>,
    beta: Option<f64>,
    gamma: Option<f64>,
    sigma: Option<f64>,
    subpixel: Option<bool>,
    grid: Option<String>,
    working_scale: Option<usize>,
    refine_levels: Option<usize>,
    threads: Option<usize>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: vfi_core::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<SceneKind, String> {
    s.parse().map_err(|e: vfi_core::Error| e.to_string())
}

fn parse_cost(s: &str) -> Result<CostKind> {
    match s.to_ascii_lowercase().as_str() {
        "sad" => Ok(CostKind::Sad),
        "census" => Ok(CostKind::Census),
        other => bail!("unknown cost '{other}' (expected sad or census)"),
    }
}

fn parse_grid(s: &str) -> Result<SymmetricGrid> {
    match s.to_ascii_lowercase().as_str() {
        "displacement" => Ok(SymmetricGrid::Displacement),
        "field" => Ok(SymmetricGrid::Field),
        other => bail!("unknown grid '{other}' (expected displacement or field)"),
    }
}

fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

struct Settings {
    config: BenchConfig,
    threads: Option<usize>,
}

impl Tuning {
    /// Defaults, then the config file, then flags.
    fn resolve(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(p) => read_config(p)?,
            None => ConfigFile::default(),
        };
        let mut s = SearchParams::default();
        let mut f = FilterParams::default();

        s.levels = self.levels.or(file.levels).unwrap_or(s.levels);
        s.radius = self.radius.or(file.radius).unwrap_or(s.radius);
        s.patch = self.patch.or(file.patch).unwrap_or(s.patch);
        s.beta = self.beta.or(file.beta).unwrap_or(s.beta);
        s.working_scale = self.working_scale.or(file.working_scale).unwrap_or(s.working_scale);
        s.refine_levels = self.refine_levels.or(file.refine_levels).unwrap_or(s.refine_levels);
        if let Some(c) = &file.cost {
            s.cost = parse_cost(c)?;
        }
        if let Some(c) = self.cost {
            s.cost = match c {
                CostArg::Sad => CostKind::Sad,
                CostArg::Census => CostKind::Census,
            };
        }
        if let Some(g) = &file.grid {
            s.grid = parse_grid(g)?;
        }
        if let Some(g) = self.grid {
            s.grid = match g {
                GridArg::Displacement => SymmetricGrid::Displacement,
                GridArg::Field => SymmetricGrid::Field,
            };
        }
        s.subpixel = file.subpixel.unwrap_or(s.subpixel) && !self.no_subpixel;
        f.gamma = self.gamma.or(file.gamma).unwrap_or(f.gamma);
        f.sigma = self.sigma.or(file.sigma).unwrap_or(f.sigma);

        s.validate()?;
        if !(f.gamma > 0.0 && f.gamma.is_finite()) || !(f.sigma > 0.0 && f.sigma.is_finite()) {
            bail!("gamma and sigma must be positive");
        }
        Ok(Settings { config: BenchConfig { search: s, filters: f }, threads: self.threads.or(file.threads) })
    }
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    builder.build().context("starting worker pool")?.install(job)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Interpolate { frame0, frame1, t, method, out, tuning } => {
            let settings = tuning.resolve()?;
            let i0 = load_png(&frame0)?;
            let i1 = load_png(&frame1)?;
            let cfg = settings.config;
            let frame = with_pool(settings.threads, || {
                Ok(interpolate(&i0, &i1, t, &cfg.search, cfg.filters, method)?)
            })?;
            save_png(&frame, &out)?;
            log::info!("wrote {}", out.display());
        }
        Command::Bench { dataset, methods, report, timing, tuning } => {
            let settings = tuning.resolve()?;
            let triplets = load_triplet_dir(&dataset)?;
            if triplets.is_empty() {
                bail!("no usable triplets under {}", dataset.display());
            }
            log::info!("benchmarking {} triplets x {} methods", triplets.len(), methods.len());
            let cfg = settings.config;
            let mut rows = with_pool(settings.threads, || Ok(run_benchmark(&triplets, &methods, &cfg)?))?;
            if !timing {
                rows.iter_mut().for_each(|r| r.wall_ms = None);
            }
            let failed = rows.iter().filter(|r| r.error.is_some() && !r.is_aggregate()).count();
            if failed > 0 {
                log::warn!("{failed} runs failed; see the log above");
            }
            write_report(&rows, &report)?;
            log::info!("wrote {}", report.display());
        }
        Command::Synth { seed, kind, count, size, out, threads } => {
            with_pool(threads, || {
                for s in seed..seed + count {
                    let scene = gen_synthetic(s, kind, size)?;
                    let dir = out.join(&scene.triplet.id);
                    save_triplet(&scene.triplet, &dir)?;
                    log::debug!("wrote {}", dir.display());
                }
                Ok(())
            })?;
            log::info!("wrote {count} {kind} scenes to {}", out.display());
        }
    }
    Ok(())
}

/// The error chain joined with `: `, skipping causes already spelled out by
/// their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
