use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use levelset_core::harness::{self, ExperimentConfig, ExperimentSetup, RateExperiment};
use levelset_core::kde::{bandwidth, HRule};
use levelset_core::lowerbound::{verify_lemma_a2_conditions, SetMetric};
use levelset_core::metrics::PdfTable;
use levelset_core::{legendre_kernel, product_kernel, validate_kernel, DensityModel, GridRaster, LowerBoundFamily};

#[derive(Parser)]
#[command(name = "levelset-lab", version, about = "Density level-set estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validates the Legendre kernel of a given order and prints a JSON report.
    KernelCheck {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        quadrature_nodes: usize,
        /// Also write the report to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One replication per sample size; writes the rows and estimate rasters.
    Simulate(Common),
    /// Full rate experiment: CSVs, summary and log-log SVGs.
    Rates(Common),
    /// Pointwise exceedance frequencies against the exponential tail bound.
    Concentration(Common),
    /// Separation and divergence report for a lower-bound family.
    Lowerbound(Common),
}

/// Configuration of the `concentration` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConcentrationConfig {
    #[serde(default = "default_concentration_id")]
    experiment_id: String,
    model_id: String,
    kernel_beta: f64,
    x0: Vec<f64>,
    n: usize,
    /// Defaults to the dH-rule bandwidth with `c_h = 1`.
    #[serde(default)]
    h: Option<f64>,
    delta_grid: Vec<f64>,
    replications: usize,
    base_seed: u64,
}

fn default_concentration_id() -> String {
    "concentration".to_string()
}

/// Configuration of the `lowerbound` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct LowerBoundConfig {
    q: usize,
    d: usize,
    beta: f64,
    gamma: f64,
    #[serde(rename = "L", default = "one")]
    l: f64,
    metric: SetMetric,
    n: usize,
    resolution: usize,
    #[serde(default)]
    base_seed: u64,
}

fn one() -> f64 {
    1.0
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn setup_threads(threads: Option<usize>) -> Result<()> {
    if let Some(k) = threads {
        if k == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn experiment_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = read_json(&c.config)?;
    if let Some(s) = c.seed {
        cfg.base_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn rates(c: &Common) -> Result<()> {
    let cfg = experiment_config(c)?;
    let exp: RateExperiment = harness::run_rate_experiment(&cfg)?;
    let files = harness::emit_results(std::slice::from_ref(&exp), &[], &c.out)?;
    let summary = serde_json::json!({
        "experiment_id": cfg.experiment_id,
        "d_delta": exp.d_delta,
        "d_h": exp.d_h,
        "files": files,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn simulate(c: &Common) -> Result<()> {
    let cfg = experiment_config(c)?;
    let setup = ExperimentSetup::new(&cfg)?;
    let table = PdfTable::new(&setup.model, setup.grid.clone());
    fs::create_dir_all(&c.out)?;
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let row = harness::run_replication(&setup, &table, &cfg, n, 0)?;
        let sample = setup.model.sample(n, cfg.base_seed)?;
        let kde = levelset_core::KdeEstimator::new(&sample, setup.kernel.clone(), row.h)?;
        let threshold = match cfg.target {
            harness::Target::Open => cfg.lambda + row.ell,
            harness::Target::Closed => cfg.lambda - row.ell,
        };
        let raster = levelset_core::plugin_estimate(&kde, threshold, 0.0).rasterize(&setup.grid);
        write_raster(&c.out.join(format!("{}_n{n}_estimate.csv", cfg.experiment_id)), &raster)?;
        rows.push(row);
    }
    harness::write_csv(&c.out.join(format!("{}_simulate.csv", cfg.experiment_id)), &rows)?;
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(())
}

fn write_raster(path: &Path, raster: &GridRaster) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    raster.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

fn concentration(c: &Common) -> Result<()> {
    let mut cfg: ConcentrationConfig = read_json(&c.config)?;
    if let Some(s) = c.seed {
        cfg.base_seed = s;
    }
    let model = DensityModel::from_id(&cfg.model_id)?;
    let kernel = product_kernel(legendre_kernel(cfg.kernel_beta), model.dim())?;
    let h = match cfg.h {
        Some(h) => h,
        None => bandwidth(cfg.n, HRule::DH, cfg.kernel_beta, model.dim(), 1.0)?,
    };
    let table = harness::run_concentration_experiment(
        &cfg.experiment_id,
        &model,
        &kernel,
        cfg.kernel_beta,
        &cfg.x0,
        cfg.n,
        h,
        &cfg.delta_grid,
        cfg.replications,
        cfg.base_seed,
    )?;
    harness::emit_results(&[], std::slice::from_ref(&table), &c.out)?;
    write_json(&c.out.join(format!("{}_concentration.json", cfg.experiment_id)), &table)?;
    println!("{}", serde_json::to_string_pretty(&table)?);
    Ok(())
}

fn lowerbound(c: &Common) -> Result<()> {
    let mut cfg: LowerBoundConfig = read_json(&c.config)?;
    if let Some(s) = c.seed {
        cfg.base_seed = s;
    }
    let family = LowerBoundFamily::build(cfg.q, cfg.d, cfg.beta, cfg.gamma, cfg.l, cfg.base_seed)?;
    let report = verify_lemma_a2_conditions(&family, cfg.metric, cfg.n, cfg.resolution, cfg.base_seed)?;
    fs::create_dir_all(&c.out)?;
    write_json(&c.out.join("lowerbound.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::KernelCheck {
            beta,
            dim,
            quadrature_nodes,
            out,
        } => {
            if !(*beta > 0.0 && beta.is_finite()) {
                bail!("--beta must be a positive number");
            }
            let k = product_kernel(legendre_kernel(*beta), *dim)?;
            let report = validate_kernel(&k, *beta, *quadrature_nodes);
            if let Some(dir) = out {
                fs::create_dir_all(dir)?;
                write_json(&dir.join("kernel_check.json"), &report)?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Simulate(c) => {
            setup_threads(c.threads)?;
            simulate(c)?;
        }
        Command::Rates(c) => {
            setup_threads(c.threads)?;
            rates(c)?;
        }
        Command::Concentration(c) => {
            setup_threads(c.threads)?;
            concentration(c)?;
        }
        Command::Lowerbound(c) => {
            setup_threads(c.threads)?;
            lowerbound(c)?;
        }
    }
    Ok(())
}
