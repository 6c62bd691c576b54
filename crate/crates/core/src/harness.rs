//! Experiment orchestration: rate experiments (mean `d_Δ` and `d_H` against
//! `n`, fitted on log-log axes), pointwise concentration experiments, and
//! CSV/SVG output.
//!
//! Replication `r` always uses seed `base_seed + r`, so results do not
//! depend on how rayon schedules the work.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::densities::DensityModel;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::kde::{min_offset_constant, DensityEstimate, HRule, KdeEstimator, LemmaConstants, OffsetRule, ScheduleSpec};
use crate::kernels::{legendre_kernel, product_kernel, KernelD};
use crate::levelset::GridRaster;
use crate::metrics::{evaluate, LevelDef, PdfTable};

/// Significance level of the lack-of-fit test that triggers dropping the
/// smallest sample size.
pub const LACK_OF_FIT_ALPHA: f64 = 0.01;

/// Which level set the plug-in estimate targets: `Open` thresholds at
/// `λ + ℓ` and compares with `Γ(λ)`, `Closed` at `λ − ℓ` against `Γ̄(λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_experiment_id")]
    pub experiment_id: String,
    pub model_id: String,
    pub lambda: f64,
    pub kernel_beta: f64,
    pub h_rule: HRule,
    #[serde(default = "default_c_h")]
    pub c_h: f64,
    pub ell_rule: OffsetRule,
    /// Defaults to the smallest admissible constant for the dDelta rule and
    /// to 1 otherwise.
    #[serde(default)]
    pub c_ell: Option<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub resolution: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub target: Target,
    #[serde(default = "default_true")]
    pub enforce_offset_bound: bool,
    /// When false, `runtime_ms` is written as 0 so output files are
    /// byte-reproducible.
    #[serde(default)]
    pub record_runtime: bool,
}

fn default_experiment_id() -> String {
    "experiment".to_string()
}

fn default_c_h() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(invalid("n_grid", "must not be empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_grid", "must be strictly increasing"));
        }
        if self.replications < 1 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if !(self.lambda > 0.0) {
            return Err(invalid("lambda", "must be positive"));
        }
        if self.experiment_id.is_empty() || self.experiment_id.contains(['/', '\\']) {
            return Err(invalid("experiment_id", "must be a non-empty file-name-safe string"));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The kernel, schedule and pdf table shared by every replication.
pub struct ExperimentSetup {
    pub model: DensityModel,
    pub kernel: KernelD,
    pub constants: LemmaConstants,
    pub schedule: ScheduleSpec,
    pub grid: Grid,
}

impl ExperimentSetup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let model = DensityModel::from_id(&cfg.model_id)?;
        let d = model.dim();
        let kernel = product_kernel(legendre_kernel(cfg.kernel_beta), d)?;
        let p = model.params();
        let constants = LemmaConstants::new(&kernel, p.l, p.l_star, cfg.kernel_beta);
        let c_ell = cfg.c_ell.unwrap_or(match cfg.ell_rule {
            OffsetRule::DDelta => min_offset_constant(constants.c6, cfg.c_h, d),
            _ => 1.0,
        });
        let schedule = ScheduleSpec {
            h_rule: cfg.h_rule,
            ell_rule: cfg.ell_rule,
            beta: cfg.kernel_beta,
            beta_prime: cfg.kernel_beta,
            d,
            c_h: cfg.c_h,
            c_ell,
            c6: constants.c6,
            enforce_offset_bound: cfg.enforce_offset_bound,
        };
        schedule.validate()?;
        let grid = Grid::new(model.domain().clone(), cfg.resolution)?;
        Ok(Self {
            model,
            kernel,
            constants,
            schedule,
            grid,
        })
    }
}

/// One `(n, replication)` outcome; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub experiment_id: String,
    pub n: usize,
    pub replication: usize,
    pub h: f64,
    pub ell: f64,
    pub d_delta: f64,
    pub d_h: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DDelta,
    DH,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::DDelta => "d_delta",
            Metric::DH => "d_h",
        }
    }

    fn value(self, row: &RateRow) -> f64 {
        match self {
            Metric::DDelta => row.d_delta,
            Metric::DH => row.d_h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerN {
    pub n: usize,
    pub mean: f64,
    /// Standard error of the mean over replications.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub metric: Metric,
    /// `NaN` when fewer than two sample sizes have a positive mean.
    pub slope: f64,
    pub intercept: f64,
    /// Delete-one-replication jackknife standard error of the slope.
    pub slope_se: f64,
    pub theory_slope: f64,
    pub per_n_means: Vec<PerN>,
    /// Smallest `n`, dropped after a failed lack-of-fit test.
    pub excluded_n: Option<usize>,
    /// p-value of the chi-square lack-of-fit test on the full grid.
    pub lack_of_fit_p: f64,
    /// Every mean is zero.
    pub exact_recovery: bool,
}

impl RateFit {
    /// `|slope − theory| ≤ tol` and `≤ k · slope_se`.
    pub fn within(&self, tol: f64, k_se: f64) -> bool {
        let dev = (self.slope - self.theory_slope).abs();
        dev <= tol && dev <= k_se * self.slope_se
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateExperiment {
    pub config: ExperimentConfig,
    pub rows: Vec<RateRow>,
    pub d_delta: RateFit,
    pub d_h: RateFit,
}

/// Ordinary least squares `y = slope · x + intercept`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `(−γβ/(2β+d), −(1+γ)β/(2β+d))` for `(d_Δ, d_H)`.
pub fn theory_slopes(beta: f64, gamma: f64, d: usize) -> (f64, f64) {
    let denom = 2.0 * beta + d as f64;
    (-gamma * beta / denom, -(1.0 + gamma) * beta / denom)
}

/// One estimate-and-score pass at sample size `n` with seed `seed`.
pub fn run_replication(setup: &ExperimentSetup, table: &PdfTable<'_>, cfg: &ExperimentConfig, n: usize, r: usize) -> Result<RateRow> {
    let start = Instant::now();
    let s = setup.schedule.at(n)?;
    let sample = setup.model.sample(n, cfg.base_seed + r as u64)?;
    let kde = KdeEstimator::new(&sample, setup.kernel.clone(), s.h)?;
    let (threshold, def) = match cfg.target {
        Target::Open => (cfg.lambda + s.ell, LevelDef::Open),
        Target::Closed => (cfg.lambda - s.ell, LevelDef::Closed),
    };
    let values = kde.eval_grid(&setup.grid);
    let estimate = GridRaster::from_bools(setup.grid.clone(), values.iter().map(|&v| v >= threshold));
    let report = evaluate(table, &estimate, cfg.lambda, def);
    Ok(RateRow {
        experiment_id: cfg.experiment_id.clone(),
        n,
        replication: r,
        h: s.h,
        ell: s.ell,
        d_delta: report.d_delta,
        d_h: report.d_h,
        runtime_ms: if cfg.record_runtime {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        },
    })
}

/// Runs every `(n, replication)` pair and fits both metrics.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateExperiment> {
    let setup = ExperimentSetup::new(cfg)?;
    let table = PdfTable::new(&setup.model, setup.grid.clone());
    let tasks: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();
    let rows: Vec<RateRow> = tasks
        .par_iter()
        .map(|&(n, r)| run_replication(&setup, &table, cfg, n, r))
        .collect::<Result<_>>()?;
    let p = setup.model.params();
    let (t_delta, t_h) = theory_slopes(cfg.kernel_beta, p.gamma, setup.model.dim());
    Ok(RateExperiment {
        d_delta: fit_rate(&rows, Metric::DDelta, t_delta, cfg.replications),
        d_h: fit_rate(&rows, Metric::DH, t_h, cfg.replications),
        config: cfg.clone(),
        rows,
    })
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `matrix[i][r]`: metric value at the `i`-th sample size, replication `r`.
fn metric_matrix(rows: &[RateRow], metric: Metric, ns: &[usize], replications: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; replications]; ns.len()];
    for row in rows {
        let i = ns.binary_search(&row.n).expect("n in grid");
        m[i][row.replication] = metric.value(row);
    }
    m
}

fn log_fit(ns: &[usize], means: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(means)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&n, &m)| ((n as f64).ln(), m.ln()))
        .collect();
    (pts.len() >= 2).then(|| least_squares(&pts))
}

/// Chi-square lack-of-fit p-value of a log-log line, using delta-method
/// variances `(se/mean)²` for the log means.
fn lack_of_fit(ns: &[usize], per_n: &[PerN], slope: f64, intercept: f64) -> f64 {
    let terms: Vec<f64> = ns
        .iter()
        .zip(per_n)
        .filter(|(_, p)| p.mean > 0.0 && p.se > 0.0)
        .map(|(&n, p)| {
            let resid = p.mean.ln() - (slope * (n as f64).ln() + intercept);
            (resid / (p.se / p.mean)).powi(2)
        })
        .collect();
    if terms.len() <= 2 {
        return 1.0;
    }
    let df = (terms.len() - 2) as f64;
    let chi = ChiSquared::new(df).expect("positive df");
    1.0 - chi.cdf(terms.iter().sum())
}

fn jackknife_se(matrix: &[Vec<f64>], ns: &[usize]) -> f64 {
    let reps = matrix.first().map_or(0, Vec::len);
    if reps < 2 {
        return f64::NAN;
    }
    let totals: Vec<f64> = matrix.iter().map(|v| v.iter().sum()).collect();
    let slopes: Vec<f64> = (0..reps)
        .filter_map(|drop| {
            let means: Vec<f64> = matrix
                .iter()
                .zip(&totals)
                .map(|(v, t)| (t - v[drop]) / (reps - 1) as f64)
                .collect();
            log_fit(ns, &means).map(|f| f.0)
        })
        .collect();
    if slopes.len() < 2 {
        return f64::NAN;
    }
    let k = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / k;
    ((k - 1.0) / k * slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>()).sqrt()
}

/// Mean per `n` and log-log fit for one metric. When the chi-square
/// lack-of-fit test rejects at [`LACK_OF_FIT_ALPHA`] and more than three
/// sample sizes are available, the smallest `n` is dropped once.
pub fn fit_rate(rows: &[RateRow], metric: Metric, theory_slope: f64, replications: usize) -> RateFit {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let matrix = metric_matrix(rows, metric, &ns, replications);
    let per_n_means: Vec<PerN> = ns
        .iter()
        .zip(&matrix)
        .map(|(&n, v)| {
            let (mean, se) = mean_se(v);
            PerN { n, mean, se }
        })
        .collect();
    let exact_recovery = per_n_means.iter().all(|p| p.mean == 0.0);
    let means: Vec<f64> = per_n_means.iter().map(|p| p.mean).collect();
    let Some((slope, intercept)) = log_fit(&ns, &means) else {
        return RateFit {
            metric,
            slope: f64::NAN,
            intercept: f64::NAN,
            slope_se: f64::NAN,
            theory_slope,
            per_n_means,
            excluded_n: None,
            lack_of_fit_p: f64::NAN,
            exact_recovery,
        };
    };
    let lack_of_fit_p = lack_of_fit(&ns, &per_n_means, slope, intercept);
    let (lo, excluded_n) = if lack_of_fit_p < LACK_OF_FIT_ALPHA && ns.len() > 3 {
        (1, Some(ns[0]))
    } else {
        (0, None)
    };
    let (slope, intercept) = log_fit(&ns[lo..], &means[lo..]).unwrap_or((slope, intercept));
    RateFit {
        metric,
        slope,
        intercept,
        slope_se: jackknife_se(&matrix[lo..], &ns[lo..]),
        theory_slope,
        per_n_means,
        excluded_n,
        lack_of_fit_p,
        exact_recovery,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub delta: f64,
    pub exceedances: usize,
    pub freq: f64,
    /// Binomial standard error `sqrt(f(1−f)/R)`.
    pub se: f64,
    /// `2 exp(−c₆ n h^d δ²)`.
    pub bound: f64,
    /// `2 L c₅ h^β < δ < Δ`.
    pub in_range: bool,
    /// `freq ≤ bound + 3 se`.
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationTable {
    pub experiment_id: String,
    pub model_id: String,
    pub x0: Vec<f64>,
    pub n: usize,
    pub h: f64,
    pub replications: usize,
    pub p_x0: f64,
    pub c6: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub rows: Vec<ConcentrationRow>,
}

/// Exceedance frequencies of `|p̂_n(x₀) − p(x₀)| ≥ δ` over replications,
/// next to the exponential tail bound.
#[allow(clippy::too_many_arguments)]
pub fn run_concentration_experiment(
    experiment_id: &str,
    model: &DensityModel,
    kernel: &KernelD,
    kernel_beta: f64,
    x0: &[f64],
    n: usize,
    h: f64,
    delta_grid: &[f64],
    replications: usize,
    seed: u64,
) -> Result<ConcentrationTable> {
    if x0.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x0.len(),
        });
    }
    if replications < 1 {
        return Err(invalid("replications", "must be at least 1"));
    }
    let p = model.params();
    let beta = p.beta.min(kernel_beta);
    let constants = LemmaConstants::new(kernel, p.l, p.l_star, beta);
    let delta_min = constants.delta_min(p.l, beta, h);
    let truth = model.pdf(x0);
    let deviations: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let sample = model.sample(n, seed + r as u64)?;
            let kde = KdeEstimator::new(&sample, kernel.clone(), h)?;
            Ok((kde.eval(x0) - truth).abs())
        })
        .collect::<Result<_>>()?;
    let rows = delta_grid
        .iter()
        .map(|&delta| {
            let exceedances = deviations.iter().filter(|&&v| v >= delta).count();
            let freq = exceedances as f64 / replications as f64;
            let se = (freq * (1.0 - freq) / replications as f64).sqrt();
            let bound = constants.tail_bound(n, h, model.dim(), delta);
            ConcentrationRow {
                delta,
                exceedances,
                freq,
                se,
                bound,
                in_range: delta > delta_min && delta < constants.delta_max,
                within_bound: freq <= bound + 3.0 * se,
            }
        })
        .collect();
    Ok(ConcentrationTable {
        experiment_id: experiment_id.to_string(),
        model_id: model.id().to_string(),
        x0: x0.to_vec(),
        n,
        h,
        replications,
        p_x0: truth,
        c6: constants.c6,
        delta_min,
        delta_max: constants.delta_max,
        rows,
    })
}

/// One line of the per-experiment summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment_id: String,
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub theory_slope: f64,
    pub excluded_n: Option<usize>,
}

pub fn summary_rows(exp: &RateExperiment) -> Vec<SummaryRow> {
    [&exp.d_delta, &exp.d_h]
        .iter()
        .flat_map(|fit| {
            fit.per_n_means.iter().map(move |p| SummaryRow {
                experiment_id: exp.config.experiment_id.clone(),
                metric: fit.metric.name().to_string(),
                n: p.n,
                mean: p.mean,
                se: p.se,
                slope: fit.slope,
                slope_se: fit.slope_se,
                theory_slope: fit.theory_slope,
                excluded_n: fit.excluded_n,
            })
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes, per rate experiment, `<id>_rates.csv`, `<id>_summary.csv` and one
/// log-log SVG per metric; per concentration table, `<id>_concentration.csv`.
/// Returns the written paths.
pub fn emit_results(fits: &[RateExperiment], tables: &[ConcentrationTable], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if fits.is_empty() && tables.is_empty() {
        return Ok(written);
    }
    fs::create_dir_all(out_dir)?;
    for exp in fits {
        let id = &exp.config.experiment_id;
        let rates = out_dir.join(format!("{id}_rates.csv"));
        write_csv(&rates, &exp.rows)?;
        written.push(rates);
        let summary = out_dir.join(format!("{id}_summary.csv"));
        write_csv(&summary, &summary_rows(exp))?;
        written.push(summary);
        for fit in [&exp.d_delta, &exp.d_h] {
            let path = out_dir.join(format!("{id}_{}.svg", fit.metric.name()));
            fs::write(&path, loglog_svg(id, fit))?;
            written.push(path);
        }
    }
    for t in tables {
        let path = out_dir.join(format!("{}_concentration.csv", t.experiment_id));
        write_csv(&path, &t.rows)?;
        written.push(path);
    }
    Ok(written)
}

/// Log-log chart of mean error against `n` with a dashed theory line
/// through the largest-`n` mean.
pub fn loglog_svg(title: &str, fit: &RateFit) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    let pts: Vec<(f64, f64)> = fit
        .per_n_means
        .iter()
        .filter(|p| p.mean > 0.0)
        .map(|p| ((p.n as f64).log10(), p.mean.log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{} {}: slope {:.3} (theory {:.3})</text>"#,
        W / 2.0,
        title,
        fit.metric.name(),
        fit.slope,
        fit.theory_slope
    );
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let last = *pts.last().expect("non-empty");
    let theory_at = |x: f64| last.1 + fit.theory_slope * (x - last.0);
    let ys = pts.iter().map(|p| p.1).chain([theory_at(x0), theory_at(x1)]);
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let _ = writeln!(
        svg,
        r#"<path d="M{M} {} H{} M{M} {} V{}" stroke="black" fill="none"/>"#,
        H - M,
        W - M,
        H - M,
        M
    );
    for (x, y) in [(x0, y0), (x1, y0)] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">n=1e{:.2}</text>"#,
            sx(x),
            sy(y) + 18.0,
            x
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">1e{:.2}</text>"#,
            M - 4.0,
            sy(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
        sx(pts[0].0),
        sy(theory_at(pts[0].0)),
        sx(last.0),
        sy(last.1)
    );
    let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" stroke="steelblue" fill="none"/>"#,
        line.join(" ")
    );
    for p in &pts {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            sx(p.0),
            sy(p.1)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).max(1e-6);
    (lo - 0.05 * span, hi + 0.05 * span)
}
