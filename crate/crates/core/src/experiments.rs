//! Monte Carlo harness: matched-path strong-convergence studies,
//! inverse-moment curves, and sampler and Malliavin consistency checks.
//!
//! Every sample `i` is driven by the fBm path with seed `base_seed + i`.
//! Per-sample results are collected in index order before reduction, so
//! aggregates are bit-identical for any number of worker threads.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::fbm::{
    batch_seed, coarsen_path, fbm_covariance, CirculantSampler, FbmSampler, GridSpec,
    HurstParameter,
};
use crate::fmt_f64;
use crate::malliavin::{malliavin_gap, numeric_malliavin_g};
use crate::model::{
    check_condition, max_step, CirParams, ConditionReport, Multiplier, DEFAULT_CONDITION_GRID,
    DEFAULT_XI,
};
use crate::scheme::{simulate_path, SolutionPath};
use crate::stats::{ks_two_sample, KsTest};

/// Configuration shared by the convergence and inverse-moment experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: CirParams,
    pub hurst: HurstParameter,
    pub horizon: f64,
    /// Reference grid has `2^reference_exponent` steps.
    pub reference_exponent: u32,
    /// Coarse grids have `2^e` steps for each `e`.
    pub coarse_exponents: Vec<u32>,
    pub samples: usize,
    pub base_seed: u64,
    pub xi: f64,
    /// Order `p` of the error norm `E[sup|·|^p]^{1/p}` and of the inverse moment.
    pub moment: u32,
}

impl Default for ExperimentConfig {
    /// Desk-scale version of the grid-point convergence study.
    fn default() -> Self {
        Self {
            params: CirParams::default(),
            hurst: HurstParameter::new(0.7).expect("valid Hurst"),
            horizon: 1.0,
            reference_exponent: 12,
            coarse_exponents: (4..=9).collect(),
            samples: 200,
            base_seed: 1,
            xi: DEFAULT_XI,
            moment: 2,
        }
    }
}

impl ExperimentConfig {
    pub fn reference_grid(&self) -> Result<GridSpec> {
        GridSpec::dyadic(self.horizon, self.reference_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        self.hurst.require_long_memory()?;
        if self.samples == 0 {
            return domain("need at least one sample");
        }
        if self.moment == 0 {
            return domain("moment order must be at least 1");
        }
        if let Some(e) = self.coarse_exponents.iter().find(|&&e| e > self.reference_exponent) {
            return domain(format!(
                "coarse exponent {e} exceeds reference exponent {}",
                self.reference_exponent
            ));
        }
        let bound = max_step(&self.params, self.xi)?;
        let reference = self.reference_grid()?;
        for &e in self.coarse_exponents.iter().chain([&self.reference_exponent]) {
            let h = GridSpec::dyadic(self.horizon, e)?.step();
            if !bound.admits(h) {
                return domain(format!("step {h} violates the step constraint {bound:?}"));
            }
        }
        debug_assert!(reference.steps() >= 1);
        Ok(())
    }

    /// Both inverse-moment conditions at the configured moment order.
    pub fn condition_reports(&self) -> Result<Vec<ConditionReport>> {
        [Multiplier::PPlusOne, Multiplier::ThreePPlusOne]
            .into_iter()
            .map(|m| {
                check_condition(
                    self.moment,
                    m,
                    &self.params,
                    self.hurst,
                    self.horizon,
                    DEFAULT_CONDITION_GRID,
                )
            })
            .collect()
    }
}

/// Sup-errors of one sample at one coarse level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LevelSample {
    /// `max_n |X_ref(t_n) − X_n|` over coarse nodes.
    pub grid: f64,
    /// `max_j |X_ref(t*_j) − X^h(t*_j)|` over reference nodes.
    pub uniform: f64,
    /// Same as `grid` for the rate `r = X²`.
    pub rate_grid: f64,
    /// Same as `uniform` for the rate `r = X²`.
    pub rate_uniform: f64,
}

/// Aggregated `E[sup|·|^p]^{1/p}` errors of one coarse level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelErrors {
    pub exponent: u32,
    pub step: f64,
    pub grid: f64,
    pub uniform: f64,
    pub rate_grid: f64,
    pub rate_uniform: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMetric {
    Grid,
    Uniform,
    RateGrid,
    RateUniform,
}

impl LevelErrors {
    pub fn get(&self, metric: ErrorMetric) -> f64 {
        match metric {
            ErrorMetric::Grid => self.grid,
            ErrorMetric::Uniform => self.uniform,
            ErrorMetric::RateGrid => self.rate_grid,
            ErrorMetric::RateUniform => self.rate_uniform,
        }
    }
}

/// Least-squares line `log₂ e = slope·log₂ h + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn regress_order(steps: &[f64], errors: &[f64]) -> Result<OrderFit> {
    if steps.len() != errors.len() {
        return domain("step and error lists differ in length");
    }
    if steps.len() < 2 {
        return domain("need at least two points to fit an order");
    }
    if steps.iter().chain(errors).any(|&v| !(v > 0.0)) {
        return domain("steps and errors must be strictly positive");
    }
    let xs: Vec<f64> = steps.iter().map(|h| h.log2()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return domain("step sizes must not all coincide");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(OrderFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Result of a matched-path convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub levels: Vec<LevelErrors>,
    /// Metric the `fit` refers to.
    pub metric: ErrorMetric,
    /// `None` when fewer than two levels have positive error.
    pub fit: Option<OrderFit>,
    pub conditions: Vec<ConditionReport>,
    pub warnings: Vec<String>,
}

impl ConvergenceReport {
    pub fn fit_for(&self, metric: ErrorMetric) -> Result<OrderFit> {
        let steps: Vec<f64> = self.levels.iter().map(|l| l.step).collect();
        let errors: Vec<f64> = self.levels.iter().map(|l| l.get(metric)).collect();
        regress_order(&steps, &errors)
    }

    pub fn with_metric(mut self, metric: ErrorMetric) -> Self {
        self.metric = metric;
        self.fit = self.fit_for(metric).ok();
        self
    }

    /// `h,rms_sup_error_grid,rms_sup_error_uniform,samples`
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "h,rms_sup_error_grid,rms_sup_error_uniform,samples")?;
        for l in &self.levels {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(l.step),
                fmt_f64(l.grid),
                fmt_f64(l.uniform),
                self.config.samples
            )?;
        }
        Ok(())
    }

    /// `h,rms_sup_rate_grid,rms_sup_rate_uniform,samples`
    pub fn write_rate_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "h,rms_sup_rate_grid,rms_sup_rate_uniform,samples")?;
        for l in &self.levels {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(l.step),
                fmt_f64(l.rate_grid),
                fmt_f64(l.rate_uniform),
                self.config.samples
            )?;
        }
        Ok(())
    }

    /// Key-value metadata for the run sidecar.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut kv = config_metadata(&self.config);
        kv.push(("metric".into(), format!("{:?}", self.metric)));
        if let Some(fit) = self.fit {
            kv.push(("fit_slope".into(), fmt_f64(fit.slope)));
            kv.push(("fit_intercept".into(), fmt_f64(fit.intercept)));
        }
        for metric in [
            ErrorMetric::Grid,
            ErrorMetric::Uniform,
            ErrorMetric::RateGrid,
            ErrorMetric::RateUniform,
        ] {
            if let Ok(fit) = self.fit_for(metric) {
                kv.push((format!("slope_{metric:?}").to_lowercase(), fmt_f64(fit.slope)));
            }
        }
        push_conditions(&mut kv, &self.conditions);
        kv
    }
}

pub(crate) fn config_metadata(c: &ExperimentConfig) -> Vec<(String, String)> {
    vec![
        ("kappa".into(), fmt_f64(c.params.kappa())),
        ("theta".into(), fmt_f64(c.params.theta())),
        ("sigma".into(), fmt_f64(c.params.sigma())),
        ("r0".into(), fmt_f64(c.params.r0())),
        ("hurst".into(), fmt_f64(c.hurst.value())),
        ("horizon".into(), fmt_f64(c.horizon)),
        ("reference_exponent".into(), c.reference_exponent.to_string()),
        (
            "coarse_exponents".into(),
            c.coarse_exponents
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("samples".into(), c.samples.to_string()),
        ("base_seed".into(), c.base_seed.to_string()),
        (
            "seeds".into(),
            format!(
                "{}..={}",
                c.base_seed,
                batch_seed(c.base_seed, c.samples.saturating_sub(1))
            ),
        ),
        ("xi".into(), fmt_f64(c.xi)),
        ("moment".into(), c.moment.to_string()),
    ]
}

pub(crate) fn push_conditions(kv: &mut Vec<(String, String)>, conditions: &[ConditionReport]) {
    for r in conditions {
        kv.push((format!("condition_m{}", r.multiplier), r.csv_record()));
    }
}

fn reference_sampler(config: &ExperimentConfig, warnings: &mut Vec<String>) -> Result<CirculantSampler> {
    let sampler = CirculantSampler::new(config.reference_grid()?, config.hurst)?;
    if let Some(w) = sampler.warning() {
        warnings.push(w.to_string());
    }
    Ok(sampler)
}

fn condition_warnings(conditions: &[ConditionReport], warnings: &mut Vec<String>) {
    for r in conditions {
        if !r.holds {
            warnings.push(format!(
                "inverse-moment condition with multiplier {} fails (margin {:e} at s = {})",
                r.multiplier, r.worst_margin, r.worst_s
            ));
        }
    }
}

fn sample_errors_with(sampler: &CirculantSampler, config: &ExperimentConfig, index: usize) -> Result<Vec<LevelSample>> {
    let noise = sampler.sample(batch_seed(config.base_seed, index));
    let reference = simulate_path(&noise, &config.params)?;
    let xr = reference.levels();
    config
        .coarse_exponents
        .iter()
        .map(|&e| {
            let factor = 1usize << (config.reference_exponent - e);
            let coarse = simulate_path(&coarsen_path(&noise, factor)?, &config.params)?;
            Ok(level_sample(xr, coarse.levels(), factor))
        })
        .collect()
}

fn level_sample(reference: &[f64], coarse: &[f64], factor: usize) -> LevelSample {
    let mut out = LevelSample::default();
    for (j, &xr) in reference.iter().enumerate().skip(1) {
        let q = j / factor;
        let r = j % factor;
        let xh = if r == 0 {
            coarse[q]
        } else {
            coarse[q] + (r as f64 / factor as f64) * (coarse[q + 1] - coarse[q])
        };
        let dx = (xr - xh).abs();
        let dr = (xr * xr - xh * xh).abs();
        out.uniform = out.uniform.max(dx);
        out.rate_uniform = out.rate_uniform.max(dr);
        if r == 0 {
            out.grid = out.grid.max(dx);
            out.rate_grid = out.rate_grid.max(dr);
        }
    }
    out
}

/// Per-level sup-errors of sample `index` (one row per coarse exponent).
pub fn sample_errors(config: &ExperimentConfig, index: usize) -> Result<Vec<LevelSample>> {
    config.validate()?;
    let sampler = reference_sampler(config, &mut Vec::new())?;
    sample_errors_with(&sampler, config, index)
}

/// Runs the matched-path study and aggregates all four error metrics.
///
/// The fit in the returned report refers to the grid-point error; use
/// [`ConvergenceReport::with_metric`] to refit another metric.
pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let mut warnings = Vec::new();
    let conditions = config.condition_reports()?;
    condition_warnings(&conditions, &mut warnings);
    let sampler = reference_sampler(config, &mut warnings)?;

    let per_sample: Vec<Vec<LevelSample>> = (0..config.samples)
        .into_par_iter()
        .map(|i| sample_errors_with(&sampler, config, i))
        .collect::<Result<_>>()?;

    let p = config.moment as i32;
    let m = config.samples as f64;
    let norm = |sum: f64| (sum / m).powf(1.0 / p as f64);
    let levels = config
        .coarse_exponents
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let mut sums = [0.0f64; 4];
            for s in &per_sample {
                let l = s[k];
                sums[0] += l.grid.powi(p);
                sums[1] += l.uniform.powi(p);
                sums[2] += l.rate_grid.powi(p);
                sums[3] += l.rate_uniform.powi(p);
            }
            LevelErrors {
                exponent: e,
                step: config.horizon / (1u64 << e) as f64,
                grid: norm(sums[0]),
                uniform: norm(sums[1]),
                rate_grid: norm(sums[2]),
                rate_uniform: norm(sums[3]),
            }
        })
        .collect();

    Ok(ConvergenceReport {
        config: config.clone(),
        levels,
        metric: ErrorMetric::Grid,
        fit: None,
        conditions,
        warnings,
    }
    .with_metric(ErrorMetric::Grid))
}

/// Grid-point study: error `max_n |X_ref(t_n) − X_n|` over coarse nodes.
pub fn run_convergence_grid(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    Ok(run_convergence(config)?.with_metric(ErrorMetric::Grid))
}

/// Uniform study: error of the interpolant over all reference nodes.
pub fn run_convergence_uniform(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    Ok(run_convergence(config)?.with_metric(ErrorMetric::Uniform))
}

/// Per-node estimate of `E[X_n^{−p}]^{1/p}` on the reference grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseMomentCurve {
    pub config: ExperimentConfig,
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Delta-method standard errors of `estimates`.
    pub std_errors: Vec<f64>,
    pub conditions: Vec<ConditionReport>,
    pub warnings: Vec<String>,
}

impl InverseMomentCurve {
    /// `t,inv_moment`
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,inv_moment")?;
        for (t, v) in self.times.iter().zip(&self.estimates) {
            writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*v))?;
        }
        Ok(())
    }

    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut kv = config_metadata(&self.config);
        push_conditions(&mut kv, &self.conditions);
        kv
    }
}

pub fn estimate_inverse_moments(config: &ExperimentConfig) -> Result<InverseMomentCurve> {
    config.validate()?;
    let mut warnings = Vec::new();
    let conditions = config.condition_reports()?;
    condition_warnings(&conditions, &mut warnings);
    let sampler = reference_sampler(config, &mut warnings)?;
    let grid = *sampler.grid();
    let p = config.moment as i32;

    let per_sample: Vec<Vec<f64>> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let noise = sampler.sample(batch_seed(config.base_seed, i));
            let path = simulate_path(&noise, &config.params)?;
            Ok(path.levels().iter().map(|x| x.powi(-p)).collect())
        })
        .collect::<Result<_>>()?;

    let m = config.samples as f64;
    let nodes = grid.steps() + 1;
    let mut mean = vec![0.0; nodes];
    for s in &per_sample {
        for (acc, v) in mean.iter_mut().zip(s) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let mut sq_dev = vec![0.0; nodes];
    for s in &per_sample {
        for ((acc, v), mu) in sq_dev.iter_mut().zip(s).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let inv_p = 1.0 / p as f64;
    let mut estimates = Vec::with_capacity(nodes);
    let mut std_errors = Vec::with_capacity(nodes);
    for n in 0..nodes {
        let var = if config.samples > 1 { sq_dev[n] / (m - 1.0) } else { 0.0 };
        estimates.push(mean[n].powf(inv_p));
        std_errors.push(inv_p * mean[n].powf(inv_p - 1.0) * (var / m).sqrt());
    }
    Ok(InverseMomentCurve {
        config: config.clone(),
        times: grid.nodes().collect(),
        estimates,
        std_errors,
        conditions,
        warnings,
    })
}

/// Largest standardized deviation of the empirical level covariance
/// `mean(B(t_i)B(t_j))` from its closed form over all node pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceCheck {
    pub max_abs_z: f64,
    pub worst_i: usize,
    pub worst_j: usize,
    pub samples: usize,
}

/// Compares empirical covariances against `fbm_covariance`. The standard
/// error of `mean(B_i B_j)` for a centred Gaussian pair is
/// `√((C_ii C_jj + C_ij²)/M)`.
pub fn sampler_covariance_check(sampler: &dyn FbmSampler, samples: usize, base_seed: u64) -> Result<CovarianceCheck> {
    if samples == 0 {
        return domain("need at least one sample");
    }
    let grid = *sampler.grid();
    let n = grid.steps();
    const CHUNK: usize = 64;
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; n * (n + 1) / 2];
            for i in (c * CHUNK)..((c + 1) * CHUNK).min(samples) {
                let path = sampler.sample(batch_seed(base_seed, i));
                let b = &path.values()[1..];
                let mut k = 0;
                for a in 0..n {
                    for bidx in 0..=a {
                        acc[k] += b[a] * b[bidx];
                        k += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let mut acc = vec![0.0; n * (n + 1) / 2];
    for part in &partials {
        for (a, v) in acc.iter_mut().zip(part) {
            *a += v;
        }
    }
    let m = samples as f64;
    let hurst = sampler.hurst();
    let mut best = CovarianceCheck {
        max_abs_z: 0.0,
        worst_i: 0,
        worst_j: 0,
        samples,
    };
    let mut k = 0;
    for i in 1..=n {
        let cii = fbm_covariance(grid.node(i), grid.node(i), hurst)?;
        for j in 1..=i {
            let cjj = fbm_covariance(grid.node(j), grid.node(j), hurst)?;
            let cij = fbm_covariance(grid.node(i), grid.node(j), hurst)?;
            let se = ((cii * cjj + cij * cij) / m).sqrt();
            let z = ((acc[k] / m - cij) / se).abs();
            if z > best.max_abs_z {
                best.max_abs_z = z;
                best.worst_i = i;
                best.worst_j = j;
            }
            k += 1;
        }
    }
    Ok(best)
}

/// `B(T)` for `samples` consecutive seeds.
pub fn terminal_values(sampler: &dyn FbmSampler, samples: usize, base_seed: u64) -> Vec<f64> {
    (0..samples)
        .into_par_iter()
        .map(|i| sampler.sample(batch_seed(base_seed, i)).terminal())
        .collect()
}

/// Two-sample KS test between the `B(T)` marginals of two samplers.
pub fn compare_terminal_marginals(
    a: &dyn FbmSampler,
    b: &dyn FbmSampler,
    samples: usize,
    seed_a: u64,
    seed_b: u64,
) -> KsTest {
    ks_two_sample(&terminal_values(a, samples, seed_a), &terminal_values(b, samples, seed_b))
}

/// Configuration of the discrete-versus-exponential Malliavin comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MalliavinConfig {
    pub params: CirParams,
    pub hurst: HurstParameter,
    pub horizon: f64,
    /// Resolutions `2^e` steps, compared on one shared noise path sampled
    /// at the finest of them. The coarsest one sets the comparison grid.
    pub exponents: Vec<u32>,
    pub samples: usize,
    pub base_seed: u64,
}

impl Default for MalliavinConfig {
    fn default() -> Self {
        Self {
            params: CirParams::default(),
            hurst: HurstParameter::new(0.7).expect("valid Hurst"),
            horizon: 1.0,
            exponents: vec![6, 7],
            samples: 100,
            base_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MalliavinLevel {
    pub exponent: u32,
    pub step: f64,
    pub mean_abs_gap: f64,
    /// Gap at the previous (coarser) level divided by this one.
    pub ratio_vs_prev: Option<f64>,
    /// Extremes of `G_n(s)` over all `n`, `s` and samples.
    pub min_profile: f64,
    pub max_profile: f64,
}

pub fn malliavin_consistency(config: &MalliavinConfig) -> Result<Vec<MalliavinLevel>> {
    config.hurst.require_long_memory()?;
    if config.samples == 0 || config.exponents.is_empty() {
        return domain("need at least one sample and one resolution");
    }
    let mut exps = config.exponents.clone();
    exps.sort_unstable();
    exps.dedup();
    let finest = *exps.last().expect("nonempty");
    let coarsest = exps[0];
    let comparison = config.horizon / (1u64 << coarsest) as f64;
    let sampler = CirculantSampler::new(GridSpec::dyadic(config.horizon, finest)?, config.hurst)?;

    // (gap, min G, max G) per sample and level
    let per_sample: Vec<Vec<(f64, f64, f64)>> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let noise = sampler.sample(batch_seed(config.base_seed, i));
            exps.iter()
                .map(|&e| {
                    let path = simulate_path(&coarsen_path(&noise, 1 << (finest - e))?, &config.params)?;
                    let gap = malliavin_gap(&path, comparison)?;
                    let (lo, hi) = profile_extremes(&path)?;
                    Ok((gap, lo, hi))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let m = config.samples as f64;
    let mut out: Vec<MalliavinLevel> = Vec::with_capacity(exps.len());
    for (k, &e) in exps.iter().enumerate() {
        let mut gap = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &per_sample {
            gap += s[k].0;
            lo = lo.min(s[k].1);
            hi = hi.max(s[k].2);
        }
        let gap = gap / m;
        let ratio_vs_prev = out.last().map(|prev| prev.mean_abs_gap / gap);
        out.push(MalliavinLevel {
            exponent: e,
            step: config.horizon / (1u64 << e) as f64,
            mean_abs_gap: gap,
            ratio_vs_prev,
            min_profile: lo,
            max_profile: hi,
        });
    }
    Ok(out)
}

fn profile_extremes(path: &SolutionPath) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 1..=path.grid().steps() {
        for &v in numeric_malliavin_g(path, n)?.values() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok((lo, hi))
}

/// `h,mean_abs_gap,ratio_vs_prev` (ratio empty on the first row).
pub fn write_malliavin_csv<W: Write>(levels: &[MalliavinLevel], mut out: W) -> Result<()> {
    writeln!(out, "h,mean_abs_gap,ratio_vs_prev")?;
    for l in levels {
        let ratio = l.ratio_vs_prev.map(fmt_f64).unwrap_or_default();
        writeln!(out, "{},{},{}", fmt_f64(l.step), fmt_f64(l.mean_abs_gap), ratio)?;
    }
    Ok(())
}
