//! `fcir` command-line front end.
//!
//! Each run writes its data files and a `manifest.txt` into
//! `<out>/<subcommand>-<timestamp>/`. Exit codes: 0 success, 2 invalid
//! flags, 3 domain errors, 1 anything else.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{
    compare_terminal_marginals, estimate_inverse_moments, malliavin_consistency,
    run_convergence_grid, run_convergence_uniform, sampler_covariance_check, write_malliavin_csv,
    ExperimentConfig, MalliavinConfig,
};
use crate::fbm::{CholeskySampler, CirculantSampler, FbmSampler, GridSpec, HurstParameter};
use crate::fmt_f64;
use crate::model::{check_condition, sufficient_condition_report, CirParams, ConditionReport, Multiplier, DEFAULT_CONDITION_GRID};
use crate::scheme::simulate_path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fcir", version, about = "Fractional CIR simulation and convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Validate the fBm samplers (covariance and marginal checks)
    FbmCheck,
    /// Simulate one trajectory and write `t,X,r`
    Simulate,
    /// Strong convergence at grid points
    ConvergeGrid,
    /// Strong convergence of the interpolant on the reference grid
    ConvergeUniform,
    /// Inverse moments of the numerical solution over time
    InverseMoments,
    /// Discrete versus exponential Malliavin derivative
    MalliavinCheck,
    /// Evaluate the inverse-moment conditions
    CheckConditions,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::FbmCheck => "fbm-check",
            Command::Simulate => "simulate",
            Command::ConvergeGrid => "converge-grid",
            Command::ConvergeUniform => "converge-uniform",
            Command::InverseMoments => "inverse-moments",
            Command::MalliavinCheck => "malliavin-check",
            Command::CheckConditions => "check-conditions",
        }
    }
}

#[derive(Debug, Clone, Args)]
struct Opts {
    #[arg(long, global = true, default_value_t = 0.7, allow_negative_numbers = true)]
    hurst: f64,
    #[arg(long, global = true, default_value_t = 2.0, allow_negative_numbers = true)]
    kappa: f64,
    #[arg(long, global = true, default_value_t = 0.5, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, global = true, default_value_t = 0.5, allow_negative_numbers = true)]
    sigma: f64,
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    r0: f64,
    /// Time horizon T (default depends on the subcommand)
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// log2 of the step count for single-grid subcommands
    #[arg(long, global = true)]
    steps_exp: Option<u32>,
    /// log2 of the reference step count
    #[arg(long, global = true)]
    ref_exp: Option<u32>,
    /// Comma-separated log2 step counts of the coarse grids
    #[arg(long, global = true, value_delimiter = ',')]
    coarse_exps: Option<Vec<u32>>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Moment order p
    #[arg(long, global = true)]
    p: Option<u32>,
    #[arg(long, global = true, default_value_t = crate::model::DEFAULT_XI)]
    xi: f64,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = machine parallelism)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

/// What a run did: resolved configuration, outputs and timing.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config: Vec<(String, String)>,
    pub base_seed: u64,
    pub outputs: Vec<PathBuf>,
    pub duration: Duration,
    pub warnings: Vec<String>,
}

impl RunManifest {
    /// Plain `key = value` lines.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        writeln!(f, "subcommand = {}", self.subcommand)?;
        writeln!(f, "version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(f, "argv = {}", self.argv.join(" "))?;
        writeln!(f, "base_seed = {}", self.base_seed)?;
        for (k, v) in &self.config {
            writeln!(f, "{k} = {v}")?;
        }
        for o in &self.outputs {
            writeln!(f, "output = {}", o.display())?;
        }
        writeln!(f, "duration_secs = {:.6}", self.duration.as_secs_f64())?;
        for w in &self.warnings {
            writeln!(f, "warning = {w}")?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.opts.workers).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_FAILURE;
        }
    };
    match pool.install(|| run(&cli, argv)) {
        Ok(dir) => {
            println!("{}", dir.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Domain(_) | Error::Singularity(_) | Error::UnsupportedRegime(_) => EXIT_DOMAIN,
                Error::Numerical(_) | Error::Io(_) => EXIT_FAILURE,
            }
        }
    }
}

fn run_dir(out: &Path, name: &str) -> Result<PathBuf> {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or_default();
    fs::create_dir_all(out)?;
    let mut dir = out.join(format!("{name}-{stamp}"));
    let mut k = 1;
    while dir.exists() {
        dir = out.join(format!("{name}-{stamp}-{k}"));
        k += 1;
    }
    fs::create_dir(&dir)?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn model_metadata(params: &CirParams, hurst: f64, horizon: f64) -> Vec<(String, String)> {
    vec![
        ("kappa".into(), fmt_f64(params.kappa())),
        ("theta".into(), fmt_f64(params.theta())),
        ("sigma".into(), fmt_f64(params.sigma())),
        ("r0".into(), fmt_f64(params.r0())),
        ("hurst".into(), fmt_f64(hurst)),
        ("horizon".into(), fmt_f64(horizon)),
    ]
}

fn run(cli: &Cli, argv: Vec<String>) -> Result<PathBuf> {
    let start = Instant::now();
    let o = &cli.opts;
    let name = cli.command.name();
    let params = CirParams::new(o.kappa, o.theta, o.sigma, o.r0)?;
    let hurst = HurstParameter::new(o.hurst)?;
    let long_horizon = matches!(cli.command, Command::Simulate | Command::InverseMoments);
    let horizon = o.horizon.unwrap_or(if long_horizon { 10.0 } else { 1.0 });

    // Validate everything before creating the output directory.
    let mut config = model_metadata(&params, o.hurst, horizon);
    let mut warnings = Vec::new();
    let mut files: Vec<(&'static str, Vec<u8>)> = Vec::new();

    match cli.command {
        Command::Simulate => {
            let steps_exp = o.steps_exp.unwrap_or(12);
            let grid = GridSpec::dyadic(horizon, steps_exp)?;
            let sampler = CirculantSampler::new(grid, hurst.require_long_memory()?)?;
            warnings.extend(sampler.warning().map(str::to_string));
            let path = simulate_path(&sampler.sample(o.seed), &params)?;
            let mut buf = Vec::new();
            path.write_csv(&mut buf)?;
            files.push(("data.csv", buf));
            config.push(("steps_exp".into(), steps_exp.to_string()));
            config.push(("step".into(), fmt_f64(grid.step())));
        }
        Command::ConvergeGrid | Command::ConvergeUniform => {
            let exp = ExperimentConfig {
                params,
                hurst,
                horizon,
                reference_exponent: o.ref_exp.unwrap_or(12),
                coarse_exponents: o.coarse_exps.clone().unwrap_or_else(|| (4..=9).collect()),
                samples: o.samples.unwrap_or(200),
                base_seed: o.seed,
                xi: o.xi,
                moment: o.p.unwrap_or(2),
            };
            let report = if cli.command == Command::ConvergeGrid {
                run_convergence_grid(&exp)?
            } else {
                run_convergence_uniform(&exp)?
            };
            let mut data = Vec::new();
            report.write_csv(&mut data)?;
            let mut rate = Vec::new();
            report.write_rate_csv(&mut rate)?;
            files.push(("data.csv", data));
            files.push(("rate.csv", rate));
            config = report.metadata();
            warnings.extend(report.warnings.iter().cloned());
        }
        Command::InverseMoments => {
            let exp = ExperimentConfig {
                params,
                hurst,
                horizon,
                reference_exponent: o.steps_exp.or(o.ref_exp).unwrap_or(12),
                coarse_exponents: Vec::new(),
                samples: o.samples.unwrap_or(100),
                base_seed: o.seed,
                xi: o.xi,
                moment: o.p.unwrap_or(2),
            };
            let curve = estimate_inverse_moments(&exp)?;
            let mut data = Vec::new();
            curve.write_csv(&mut data)?;
            files.push(("data.csv", data));
            config = curve.metadata();
            warnings.extend(curve.warnings.iter().cloned());
        }
        Command::MalliavinCheck => {
            let mc = MalliavinConfig {
                params,
                hurst,
                horizon,
                exponents: o.coarse_exps.clone().unwrap_or_else(|| vec![6, 7]),
                samples: o.samples.unwrap_or(100),
                base_seed: o.seed,
            };
            let levels = malliavin_consistency(&mc)?;
            let mut data = Vec::new();
            write_malliavin_csv(&levels, &mut data)?;
            files.push(("data.csv", data));
            config.push((
                "exponents".into(),
                mc.exponents.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
            ));
            config.push(("samples".into(), mc.samples.to_string()));
            for l in &levels {
                config.push((format!("profile_range_e{}", l.exponent), format!("{},{}", fmt_f64(l.min_profile), fmt_f64(l.max_profile))));
            }
        }
        Command::CheckConditions => {
            let p = o.p.unwrap_or(6);
            let hurst = hurst.require_long_memory()?;
            let reports: Vec<ConditionReport> = vec![
                check_condition(p, Multiplier::PPlusOne, &params, hurst, horizon, DEFAULT_CONDITION_GRID)?,
                check_condition(p, Multiplier::ThreePPlusOne, &params, hurst, horizon, DEFAULT_CONDITION_GRID)?,
                sufficient_condition_report(p, &params, hurst, horizon)?,
            ];
            let mut data = Vec::new();
            writeln!(data, "{}", ConditionReport::CSV_HEADER)?;
            for r in &reports {
                writeln!(data, "{}", r.csv_record())?;
            }
            files.push(("data.csv", data));
            config.push(("p".into(), p.to_string()));
            config.push(("grid_size".into(), DEFAULT_CONDITION_GRID.to_string()));
        }
        Command::FbmCheck => {
            let steps_exp = o.steps_exp.unwrap_or(8);
            let samples = o.samples.unwrap_or(5000);
            let grid = GridSpec::dyadic(horizon, steps_exp)?;
            let chol = CholeskySampler::new(grid, hurst)?;
            let circ = CirculantSampler::new(grid, hurst)?;
            warnings.extend(circ.warning().map(str::to_string));
            let other_seed = o.seed.wrapping_add(1 << 32);
            let mut data = Vec::new();
            writeln!(data, "check,sampler,statistic,threshold,pass")?;
            for (label, sampler) in [("cholesky", &chol as &dyn FbmSampler), ("circulant", &circ)] {
                let c = sampler_covariance_check(sampler, samples, o.seed)?;
                writeln!(data, "covariance_max_abs_z,{label},{},5,{}", fmt_f64(c.max_abs_z), c.max_abs_z <= 5.0)?;
            }
            let ks = compare_terminal_marginals(&chol, &circ, samples, o.seed, other_seed);
            writeln!(data, "ks_terminal_p_value,cholesky-vs-circulant,{},0.01,{}", fmt_f64(ks.p_value), !ks.rejects_at(0.01))?;
            files.push(("data.csv", data));
            let mut path_csv = Vec::new();
            circ.sample(o.seed).write_csv(&mut path_csv)?;
            files.push(("path.csv", path_csv));
            config.push(("steps_exp".into(), steps_exp.to_string()));
            config.push(("samples".into(), samples.to_string()));
        }
    }

    let dir = run_dir(&o.out, name)?;
    let mut outputs = Vec::new();
    for (file, bytes) in files {
        let path = dir.join(file);
        let mut w = create(&path)?;
        w.write_all(&bytes)?;
        w.flush()?;
        outputs.push(path);
    }
    config.push(("workers".into(), o.workers.to_string()));
    let manifest = RunManifest {
        subcommand: name.to_string(),
        argv,
        config,
        base_seed: o.seed,
        outputs,
        duration: start.elapsed(),
        warnings,
    };
    manifest.write_to(&dir.join("manifest.txt"))?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(["fcir"]), EXIT_USAGE);
        assert_eq!(dispatch(["fcir", "frobnicate"]), EXIT_USAGE);
        assert_eq!(dispatch(["fcir", "simulate", "--hurst", "abc"]), EXIT_USAGE);
        assert_eq!(dispatch(["fcir", "--help"]), EXIT_OK);
    }

    #[test]
    fn domain_errors_exit_three() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(dispatch(["fcir", "simulate", "--sigma", "-1", "--out", out]), EXIT_DOMAIN);
        assert_eq!(dispatch(["fcir", "simulate", "--hurst", "0.4", "--out", out]), EXIT_DOMAIN);
        assert_eq!(
            dispatch(["fcir", "converge-grid", "--ref-exp", "5", "--coarse-exps", "6", "--out", out]),
            EXIT_DOMAIN
        );
        assert_eq!(fs::read_dir(dir.path()).map(|d| d.count()).unwrap_or(0), 0);
    }

    #[test]
    fn negative_kappa_flags_parse() {
        let cli = Cli::try_parse_from(["fcir", "check-conditions", "--kappa", "-1", "--theta", "-0.5"]).unwrap();
        assert_eq!(cli.opts.kappa, -1.0);
        assert_eq!(cli.command, Command::CheckConditions);
    }
}
