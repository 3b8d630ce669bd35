use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sdmom::bench::{self, ErrorMetric, EstimatorKind, ExperimentConfig, KRule, RunOptions};
use sdmom::check::{self, CheckSetup};
use sdmom::config::Settings;
use sdmom::{io, output};
use sdmom_core::estimators::{geometric_grid, mom_sde_weighted, PhaseTiming};
use sdmom_core::{
    baselines, estimate_scatter, lepski_select, psd_project, sdo_median_gaussian_case, sdo_mom_median,
    DirectionConfig, LepskiConfig, SolverConfig,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "sdmom", version, about = "Robust location and scatter with median-of-means outlyingness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the location of a CSV dataset.
    EstimateMean {
        #[arg(long)]
        input: PathBuf,
        /// Oracle sidecar; when given the report includes the error.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Block count, or "n" for one row per block.
        #[arg(long)]
        k: String,
        #[arg(long)]
        estimator: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        directions_random: Option<usize>,
        #[arg(long)]
        directions_hyperplane: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Lepski constants are the Gaussian ones at this epsilon.
        #[arg(long, default_value_t = 0.1)]
        lepski_epsilon: f64,
        #[arg(long)]
        out: PathBuf,
        /// Record wall-clock phase timings (output is then not reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Estimate φ₀²Σ by polarization of MOMAD.
    EstimateCov {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: String,
        #[arg(long)]
        psd_project: bool,
        /// Normaliser recorded in the header; defaults to Φ⁻¹(3/4).
        #[arg(long)]
        phi0: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a dataset, optionally attack it, and write CSV plus sidecar.
    Simulate {
        #[arg(long, value_enum)]
        model: ModelName,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 3.0)]
        dof: f64,
        /// "identity", "toeplitz:<rho>" or d² row-major values.
        #[arg(long, default_value = "identity")]
        sigma: String,
        #[arg(long, requires_all = ["outliers", "magnitude"])]
        attack: Option<String>,
        #[arg(long)]
        outliers: Option<usize>,
        #[arg(long)]
        magnitude: Option<f64>,
        /// Block count targeted by block-poison.
        #[arg(long)]
        attack_k: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Sidecar path; defaults to `<out>.meta`.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment described by a key=value config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        timings: bool,
        /// key=value overrides of the config file.
        overrides: Vec<String>,
    },
    /// Diagnostics against the oracle.
    Check {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        overrides: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Gaussian,
    Elliptical,
    StudentT,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Isometry,
    AssumptionH0,
    Phis,
}

fn parse_k(text: &str, n: usize) -> Result<usize> {
    match text.parse::<KRule>()? {
        KRule::Fixed(k) => Ok(k),
        KRule::All => Ok(n),
        _ => bail!("--k must be an integer or \"n\""),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::EstimateMean {
            input,
            meta,
            k,
            estimator,
            seed,
            directions_random,
            directions_hyperplane,
            max_iters,
            tol,
            lepski_epsilon,
            out,
            timings,
        } => {
            let t0 = Instant::now();
            let data = io::load(&input, meta.as_deref())?;
            let t_read = t0.elapsed().as_secs_f64();
            let kind: EstimatorKind = estimator.parse()?;
            let k_used = parse_k(&k, data.n_rows())?;
            let dirs = DirectionConfig { n_random: directions_random, n_hyperplane: directions_hyperplane, ..Default::default() };
            let mut solver = SolverConfig::default();
            solver.max_iters = max_iters.unwrap_or(solver.max_iters);
            solver.tol = tol.unwrap_or(solver.tol);
            let config = json!({
                "input": input.display().to_string(),
                "meta": meta.as_ref().map(|p| p.display().to_string()),
                "k": k,
                "estimator": estimator,
                "seed": seed,
                "directions_random": directions_random,
                "directions_hyperplane": directions_hyperplane,
                "max_iters": solver.max_iters,
                "tol": solver.tol,
                "lepski_epsilon": lepski_epsilon,
            });
            let t1 = Instant::now();
            let (mu_hat, mut result): (Vec<f64>, Value) = match kind {
                EstimatorKind::Mean => {
                    let b = baselines(&data);
                    (b.empirical_mean.clone(), json!({ "mu_hat": b.empirical_mean }))
                }
                EstimatorKind::CoordMedian => {
                    let b = baselines(&data);
                    (b.coordinatewise_median.clone(), json!({ "mu_hat": b.coordinatewise_median }))
                }
                EstimatorKind::SdoMom => {
                    let r = sdo_mom_median(&data, k_used, &dirs, &solver, seed)?;
                    (r.mu_hat.clone(), serde_json::to_value(&r)?)
                }
                EstimatorKind::SdoGaussian => {
                    let r = sdo_median_gaussian_case(&data, &dirs, &solver, seed)?;
                    (r.mu_hat.clone(), serde_json::to_value(&r)?)
                }
                EstimatorKind::MomSde => {
                    let m = mom_sde_weighted(&data, k_used, &dirs, &solver, seed)?;
                    let scatter: Vec<f64> = m.scatter.transpose().iter().copied().collect();
                    let value = json!({
                        "mu_hat": m.mu, "scatter": scatter, "alpha": m.alpha,
                        "kept_blocks": m.weights.iter().filter(|&&w| w > 0.0).count(),
                    });
                    (m.mu, value)
                }
                EstimatorKind::Lepski => {
                    // --k is the smallest block count of the geometric grid
                    let mut lc = LepskiConfig::gaussian(data.n_rows(), data.dim(), lepski_epsilon)?;
                    lc.k_grid = geometric_grid(data.n_rows(), k_used);
                    let o = lepski_select(&data, &lc, &dirs, &solver, seed)?;
                    (o.report.mu_hat.clone(), serde_json::to_value(&o)?)
                }
            };
            if timings {
                let phases = vec![
                    PhaseTiming { phase: "read".into(), seconds: t_read },
                    PhaseTiming { phase: "estimate".into(), seconds: t1.elapsed().as_secs_f64() },
                ];
                result["timings"] = serde_json::to_value(phases)?;
            } else if let Some(obj) = result.as_object_mut() {
                obj.remove("timings");
            }
            let mut line = json!({ "command": "estimate-mean", "config": config, "result": result });
            if let Some(mu) = data.true_mu() {
                let sigma = data.true_sigma();
                let maha = sigma.map(|s| bench::estimation_error(ErrorMetric::Mahalanobis, &mu_hat, mu, Some(s))).transpose()?;
                line["error"] = json!({
                    "euclidean": bench::estimation_error(ErrorMetric::Euclidean, &mu_hat, mu, None)?,
                    "mahalanobis": maha,
                });
            }
            write(&out, &output::json_line(&line)?)?;
        }
        Command::EstimateCov { input, k, psd_project: project, phi0, out } => {
            let data = io::read_csv(&input)?;
            let k = parse_k(&k, data.n_rows())?;
            let mut est = estimate_scatter(&data, k)?;
            if let Some(p) = phi0 {
                est.phi0 = p;
            }
            if project {
                est = psd_project(&est)?;
            }
            write(&out, &output::scatter_csv(&est))?;
        }
        Command::Simulate { model, n, d, dof, sigma, attack, outliers, magnitude, attack_k, seed, out, meta } => {
            let mut s = Settings::default();
            s.set("model", match model {
                ModelName::Gaussian => "gaussian",
                ModelName::Elliptical => "elliptical",
                ModelName::StudentT => "student-t",
            });
            s.set("d", d);
            s.set("dof", dof);
            s.set("sigma", &sigma);
            if let Some(a) = &attack {
                s.set("attack", a);
                s.set("outliers", outliers.unwrap_or(0));
                s.set("magnitude", magnitude.unwrap_or(0.0));
            }
            let dm = bench::model_from_settings(&s)?;
            let plan = bench::attack_from_settings(&s)?;
            let data = bench::simulate(&dm, n, plan.as_ref(), attack_k, seed)?;
            io::write_csv(&data, &out)?;
            let meta_path = meta.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".meta");
                PathBuf::from(p)
            });
            let extra = [
                ("model", s.raw("model").unwrap_or_default().to_string()),
                ("n", n.to_string()),
                ("d", d.to_string()),
                ("seed", seed.to_string()),
                ("attack", attack.clone().unwrap_or_else(|| "none".into())),
            ];
            io::write_meta(data.oracle.as_ref().expect("simulated data carries an oracle"), &extra, &meta_path)?;
        }
        Command::Bench { config, out, timings, overrides } => {
            let mut s = Settings::from_file(&config)?;
            s.apply_overrides(&overrides)?;
            let cfg = ExperimentConfig::from_settings(&s)?;
            let report = bench::run_experiment(&cfg, RunOptions { timings });
            write(&out, &report.to_jsonl()?)?;
        }
        Command::Check { which, config, out, overrides } => {
            let mut s = Settings::from_file(&config)?;
            s.apply_overrides(&overrides)?;
            let setup = CheckSetup::from_settings(&s, 200)?;
            let text = match which {
                Which::Isometry => output::json_line(&check::isometry(&setup)?)?,
                Which::AssumptionH0 => output::json_line(&check::assumption_h0(&setup, &s)?)?,
                Which::Phis => output::json_line(&check::phis(&setup)?)?,
            };
            write(&out, &text)?;
        }
    }
    Ok(())
}
