//! Perturbation sweeps over a single sample.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use rayon::prelude::*;

use super::commands::{load_guide, ms};
use super::manifest::{default_manifest_path, RunManifest};
use super::{CliError, CliResult, ConfigArgs};
use crate::basis::BasisField;
use crate::completion::{basis_from_features, fit, CompletionConfig, DepthMap, ValidMask};
use crate::dataio::{inject_noise, load_depth, perturb_scale, sample_sparse, RngSpec};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport, SeeOptions};

const TABLE_HELP: &str = "\
Table columns, whitespace separated, one row per (setting, seed):
  protocol setting seed samples corrupt factor irls iterations rank rmse rel delta1 delta2 delta3 see status
Metrics are against the ground truth times `factor`. `see` is `-` unless --see is given;
failed runs carry `-` in every result column and status `failed`.
The noise protocol always emits clean, noisy and noisy+irls rows; --irls applies to the other protocols.
The sample directory holds image.png (or image.sff) and depth.sfd (or depth.png).";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    /// Vary the number of sampled points (`--counts`).
    CountSweep,
    /// Multiply the sparse depths by each of `--factors`.
    ScaleSweep,
    /// Corrupt `--corrupt` of `--count` points with uniform noise.
    Noise,
}

#[derive(Debug, Args)]
#[command(after_help = TABLE_HELP)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub sample_dir: PathBuf,
    #[arg(long, value_enum)]
    pub protocol: Protocol,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 500, 1000])]
    pub counts: Vec<usize>,
    /// Sample count for the scale and noise protocols.
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.2, 3.0])]
    pub factors: Vec<f64>,
    #[arg(long, default_value_t = 300)]
    pub corrupt: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise_low: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_high: f64,
    /// Sampling seeds; each setting runs once per seed.
    #[arg(long, value_delimiter = ',', default_values_t = [0u64])]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub see: bool,
    /// Output table.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone)]
struct RunSpec {
    setting: String,
    seed: u64,
    samples: usize,
    corrupt: usize,
    factor: f64,
    irls: bool,
}

struct RunResult {
    iterations: usize,
    rank: usize,
    metrics: MetricsReport,
}

fn plan(a: &ExperimentArgs) -> CliResult<Vec<RunSpec>> {
    if a.seeds.is_empty() {
        return Err(CliError::Config("at least one seed is required".into()));
    }
    let base = |setting: String, seed: u64| RunSpec {
        setting,
        seed,
        samples: a.count,
        corrupt: 0,
        factor: 1.0,
        irls: a.config.irls,
    };
    let mut runs = Vec::new();
    match a.protocol {
        Protocol::CountSweep => {
            if a.counts.is_empty() || a.counts.contains(&0) {
                return Err(CliError::Config(
                    "counts must be a non-empty list of positive integers".into(),
                ));
            }
            for &n in &a.counts {
                for &seed in &a.seeds {
                    runs.push(RunSpec {
                        samples: n,
                        ..base(format!("n={n}"), seed)
                    });
                }
            }
        }
        Protocol::ScaleSweep => {
            if a.factors.is_empty() || a.factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
                return Err(CliError::Config(
                    "factors must be a non-empty list of positive numbers".into(),
                ));
            }
            for &f in &a.factors {
                for &seed in &a.seeds {
                    runs.push(RunSpec {
                        factor: f,
                        ..base(format!("x{f}"), seed)
                    });
                }
            }
        }
        Protocol::Noise => {
            if a.corrupt > a.count {
                return Err(CliError::Config(format!(
                    "cannot corrupt {} of {} points",
                    a.corrupt, a.count
                )));
            }
            if !(a.noise_low <= a.noise_high)
                || !a.noise_low.is_finite()
                || !a.noise_high.is_finite()
            {
                return Err(CliError::Config(format!(
                    "bad noise interval [{}, {}]",
                    a.noise_low, a.noise_high
                )));
            }
            for (setting, corrupt, irls) in [
                ("clean", 0, false),
                ("noisy", a.corrupt, false),
                ("noisy+irls", a.corrupt, true),
            ] {
                for &seed in &a.seeds {
                    runs.push(RunSpec {
                        corrupt,
                        irls,
                        ..base(setting.into(), seed)
                    });
                }
            }
        }
    }
    if a.protocol != Protocol::CountSweep && a.count == 0 {
        return Err(CliError::Config("count must be positive".into()));
    }
    Ok(runs)
}

struct Sample<'a> {
    basis: &'a BasisField,
    gt: &'a DepthMap,
    mask: &'a ValidMask,
}

fn execute(
    run: &RunSpec,
    s: &Sample,
    a: &ExperimentArgs,
    cfg: &CompletionConfig,
) -> Result<RunResult> {
    let seed = RngSpec::new(run.seed);
    let mut sparse = sample_sparse(s.gt, s.mask, run.samples, seed.derive(1))?;
    if run.factor != 1.0 {
        sparse = perturb_scale(&sparse, run.factor)?;
    }
    if run.corrupt > 0 {
        sparse = inject_noise(
            &sparse,
            run.corrupt,
            a.noise_low,
            a.noise_high,
            seed.derive(2),
        )?;
    }
    let cfg = CompletionConfig {
        use_irls: run.irls,
        ..cfg.clone()
    };
    let (pred, report) = fit(s.basis, &sparse, &cfg)?;
    let scaled;
    let gt = if run.factor != 1.0 {
        scaled = DepthMap::new(
            s.gt.height(),
            s.gt.width(),
            s.gt.values().iter().map(|v| v * run.factor).collect(),
        )?;
        &scaled
    } else {
        s.gt
    };
    let see = a.see.then(SeeOptions::default);
    let metrics = evaluate(&pred, gt, s.mask, see.as_ref())?;
    Ok(RunResult {
        iterations: report.iterations,
        rank: report.effective_rank,
        metrics,
    })
}

fn find(dir: &Path, names: &[&str]) -> CliResult<PathBuf> {
    names
        .iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
        .ok_or_else(|| {
            CliError::Io(format!(
                "{}: none of {} found",
                dir.display(),
                names.join(", ")
            ))
        })
}

fn row(run: &RunSpec, protocol: &str, res: &Result<RunResult>) -> String {
    let mut line = format!(
        "{:<12} {:<11} {:>6} {:>7} {:>7} {:>6} {:>4}",
        protocol,
        run.setting,
        run.seed,
        run.samples,
        run.corrupt,
        run.factor,
        if run.irls { "on" } else { "off" }
    );
    match res {
        Ok(r) => {
            let m = &r.metrics;
            let see = m.see.map_or("-".to_string(), |v| format!("{v:.12e}"));
            let _ = write!(
                line,
                " {:>10} {:>4} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {} ok",
                r.iterations, r.rank, m.rmse, m.rel, m.delta1, m.delta2, m.delta3, see
            );
        }
        Err(_) => line.push_str(&(" -".repeat(8) + " failed")),
    }
    line
}

pub fn run(a: &ExperimentArgs, recorded: &[String]) -> CliResult {
    let cfg = a.config.to_config()?;
    let runs = plan(a)?;
    let mut m = RunManifest::new("experiment", recorded);

    let t = Instant::now();
    let image_path = find(&a.sample_dir, &["image.png", "image.sff"])?;
    let depth_path = find(&a.sample_dir, &["depth.sfd", "depth.png"])?;
    let (image, features) = load_guide(&image_path, a.config.features.as_deref(), &cfg)?;
    let gt = load_depth(&depth_path)?;
    if (gt.height(), gt.width()) != (image.height(), image.width()) {
        return Err(Error::DimensionMismatch(format!(
            "depth is {}x{} but the image is {}x{}",
            gt.height(),
            gt.width(),
            image.height(),
            image.width()
        ))
        .into());
    }
    let mask = ValidMask::from_depth(&gt);
    // the basis depends only on the image, so every run shares it
    let basis = basis_from_features(&features, &cfg)?;
    m.timings_ms.insert("basis".into(), ms(t));

    let t = Instant::now();
    let sample = Sample {
        basis: &basis,
        gt: &gt,
        mask: &mask,
    };
    let results: Vec<Result<RunResult>> = runs
        .par_iter()
        .map(|r| execute(r, &sample, a, &cfg))
        .collect();
    m.timings_ms.insert("runs".into(), ms(t));

    let protocol = a
        .protocol
        .to_possible_value()
        .expect("named variant")
        .get_name()
        .to_string();
    let mut table = String::from(
        "protocol     setting       seed samples corrupt factor irls iterations rank rmse rel delta1 delta2 delta3 see status\n",
    );
    for (spec, res) in runs.iter().zip(&results) {
        table.push_str(&row(spec, &protocol, res));
        table.push('\n');
        if let Err(e) = res {
            let msg = format!("{} seed {}: {e}", spec.setting, spec.seed);
            eprintln!("sparsefill: run failed: {msg}");
            m.failures.push(msg);
        }
    }
    fs::write(&a.out, &table).map_err(|e| Error::io(&a.out, e))?;
    print!("{table}");

    m.input("image", &image_path)?;
    m.input("depth", &depth_path)?;
    if let Some(f) = &a.config.features {
        m.input("features", f)?;
    }
    m.output("table", &a.out)?;
    m.seeds = a.seeds.clone();
    m.config = Some(cfg);
    m.save(&default_manifest_path(&a.out))?;

    match m.failures.len() {
        0 => Ok(()),
        n => Err(CliError::RunsFailed(n)),
    }
}
