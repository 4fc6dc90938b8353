use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser};
use serde_json::json;

use super::manifest::{default_manifest_path, file_sha256, RunManifest, SolveSummary};
use super::{Cli, CliError, CliResult, Command, ConfigArgs, OutputFormat};
use crate::basis::FeatureMap;
use crate::completion::{
    basis_from_features, complete_superres_features, fit, image_features, kernel_map,
    CompletionConfig, DepthMap, SparseDepth, ValidMask,
};
use crate::dataio::{
    load_depth, load_features_for, load_image, load_sparse, sample_sparse, save_depth,
    save_features, save_image, save_sparse, synthetic_scene, RngSpec,
};
use crate::error::Error;
use crate::grid::DenseGrid;
use crate::metrics::{evaluate as evaluate_metrics, MetricsReport, SeeOptions};

#[derive(Debug, Args)]
pub struct CompleteArgs {
    /// Guide image (PNG/JPEG or .sff grid).
    #[arg(long)]
    pub image: PathBuf,
    /// Sparse depth set (text format).
    #[arg(long)]
    pub sparse: PathBuf,
    /// Output depth map; `.png` writes 16-bit millimeters, else raw f32.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Ground truth; when given, metrics are printed and recorded.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Include the soft edge error in the metrics.
    #[arg(long)]
    pub see: bool,
    /// Manifest path (default `<out>.manifest.json`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "kv")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth; zero or negative pixels are excluded.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub see: bool,
    /// Gradient magnitude above which a ground-truth pixel is an edge.
    #[arg(long, default_value_t = 0.5)]
    pub edge_threshold: f64,
    #[arg(long, value_enum, default_value = "kv")]
    pub format: OutputFormat,
    /// Also write the report here, with a manifest beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UpsampleArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub sparse: PathBuf,
    /// Output height; must not be below the input height.
    #[arg(long)]
    pub height: usize,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "kv")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Anchor pixel as `row,col`; repeat for several maps.
    #[arg(long = "anchor", value_parser = parse_anchor, required = true)]
    pub anchors: Vec<(usize, usize)>,
    /// Receives `kernel_<row>_<col>.sff` (raw values) and `.png` (mapped to [0, 1]).
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 120)]
    pub height: usize,
    #[arg(long, default_value_t = 160)]
    pub width: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also sample this many sparse points into sparse.txt.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

fn parse_anchor(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(',')
        .ok_or_else(|| format!("expected row,col, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(r)?, p(c)?))
}

pub(super) fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Image plus the features the basis is built from (external or pyramid).
pub(super) fn load_guide(
    image: &Path,
    features: Option<&Path>,
    cfg: &CompletionConfig,
) -> CliResult<(DenseGrid, FeatureMap)> {
    let image = load_image(image)?;
    let feats = match features {
        Some(p) => load_features_for(p, image.height(), image.width())?,
        None => image_features(&image, cfg)?,
    };
    Ok((image, feats))
}

fn check_sparse(sparse: &SparseDepth, image: &DenseGrid) -> CliResult {
    if (sparse.height(), sparse.width()) != (image.height(), image.width()) {
        return Err(Error::DimensionMismatch(format!(
            "sparse set is {}x{} but the image is {}x{}",
            sparse.height(),
            sparse.width(),
            image.height(),
            image.width()
        ))
        .into());
    }
    Ok(())
}

fn record_inputs(
    m: &mut RunManifest,
    image: &Path,
    sparse: Option<&Path>,
    cfg: &ConfigArgs,
) -> CliResult {
    m.input("image", image)?;
    if let Some(s) = sparse {
        m.input("sparse", s)?;
    }
    if let Some(f) = &cfg.features {
        m.input("features", f)?;
    }
    Ok(())
}

fn print_summary(
    summary: &SolveSummary,
    metrics: Option<&MetricsReport>,
    out: &Path,
    format: OutputFormat,
) {
    match format {
        OutputFormat::Kv => {
            print!("{}", summary.to_kv());
            if let Some(m) = metrics {
                print!("{}", m.to_kv());
            }
            println!("output={}", out.display());
        }
        OutputFormat::Json => {
            let v = json!({ "solve": summary, "metrics": metrics, "output": out.display().to_string() });
            println!(
                "{}",
                serde_json::to_string_pretty(&v).expect("summary serializes")
            );
        }
    }
}

pub fn complete(a: &CompleteArgs, recorded: &[String]) -> CliResult {
    let cfg = a.config.to_config()?;
    let mut m = RunManifest::new("complete", recorded);
    let t = Instant::now();
    let (image, features) = load_guide(&a.image, a.config.features.as_deref(), &cfg)?;
    let sparse = load_sparse(&a.sparse)?;
    check_sparse(&sparse, &image)?;
    m.timings_ms.insert("load".into(), ms(t));

    let t = Instant::now();
    let basis = basis_from_features(&features, &cfg)?;
    m.timings_ms.insert("basis".into(), ms(t));
    let t = Instant::now();
    let (depth, report) = fit(&basis, &sparse, &cfg)?;
    m.timings_ms.insert("solve".into(), ms(t));
    let t = Instant::now();
    save_depth(&depth, &a.out)?;
    m.timings_ms.insert("write".into(), ms(t));

    let summary = SolveSummary::new(&report, cfg.use_irls, sparse.len());
    let metrics = match &a.gt {
        Some(gt_path) => {
            let gt = load_depth(gt_path)?;
            let see = a.see.then(SeeOptions::default);
            m.input("gt", gt_path)?;
            Some(evaluate_metrics(
                &depth,
                &gt,
                &ValidMask::from_depth(&gt),
                see.as_ref(),
            )?)
        }
        None => None,
    };
    record_inputs(&mut m, &a.image, Some(&a.sparse), &a.config)?;
    m.output("depth", &a.out)?;
    m.seeds.push(cfg.generator.seed);
    m.config = Some(cfg);
    m.solve = Some(summary.clone());
    m.metrics = metrics.clone();
    m.save(
        &a.manifest
            .clone()
            .unwrap_or_else(|| default_manifest_path(&a.out)),
    )?;
    print_summary(&summary, metrics.as_ref(), &a.out, a.format);
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs, recorded: &[String]) -> CliResult {
    if !(a.edge_threshold > 0.0 && a.edge_threshold.is_finite()) {
        return Err(CliError::Config(format!(
            "edge-threshold must be positive, got {}",
            a.edge_threshold
        )));
    }
    let pred = load_depth(&a.pred)?;
    let gt = load_depth(&a.gt)?;
    let see = a.see.then_some(SeeOptions {
        edge_threshold: a.edge_threshold,
    });
    let report = evaluate_metrics(&pred, &gt, &ValidMask::from_depth(&gt), see.as_ref())?;
    let text = match a.format {
        OutputFormat::Kv => report.to_kv(),
        OutputFormat::Json => {
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
    };
    print!("{text}");
    if let Some(out) = &a.out {
        fs::write(out, &text).map_err(|e| Error::io(out, e))?;
        let mut m = RunManifest::new("evaluate", recorded);
        m.input("pred", &a.pred)?;
        m.input("gt", &a.gt)?;
        m.output("report", out)?;
        m.metrics = Some(report);
        m.save(&default_manifest_path(out))?;
    }
    Ok(())
}

pub fn upsample(a: &UpsampleArgs, recorded: &[String]) -> CliResult {
    let cfg = a.config.to_config()?;
    if a.height == 0 || a.width == 0 {
        return Err(CliError::Config(
            "target dimensions must be positive".into(),
        ));
    }
    let mut m = RunManifest::new("upsample", recorded);
    let t = Instant::now();
    let (image, features) = load_guide(&a.image, a.config.features.as_deref(), &cfg)?;
    let sparse = load_sparse(&a.sparse)?;
    check_sparse(&sparse, &image)?;
    m.timings_ms.insert("load".into(), ms(t));

    let t = Instant::now();
    let done = complete_superres_features(&features, &sparse, &cfg, a.height, a.width)?;
    m.timings_ms.insert("complete".into(), ms(t));
    let t = Instant::now();
    save_depth(&done.depth, &a.out)?;
    m.timings_ms.insert("write".into(), ms(t));

    let summary = SolveSummary::new(&done.report, cfg.use_irls, sparse.len());
    record_inputs(&mut m, &a.image, Some(&a.sparse), &a.config)?;
    m.output("depth", &a.out)?;
    m.seeds.push(cfg.generator.seed);
    m.config = Some(cfg);
    m.solve = Some(summary.clone());
    m.save(
        &a.manifest
            .clone()
            .unwrap_or_else(|| default_manifest_path(&a.out)),
    )?;
    print_summary(&summary, None, &a.out, a.format);
    Ok(())
}

pub fn kernel(a: &KernelArgs, recorded: &[String]) -> CliResult {
    let cfg = a.config.to_config()?;
    let mut m = RunManifest::new("kernel", recorded);
    let t = Instant::now();
    let (image, features) = load_guide(&a.image, a.config.features.as_deref(), &cfg)?;
    // reject bad anchors before any work or output
    for &(r, c) in &a.anchors {
        if r >= image.height() || c >= image.width() {
            return Err(CliError::Config(format!(
                "anchor ({r}, {c}) outside {}x{}",
                image.height(),
                image.width()
            )));
        }
    }
    let basis = basis_from_features(&features, &cfg)?;
    m.timings_ms.insert("basis".into(), ms(t));

    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let t = Instant::now();
    for &(r, c) in &a.anchors {
        let k = kernel_map(&basis, (r, c))?;
        let raw = a.out_dir.join(format!("kernel_{r}_{c}.sff"));
        let png = a.out_dir.join(format!("kernel_{r}_{c}.png"));
        save_image(&k.map(|v| 0.5 * (v + 1.0))?, &png)?;
        save_features(&FeatureMap::new(k)?, &raw)?;
        m.output("kernel", &raw)?;
        m.output("kernel_image", &png)?;
        println!("{}", raw.display());
    }
    m.timings_ms.insert("kernels".into(), ms(t));
    record_inputs(&mut m, &a.image, None, &a.config)?;
    m.seeds.push(cfg.generator.seed);
    m.config = Some(cfg);
    m.save(&a.out_dir.join("kernel.manifest.json"))?;
    Ok(())
}

pub fn synth(a: &SynthArgs, recorded: &[String]) -> CliResult {
    if a.height < 2 || a.width < 2 {
        return Err(CliError::Config(
            "synthetic samples need at least 2x2 pixels".into(),
        ));
    }
    let sample = synthetic_scene(a.height, a.width, RngSpec::new(a.seed))?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut m = RunManifest::new("synth", recorded);
    let image_path = a.out_dir.join("image.png");
    let depth_path = a.out_dir.join("depth.sfd");
    save_image(&sample.image, &image_path)?;
    save_depth(&sample.gt_depth, &depth_path)?;
    m.output("image", &image_path)?;
    m.output("depth", &depth_path)?;
    if let Some(count) = a.count {
        // sample from the stored (f32) depth so sparse values match the file
        let gt: DepthMap = load_depth(&depth_path)?;
        let sparse = sample_sparse(
            &gt,
            &ValidMask::from_depth(&gt),
            count,
            RngSpec::new(a.seed).derive(1),
        )?;
        let sparse_path = a.out_dir.join("sparse.txt");
        save_sparse(&sparse, &sparse_path)?;
        m.output("sparse", &sparse_path)?;
    }
    m.seeds.push(a.seed);
    m.save(&a.out_dir.join("synth.manifest.json"))?;
    println!("{}", a.out_dir.display());
    Ok(())
}

/// Reruns the recorded command from the recorded directory, then compares
/// every output against its recorded hash.
pub fn replay(a: &ReplayArgs) -> CliResult {
    let m = RunManifest::load(&a.manifest)?;
    if !m.cwd.is_empty() {
        std::env::set_current_dir(&m.cwd).map_err(|e| Error::io(&m.cwd, e))?;
    }
    let mut changed: Vec<String> = Vec::new();
    for input in &m.inputs {
        if file_sha256(Path::new(&input.path))? != input.sha256 {
            changed.push(format!("input {}", input.path));
        }
    }
    if !changed.is_empty() {
        return Err(CliError::ReplayMismatch(changed));
    }
    let cli = Cli::try_parse_from(
        std::iter::once("sparsefill".to_string()).chain(m.args.iter().cloned()),
    )
    .map_err(|e| CliError::Config(format!("manifest arguments do not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Config("manifest records a replay".into()));
    }
    super::run(cli.command, &m.args)?;
    for out in &m.outputs {
        if file_sha256(Path::new(&out.path))? != out.sha256 {
            changed.push(out.path.clone());
        }
    }
    if !changed.is_empty() {
        return Err(CliError::ReplayMismatch(changed));
    }
    println!("replay ok: {} output(s) identical", m.outputs.len());
    Ok(())
}
