use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nucleoforge_core::io::{
    atomic_write_bytes, read_gray_png, read_label_png, write_gray_png, write_label_png,
    write_mask_png, write_pfm, write_skeleton_png, write_unit_map_png,
};
use nucleoforge_core::loss::{
    adversarial_terms, contrast_report, optimize_patch, sharpness_loss, smoothness_loss,
    total_loss, ContrastReport, DiscriminatorScore, LossBreakdown, LossParams, LossReport,
};
use nucleoforge_core::quality::{self, QualityReport};
use nucleoforge_core::raster::{extract_contours, GrayImage, LabelMap};
use nucleoforge_core::seg::{self, watershed, SegReport};
use nucleoforge_core::synth::{batch_gen, MANIFEST_FILE};
use nucleoforge_core::topo::{distance_map, skeleton_map, topo_skeleton};

use crate::config::PipelineConfig;
use crate::error::CliError;

/// `{prefix}{suffix}` as a path, e.g. prefix `out/run` -> `out/run_after.png`.
fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}{}", prefix.display(), suffix))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => {
            ensure_parent(path)?;
            atomic_write_bytes(path, text.as_bytes())?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn check_same_size(g: &GrayImage, labels: &LabelMap) -> Result<(), CliError> {
    if g.width() != labels.width() || g.height() != labels.height() {
        return Err(CliError::Precondition(format!(
            "image is {}x{} but the label map is {}x{}",
            g.width(),
            g.height(),
            labels.width(),
            labels.height()
        )));
    }
    Ok(())
}

pub fn gen_masks(
    config: &Path,
    count: usize,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(config)?;
    let mut synth = cfg.synth.clone();
    if let Some(s) = cfg.seed {
        synth.seed = s;
    }
    if let Some(s) = seed {
        synth.seed = s;
    }
    let out_dir = out.or(cfg.out_dir).ok_or_else(|| {
        CliError::Config("no output directory: pass --out or set out_dir in the config".into())
    })?;
    batch_gen(&synth, count, &out_dir)?;
    println!("{}", out_dir.join(MANIFEST_FILE).display());
    Ok(())
}

pub fn topo_map(labels_path: &Path, out_prefix: &Path) -> Result<(), CliError> {
    let labels = read_label_png(labels_path)?;
    let distance = distance_map(&labels);
    let skeleton = topo_skeleton(&labels);
    let combined = skeleton_map(&labels);

    let outputs = [
        prefixed(out_prefix, "_distance.pfm"),
        prefixed(out_prefix, "_distance.png"),
        prefixed(out_prefix, "_skeleton.png"),
        prefixed(out_prefix, "_skeleton_map.pfm"),
        prefixed(out_prefix, "_skeleton_map.png"),
    ];
    ensure_parent(&outputs[0])?;
    write_pfm(&outputs[0], &distance)?;
    write_unit_map_png(&outputs[1], &distance)?;
    write_mask_png(&outputs[2], &skeleton)?;
    write_pfm(&outputs[3], &combined)?;
    write_skeleton_png(&outputs[4], &combined)?;
    for path in &outputs {
        println!("{}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn loss(
    image: &Path,
    labels: &Path,
    lambda: f64,
    beta: f64,
    d_real: Option<f64>,
    d_fake: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let params = LossParams::new(lambda, beta)?;
    let g = read_gray_png(image)?;
    let label_map = read_label_png(labels)?;
    check_same_size(&g, &label_map)?;
    let c = extract_contours(&label_map);
    let ls1 = smoothness_loss(&g, &c, &params)?;
    let ls2 = sharpness_loss(&g, &c, &params)?;
    let (l1, l2) = match (d_real, d_fake) {
        (Some(r), Some(f)) => {
            adversarial_terms(DiscriminatorScore::new(r)?, DiscriminatorScore::new(f)?)
        }
        _ => (0.0, 0.0),
    };
    let report = LossReport::new(total_loss(l1, l2, ls1, ls2, &params), params);
    emit_json(&report, out)
}

#[derive(Debug, Serialize)]
struct OptimizeReport {
    lambda: f64,
    beta: f64,
    step: f64,
    iters_requested: usize,
    steps_taken: usize,
    initial_contrast: ContrastReport,
    final_contrast: ContrastReport,
    initial_loss: LossBreakdown,
    final_loss: LossBreakdown,
    trace: Vec<LossBreakdown>,
}

#[allow(clippy::too_many_arguments)]
pub fn optimize(
    image: &Path,
    labels: &Path,
    lambda: f64,
    beta: f64,
    step: f64,
    iters: usize,
    out_prefix: &Path,
) -> Result<(), CliError> {
    let params = LossParams::new(lambda, beta)?;
    let g0 = read_gray_png(image)?;
    let label_map = read_label_png(labels)?;
    check_same_size(&g0, &label_map)?;
    let c = extract_contours(&label_map);

    let initial_contrast = contrast_report(&g0, &c)?;
    let (g1, trace) = optimize_patch(&g0, &c, &params, step, iters)?;
    let final_contrast = contrast_report(&g1, &c)?;

    let before_path = prefixed(out_prefix, "_before.png");
    ensure_parent(&before_path)?;
    write_gray_png(&before_path, &g0)?;
    write_gray_png(&prefixed(out_prefix, "_after.png"), &g1)?;

    let report = OptimizeReport {
        lambda,
        beta,
        step,
        iters_requested: iters,
        steps_taken: trace.len() - 1,
        initial_contrast,
        final_contrast,
        initial_loss: trace[0],
        final_loss: *trace.last().expect("trace holds the initial entry"),
        trace,
    };
    emit_json(&report, Some(&prefixed(out_prefix, "_report.json")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairSpec {
    a: PathBuf,
    b: PathBuf,
}

#[derive(Debug, Serialize)]
struct PairReport {
    a: PathBuf,
    b: PathBuf,
    #[serde(flatten)]
    scores: QualityReport,
}

#[derive(Debug, Serialize)]
struct QualitySummary {
    pairs: Vec<PairReport>,
    mean: QualityReport,
}

pub fn quality(
    pairs_path: &Path,
    out: Option<&Path>,
    config: Option<&Path>,
) -> Result<(), CliError> {
    if let Some(cfg) = config {
        PipelineConfig::load(cfg)?;
    }
    let text = std::fs::read_to_string(pairs_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", pairs_path.display())))?;
    let specs: Vec<PairSpec> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", pairs_path.display())))?;
    if specs.is_empty() {
        return Err(CliError::Config(format!(
            "{}: pairs list is empty",
            pairs_path.display()
        )));
    }
    let pairs: Vec<PairReport> = specs
        .par_iter()
        .map(|spec| -> Result<PairReport, CliError> {
            let a = read_gray_png(&spec.a)?;
            let b = read_gray_png(&spec.b)?;
            let scores = quality::evaluate(&a, &b)?;
            Ok(PairReport {
                a: spec.a.clone(),
                b: spec.b.clone(),
                scores,
            })
        })
        .collect::<Result<_, _>>()?;
    let n = pairs.len() as f64;
    let mean = QualityReport {
        ssim: pairs.iter().map(|p| p.scores.ssim).sum::<f64>() / n,
        fsim: pairs.iter().map(|p| p.scores.fsim).sum::<f64>() / n,
        gmsd: pairs.iter().map(|p| p.scores.gmsd).sum::<f64>() / n,
    };
    emit_json(&QualitySummary { pairs, mean }, out)
}

#[derive(Debug, Serialize)]
struct ImageSegReport {
    image: String,
    #[serde(flatten)]
    report: SegReport,
}

#[derive(Debug, Serialize)]
struct SegSummary {
    images: Vec<ImageSegReport>,
    mean: SegReport,
}

pub fn seg_eval(pred_dir: &Path, gt_dir: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let mut names: Vec<String> = std::fs::read_dir(gt_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", gt_dir.display())))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.path().extension().is_some_and(|e| e == "png"))
        .filter_map(|entry| entry.file_name().into_string().ok())
        .collect();
    names.sort_unstable();
    if names.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no PNG label maps found",
            gt_dir.display()
        )));
    }
    let images: Vec<ImageSegReport> = names
        .par_iter()
        .map(|name| -> Result<ImageSegReport, CliError> {
            let gt = read_label_png(&gt_dir.join(name))?;
            let pred = read_label_png(&pred_dir.join(name))?;
            let report = seg::evaluate(&pred, &gt)?;
            Ok(ImageSegReport {
                image: name.clone(),
                report,
            })
        })
        .collect::<Result<_, _>>()?;
    let n = images.len() as f64;
    let mean = SegReport {
        dq: images.iter().map(|i| i.report.dq).sum::<f64>() / n,
        sq: images.iter().map(|i| i.report.sq).sum::<f64>() / n,
        pq: images.iter().map(|i| i.report.pq).sum::<f64>() / n,
        aji: images.iter().map(|i| i.report.aji).sum::<f64>() / n,
    };
    emit_json(&SegSummary { images, mean }, out)
}

pub fn watershed(
    mask_path: &Path,
    out: &Path,
    h_maxima: Option<f64>,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let config_h = match config {
        Some(path) => Some(PipelineConfig::load(path)?.watershed_h),
        None => None,
    };
    let h = h_maxima.or(config_h).unwrap_or(watershed::DEFAULT_H);
    if !h.is_finite() || h <= 0.0 {
        return Err(CliError::Config(format!(
            "h-maxima depth {h} must be a positive real"
        )));
    }
    let mask = read_label_png(mask_path)?.to_mask();
    let labels = watershed::watershed_split_h(&mask, h);
    ensure_parent(out)?;
    write_label_png(out, &labels)?;
    println!("{}", out.display());
    Ok(())
}
