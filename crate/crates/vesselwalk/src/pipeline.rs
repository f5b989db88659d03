//! JSON-reporting entry points behind the `vesselwalk` binary.
//!
//! Every run function returns the report as a [`serde_json::Value`] carrying a
//! `"schema"` tag and the [`RunManifest`] that produced it. Reports go to
//! standard output, artifacts to explicit paths, diagnostics to standard
//! error; that split is the binary's job, the functions here only build the
//! reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::codec::{decode_raster, encode_mask, encode_probability, RasterKind};
use crate::components::{label_components, Connectivity};
use crate::ddbshape::{
    dense_concat_channels, impulse_response_support, receptive_field, BlockTopology, ConvSpec,
    WiringMode,
};
use crate::dicemath::{dice_grad, dice_grad_central_difference};
use crate::grid::{BinaryMask, Pixel, ProbabilityMap};
use crate::metrics::{
    binarize, err_metric, otsu_threshold, roi_error_records, EvalReport, RoiErrorRecord,
};
use crate::reconnect::{directional_walk_baseline, prw, ReconnectReport, RoiStatus, WalkConfig};
use crate::synth::{generate_fixture, SynthConfig};
use crate::{Error, Result};

/// Provenance block embedded in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub alpha: Option<f64>,
    pub roi_side: Option<u32>,
    pub eps_nn: Option<f64>,
    pub seeds: Vec<u64>,
    pub version: String,
    pub duration_seconds: f64,
}

struct ManifestBuilder {
    subcommand: &'static str,
    inputs: Vec<String>,
    alpha: Option<f64>,
    roi_side: Option<u32>,
    eps_nn: Option<f64>,
    seeds: Vec<u64>,
    started: Instant,
}

impl ManifestBuilder {
    fn new(subcommand: &'static str) -> Self {
        ManifestBuilder {
            subcommand,
            inputs: Vec::new(),
            alpha: None,
            roi_side: None,
            eps_nn: None,
            seeds: Vec::new(),
            started: Instant::now(),
        }
    }

    fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    fn walk_config(mut self, cfg: &WalkConfig) -> Self {
        self.alpha = Some(cfg.alpha);
        self.roi_side = Some(cfg.roi_side);
        self.eps_nn = Some(cfg.eps_nn);
        self.seeds.push(cfg.rng_seed);
        self
    }

    fn seed(mut self, seed: u64) -> Self {
        self.seeds.push(seed);
        self
    }

    fn finish(self) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand.to_string(),
            inputs: self.inputs,
            alpha: self.alpha,
            roi_side: self.roi_side,
            eps_nn: self.eps_nn,
            seeds: self.seeds,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn load_mask(path: &Path) -> Result<BinaryMask> {
    decode_raster(&fs::read(path)?, RasterKind::Mask)?.into_mask()
}

fn load_probability(path: &Path) -> Result<ProbabilityMap> {
    decode_raster(&fs::read(path)?, RasterKind::Probability)?.into_probability()
}

/// Runs reconnection on a (probability map, mask) pair, writes the
/// reconnected mask, and reports per-fragment records.
pub fn run_reconnect(
    prob_path: &Path,
    mask_path: &Path,
    out_mask_path: &Path,
    cfg: &WalkConfig,
    baseline: bool,
) -> Result<Value> {
    let mb = ManifestBuilder::new("reconnect")
        .input(prob_path)
        .input(mask_path)
        .walk_config(cfg);
    let prob = load_probability(prob_path)?;
    let mask = load_mask(mask_path)?;
    let runner = if baseline { directional_walk_baseline } else { prw };
    let (out, report) = runner(&mask, &prob, cfg)?;
    fs::write(out_mask_path, encode_mask(&out)?)?;
    Ok(json!({
        "schema": "vesselwalk/reconnect/v1",
        "manifest": mb.finish(),
        "baseline": baseline,
        "components_before": label_components(&mask, Connectivity::Eight).count(),
        "components_after": label_components(&out, Connectivity::Eight).count(),
        "output_mask": out_mask_path.display().to_string(),
        "report": report,
    }))
}

/// Extracts `(roi_id, stamped pixels)` sets from a reconnect report, accepting
/// either the bare [`ReconnectReport`] JSON or the full `reconnect` report
/// that wraps it under `"report"`.
fn stamped_sets_from_manifest(raw: &[u8]) -> Result<Vec<(u32, Vec<Pixel>)>> {
    let value: Value = serde_json::from_slice(raw)?;
    let inner = if value.get("report").is_some() { value["report"].clone() } else { value };
    let report: ReconnectReport = serde_json::from_value(inner)?;
    Ok(report
        .records
        .into_iter()
        .filter(|r| r.status == RoiStatus::Connected)
        .map(|r| (r.fragment_label, r.stamped_pixels))
        .collect())
}

/// Scores a prediction against ground truth: accuracy/sensitivity/specificity
/// always, AUC when a probability map is given, the per-ROI reconnection
/// error when a reconnect report is given.
pub fn run_eval(
    pred_path: &Path,
    truth_path: &Path,
    prob_path: Option<&Path>,
    roi_manifest_path: Option<&Path>,
) -> Result<Value> {
    let mut mb = ManifestBuilder::new("eval").input(pred_path).input(truth_path);
    let pred = load_mask(pred_path)?;
    let truth = load_mask(truth_path)?;
    let prob = match prob_path {
        Some(p) => {
            mb = mb.input(p);
            Some(load_probability(p)?)
        }
        None => None,
    };
    let rois: Vec<RoiErrorRecord> = match roi_manifest_path {
        Some(p) => {
            mb = mb.input(p);
            let sets = stamped_sets_from_manifest(&fs::read(p)?)?;
            roi_error_records(&sets, &truth)
        }
        None => Vec::new(),
    };
    let eval = EvalReport::compute(&pred, &truth, prob.as_ref(), rois, None)?;
    Ok(json!({
        "schema": "vesselwalk/eval/v1",
        "manifest": mb.finish(),
        "eval": eval,
    }))
}

/// Which hyperparameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// `roi_side` over 0, 20, ..., 160 (0 disables reconnection entirely).
    RoiSize,
    /// `alpha` over 0.00, 0.05, ..., 0.50.
    Alpha,
}

/// One fixture on disk, as written by [`run_synth`].
struct FixtureFiles {
    truth: BinaryMask,
    broken: BinaryMask,
    prob: ProbabilityMap,
}

fn load_fixture(dir: &Path) -> Result<FixtureFiles> {
    Ok(FixtureFiles {
        truth: load_mask(&dir.join("truth.pgm"))?,
        broken: load_mask(&dir.join("broken.pgm"))?,
        prob: load_probability(&dir.join("prob.pgm"))?,
    })
}

/// Directories holding a fixture, sorted by name: the root itself when it
/// contains `truth.pgm`, else its matching immediate subdirectories.
fn discover_fixtures(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join("truth.pgm").is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.join("truth.pgm").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no fixtures (truth.pgm) found under {}",
            root.display()
        )));
    }
    Ok(dirs)
}

/// Row of a sweep table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub acc: Option<f64>,
    pub sen: Option<f64>,
    pub err: f64,
    pub seconds: f64,
}

/// Runs the reconnection pipeline across a parameter range on every fixture
/// under `fixture_dir`, scoring each setting against ground truth. `repeats`
/// re-runs each setting to stabilize timing; scores are unaffected.
pub fn run_sweep(fixture_dir: &Path, parameter: SweepParameter, repeats: u32) -> Result<Value> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let mb = ManifestBuilder::new("sweep").input(fixture_dir);
    let fixtures: Vec<FixtureFiles> = discover_fixtures(fixture_dir)?
        .iter()
        .map(|d| load_fixture(d))
        .collect::<Result<_>>()?;

    let values: Vec<f64> = match parameter {
        SweepParameter::RoiSize => (0..=8).map(|i| f64::from(i * 20)).collect(),
        SweepParameter::Alpha => (0..=10).map(|i| f64::from(i) * 0.05).collect(),
    };

    let mut rows: Vec<SweepRow> = Vec::new();
    for &value in &values {
        let cfg = match parameter {
            SweepParameter::RoiSize => {
                WalkConfig { roi_side: value as u32, ..WalkConfig::default() }
            }
            SweepParameter::Alpha => WalkConfig { alpha: value, ..WalkConfig::default() },
        };
        let started = Instant::now();
        let mut confusion = crate::metrics::ConfusionCounts::default();
        let mut roi_records: Vec<RoiErrorRecord> = Vec::new();
        for _ in 0..repeats {
            confusion = crate::metrics::ConfusionCounts::default();
            roi_records.clear();
            for f in &fixtures {
                // roi_side 0 admits no fracture pair at all: pass through
                let (out, report) = if parameter == SweepParameter::RoiSize && cfg.roi_side == 0 {
                    (f.broken.clone(), ReconnectReport::default())
                } else {
                    prw(&f.broken, &f.prob, &cfg)?
                };
                let c = crate::metrics::confusion(&out, &f.truth, None)?;
                confusion.tp += c.tp;
                confusion.fp += c.fp;
                confusion.tn += c.tn;
                confusion.fn_ += c.fn_;
                let sets: Vec<(u32, Vec<Pixel>)> = report
                    .records
                    .iter()
                    .filter(|r| r.status == RoiStatus::Connected)
                    .map(|r| (r.fragment_label, r.stamped_pixels.clone()))
                    .collect();
                roi_records.extend(roi_error_records(&sets, &f.truth));
            }
        }
        let seconds = started.elapsed().as_secs_f64() / f64::from(repeats);
        let (acc, sen, _) = crate::metrics::acc_sen_spe(&confusion);
        rows.push(SweepRow { value, acc, sen, err: err_metric(&roi_records), seconds });
    }

    Ok(json!({
        "schema": "vesselwalk/sweep/v1",
        "manifest": mb.finish(),
        "parameter": match parameter { SweepParameter::RoiSize => "roi-size", SweepParameter::Alpha => "alpha" },
        "fixtures": fixtures.len(),
        "repeats": repeats,
        "rows": rows,
    }))
}

/// Generates a synthetic fixture and writes `truth.pgm`, `broken.pgm`,
/// `prob.pgm` and `gaps.json` into `out_dir`.
pub fn run_synth(out_dir: &Path, cfg: &SynthConfig) -> Result<Value> {
    let mb = ManifestBuilder::new("synth").seed(cfg.rng_seed);
    let fixture = generate_fixture(cfg)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("truth.pgm"), encode_mask(&fixture.truth)?)?;
    fs::write(out_dir.join("broken.pgm"), encode_mask(&fixture.broken)?)?;
    fs::write(out_dir.join("prob.pgm"), encode_probability(&fixture.prob)?)?;
    fs::write(out_dir.join("gaps.json"), serde_json::to_vec_pretty(&fixture.gaps)?)?;
    Ok(json!({
        "schema": "vesselwalk/synth/v1",
        "manifest": mb.finish(),
        "config": cfg,
        "out_dir": out_dir.display().to_string(),
        "truth_pixels": fixture.truth.count_foreground(),
        "components_broken": label_components(&fixture.broken, Connectivity::Eight).count(),
        "gaps": fixture.gaps.iter().map(|g| json!({
            "id": g.id,
            "removed_pixels": g.removed.len(),
            "endpoints": g.endpoints,
        })).collect::<Vec<_>>(),
    }))
}

/// Compares the analytic Dice gradient against central finite differences on
/// random grids; `pass` is false when any grid exceeds `tolerance`.
pub fn run_dice_check(
    grids: u32,
    side: usize,
    seed: u64,
    h: f64,
    tolerance: f64,
) -> Result<Value> {
    if grids == 0 || side == 0 {
        return Err(Error::InvalidArgument("grids and side must be positive".into()));
    }
    let mb = ManifestBuilder::new("dice-check").seed(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel = 0.0f64;
    for _ in 0..grids {
        let p_values: Vec<f64> = (0..side * side).map(|_| rng.gen::<f64>()).collect();
        let g_values: Vec<bool> = (0..side * side).map(|_| rng.gen::<bool>()).collect();
        let p = ProbabilityMap::new(side, side, p_values)?;
        let g = BinaryMask::new(side, side, g_values)?;
        let analytic = dice_grad(&p, &g, 1.0)?;
        let numeric = dice_grad_central_difference(&p, &g, 1.0, h)?;
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-12);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(json!({
        "schema": "vesselwalk/dice-check/v1",
        "manifest": mb.finish(),
        "grids": grids,
        "side": side,
        "h": h,
        "tolerance": tolerance,
        "max_relative_error": max_rel,
        "pass": max_rel < tolerance,
    }))
}

/// Analyses a dilated-convolution block: analytic receptive field, the
/// impulse-response oracle, and dense concatenation channel growth.
pub fn run_ddb_rf(
    mode: WiringMode,
    kernel: u32,
    dilations: &[u32],
    repeats: u32,
    input_channels: u32,
    growth: u32,
) -> Result<Value> {
    let mb = ManifestBuilder::new("ddb-rf");
    let layers = dilations
        .iter()
        .map(|&d| ConvSpec::new(kernel, d))
        .collect::<Result<Vec<_>>>()?;
    let layer_count = layers.len() as u32;
    let topology = BlockTopology::new(mode, layers, repeats)?;
    let rf = receptive_field(&topology);
    let support = impulse_response_support(&topology, rf as usize + 4)?;
    Ok(json!({
        "schema": "vesselwalk/ddb-rf/v1",
        "manifest": mb.finish(),
        "topology": topology,
        "receptive_field": rf,
        "impulse_support": support,
        "oracle_agrees": rf == support,
        "concat_channel_growth": dense_concat_channels(input_channels, growth, layer_count),
    }))
}

/// Otsu-thresholds a probability map, optionally writing the binarized mask.
pub fn run_otsu(prob_path: &Path, out_mask_path: Option<&Path>) -> Result<Value> {
    let mb = ManifestBuilder::new("otsu").input(prob_path);
    let prob = load_probability(prob_path)?;
    let threshold = otsu_threshold(&prob)?;
    let mask = binarize(&prob, threshold);
    if let Some(path) = out_mask_path {
        fs::write(path, encode_mask(&mask)?)?;
    }
    Ok(json!({
        "schema": "vesselwalk/otsu/v1",
        "manifest": mb.finish(),
        "threshold": threshold,
        "foreground_pixels": mask.count_foreground(),
        "output_mask": out_mask_path.map(|p| p.display().to_string()),
    }))
}
