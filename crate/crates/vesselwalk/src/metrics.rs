//! Confusion-based scores, ROC/AUC, reconnection error and Otsu
//! binarization.

use serde::{Deserialize, Serialize};

use crate::grid::{BinaryMask, Pixel, ProbabilityMap};
use crate::{Error, Result};

/// Pixel-level confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Counts prediction-vs-truth agreement over the pixels where `region` is
/// true (whole image when `region` is `None`).
pub fn confusion(
    pred: &BinaryMask,
    truth: &BinaryMask,
    region: Option<&BinaryMask>,
) -> Result<ConfusionCounts> {
    check_dims(pred.width(), pred.height(), truth.width(), truth.height())?;
    if let Some(r) = region {
        check_dims(pred.width(), pred.height(), r.width(), r.height())?;
    }
    let mut c = ConfusionCounts::default();
    for i in 0..pred.values().len() {
        if let Some(r) = region {
            if !r.values()[i] {
                continue;
            }
        }
        match (pred.values()[i], truth.values()[i]) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

fn check_dims(w1: usize, h1: usize, w2: usize, h2: usize) -> Result<()> {
    if (w1, h1) != (w2, h2) {
        return Err(Error::DimensionMismatch(w1, h1, w2, h2));
    }
    Ok(())
}

/// Accuracy, sensitivity and specificity. A score whose denominator is zero
/// is reported as `None` rather than NaN.
pub fn acc_sen_spe(c: &ConfusionCounts) -> (Option<f64>, Option<f64>, Option<f64>) {
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let acc = ratio(c.tp + c.tn, c.total());
    let sen = ratio(c.tp, c.tp + c.fn_);
    let spe = ratio(c.tn, c.tn + c.fp);
    (acc, sen, spe)
}

/// Area under the ROC curve, computed by a trapezoidal sweep over all
/// distinct score thresholds. Equals the pairwise rank statistic with ties
/// counted as one half.
pub fn auc(
    prob: &ProbabilityMap,
    truth: &BinaryMask,
    region: Option<&BinaryMask>,
) -> Result<f64> {
    check_dims(prob.width(), prob.height(), truth.width(), truth.height())?;
    if let Some(r) = region {
        check_dims(prob.width(), prob.height(), r.width(), r.height())?;
    }
    let mut scored: Vec<(f64, bool)> = Vec::new();
    for i in 0..prob.values().len() {
        if let Some(r) = region {
            if !r.values()[i] {
                continue;
            }
        }
        scored.push((prob.values()[i], truth.values()[i]));
    }
    let positives = scored.iter().filter(|&&(_, t)| t).count() as f64;
    let negatives = scored.len() as f64 - positives;
    if positives == 0.0 || negatives == 0.0 {
        return Err(Error::MetricUndefined(
            "AUC needs at least one positive and one negative pixel".into(),
        ));
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("probabilities are not NaN"));

    // Sweep thresholds from high to low; pixels tied on score enter together.
    let mut area = 0.0;
    let (mut tp, mut fp) = (0.0f64, 0.0f64);
    let (mut prev_tpr, mut prev_fpr) = (0.0f64, 0.0f64);
    let mut i = 0;
    while i < scored.len() {
        let score = scored[i].0;
        while i < scored.len() && scored[i].0 == score {
            if scored[i].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let tpr = tp / positives;
        let fpr = fp / negatives;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Ok(area)
}

/// Pixel error of one reconnection ROI: the stamped pixels split into hits
/// and misses against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiErrorRecord {
    pub roi_id: u32,
    pub tp: u64,
    pub fp: u64,
}

/// Mean per-ROI false-positive fraction of stamped pixels. An empty record
/// list means no reconnection was attempted and scores 0.
pub fn err_metric(records: &[RoiErrorRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let sum: f64 = records
        .iter()
        .map(|r| r.fp as f64 / (r.tp + r.fp) as f64)
        .sum();
    sum / records.len() as f64
}

/// Otsu threshold over a 256-bin histogram of the map's values, as a value
/// in `[0, 1]`. Binarization rule: foreground iff `value > threshold`.
/// Errors when the map quantizes to fewer than two distinct bins.
pub fn otsu_threshold(prob: &ProbabilityMap) -> Result<f64> {
    let hist = histogram_256(prob);
    let nonzero = hist.iter().filter(|&&h| h > 0).count();
    if nonzero < 2 {
        return Err(Error::MetricUndefined(
            "Otsu needs at least two distinct quantized values".into(),
        ));
    }
    let total: f64 = hist.iter().sum::<u64>() as f64;
    let total_mean: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| i as f64 * h as f64)
        .sum::<f64>()
        / total;

    let mut best_t = 0usize;
    let mut best_var = f64::NEG_INFINITY;
    let (mut w0, mut sum0) = (0.0f64, 0.0f64);
    for (t, &h) in hist.iter().enumerate().take(255) {
        w0 += h as f64;
        sum0 += t as f64 * h as f64;
        if w0 == 0.0 || w0 == total {
            continue;
        }
        let w1 = total - w0;
        let mu0 = sum0 / w0;
        let mu1 = (total_mean * total - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best_var {
            best_var = between;
            best_t = t;
        }
    }
    // Upper edge of the argmax bin, so `value > threshold` assigns every
    // value quantizing into bins 0..=best_t to the background class.
    Ok((best_t as f64 + 0.5) / 255.0)
}

/// Binarizes a probability map at `threshold` (foreground iff strictly
/// greater).
pub fn binarize(prob: &ProbabilityMap, threshold: f64) -> BinaryMask {
    let values = prob.values().iter().map(|&v| v > threshold).collect();
    BinaryMask::new(prob.width(), prob.height(), values).expect("same dimensions")
}

pub(crate) fn histogram_256(prob: &ProbabilityMap) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in prob.values() {
        let bin = ((v * 255.0).round() as usize).min(255);
        hist[bin] += 1;
    }
    hist
}

/// Full evaluation of a prediction against ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionCounts,
    pub acc: Option<f64>,
    pub sen: Option<f64>,
    pub spe: Option<f64>,
    pub auc: Option<f64>,
    pub err: Option<f64>,
    pub rois: Vec<RoiErrorRecord>,
}

impl EvalReport {
    /// Scores `pred` against `truth`; AUC when a probability map is supplied,
    /// Err when per-ROI records are supplied.
    pub fn compute(
        pred: &BinaryMask,
        truth: &BinaryMask,
        prob: Option<&ProbabilityMap>,
        rois: Vec<RoiErrorRecord>,
        region: Option<&BinaryMask>,
    ) -> Result<EvalReport> {
        let confusion = confusion(pred, truth, region)?;
        let (acc, sen, spe) = acc_sen_spe(&confusion);
        let auc_score = match prob {
            Some(p) => Some(auc(p, truth, region)?),
            None => None,
        };
        let err = (!rois.is_empty() || prob.is_none()).then(|| err_metric(&rois));
        Ok(EvalReport { confusion, acc, sen, spe, auc: auc_score, err, rois })
    }
}

/// Builds per-ROI error records from stamped pixel sets and the ground
/// truth. ROIs with no stamped pixels contribute no record.
pub fn roi_error_records(
    stamped_per_roi: &[(u32, Vec<Pixel>)],
    truth: &BinaryMask,
) -> Vec<RoiErrorRecord> {
    stamped_per_roi
        .iter()
        .filter(|(_, pixels)| !pixels.is_empty())
        .map(|(roi_id, pixels)| {
            let tp = pixels.iter().filter(|&&p| truth.contains(p) && truth.get(p)).count() as u64;
            RoiErrorRecord { roi_id: *roi_id, tp, fp: pixels.len() as u64 - tp }
        })
        .collect()
}
