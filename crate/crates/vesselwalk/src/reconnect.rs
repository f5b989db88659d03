//! Probability-regularized walk engine: fracture-pair detection, guidance
//! curve fitting, greedy walkers, and mask stamping.
//!
//! The walk is fully deterministic: a greedy argmax over the 8-neighborhood
//! with a fixed tie-break ordering, a visited set, and a strict
//! score-progress rule that halts walkers stuck on flat score plateaus.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::components::{
    component_index, label_components, skeletonize, ComponentIndex, Connectivity, LabelMap,
};
use crate::grid::{euclidean_distance, BinaryMask, Pixel, ProbabilityMap, Roi};
use crate::{Error, Result};

/// Fixed evaluation order of the 8-neighborhood of `(x, y)`; doubles as the
/// tie-break order when two candidates score equally.
pub const NEIGHBOR_ORDER: [(i32, i32); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Hyperparameters governing walkers and region-of-interest construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Trade-off between geometric attraction and the probability map;
    /// a candidate step scores `alpha * P_d + (1 - alpha) * P_nn`.
    pub alpha: f64,
    /// Side length `l` of the square region of interest, in pixels; fracture
    /// pairs farther apart than this are skipped.
    pub roi_side: u32,
    /// Confidence floor: a walker aborts when every admissible neighbor falls
    /// below this probability.
    pub eps_nn: f64,
    /// Per-walker step budget; `None` means `roi_side * roi_side`.
    pub max_steps: Option<usize>,
    /// Reserved for future stochastic variants; the walk itself is
    /// deterministic.
    pub rng_seed: u64,
    /// Additionally launch a reverse walker from the target point back toward
    /// the fragment.
    pub walk_from_trunk: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            alpha: 0.2,
            roi_side: 100,
            eps_nn: 0.1,
            max_steps: None,
            rng_seed: 0,
            walk_from_trunk: false,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!("alpha must be in [0,1]: {}", self.alpha)));
        }
        if self.roi_side == 0 {
            return Err(Error::InvalidArgument("roi_side must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.eps_nn) {
            return Err(Error::InvalidArgument(format!(
                "eps_nn must be in [0,1]: {}",
                self.eps_nn
            )));
        }
        if self.max_steps == Some(0) {
            return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Effective per-walker step budget.
    pub fn step_budget(&self) -> usize {
        self.max_steps.unwrap_or(self.roi_side as usize * self.roi_side as usize)
    }
}

/// Closest centerline pixels between one fragment and the trunk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracturePair {
    pub fragment_label: u32,
    /// Fragment-side endpoint.
    pub a: Pixel,
    /// Trunk-side endpoint.
    pub b: Pixel,
    pub d_ab: f64,
    /// Rounded midpoint of `a` and `b`; the ROI is centered here.
    pub m: Pixel,
}

/// Orientation of the quadratic guidance fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitAxis {
    /// `y = a x^2 + b x + c`
    YOfX,
    /// `x = a y^2 + b y + c`
    XOfY,
}

/// Least-squares quadratic guidance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parabola {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub axis: FitAxis,
}

impl Parabola {
    /// Dependent coordinate at independent coordinate `t`.
    pub fn eval(&self, t: f64) -> f64 {
        (self.a * t + self.b) * t + self.c
    }
}

/// How a single walker terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkStatus {
    /// Reached the target or any trunk pixel.
    Connected,
    /// Every admissible neighbor fell below the confidence floor.
    AbortedLowProbability,
    /// Step budget exhausted.
    AbortedStepBudget,
    /// No admissible neighbor remained (all visited, blocked, or outside the
    /// region of interest).
    AbortedLeftRoi,
    /// The best step would not improve on the previous one; the walker is not
    /// driven anywhere and stops instead of drifting along tie-break order.
    NoEscape,
}

/// Result of a single walker run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkOutcome {
    pub status: WalkStatus,
    /// Pixels stepped on, in order, seed excluded; on connection the final
    /// entry is the trunk pixel reached.
    pub path: Vec<Pixel>,
    pub target: Pixel,
}

/// Closest pair between two nonempty centerline pixel sets, brute force over
/// the full cross product. Ties break lexicographically on
/// `(a.y, a.x, b.y, b.x)`.
pub fn nearest_pair(
    fragment_centerline: &[Pixel],
    trunk_centerline: &[Pixel],
    fragment_label: u32,
) -> Result<FracturePair> {
    if fragment_centerline.is_empty() || trunk_centerline.is_empty() {
        return Err(Error::InvalidArgument("nearest_pair requires nonempty pixel lists".into()));
    }
    let mut best: Option<(i64, Pixel, Pixel)> = None;
    for &a in fragment_centerline {
        for &b in trunk_centerline {
            let (dx, dy) = (i64::from(a.x - b.x), i64::from(a.y - b.y));
            let d2 = dx * dx + dy * dy;
            let key = (d2, a.y, a.x, b.y, b.x);
            if best.is_none_or(|(bd2, ba, bb)| key < (bd2, ba.y, ba.x, bb.y, bb.x)) {
                best = Some((d2, a, b));
            }
        }
    }
    let (d2, a, b) = best.expect("nonempty inputs");
    Ok(FracturePair {
        fragment_label,
        a,
        b,
        d_ab: (d2 as f64).sqrt(),
        m: Pixel::new(
            (f64::from(a.x + b.x) / 2.0).round() as i32,
            (f64::from(a.y + b.y) / 2.0).round() as i32,
        ),
    })
}

/// Region of interest for a fracture pair, or `None` when the endpoints are
/// farther apart than `roi_side` and the fragment is skipped.
pub fn roi_of(pair: &FracturePair, roi_side: u32, width: usize, height: usize) -> Option<Roi> {
    if pair.d_ab > f64::from(roi_side) {
        return None;
    }
    Some(Roi::centered(pair.m, roi_side, width, height))
}

/// Least-squares quadratic through `points`. Both orientations are fitted
/// where well-posed (three or more distinct independent coordinates) and the
/// one with the smaller squared residual wins, so a near-vertical fragment
/// transposes to `x = f(y)` while the default stays `y = f(x)`; ties keep the
/// `y = f(x)` form. Neither orientation being well-posed is a fit error.
pub fn fit_parabola(points: &[Pixel]) -> Result<Parabola> {
    if points.len() < 3 {
        return Err(Error::FitFailed(format!("need at least 3 points, got {}", points.len())));
    }
    let y_of_x = fit_one_axis(points, FitAxis::YOfX);
    let x_of_y = fit_one_axis(points, FitAxis::XOfY);
    match (y_of_x, x_of_y) {
        (Ok((fit_yx, rss_yx)), Ok((fit_xy, rss_xy))) => {
            // A small margin keeps rounding noise from flipping an exact fit
            // away from the default orientation.
            if rss_xy < rss_yx - 1e-9 * (1.0 + rss_yx) {
                Ok(fit_xy)
            } else {
                Ok(fit_yx)
            }
        }
        (Ok((fit, _)), Err(_)) | (Err(_), Ok((fit, _))) => Ok(fit),
        (Err(e), Err(_)) => Err(e),
    }
}

fn fit_one_axis(points: &[Pixel], axis: FitAxis) -> Result<(Parabola, f64)> {
    let (ts, vs): (Vec<f64>, Vec<f64>) = points
        .iter()
        .map(|p| match axis {
            FitAxis::YOfX => (f64::from(p.x), f64::from(p.y)),
            FitAxis::XOfY => (f64::from(p.y), f64::from(p.x)),
        })
        .unzip();
    let distinct: HashSet<u64> = ts.iter().map(|t| t.to_bits()).collect();
    if distinct.len() < 3 {
        return Err(Error::FitFailed("fewer than 3 distinct independent coordinates".into()));
    }

    let design = nalgebra::DMatrix::from_fn(ts.len(), 3, |i, j| match j {
        0 => ts[i] * ts[i],
        1 => ts[i],
        _ => 1.0,
    });
    let rhs = nalgebra::DVector::from_vec(vs.clone());
    let coeffs = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::FitFailed(e.to_string()))?;
    let (a, b, c) = (coeffs[0], coeffs[1], coeffs[2]);
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::FitFailed("non-finite coefficients".into()));
    }
    let rss: f64 = ts
        .iter()
        .zip(&vs)
        .map(|(&t, &v)| {
            let r = v - (a * t * t + b * t + c);
            r * r
        })
        .sum();
    Ok((Parabola { a, b, c, axis }, rss))
}

/// Trunk pixel inside the ROI closest to the curve, measured along the
/// curve's dependent axis. Candidates farther than `max_dist` from the
/// fracture midpoint `m` are ignored: the quadratic is fit to the fragment
/// alone, so far from the fracture its extrapolation says nothing and a
/// large ROI would otherwise elect a distant trunk pixel the curve merely
/// grazes. Candidates must also lie within [`CURVE_TRUST_BAND`] pixels of
/// the curve — a short, thin fragment easily overfits its quadratic term,
/// and once the extrapolation misses the trunk by more than a band width
/// the fit carries no information and the caller should fall back to the
/// nearest-pair endpoint. Survivors score `|residual| + dist(p, m) / 10`:
/// the fit earns roughly a pixel of slack per ten pixels of extrapolation
/// range, so a distant graze cannot beat a nearby, slightly imperfect
/// continuation. Ties break lexicographically on `(y, x)`.
pub fn target_point(
    curve: &Parabola,
    trunk: &[Pixel],
    roi: &Roi,
    m: Pixel,
    max_dist: f64,
) -> Result<Pixel> {
    let residual_of = |p: Pixel| {
        match curve.axis {
            FitAxis::YOfX => f64::from(p.y) - curve.eval(f64::from(p.x)),
            FitAxis::XOfY => f64::from(p.x) - curve.eval(f64::from(p.y)),
        }
        .abs()
    };
    trunk
        .iter()
        .copied()
        .filter(|&p| {
            roi.contains(p)
                && euclidean_distance(p, m) <= max_dist
                && residual_of(p) <= CURVE_TRUST_BAND
        })
        .min_by_key(|&p| {
            let score = residual_of(p) + euclidean_distance(p, m) / 10.0;
            (ordered(score), p.y, p.x)
        })
        .ok_or_else(|| Error::NoTarget("no trunk pixel near the fitted curve".into()))
}

/// Maximum pixels a usable target may sit off the fitted curve.
pub const CURVE_TRUST_BAND: f64 = 5.0;

fn ordered(v: f64) -> u64 {
    debug_assert!(!v.is_nan());
    v.to_bits()
}

/// Geometric attraction of a candidate step: the reciprocal distance to the
/// target. `None` signals arrival (candidate == target).
pub fn direction_prob(candidate: Pixel, c: Pixel) -> Option<f64> {
    if candidate == c {
        None
    } else {
        Some(1.0 / euclidean_distance(candidate, c))
    }
}

/// Blended step score `alpha * P_d + (1 - alpha) * pnn`; `None` signals
/// arrival.
pub fn step_prob(candidate: Pixel, c: Pixel, pnn: f64, alpha: f64) -> Option<f64> {
    direction_prob(candidate, c).map(|pd| alpha * pd + (1.0 - alpha) * pnn)
}

struct GuidedWalk<'a> {
    target: Pixel,
    prob: &'a ProbabilityMap,
    roi: Roi,
    cfg: &'a WalkConfig,
    /// Score by geometry alone and skip the confidence-floor abort.
    geometry_only: bool,
}

impl GuidedWalk<'_> {
    fn run(
        &self,
        seed: Pixel,
        arrive: &dyn Fn(Pixel) -> bool,
        blocked: &dyn Fn(Pixel) -> bool,
    ) -> WalkOutcome {
        let budget = self.cfg.step_budget();
        let mut visited: HashSet<Pixel> = HashSet::new();
        visited.insert(seed);
        let mut path: Vec<Pixel> = Vec::new();
        let mut current = seed;
        let mut prev_score: Option<f64> = None;

        loop {
            let mut candidates: Vec<Pixel> = Vec::with_capacity(8);
            let mut arrival: Option<(Pixel, f64)> = None;
            for (dx, dy) in NEIGHBOR_ORDER {
                let q = Pixel::new(current.x + dx, current.y + dy);
                if !self.roi.contains(q) || visited.contains(&q) || blocked(q) {
                    continue;
                }
                if q == self.target || arrive(q) {
                    // Several trunk pixels may come into view at once; land on
                    // the one closest to the target so the junction stays on
                    // the vessel's spine rather than its edge.
                    let pull = direction_prob(q, self.target).unwrap_or(f64::INFINITY);
                    if arrival.is_none_or(|(_, best)| pull > best) {
                        arrival = Some((q, pull));
                    }
                    continue;
                }
                candidates.push(q);
            }
            if let Some((q, _)) = arrival {
                path.push(q);
                return WalkOutcome { status: WalkStatus::Connected, path, target: self.target };
            }
            if candidates.is_empty() {
                return WalkOutcome { status: WalkStatus::AbortedLeftRoi, path, target: self.target };
            }
            if !self.geometry_only && candidates.iter().all(|&q| self.prob.get(q) < self.cfg.eps_nn)
            {
                return WalkOutcome {
                    status: WalkStatus::AbortedLowProbability,
                    path,
                    target: self.target,
                };
            }
            if path.len() >= budget {
                return WalkOutcome {
                    status: WalkStatus::AbortedStepBudget,
                    path,
                    target: self.target,
                };
            }

            let mut best: Option<(Pixel, f64)> = None;
            for &q in &candidates {
                let pd = direction_prob(q, self.target).expect("arrival handled above");
                let score = if self.geometry_only {
                    pd
                } else {
                    self.cfg.alpha * pd + (1.0 - self.cfg.alpha) * self.prob.get(q)
                };
                // strict >, so earlier candidates win ties per NEIGHBOR_ORDER
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((q, score));
                }
            }
            let (next, score) = best.expect("candidates nonempty");
            // The first step is free; after that a step must strictly improve,
            // otherwise nothing is actually pulling the walker forward and a
            // greedy argmax would wander the plateau in tie-break order.
            if let Some(prev) = prev_score {
                if score <= prev {
                    return WalkOutcome { status: WalkStatus::NoEscape, path, target: self.target };
                }
            }
            prev_score = Some(score);
            visited.insert(next);
            path.push(next);
            current = next;
        }
    }
}

/// Runs one walker from `seed` toward `c`, greedily stepping to the admissible
/// 8-neighbor with the highest blended score.
pub fn walk(seed: Pixel, c: Pixel, prob: &ProbabilityMap, roi: &Roi, cfg: &WalkConfig) -> WalkOutcome {
    let walker = GuidedWalk { target: c, prob, roi: *roi, cfg, geometry_only: false };
    walker.run(seed, &|_| false, &|_| false)
}

/// Outcome of one fragment's reconnection attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiStatus {
    Connected,
    /// The fracture endpoints are farther apart than the ROI side; no walk
    /// was attempted.
    SkippedTooFar,
    AbortedLowProbability,
    AbortedStepBudget,
    AbortedLeftRoi,
    NoEscape,
}

/// Per-fragment reconnection record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiRecord {
    pub fragment_label: u32,
    pub a: Pixel,
    pub b: Pixel,
    pub d_ab: f64,
    pub status: RoiStatus,
    /// Longest walker path: among connected walkers when any connected,
    /// otherwise among all.
    pub path_length: usize,
    pub stamped_pixel_count: usize,
    /// Union of the 3x3 stamps of every connected walker path, sorted.
    pub stamped_pixels: Vec<Pixel>,
}

/// Whole-image reconnection summary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReconnectReport {
    pub attempted: usize,
    pub connected: usize,
    pub skipped: usize,
    pub stamped_total: usize,
    pub records: Vec<RoiRecord>,
}

impl ReconnectReport {
    fn from_records(records: Vec<RoiRecord>) -> Self {
        ReconnectReport {
            attempted: records.len(),
            connected: records.iter().filter(|r| r.status == RoiStatus::Connected).count(),
            skipped: records.iter().filter(|r| r.status == RoiStatus::SkippedTooFar).count(),
            stamped_total: records.iter().map(|r| r.stamped_pixel_count).sum(),
            records,
        }
    }
}

fn centerline_of(label: u32, labels: &LabelMap, index: &ComponentIndex, skeleton: &BinaryMask) -> Vec<Pixel> {
    let pts: Vec<Pixel> =
        skeleton.foreground_pixels().filter(|&p| labels.get(p) == label).collect();
    if pts.is_empty() {
        // thinning can consume tiny blobs entirely; fall back to the full set
        index.pixels_of(label).to_vec()
    } else {
        pts
    }
}

fn stamp_path(path: &[Pixel], roi: &Roi, into: &mut BTreeSet<Pixel>) {
    for &p in path {
        for dy in -1..=1 {
            for dx in -1..=1 {
                let q = Pixel::new(p.x + dx, p.y + dy);
                if roi.contains(q) {
                    into.insert(q);
                }
            }
        }
    }
}

fn aggregate_status(outcomes: &[WalkOutcome]) -> RoiStatus {
    let any = |s: WalkStatus| outcomes.iter().any(|o| o.status == s);
    if any(WalkStatus::Connected) {
        RoiStatus::Connected
    } else if any(WalkStatus::AbortedLowProbability) {
        RoiStatus::AbortedLowProbability
    } else if any(WalkStatus::NoEscape) {
        RoiStatus::NoEscape
    } else if any(WalkStatus::AbortedStepBudget) {
        RoiStatus::AbortedStepBudget
    } else {
        RoiStatus::AbortedLeftRoi
    }
}

#[allow(clippy::too_many_arguments)]
fn attempt_fragment(
    mask: &BinaryMask,
    labels: &LabelMap,
    index: &ComponentIndex,
    skeleton: &BinaryMask,
    fragment_label: u32,
    trunk_label: u32,
    prob: &ProbabilityMap,
    cfg: &WalkConfig,
    geometry_only: bool,
) -> Result<RoiRecord> {
    let fragment_pixels = index.pixels_of(fragment_label);
    let pair = nearest_pair(
        &centerline_of(fragment_label, labels, index, skeleton),
        &centerline_of(trunk_label, labels, index, skeleton),
        fragment_label,
    )?;
    let Some(roi) = roi_of(&pair, cfg.roi_side, mask.width(), mask.height()) else {
        return Ok(RoiRecord {
            fragment_label,
            a: pair.a,
            b: pair.b,
            d_ab: pair.d_ab,
            status: RoiStatus::SkippedTooFar,
            path_length: 0,
            stamped_pixel_count: 0,
            stamped_pixels: Vec::new(),
        });
    };

    let mut trunk_in_roi: Vec<Pixel> = Vec::new();
    for y in roi.min_y..=roi.max_y {
        for x in roi.min_x..=roi.max_x {
            let p = Pixel::new(x, y);
            if labels.get(p) == trunk_label {
                trunk_in_roi.push(p);
            }
        }
    }
    let c = fit_parabola(fragment_pixels)
        .ok()
        .and_then(|curve| {
            target_point(&curve, &trunk_in_roi, &roi, pair.m, (3.0 * pair.d_ab).max(20.0)).ok()
        })
        .unwrap_or(pair.b);

    let is_trunk = |p: Pixel| labels.get(p) == trunk_label;
    let is_fragment = |p: Pixel| labels.get(p) == fragment_label;
    let walker = GuidedWalk { target: c, prob, roi, cfg, geometry_only };

    let mut outcomes: Vec<WalkOutcome> = Vec::new();
    let mut stamped: BTreeSet<Pixel> = BTreeSet::new();
    for &seed in fragment_pixels.iter().filter(|&&p| roi.contains(p)) {
        let outcome = walker.run(seed, &is_trunk, &is_fragment);
        if outcome.status == WalkStatus::Connected {
            stamp_path(&outcome.path, &roi, &mut stamped);
        }
        outcomes.push(outcome);
    }
    if cfg.walk_from_trunk && is_trunk(c) {
        let reverse = GuidedWalk { target: pair.a, prob, roi, cfg, geometry_only };
        let outcome = reverse.run(c, &is_fragment, &is_trunk);
        if outcome.status == WalkStatus::Connected {
            stamp_path(&outcome.path, &roi, &mut stamped);
        }
        outcomes.push(outcome);
    }

    let status = aggregate_status(&outcomes);
    let path_length = if status == RoiStatus::Connected {
        outcomes
            .iter()
            .filter(|o| o.status == WalkStatus::Connected)
            .map(|o| o.path.len())
            .max()
            .unwrap_or(0)
    } else {
        outcomes.iter().map(|o| o.path.len()).max().unwrap_or(0)
    };
    let stamped_pixels: Vec<Pixel> =
        if status == RoiStatus::Connected { stamped.into_iter().collect() } else { Vec::new() };
    Ok(RoiRecord {
        fragment_label,
        a: pair.a,
        b: pair.b,
        d_ab: pair.d_ab,
        status,
        path_length,
        stamped_pixel_count: stamped_pixels.len(),
        stamped_pixels,
    })
}

/// Attempts to reconnect one fragment to the largest component. Returns the
/// updated mask (a superset of the input; unchanged unless a walker connected)
/// and the attempt record.
pub fn reconnect_fragment(
    fragment_label: u32,
    labels: &LabelMap,
    index: &ComponentIndex,
    prob: &ProbabilityMap,
    mask: &BinaryMask,
    cfg: &WalkConfig,
) -> Result<(BinaryMask, RoiRecord)> {
    cfg.validate()?;
    let trunk = index
        .largest()
        .ok_or_else(|| Error::InvalidArgument("mask has no foreground components".into()))?;
    if fragment_label == trunk {
        return Err(Error::InvalidArgument(format!(
            "label {fragment_label} is the trunk, not a fragment"
        )));
    }
    let skeleton = skeletonize(mask);
    let record =
        attempt_fragment(mask, labels, index, &skeleton, fragment_label, trunk, prob, cfg, false)?;
    let updated = mask.with_pixels_set(&record.stamped_pixels);
    Ok((updated, record))
}

fn run_pipeline(
    mask: &BinaryMask,
    prob: &ProbabilityMap,
    cfg: &WalkConfig,
    geometry_only: bool,
) -> Result<(BinaryMask, ReconnectReport)> {
    if mask.width() != prob.width() || mask.height() != prob.height() {
        return Err(Error::DimensionMismatch(mask.width(), mask.height(), prob.width(), prob.height()));
    }
    cfg.validate()?;

    let mut mask = mask.clone();
    let mut records: Vec<RoiRecord> = Vec::new();
    // Fragments whose failure cannot be cured by trunk growth, keyed by their
    // first (raster-order) pixel; only distance skips are ever retried.
    let mut final_failures: HashSet<Pixel> = HashSet::new();

    'relabel: loop {
        let labels = label_components(&mask, Connectivity::Eight);
        if labels.count() <= 1 {
            break;
        }
        let index = component_index(&labels);
        let trunk = index.largest().expect("count >= 2");
        let skeleton = skeletonize(&mask);

        // Nearest fragment first: a chain of fragments then joins inside-out,
        // so an outer piece is never walked across the still-missing piece
        // between it and the trunk.
        let trunk_centerline = centerline_of(trunk, &labels, &index, &skeleton);
        let mut order: Vec<(u64, u32)> = Vec::new();
        for fragment in index.labels_by_size_desc().into_iter().filter(|&l| l != trunk) {
            if final_failures.contains(&index.pixels_of(fragment)[0]) {
                continue;
            }
            let pair = nearest_pair(
                &centerline_of(fragment, &labels, &index, &skeleton),
                &trunk_centerline,
                fragment,
            )?;
            order.push((ordered(pair.d_ab), fragment));
        }
        order.sort_unstable();

        for (_, fragment) in order {
            let key = index.pixels_of(fragment)[0];
            let record = attempt_fragment(
                &mask, &labels, &index, &skeleton, fragment, trunk, prob, cfg, geometry_only,
            )?;
            let connected = record.status == RoiStatus::Connected;
            if connected {
                mask = mask.with_pixels_set(&record.stamped_pixels);
                records.push(record);
                // relabel so the trunk absorbs the joined fragment before the
                // next attempt; chains then connect through each other
                continue 'relabel;
            }
            if record.status != RoiStatus::SkippedTooFar {
                final_failures.insert(key);
            }
            records.push(record);
        }
        break; // a full sweep without a connection: nothing more to do
    }

    Ok((mask, ReconnectReport::from_records(records)))
}

/// Full probability-regularized reconnection: labels the mask, attempts
/// fragments nearest-to-trunk first, and stamps connected walker paths.
pub fn prw(
    mask: &BinaryMask,
    prob: &ProbabilityMap,
    cfg: &WalkConfig,
) -> Result<(BinaryMask, ReconnectReport)> {
    run_pipeline(mask, prob, cfg, false)
}

/// Geometry-only comparison baseline: the identical pipeline with the step
/// score reduced to the distance term, ignoring the probability map (and its
/// confidence-floor abort) entirely.
pub fn directional_walk_baseline(
    mask: &BinaryMask,
    prob: &ProbabilityMap,
    cfg: &WalkConfig,
) -> Result<(BinaryMask, ReconnectReport)> {
    run_pipeline(mask, prob, cfg, true)
}
