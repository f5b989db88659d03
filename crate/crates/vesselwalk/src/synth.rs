//! Seeded synthetic vessel fixtures: ground-truth masks, fracture-injected
//! masks, and simulated probability maps.
//!
//! All three generators are pure functions of the config. Each draws from its
//! own ChaCha stream derived from `rng_seed`, so e.g. the noise field does not
//! depend on how many gap placements were rejected. The seed-to-output mapping
//! is stable within a release.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::components::{label_components, Connectivity};
use crate::grid::{BinaryMask, Pixel, ProbabilityMap};
use crate::{Error, Result};

const STREAM_SCENE: u64 = 1;
const STREAM_GAPS: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Probability assigned to surviving vessel pixels before blur.
pub const VESSEL_PROB: f64 = 0.9;

/// Fixture parameters; see the field docs for the roles of the knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub rng_seed: u64,
    /// Square image side in pixels.
    pub image_side: usize,
    /// Number of vessel strokes; the first is a horizontal trunk, the rest
    /// cross it vertically so the truth is a single component.
    pub branch_count: u32,
    /// Stroke thickness in pixels.
    pub vessel_width: u32,
    /// Number of fractures carved out of the truth.
    pub gap_count: u32,
    /// Length of each fracture along the stroke, in pixels.
    pub gap_length: u32,
    /// Probability along the true centerline inside gaps: high enough for a
    /// walker to proceed, low enough that plain binarization discards it.
    pub ridge_prob: f64,
    /// Background noise ceiling; values are uniform in `[0, noise_amplitude]`.
    pub noise_amplitude: f64,
    /// Box-blur radius applied to the finished map; 0 disables.
    pub blur_radius: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rng_seed: 1,
            image_side: 160,
            branch_count: 3,
            vessel_width: 3,
            gap_count: 3,
            gap_length: 20,
            ridge_prob: 0.35,
            noise_amplitude: 0.05,
            blur_radius: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_side < 32 {
            return Err(Error::SynthConfig(format!("image_side {} too small", self.image_side)));
        }
        if self.branch_count == 0 {
            return Err(Error::SynthConfig("branch_count must be at least 1".into()));
        }
        if self.vessel_width == 0 || self.vessel_width as usize >= self.image_side / 4 {
            return Err(Error::SynthConfig(format!("vessel_width {} unusable", self.vessel_width)));
        }
        if self.gap_length == 0 || self.gap_length as usize >= self.image_side {
            return Err(Error::SynthConfig(format!(
                "gap_length {} must be in [1, image_side)",
                self.gap_length
            )));
        }
        if !(0.0..=1.0).contains(&self.ridge_prob) || self.ridge_prob == 0.0 {
            return Err(Error::SynthConfig(format!("ridge_prob {} out of range", self.ridge_prob)));
        }
        if !(0.0..=1.0).contains(&self.noise_amplitude) {
            return Err(Error::SynthConfig(format!(
                "noise_amplitude {} out of range",
                self.noise_amplitude
            )));
        }
        Ok(())
    }
}

/// One injected fracture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRecord {
    pub id: u32,
    /// Centerline pixels bounding the gap on either side (still foreground).
    pub endpoints: (Pixel, Pixel),
    /// Ground-truth pixels deleted from the mask, sorted raster order.
    pub removed: Vec<Pixel>,
    /// The removed centerline run; these are the ridge pixels of the
    /// simulated probability map.
    pub removed_centerline: Vec<Pixel>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A quadratic stroke rasterized as one centerline pixel per step of the
/// independent coordinate.
struct Stroke {
    centerline: Vec<Pixel>,
    /// Image side length, for clipping band squares at the stroke's ends.
    side: i32,
}

impl Stroke {
    /// Band pixels at centerline index `i`: the `width`-by-`width` square
    /// around the centerline pixel, clipped to the image. Matching the
    /// walkers' square stamp keeps an ideal reconnection inside the band
    /// even across diagonal centerline steps.
    fn band_at(&self, i: usize, width: u32) -> Vec<Pixel> {
        let lo = (width as i32 - 1) / 2;
        let hi = width as i32 / 2;
        let c = self.centerline[i];
        let mut out = Vec::with_capacity((width * width) as usize);
        for dy in -lo..=hi {
            for dx in -lo..=hi {
                let p = Pixel::new(c.x + dx, c.y + dy);
                if p.x >= 0 && p.y >= 0 && p.x < self.side && p.y < self.side {
                    out.push(p);
                }
            }
        }
        out
    }

    fn band(&self, width: u32) -> Vec<Pixel> {
        (0..self.centerline.len()).flat_map(|i| self.band_at(i, width)).collect()
    }
}

struct Scene {
    strokes: Vec<Stroke>,
}

/// Deterministic stroke layout for a config: a gently curved horizontal trunk
/// plus `branch_count - 1` vertical quadratics anchored exactly on trunk
/// centerline pixels, so the union is always one 8-connected component.
fn build_scene(cfg: &SynthConfig) -> Scene {
    let side = cfg.image_side as i32;
    let s = cfg.image_side as f64;
    let mut rng = stream_rng(cfg.rng_seed, STREAM_SCENE);

    // dependent coordinates are clamped so the full band stays in-image
    let lo = (cfg.vessel_width as i32 - 1) / 2;
    let hi = cfg.vessel_width as i32 / 2;
    let clamp = |v: f64| -> i32 { (v.round() as i32).clamp(lo, side - 1 - hi) };

    let cy = s * rng.gen_range(0.38..0.62);
    let b = rng.gen_range(-0.35..0.35);
    let a = rng.gen_range(-0.2..0.2) / s;
    let cx0 = s / 2.0;
    let trunk: Vec<Pixel> = (0..side)
        .map(|x| {
            let t = f64::from(x) - cx0;
            Pixel::new(x, clamp(cy + b * t + a * t * t))
        })
        .collect();

    let mut strokes = vec![Stroke { centerline: trunk, side }];
    for i in 1..cfg.branch_count {
        let frac =
            (f64::from(i) - 1.0 + rng.gen_range(0.2..0.8)) / f64::from(cfg.branch_count - 1);
        let xa = ((s * (0.15 + 0.7 * frac)).round() as i32).clamp(0, side - 1);
        let ya = f64::from(strokes[0].centerline[xa as usize].y);
        let b = rng.gen_range(-0.3..0.3);
        let a = rng.gen_range(-0.15..0.15) / s;
        let centerline: Vec<Pixel> = (0..side)
            .map(|y| {
                let t = f64::from(y) - ya;
                Pixel::new(clamp(f64::from(xa) + b * t + a * t * t), y)
            })
            .collect();
        strokes.push(Stroke { centerline, side });
    }
    Scene { strokes }
}

/// Deterministic ground-truth vessel mask: one 8-connected tree of
/// `branch_count` quadratic strokes of `vessel_width`.
pub fn gen_ground_truth(cfg: &SynthConfig) -> Result<BinaryMask> {
    cfg.validate()?;
    let scene = build_scene(cfg);
    let mut values = vec![false; cfg.image_side * cfg.image_side];
    for stroke in &scene.strokes {
        for p in stroke.band(cfg.vessel_width) {
            values[p.y as usize * cfg.image_side + p.x as usize] = true;
        }
    }
    BinaryMask::new(cfg.image_side, cfg.image_side, values)
}

/// Carves `gap_count` fractures out of `truth`. Each accepted gap removes a
/// `gap_length` run of one stroke's band (sparing pixels shared with other
/// strokes) and must split exactly one component in two; placements that fail
/// that check — e.g. windows covering a crossing — are redrawn.
pub fn inject_gaps(truth: &BinaryMask, cfg: &SynthConfig) -> Result<(BinaryMask, Vec<GapRecord>)> {
    cfg.validate()?;
    if truth.count_foreground() == 0 {
        return Err(Error::InvalidArgument("truth mask is empty".into()));
    }
    if cfg.gap_count == 0 {
        return Ok((truth.clone(), Vec::new()));
    }

    let scene = build_scene(cfg);
    let bands: Vec<HashSet<Pixel>> =
        scene.strokes.iter().map(|s| s.band(cfg.vessel_width).into_iter().collect()).collect();
    let mut rng = stream_rng(cfg.rng_seed, STREAM_GAPS);
    let mut broken = truth.clone();
    let mut gaps: Vec<GapRecord> = Vec::new();
    let margin = cfg.vessel_width as usize + 2;
    let len = cfg.gap_length as usize;

    for id in 0..cfg.gap_count {
        let mut placed = false;
        for _attempt in 0..500 {
            let si = rng.gen_range(0..scene.strokes.len());
            let stroke = &scene.strokes[si];
            if stroke.centerline.len() < len + 2 * margin + 2 {
                continue;
            }
            let t0 = rng.gen_range(margin..stroke.centerline.len() - len - margin);

            let in_other = |p: Pixel| bands.iter().enumerate().any(|(j, b)| j != si && b.contains(&p));
            let mut removed: Vec<Pixel> = Vec::new();
            let mut removed_centerline: Vec<Pixel> = Vec::new();
            for t in t0..t0 + len {
                for p in stroke.band_at(t, cfg.vessel_width) {
                    if broken.get(p) && !in_other(p) {
                        removed.push(p);
                    }
                }
                let c = stroke.centerline[t];
                if broken.get(c) && !in_other(c) {
                    removed_centerline.push(c);
                }
            }
            if removed.is_empty() || removed_centerline.len() < len / 2 {
                continue;
            }

            let mut values = broken.values().to_vec();
            for &p in &removed {
                values[p.y as usize * cfg.image_side + p.x as usize] = false;
            }
            let candidate = BinaryMask::new(cfg.image_side, cfg.image_side, values)?;
            let before = label_components(&broken, Connectivity::Eight).count();
            let after = label_components(&candidate, Connectivity::Eight).count();
            if after != before + 1 {
                continue;
            }

            removed.sort();
            gaps.push(GapRecord {
                id,
                // the square band around a removed index reaches one
                // centerline step past the window, so the surviving stubs
                // start a band-radius further out
                endpoints: (
                    stroke.centerline[t0 - 1 - cfg.vessel_width as usize / 2],
                    stroke.centerline[t0 + len + cfg.vessel_width as usize / 2],
                ),
                removed,
                removed_centerline,
            });
            broken = candidate;
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::SynthConfig(format!(
                "could not place gap {id}: truth too small or too fragmented for \
                 gap_length {} x gap_count {}",
                cfg.gap_length, cfg.gap_count
            )));
        }
    }
    Ok((broken, gaps))
}

/// Simulated network output: surviving vessel pixels score [`VESSEL_PROB`],
/// removed centerline pixels keep a faint `ridge_prob` trace, everything else
/// is background noise; an optional box blur smears the result.
pub fn simulate_probability(
    truth: &BinaryMask,
    broken: &BinaryMask,
    cfg: &SynthConfig,
) -> Result<ProbabilityMap> {
    cfg.validate()?;
    if truth.width() != broken.width() || truth.height() != broken.height() {
        return Err(Error::DimensionMismatch(
            truth.width(),
            truth.height(),
            broken.width(),
            broken.height(),
        ));
    }
    let scene = build_scene(cfg);
    let centerlines: HashSet<Pixel> =
        scene.strokes.iter().flat_map(|s| s.centerline.iter().copied()).collect();

    let mut rng = stream_rng(cfg.rng_seed, STREAM_NOISE);
    let (w, h) = (truth.width(), truth.height());
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let p = Pixel::new(x, y);
            // always draw, so the noise field is independent of the masks
            let noise = rng.gen::<f64>() * cfg.noise_amplitude;
            values.push(if broken.get(p) {
                VESSEL_PROB
            } else if truth.get(p) && centerlines.contains(&p) {
                cfg.ridge_prob
            } else {
                noise
            });
        }
    }
    if cfg.blur_radius > 0 {
        values = box_blur(&values, w, h, cfg.blur_radius as i32);
    }
    for v in &mut values {
        *v = v.clamp(0.0, 1.0);
    }
    ProbabilityMap::new(w, h, values)
}

/// Mean over the in-image `(2r+1)^2` window.
fn box_blur(values: &[f64], w: usize, h: usize, r: i32) -> Vec<f64> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let mut sum = 0.0;
            let mut n = 0u32;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (qx, qy) = (x + dx, y + dy);
                    if qx >= 0 && qy >= 0 && (qx as usize) < w && (qy as usize) < h {
                        sum += values[qy as usize * w + qx as usize];
                        n += 1;
                    }
                }
            }
            out.push(sum / f64::from(n));
        }
    }
    out
}

/// Convenience bundle: truth, broken mask, gap records, and probability map
/// for one config.
pub struct Fixture {
    pub truth: BinaryMask,
    pub broken: BinaryMask,
    pub gaps: Vec<GapRecord>,
    pub prob: ProbabilityMap,
}

/// Generates the full fixture for a config.
pub fn generate_fixture(cfg: &SynthConfig) -> Result<Fixture> {
    let truth = gen_ground_truth(cfg)?;
    let (broken, gaps) = inject_gaps(&truth, cfg)?;
    let prob = simulate_probability(&truth, &broken, cfg)?;
    Ok(Fixture { truth, broken, gaps, prob })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{binarize, otsu_threshold};
    use crate::reconnect::{prw, WalkConfig};
    use proptest::prelude::*;

    fn noiseless(seed: u64) -> SynthConfig {
        SynthConfig { rng_seed: seed, noise_amplitude: 0.0, ..SynthConfig::default() }
    }

    #[test]
    fn ground_truth_deterministic_and_connected() {
        let cfg = SynthConfig::default();
        let a = gen_ground_truth(&cfg).unwrap();
        let b = gen_ground_truth(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(label_components(&a, Connectivity::Eight).count(), 1);
    }

    #[test]
    fn single_thin_branch() {
        let cfg = SynthConfig { branch_count: 1, vessel_width: 1, ..SynthConfig::default() };
        let truth = gen_ground_truth(&cfg).unwrap();
        assert_eq!(label_components(&truth, Connectivity::Eight).count(), 1);
        // one pixel per column
        assert_eq!(truth.count_foreground(), cfg.image_side);
    }

    #[test]
    fn zero_gaps_is_identity() {
        let cfg = SynthConfig { gap_count: 0, ..SynthConfig::default() };
        let truth = gen_ground_truth(&cfg).unwrap();
        let (broken, gaps) = inject_gaps(&truth, &cfg).unwrap();
        assert_eq!(broken, truth);
        assert!(gaps.is_empty());
    }

    #[test]
    fn one_gap_splits_single_curve() {
        let cfg = SynthConfig { branch_count: 1, gap_count: 1, ..SynthConfig::default() };
        let truth = gen_ground_truth(&cfg).unwrap();
        let (broken, gaps) = inject_gaps(&truth, &cfg).unwrap();
        assert_eq!(label_components(&broken, Connectivity::Eight).count(), 2);
        assert_eq!(gaps.len(), 1);
    }

    #[test]
    fn broken_union_removed_is_truth() {
        let cfg = SynthConfig::default();
        let truth = gen_ground_truth(&cfg).unwrap();
        let (broken, gaps) = inject_gaps(&truth, &cfg).unwrap();
        assert_eq!(
            label_components(&broken, Connectivity::Eight).count(),
            cfg.gap_count + 1
        );
        let all_removed: Vec<Pixel> = gaps.iter().flat_map(|g| g.removed.iter().copied()).collect();
        let rebuilt = broken.with_pixels_set(&all_removed);
        assert_eq!(rebuilt, truth);
        for p in &all_removed {
            assert!(truth.get(*p), "removed pixel {p:?} was not truth foreground");
            assert!(!broken.get(*p));
        }
        for g in &gaps {
            assert!(broken.get(g.endpoints.0) && broken.get(g.endpoints.1));
        }
    }

    #[test]
    fn noiseless_map_is_three_valued() {
        let cfg = noiseless(7);
        let truth = gen_ground_truth(&cfg).unwrap();
        let (broken, _) = inject_gaps(&truth, &cfg).unwrap();
        let prob = simulate_probability(&truth, &broken, &cfg).unwrap();
        let mut distinct: Vec<u64> = prob.values().iter().map(|v| v.to_bits()).collect();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(
            distinct,
            vec![0.0f64.to_bits(), cfg.ridge_prob.to_bits(), VESSEL_PROB.to_bits()]
        );
    }

    #[test]
    fn otsu_binarization_discards_the_ridge() {
        let cfg = noiseless(7);
        let truth = gen_ground_truth(&cfg).unwrap();
        let (broken, gaps) = inject_gaps(&truth, &cfg).unwrap();
        let prob = simulate_probability(&truth, &broken, &cfg).unwrap();
        let t = otsu_threshold(&prob).unwrap();
        assert!(t > cfg.ridge_prob, "threshold {t} should exceed ridge {}", cfg.ridge_prob);
        let bin = binarize(&prob, t);
        for g in &gaps {
            for p in &g.removed_centerline {
                assert!(!bin.get(*p), "ridge pixel {p:?} survived binarization");
            }
        }
    }

    #[test]
    fn ridge_clears_walker_floor() {
        let cfg = noiseless(7);
        let truth = gen_ground_truth(&cfg).unwrap();
        let (broken, gaps) = inject_gaps(&truth, &cfg).unwrap();
        let prob = simulate_probability(&truth, &broken, &cfg).unwrap();
        let eps = WalkConfig::default().eps_nn;
        assert!(cfg.ridge_prob >= eps);
        for g in &gaps {
            for p in &g.removed_centerline {
                assert!(prob.get(*p) >= eps);
            }
        }
    }

    #[test]
    fn prw_closes_five_gaps() {
        let cfg = SynthConfig {
            rng_seed: 11,
            image_side: 200,
            branch_count: 4,
            gap_count: 5,
            gap_length: 24,
            noise_amplitude: 0.0,
            ..SynthConfig::default()
        };
        let f = generate_fixture(&cfg).unwrap();
        assert_eq!(label_components(&f.broken, Connectivity::Eight).count(), 6);
        let (out, report) = prw(&f.broken, &f.prob, &WalkConfig::default()).unwrap();
        assert_eq!(label_components(&out, Connectivity::Eight).count(), 1, "{report:?}");
        assert!(report.connected >= 5);
    }

    #[test]
    fn blur_smears_but_preserves_range() {
        let cfg = SynthConfig { blur_radius: 2, ..noiseless(3) };
        let truth = gen_ground_truth(&cfg).unwrap();
        let (broken, _) = inject_gaps(&truth, &cfg).unwrap();
        let prob = simulate_probability(&truth, &broken, &cfg).unwrap();
        let distinct: HashSet<u64> = prob.values().iter().map(|v| v.to_bits()).collect();
        assert!(distinct.len() > 3);
        assert!(prob.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let bad = |f: fn(&mut SynthConfig)| {
            let mut cfg = SynthConfig::default();
            f(&mut cfg);
            cfg.validate().is_err()
        };
        assert!(bad(|c| c.image_side = 8));
        assert!(bad(|c| c.branch_count = 0));
        assert!(bad(|c| c.vessel_width = 0));
        assert!(bad(|c| c.gap_length = 0));
        assert!(bad(|c| c.gap_length = 160));
        assert!(bad(|c| c.ridge_prob = 1.5));
        assert!(bad(|c| c.noise_amplitude = -0.1));
    }

    #[test]
    fn impossible_gap_request_errors() {
        // a single short stroke cannot host gaps longer than itself allows
        let cfg = SynthConfig {
            branch_count: 1,
            image_side: 64,
            gap_count: 8,
            gap_length: 40,
            ..SynthConfig::default()
        };
        let truth = gen_ground_truth(&cfg).unwrap();
        assert!(inject_gaps(&truth, &cfg).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn fixtures_deterministic_and_partitioned(seed in 0u64..1000) {
            let cfg = SynthConfig { rng_seed: seed, image_side: 96, gap_count: 2, gap_length: 12, ..SynthConfig::default() };
            let f1 = generate_fixture(&cfg).unwrap();
            let f2 = generate_fixture(&cfg).unwrap();
            prop_assert_eq!(&f1.truth, &f2.truth);
            prop_assert_eq!(&f1.broken, &f2.broken);
            prop_assert_eq!(&f1.gaps, &f2.gaps);
            prop_assert_eq!(f1.prob.values(), f2.prob.values());
            prop_assert!(f1.truth.is_superset_of(&f1.broken));
            let removed: Vec<Pixel> =
                f1.gaps.iter().flat_map(|g| g.removed.iter().copied()).collect();
            prop_assert_eq!(f1.broken.with_pixels_set(&removed), f1.truth);
        }
    }
}
