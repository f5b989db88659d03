//! Smoothed Dice loss, its analytic gradient and the multi-scale label
//! pyramid.

use crate::grid::{BinaryMask, ProbabilityMap};
use crate::{Error, Result};

/// Per-pixel predictions in `[0, 1]`.
pub type PredictionGrid = ProbabilityMap;
/// Per-pixel binary labels.
pub type LabelGrid = BinaryMask;

/// Multi-scale loss configuration.
#[derive(Debug, Clone)]
pub struct LossConfig {
    /// Laplace smoothing factor applied to numerator and denominator.
    pub epsilon: f64,
    /// Per-scale weights, largest scale first; must sum to 1.
    pub weights: Vec<f64>,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { epsilon: 1.0, weights: vec![0.25; 4] }
    }
}

impl LossConfig {
    pub fn scales(&self) -> usize {
        self.weights.len()
    }

    fn validate(&self) -> Result<()> {
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.is_empty() || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "scale weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

fn dice_terms(p: &PredictionGrid, g: &LabelGrid, epsilon: f64) -> Result<(f64, f64)> {
    if (p.width(), p.height()) != (g.width(), g.height()) {
        return Err(Error::DimensionMismatch(p.width(), p.height(), g.width(), g.height()));
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let mut overlap = 0.0;
    let mut p_sq = 0.0;
    let mut g_sq = 0.0;
    for (&pi, &gi) in p.values().iter().zip(g.values()) {
        let gi = f64::from(u8::from(gi));
        overlap += pi * gi;
        p_sq += pi * pi;
        g_sq += gi;
    }
    Ok((2.0 * overlap + epsilon, p_sq + g_sq + epsilon))
}

/// Smoothed Dice loss `1 - (2*sum(p*g) + eps) / (sum(p^2) + sum(g^2) + eps)`.
pub fn dice_loss(p: &PredictionGrid, g: &LabelGrid, epsilon: f64) -> Result<f64> {
    let (numerator, denominator) = dice_terms(p, g, epsilon)?;
    Ok(1.0 - numerator / denominator)
}

/// Analytic per-pixel gradient of [`dice_loss`] with respect to each
/// prediction value.
pub fn dice_grad(p: &PredictionGrid, g: &LabelGrid, epsilon: f64) -> Result<Vec<f64>> {
    let (numerator, denominator) = dice_terms(p, g, epsilon)?;
    let grad = p
        .values()
        .iter()
        .zip(g.values())
        .map(|(&pi, &gi)| {
            let gi = f64::from(u8::from(gi));
            -2.0 * gi / denominator + 2.0 * pi * numerator / (denominator * denominator)
        })
        .collect();
    Ok(grad)
}

/// Downsamples a label grid by a power-of-two factor using block-majority
/// voting; exact ties resolve to foreground.
pub fn downsample_label(g: &LabelGrid, factor: usize) -> Result<LabelGrid> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "downsample factor must be a power of two, got {factor}"
        )));
    }
    if !g.width().is_multiple_of(factor) || !g.height().is_multiple_of(factor) {
        return Err(Error::Dimensions(format!(
            "{}x{} not divisible by {factor}",
            g.width(),
            g.height()
        )));
    }
    let (out_w, out_h) = (g.width() / factor, g.height() / factor);
    let block = (factor * factor) as u32;
    let mut values = Vec::with_capacity(out_w * out_h);
    for by in 0..out_h {
        for bx in 0..out_w {
            let mut fg = 0u32;
            for dy in 0..factor {
                for dx in 0..factor {
                    let idx = (by * factor + dy) * g.width() + bx * factor + dx;
                    fg += u32::from(g.values()[idx]);
                }
            }
            values.push(2 * fg >= block);
        }
    }
    LabelGrid::new(out_w, out_h, values)
}

/// Weighted sum of per-scale Dice losses. `preds[n]` must have the
/// dimensions of `g` downsampled by `2^n` (largest first).
pub fn multiscale_loss(preds: &[PredictionGrid], g: &LabelGrid, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    if preds.len() != cfg.scales() {
        return Err(Error::InvalidArgument(format!(
            "expected {} prediction scales, got {}",
            cfg.scales(),
            preds.len()
        )));
    }
    let mut total = 0.0;
    for (n, (pred, &weight)) in preds.iter().zip(&cfg.weights).enumerate() {
        let label = downsample_label(g, 1 << n)?;
        total += weight * dice_loss(pred, &label, cfg.epsilon)?;
    }
    Ok(total)
}

/// Central finite difference of [`dice_loss`] in every prediction
/// coordinate, evaluated in a cancellation-free form so the `O(h^2)`
/// truncation term is the only error. Serves as the independent gradient
/// oracle for `dice_grad`.
pub fn dice_grad_central_difference(
    p: &PredictionGrid,
    g: &LabelGrid,
    epsilon: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let (numerator, denominator) = dice_terms(p, g, epsilon)?;
    // Perturbing p_i by +/-h shifts the numerator by +/-2*g_i*h and the
    // denominator by +/-2*p_i*h + h^2. The central difference
    //   -(N+/D+ - N-/D-) / (2h)
    // simplifies algebraically to the form below; evaluating it this way
    // avoids the catastrophic cancellation of subtracting two nearly equal
    // losses.
    let grad = p
        .values()
        .iter()
        .zip(g.values())
        .map(|(&pi, &gi)| {
            let gi = f64::from(u8::from(gi));
            let d_plus = denominator + 2.0 * pi * h + h * h;
            let d_minus = denominator - 2.0 * pi * h + h * h;
            -(2.0 * gi * (denominator + h * h) - 2.0 * numerator * pi) / (d_plus * d_minus)
        })
        .collect();
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_pair(side: usize, seed: u64) -> (PredictionGrid, LabelGrid) {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(5);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let p: Vec<f64> = (0..side * side).map(|_| next()).collect();
        let g: Vec<bool> = (0..side * side).map(|_| next() > 0.6).collect();
        (
            PredictionGrid::new(side, side, p).unwrap(),
            LabelGrid::new(side, side, g).unwrap(),
        )
    }

    /// Plain two-evaluation central difference, used where absolute gradient
    /// magnitudes are large enough for f64 subtraction to stay accurate.
    fn naive_central_difference(
        p: &PredictionGrid,
        g: &LabelGrid,
        epsilon: f64,
        h: f64,
        index: usize,
    ) -> f64 {
        let mut plus = p.values().to_vec();
        plus[index] += h;
        let mut minus = p.values().to_vec();
        minus[index] -= h;
        // bypass the [0,1] constructor check for the perturbed copies
        let eval = |vals: Vec<f64>| {
            let mut overlap = 0.0;
            let mut p_sq = 0.0;
            let mut g_sq = 0.0;
            for (pi, &gi) in vals.iter().zip(g.values()) {
                let gi = f64::from(u8::from(gi));
                overlap += pi * gi;
                p_sq += pi * pi;
                g_sq += gi;
            }
            1.0 - (2.0 * overlap + epsilon) / (p_sq + g_sq + epsilon)
        };
        (eval(plus) - eval(minus)) / (2.0 * h)
    }

    #[test]
    fn loss_zero_when_prediction_equals_binary_label() {
        let g = LabelGrid::new(4, 2, vec![true, false, true, true, false, false, true, false])
            .unwrap();
        let p = PredictionGrid::new(
            4,
            2,
            g.values().iter().map(|&v| f64::from(u8::from(v))).collect(),
        )
        .unwrap();
        assert!(dice_loss(&p, &g, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn loss_hand_arithmetic() {
        let p = PredictionGrid::new(1, 1, vec![1.0]).unwrap();
        let g = LabelGrid::new(1, 1, vec![false]).unwrap();
        assert!((dice_loss(&p, &g, 1.0).unwrap() - 0.5).abs() < 1e-12);

        let p = PredictionGrid::new(2, 1, vec![0.5, 0.5]).unwrap();
        let g = LabelGrid::new(2, 1, vec![true, false]).unwrap();
        assert!((dice_loss(&p, &g, 1.0).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn gradient_zero_when_prediction_equals_binary_label() {
        let g = LabelGrid::new(3, 1, vec![true, false, true]).unwrap();
        let p = PredictionGrid::new(
            3,
            1,
            g.values().iter().map(|&v| f64::from(u8::from(v))).collect(),
        )
        .unwrap();
        for v in dice_grad(&p, &g, 1.0).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_single_pixel_hand_value() {
        let p = PredictionGrid::new(1, 1, vec![0.5]).unwrap();
        let g = LabelGrid::new(1, 1, vec![true]).unwrap();
        let grad = dice_grad(&p, &g, 1.0).unwrap();
        // D = 0.25 + 1 + 1 = 2.25; N = 2*0.5 + 1 = 2
        let want = -2.0 / 2.25 + 2.0 * 0.5 * 2.0 / (2.25 * 2.25);
        assert!((grad[0] - want).abs() < 1e-12);
        assert!((grad[0] - (-0.493827)).abs() < 1e-6);
        let fd = naive_central_difference(&p, &g, 1.0, 1e-5, 0);
        assert!((grad[0] - fd).abs() < 1e-8);
    }

    #[test]
    fn gradient_matches_finite_differences_on_random_grid() {
        let (p, g) = random_pair(16, 42);
        let grad = dice_grad(&p, &g, 1.0).unwrap();
        let fd = dice_grad_central_difference(&p, &g, 1.0, 1e-5).unwrap();
        for (a, f) in grad.iter().zip(&fd) {
            let rel = (a - f).abs() / f.abs().max(1e-300);
            assert!(rel < 1e-6, "analytic {a} vs fd {f}");
        }
    }

    #[test]
    fn downsample_rules() {
        let g = LabelGrid::filled(8, 8, true).unwrap();
        assert_eq!(downsample_label(&g, 2).unwrap(), LabelGrid::filled(4, 4, true).unwrap());
        assert_eq!(downsample_label(&g, 4).unwrap(), LabelGrid::filled(2, 2, true).unwrap());

        // 2 foreground / 2 background block ties to foreground
        let g = LabelGrid::new(2, 2, vec![true, false, false, true]).unwrap();
        assert_eq!(downsample_label(&g, 2).unwrap().values(), &[true]);

        // checkerboard collapses to all foreground by the tie rule
        let checker: Vec<bool> = (0..64).map(|i| (i / 8 + i % 8) % 2 == 0).collect();
        let g = LabelGrid::new(8, 8, checker).unwrap();
        assert_eq!(downsample_label(&g, 2).unwrap(), LabelGrid::filled(4, 4, true).unwrap());
    }

    #[test]
    fn downsample_rejects_bad_factor() {
        let g = LabelGrid::filled(6, 6, true).unwrap();
        assert!(downsample_label(&g, 3).is_err());
        assert!(downsample_label(&g, 4).is_err()); // 6 not divisible by 4
    }

    #[test]
    fn multiscale_recomposition() {
        let side = 16;
        let (_, g) = random_pair(side, 7);
        let cfg = LossConfig::default();
        let preds: Vec<PredictionGrid> = (0..4)
            .map(|n| {
                let s = side >> n;
                random_pair(s, 100 + n as u64).0
            })
            .collect();
        let total = multiscale_loss(&preds, &g, &cfg).unwrap();
        let mut want = 0.0;
        for (n, pred) in preds.iter().enumerate() {
            let label = downsample_label(&g, 1 << n).unwrap();
            want += 0.25 * dice_loss(pred, &label, 1.0).unwrap();
        }
        assert!((total - want).abs() < 1e-12);
    }

    #[test]
    fn multiscale_equal_losses_collapse() {
        // every prediction equals its downsampled label -> total 0
        let (_, g) = random_pair(16, 9);
        let preds: Vec<PredictionGrid> = (0..4)
            .map(|n| {
                let label = downsample_label(&g, 1 << n).unwrap();
                PredictionGrid::new(
                    label.width(),
                    label.height(),
                    label.values().iter().map(|&v| f64::from(u8::from(v))).collect(),
                )
                .unwrap()
            })
            .collect();
        let total = multiscale_loss(&preds, &g, &LossConfig::default()).unwrap();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn multiscale_scale_count_mismatch() {
        let (_, g) = random_pair(16, 11);
        let preds = vec![random_pair(16, 12).0];
        assert!(multiscale_loss(&preds, &g, &LossConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn loss_bounded(seed in any::<u64>()) {
            let (p, g) = random_pair(8, seed);
            let loss = dice_loss(&p, &g, 1.0).unwrap();
            prop_assert!((0.0..1.0).contains(&loss));
        }

        #[test]
        fn multiscale_linear_in_weights(seed in any::<u64>()) {
            let (_, g) = random_pair(8, seed);
            let preds: Vec<PredictionGrid> = (0..2)
                .map(|n| random_pair(8 >> n, seed ^ (n as u64 + 1)).0)
                .collect();
            let cfg_a = LossConfig { epsilon: 1.0, weights: vec![0.5, 0.5] };
            let cfg_b = LossConfig { epsilon: 1.0, weights: vec![0.75, 0.25] };
            let l0 = {
                let label = downsample_label(&g, 1).unwrap();
                dice_loss(&preds[0], &label, 1.0).unwrap()
            };
            let l1 = {
                let label = downsample_label(&g, 2).unwrap();
                dice_loss(&preds[1], &label, 1.0).unwrap()
            };
            let a = multiscale_loss(&preds, &g, &cfg_a).unwrap();
            let b = multiscale_loss(&preds, &g, &cfg_b).unwrap();
            prop_assert!((a - (0.5 * l0 + 0.5 * l1)).abs() < 1e-12);
            prop_assert!((b - (0.75 * l0 + 0.25 * l1)).abs() < 1e-12);
        }
    }
}
