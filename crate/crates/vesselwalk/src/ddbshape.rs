//! Receptive-field and channel-growth analysis for blocks of dilated
//! convolutions, with a naive impulse-response oracle.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One dilated convolution: an odd square kernel applied at a dilation rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel: u32,
    pub dilation: u32,
}

impl ConvSpec {
    pub fn new(kernel: u32, dilation: u32) -> Result<Self> {
        if kernel == 0 || kernel.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("kernel must be odd, got {kernel}")));
        }
        if dilation == 0 {
            return Err(Error::InvalidArgument("dilation must be at least 1".into()));
        }
        Ok(ConvSpec { kernel, dilation })
    }

    /// Growth of the receptive field contributed by this layer when composed
    /// serially.
    fn reach(self) -> u32 {
        (self.kernel - 1) * self.dilation
    }
}

/// How the layers of a block are wired together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WiringMode {
    /// Layers applied one after another.
    Cascade,
    /// Layers applied independently to the block input, outputs merged.
    Parallel,
    /// Every layer sees the depth-concatenation of the input and all earlier
    /// outputs; spatially this composes like the full serial chain.
    Dense,
}

/// A stack of `repeats` major blocks, each wiring `layers` in `mode`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTopology {
    pub mode: WiringMode,
    pub layers: Vec<ConvSpec>,
    pub repeats: u32,
}

impl BlockTopology {
    pub fn new(mode: WiringMode, layers: Vec<ConvSpec>, repeats: u32) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("topology needs at least one layer".into()));
        }
        if repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be at least 1".into()));
        }
        Ok(BlockTopology { mode, layers, repeats })
    }

    /// Default kernel-3 block at the standard rates 1, 2, 5.
    pub fn standard(mode: WiringMode, repeats: u32) -> Result<Self> {
        let layers = [1, 2, 5]
            .into_iter()
            .map(|d| ConvSpec::new(3, d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mode, layers, repeats)
    }
}

/// Analytic shape summary of a topology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeReport {
    /// Side length of the square input support seen by one output pixel.
    pub receptive_field: u32,
    /// Channel count entering each layer of a dense block, when requested.
    pub concat_channel_growth: Vec<u32>,
}

/// Side length of the receptive field of one output pixel.
///
/// Cascade and dense modes compose every layer serially; parallel mode is
/// bounded by its widest branch. Dense counts the full chain because each
/// layer feeds the next through concatenation.
pub fn receptive_field(topology: &BlockTopology) -> u32 {
    let per_block: u32 = match topology.mode {
        WiringMode::Cascade | WiringMode::Dense => {
            topology.layers.iter().map(|l| l.reach()).sum()
        }
        WiringMode::Parallel => topology.layers.iter().map(|l| l.reach()).max().unwrap_or(0),
    };
    1 + topology.repeats * per_block
}

/// Applies the topology's convolutions with all-ones kernels to a centered
/// unit impulse on a `grid_side` square and returns the side length of the
/// nonzero support. Support equals reachability, so this is the exact oracle
/// for [`receptive_field`].
pub fn impulse_response_support(topology: &BlockTopology, grid_side: usize) -> Result<u32> {
    if grid_side <= receptive_field(topology) as usize {
        return Err(Error::InvalidArgument(format!(
            "grid side {grid_side} must exceed the receptive field {}",
            receptive_field(topology)
        )));
    }
    let mut current = vec![false; grid_side * grid_side];
    current[(grid_side / 2) * grid_side + grid_side / 2] = true;

    for _ in 0..topology.repeats {
        current = match topology.mode {
            WiringMode::Cascade | WiringMode::Dense => {
                let mut acc = current;
                for layer in &topology.layers {
                    acc = convolve_support(&acc, grid_side, *layer);
                }
                acc
            }
            WiringMode::Parallel => {
                let mut merged = vec![false; grid_side * grid_side];
                for layer in &topology.layers {
                    let branch = convolve_support(&current, grid_side, *layer);
                    for (m, b) in merged.iter_mut().zip(branch) {
                        *m |= b;
                    }
                }
                merged
            }
        };
    }

    let mut min_x = grid_side;
    let mut max_x = 0usize;
    let mut min_y = grid_side;
    let mut max_y = 0usize;
    for y in 0..grid_side {
        for x in 0..grid_side {
            if current[y * grid_side + x] {
                min_x = min_x.min(x);
                max_x = max_x.max(x);
                min_y = min_y.min(y);
                max_y = max_y.max(y);
            }
        }
    }
    let side_x = (max_x - min_x + 1) as u32;
    let side_y = (max_y - min_y + 1) as u32;
    debug_assert_eq!(side_x, side_y, "impulse support should be square");
    Ok(side_x.max(side_y))
}

fn convolve_support(input: &[bool], side: usize, layer: ConvSpec) -> Vec<bool> {
    let half = (layer.kernel / 2) as i64;
    let d = i64::from(layer.dilation);
    let mut out = vec![false; side * side];
    for y in 0..side as i64 {
        for x in 0..side as i64 {
            'taps: for ky in -half..=half {
                for kx in -half..=half {
                    let (sx, sy) = (x + kx * d, y + ky * d);
                    if sx >= 0
                        && sy >= 0
                        && (sx as usize) < side
                        && (sy as usize) < side
                        && input[sy as usize * side + sx as usize]
                    {
                        out[y as usize * side + x as usize] = true;
                        break 'taps;
                    }
                }
            }
        }
    }
    out
}

/// Channel count entering each layer of a dense block: the block input plus
/// every earlier layer's output, depth-concatenated.
pub fn dense_concat_channels(input_channels: u32, per_layer_out: u32, layers: u32) -> Vec<u32> {
    (0..layers).map(|j| input_channels + j * per_layer_out).collect()
}
