//! Receptive-field analysis of dilated-convolution blocks: the closed-form
//! side length against the exact impulse-response oracle, and the channel
//! growth of a densely wired block.
//!
//! Run with: `cargo run --example receptive_field`

use vesselwalk::ddbshape::{
    dense_concat_channels, impulse_response_support, receptive_field, BlockTopology, WiringMode,
};
use vesselwalk::Result;

fn main() -> Result<()> {
    let configs = [
        ("one cascade block, rates 1,2,5", BlockTopology::standard(WiringMode::Cascade, 1)?),
        ("four dense blocks, rates 1,2,5", BlockTopology::standard(WiringMode::Dense, 4)?),
        ("one parallel block, rates 1,2,5", BlockTopology::standard(WiringMode::Parallel, 1)?),
    ];

    for (name, topology) in &configs {
        let rf = receptive_field(topology);
        // The oracle convolves an actual impulse, so the grid must be big
        // enough to hold the whole response.
        let support = impulse_response_support(topology, 2 * rf as usize + 1)?;
        println!("{name}: receptive field {rf} px (impulse oracle: {support} px)");
    }

    let growth = dense_concat_channels(64, 32, 3);
    println!("dense concatenation channel growth from 64 in, 32 per layer: {growth:?}");
    Ok(())
}
