//! Hyperparameter sweeps over a small fixture set: how accuracy, the per-ROI
//! error and wall-clock time respond to the ROI side length and to the blend
//! weight alpha.
//!
//! Run with: `cargo run --example roi_and_alpha_sweep`

use vesselwalk::pipeline::{run_sweep, run_synth, SweepParameter};
use vesselwalk::synth::SynthConfig;
use vesselwalk::Result;

fn print_table(title: &str, report: &serde_json::Value) {
    println!("{title}");
    println!("  {:>6} {:>10} {:>10} {:>10} {:>10}", "value", "acc", "sen", "err", "seconds");
    for row in report["rows"].as_array().expect("sweep rows") {
        println!(
            "  {:>6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            row["value"], row["acc"], row["sen"], row["err"], row["seconds"]
        );
    }
}

fn main() -> Result<()> {
    let dir = tempfile::tempdir().expect("temp fixture dir");

    // One single-gap fixture per fracture length; longer gaps need a larger
    // ROI before the fracture pair qualifies for a walk, which is what gives
    // the ROI sweep its staircase shape.
    for (seed, gap_length) in [(4u64, 12u32), (0, 24), (12, 48), (1, 72)] {
        let cfg = SynthConfig {
            rng_seed: seed,
            gap_count: 1,
            gap_length,
            noise_amplitude: 0.0,
            ..SynthConfig::default()
        };
        run_synth(&dir.path().join(format!("len{gap_length:03}")), &cfg)?;
    }

    let roi = run_sweep(dir.path(), SweepParameter::RoiSize, 3)?;
    print_table("ROI side sweep (0 disables walking entirely):", &roi);

    let alpha = run_sweep(dir.path(), SweepParameter::Alpha, 3)?;
    print_table("alpha sweep (0 pins every walker to its seed):", &alpha);
    Ok(())
}
