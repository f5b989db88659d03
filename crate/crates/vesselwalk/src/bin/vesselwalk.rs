//! Thin command-line front end: parses flags, delegates to
//! [`vesselwalk::pipeline`], prints the JSON report to standard output.
//!
//! Exit codes: 0 success, 1 failed check (`dice-check` below tolerance),
//! 2 usage or I/O error (one-line diagnostic on standard error).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vesselwalk::ddbshape::WiringMode;
use vesselwalk::pipeline::{
    run_ddb_rf, run_dice_check, run_eval, run_otsu, run_reconnect, run_sweep, run_synth,
    SweepParameter,
};
use vesselwalk::synth::SynthConfig;
use vesselwalk::WalkConfig;

#[derive(Parser)]
#[command(name = "vesselwalk", version, about = "Reconnect fractured vessel masks and analyze the surrounding math")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParamArg {
    RoiSize,
    Alpha,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cascade,
    Parallel,
    Dense,
}

#[derive(Subcommand)]
enum Command {
    /// Reconnect a fractured mask guided by a probability map
    Reconnect {
        /// Probability map raster (PGM or PNG)
        prob: PathBuf,
        /// Binary mask raster
        mask: PathBuf,
        /// Where to write the reconnected mask (PGM)
        out_mask: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        #[arg(long = "roi-size", default_value_t = 100)]
        roi_size: u32,
        #[arg(long = "eps-nn", default_value_t = 0.1)]
        eps_nn: f64,
        /// Use the geometry-only walker instead of the probability-blended one
        #[arg(long)]
        baseline: bool,
    },
    /// Score a prediction mask against ground truth
    Eval {
        pred: PathBuf,
        truth: PathBuf,
        /// Probability map; enables AUC
        #[arg(long)]
        prob: Option<PathBuf>,
        /// Reconnect report JSON; enables the per-ROI error
        #[arg(long = "roi-manifest")]
        roi_manifest: Option<PathBuf>,
    },
    /// Sweep a hyperparameter across synthetic fixtures
    Sweep {
        /// Directory holding fixture(s) written by `synth`
        fixture_dir: PathBuf,
        #[arg(long, value_enum)]
        parameter: SweepParamArg,
        /// Re-run each setting this many times to stabilize timing
        #[arg(long, default_value_t = 1)]
        repeats: u32,
    },
    /// Generate a synthetic fixture (truth, broken mask, probability map)
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long = "image-side", default_value_t = 160)]
        image_side: usize,
        #[arg(long = "branch-count", default_value_t = 3)]
        branch_count: u32,
        #[arg(long = "vessel-width", default_value_t = 3)]
        vessel_width: u32,
        #[arg(long = "gap-count", default_value_t = 3)]
        gap_count: u32,
        #[arg(long = "gap-length", default_value_t = 20)]
        gap_length: u32,
        #[arg(long = "ridge-prob", default_value_t = 0.35)]
        ridge_prob: f64,
        #[arg(long = "noise-amplitude", default_value_t = 0.05)]
        noise_amplitude: f64,
        #[arg(long = "blur-radius", default_value_t = 0)]
        blur_radius: u32,
    },
    /// Check the analytic Dice gradient against finite differences
    DiceCheck {
        #[arg(long, default_value_t = 50)]
        grids: u32,
        #[arg(long, default_value_t = 16)]
        side: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Receptive-field analysis of a dilated-convolution block
    DdbRf {
        #[arg(long, value_enum, default_value_t = ModeArg::Cascade)]
        mode: ModeArg,
        #[arg(long, default_value_t = 3)]
        kernel: u32,
        /// Dilation rates, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 5])]
        dilations: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        repeats: u32,
        #[arg(long = "input-channels", default_value_t = 64)]
        input_channels: u32,
        #[arg(long, default_value_t = 32)]
        growth: u32,
    },
    /// Otsu-threshold a probability map
    Otsu {
        prob: PathBuf,
        /// Where to write the binarized mask
        #[arg(long)]
        out_mask: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reconnect { prob, mask, out_mask, alpha, roi_size, eps_nn, baseline } => {
            let cfg = WalkConfig { alpha, roi_side: roi_size, eps_nn, ..WalkConfig::default() };
            run_reconnect(&prob, &mask, &out_mask, &cfg, baseline)
        }
        Command::Eval { pred, truth, prob, roi_manifest } => {
            run_eval(&pred, &truth, prob.as_deref(), roi_manifest.as_deref())
        }
        Command::Sweep { fixture_dir, parameter, repeats } => {
            let parameter = match parameter {
                SweepParamArg::RoiSize => SweepParameter::RoiSize,
                SweepParamArg::Alpha => SweepParameter::Alpha,
            };
            run_sweep(&fixture_dir, parameter, repeats)
        }
        Command::Synth {
            out_dir,
            seed,
            image_side,
            branch_count,
            vessel_width,
            gap_count,
            gap_length,
            ridge_prob,
            noise_amplitude,
            blur_radius,
        } => {
            let cfg = SynthConfig {
                rng_seed: seed,
                image_side,
                branch_count,
                vessel_width,
                gap_count,
                gap_length,
                ridge_prob,
                noise_amplitude,
                blur_radius,
            };
            run_synth(&out_dir, &cfg)
        }
        Command::DiceCheck { grids, side, seed, h, tolerance } => {
            run_dice_check(grids, side, seed, h, tolerance)
        }
        Command::DdbRf { mode, kernel, dilations, repeats, input_channels, growth } => {
            let mode = match mode {
                ModeArg::Cascade => WiringMode::Cascade,
                ModeArg::Parallel => WiringMode::Parallel,
                ModeArg::Dense => WiringMode::Dense,
            };
            run_ddb_rf(mode, kernel, &dilations, repeats, input_channels, growth)
        }
        Command::Otsu { prob, out_mask } => run_otsu(&prob, out_mask.as_deref()),
    };

    match result {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.get("pass") == Some(&serde_json::Value::Bool(false)) {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("vesselwalk: {err}");
            ExitCode::from(2)
        }
    }
}
