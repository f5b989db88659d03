//! End-to-end reconnection on a synthetic fixture: generate a fractured
//! vessel scene, run the probability regularized walk and the geometry-only
//! baseline, and score both against ground truth.
//!
//! Run with: `cargo run --example reconnect_gap`

use vesselwalk::components::{label_components, Connectivity};
use vesselwalk::metrics::{err_metric, roi_error_records, EvalReport};
use vesselwalk::reconnect::{directional_walk_baseline, prw, ReconnectReport, RoiStatus};
use vesselwalk::synth::{generate_fixture, SynthConfig};
use vesselwalk::{BinaryMask, Result, WalkConfig};

fn score(name: &str, out: &BinaryMask, report: &ReconnectReport, fixture: &vesselwalk::synth::Fixture) -> Result<()> {
    let sets: Vec<_> = report
        .records
        .iter()
        .filter(|r| r.status == RoiStatus::Connected)
        .map(|r| (r.fragment_label, r.stamped_pixels.clone()))
        .collect();
    let rois = roi_error_records(&sets, &fixture.truth);
    let eval = EvalReport::compute(out, &fixture.truth, None, rois.clone(), None)?;
    println!(
        "{name:>8}: connected {}/{} fragments, stamped {} px, \
         acc {:.4}, sen {:.4}, err {:.4}, components {} -> {}",
        report.connected,
        report.attempted,
        report.stamped_total,
        eval.acc.unwrap_or(f64::NAN),
        eval.sen.unwrap_or(f64::NAN),
        err_metric(&rois),
        label_components(&fixture.broken, Connectivity::Eight).count(),
        label_components(out, Connectivity::Eight).count(),
    );
    Ok(())
}

fn main() -> Result<()> {
    let cfg = SynthConfig {
        rng_seed: 3,
        gap_count: 3,
        gap_length: 16,
        noise_amplitude: 0.0,
        ..SynthConfig::default()
    };
    let fixture = generate_fixture(&cfg)?;
    println!(
        "fixture: {}x{} image, {} gaps of {} px, {} foreground px removed",
        cfg.image_side,
        cfg.image_side,
        fixture.gaps.len(),
        cfg.gap_length,
        fixture.gaps.iter().map(|g| g.removed.len()).sum::<usize>(),
    );

    let walk = WalkConfig::default();
    let (out_prw, report_prw) = prw(&fixture.broken, &fixture.prob, &walk)?;
    let (out_base, report_base) = directional_walk_baseline(&fixture.broken, &fixture.prob, &walk)?;

    for r in &report_prw.records {
        println!(
            "  fragment {}: A=({}, {}) B=({}, {}) d={:.1} -> {:?}, path {} px",
            r.fragment_label, r.a.x, r.a.y, r.b.x, r.b.y, r.d_ab, r.status, r.path_length
        );
    }

    score("prw", &out_prw, &report_prw, &fixture)?;
    score("baseline", &out_base, &report_base, &fixture)?;
    Ok(())
}
