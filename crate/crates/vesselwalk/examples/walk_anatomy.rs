//! The reconnection pipeline taken apart on a hand-built scene: labeling,
//! thinning, fracture-pair search, quadratic guidance fit, target election
//! and a single guided walk.
//!
//! Run with: `cargo run --example walk_anatomy`

use vesselwalk::components::{component_index, label_components, skeletonize, Connectivity};
use vesselwalk::reconnect::{fit_parabola, nearest_pair, reconnect_fragment, roi_of, target_point};
use vesselwalk::{BinaryMask, Pixel, ProbabilityMap, Result, WalkConfig};

fn main() -> Result<()> {
    let (w, h) = (40, 20);

    // A horizontal trunk at y=10 with a 10-pixel hole, leaving a short
    // fragment on the right: ####################..........#########
    let mut mask = vec![false; w * h];
    for x in 0..20 {
        mask[10 * w + x] = true;
    }
    for x in 30..w {
        mask[10 * w + x] = true;
    }
    let mask = BinaryMask::new(w, h, mask)?;

    // Confidence map: faint ridge across the hole, strong on the vessel.
    let prob = ProbabilityMap::new(
        w,
        h,
        (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                if mask.get(Pixel::new(x as i32, y as i32)) {
                    0.9
                } else if y == 10 {
                    0.35
                } else {
                    0.0
                }
            })
            .collect(),
    )?;

    let labels = label_components(&mask, Connectivity::Eight);
    let index = component_index(&labels);
    let trunk = index.largest().expect("foreground present");
    println!("components: {} (trunk = label {trunk}, {} px)", labels.count(), index.size_of(trunk));

    let skeleton = skeletonize(&mask);
    let centerline = |label: u32| -> Vec<Pixel> {
        skeleton.foreground_pixels().filter(|&p| labels.get(p) == label).collect()
    };
    let fragment = (1..=index.label_count()).find(|&l| l != trunk).expect("one fragment");

    let pair = nearest_pair(&centerline(fragment), &centerline(trunk), fragment)?;
    println!(
        "fracture pair: A=({}, {}) B=({}, {}), d={:.1}, midpoint ({}, {})",
        pair.a.x, pair.a.y, pair.b.x, pair.b.y, pair.d_ab, pair.m.x, pair.m.y
    );

    let cfg = WalkConfig::default();
    let roi = roi_of(&pair, cfg.roi_side, w, h).expect("pair within ROI reach");

    let curve = fit_parabola(&centerline(fragment))?;
    println!("guidance fit: {:?} with a={:.3} b={:.3} c={:.3}", curve.axis, curve.a, curve.b, curve.c);

    let trunk_in_roi: Vec<Pixel> =
        centerline(trunk).into_iter().filter(|&p| roi.contains(p)).collect();
    let target = target_point(&curve, &trunk_in_roi, &roi, pair.m, (3.0 * pair.d_ab).max(20.0))?;
    println!("elected target C = ({}, {})", target.x, target.y);

    // The full per-fragment attempt: walkers start from every fragment pixel
    // in the ROI (their own component is off limits) and connected paths are
    // stamped back into the mask with a 3x3 brush.
    let (out, record) = reconnect_fragment(fragment, &labels, &index, &prob, &mask, &cfg)?;
    println!(
        "fragment attempt: {:?}, best path {} px, stamped {} px",
        record.status, record.path_length, record.stamped_pixel_count
    );
    println!(
        "components after stamping: {}",
        label_components(&out, Connectivity::Eight).count()
    );
    Ok(())
}
