//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;

use hopgr::synth::{generate, SynthSpec};
use hopgr::GrayImage;

/// A 370x130 vein-like ROI with near-horizontal bands.
pub fn roi_image(seed: u64) -> GrayImage {
    let spec = SynthSpec {
        width: 370,
        height: 130,
        line_count: 12,
        ..SynthSpec::default()
    }
    .with_angles(&[0.0, PI / 16.0, 15.0 * PI / 16.0, PI / 2.0])
    .with_seed(seed);
    generate(&spec).expect("valid spec").image
}

/// A prior keeping the eight bins most common in finger veins.
pub fn eight_direction_prior() -> hopgr::PriorDirections {
    let mut hcr = hopgr::PriorDirections::uniform(16, hopgr::BankParams::default())
        .expect("default bank")
        .hcr;
    for k in [0, 1, 2, 3, 8, 13, 14, 15] {
        hcr.sums[k] = -1.0;
    }
    hopgr::select_directions(&hcr, 8).expect("8 of 16")
}
