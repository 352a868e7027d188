#![allow(dead_code)]

use sdkit::engine::SplitMix64;
use sdkit::geometry::{LabeledDataset, Point};

/// Seeds used by the uniformity regression check.
pub const UNIFORMITY_SEEDS: [u64; 20] =
    [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584, 4181, 6765, 10946];

/// 60 points in the unit square; class 1 inside the disc of radius 0.35
/// around (0.5, 0.5), class 2 outside it.
pub fn synthetic_2d() -> LabeledDataset {
    let mut rng = SplitMix64::new(20_240_601);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..60 {
        let x = rng.next_f64();
        let y = rng.next_f64();
        let inside = (x - 0.5).powi(2) + (y - 0.5).powi(2) <= 0.35f64.powi(2);
        points.push(Point::new(vec![x, y]).unwrap());
        labels.push(if inside { 1 } else { 2 });
    }
    LabeledDataset::from_labels("synthetic-2d", points, labels).unwrap()
}
