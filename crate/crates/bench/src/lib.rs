//! Shared inputs for the benchmarks.

use edgeframe_core::Image;

/// Piecewise-smooth test image: a tilted ramp with a disc of higher intensity.
pub fn disc_image(n: usize) -> Image {
    Image::from_fn(n, n, |r, c| {
        let (x, y) = (c as f64 / n as f64 - 0.5, r as f64 / n as f64 - 0.5);
        let ramp = 60.0 + 40.0 * (x + y);
        if x * x + y * y < 0.09 {
            ramp + 100.0
        } else {
            ramp
        }
    })
}
