//! Isotropic (group) soft thresholding of frame coefficients.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::framelet::FrameCoeffs;

/// Per-level, per-pixel thresholds `θ_l[k]`, shared by all bands of a level.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkWeights {
    width: usize,
    height: usize,
    levels: usize,
    data: Vec<f64>,
}

impl ShrinkWeights {
    /// One plane per level, each `width·height` long.
    pub fn new(width: usize, height: usize, planes: Vec<Vec<f64>>) -> Result<Self> {
        let levels = planes.len();
        let mut data = Vec::with_capacity(levels * width * height);
        for p in planes {
            if p.len() != width * height {
                return Err(Error::ShapeMismatch(format!(
                    "threshold plane of {} values for {width}x{height}",
                    p.len()
                )));
            }
            data.extend(p);
        }
        if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "thresholds must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(ShrinkWeights {
            width,
            height,
            levels,
            data,
        })
    }

    pub fn uniform(width: usize, height: usize, levels: usize, theta: f64) -> Result<Self> {
        Self::new(width, height, vec![vec![theta; width * height]; levels])
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn plane(&self, level: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[level * n..(level + 1) * n]
    }
}

/// `R_l[k] = (Σ_{α∈B} w_{l,α}[k]²)^{1/2}` for every level.
pub fn magnitudes(w: &FrameCoeffs) -> Vec<Vec<f64>> {
    let n = w.plane_len();
    (0..w.levels())
        .into_par_iter()
        .map(|l| {
            let mut r2 = vec![0.0; n];
            for plane in w.level(l).chunks_exact(n) {
                r2.iter_mut().zip(plane).for_each(|(s, v)| *s += v * v);
            }
            r2.into_iter().map(f64::sqrt).collect()
        })
        .collect()
}

/// Returns `T_θ(w)`: high-pass groups scaled by `max(R − θ, 0)/R`, low-pass untouched.
pub fn isotropic_shrink(w: &FrameCoeffs, theta: &ShrinkWeights) -> Result<FrameCoeffs> {
    let mut out = w.clone();
    isotropic_shrink_in_place(&mut out, theta)?;
    Ok(out)
}

pub fn isotropic_shrink_in_place(w: &mut FrameCoeffs, theta: &ShrinkWeights) -> Result<()> {
    if theta.levels != w.levels() || theta.dims() != w.dims() {
        return Err(Error::ShapeMismatch(format!(
            "thresholds for L={} {}x{}, coefficients L={} {}x{}",
            theta.levels,
            theta.width,
            theta.height,
            w.levels(),
            w.dims().0,
            w.dims().1
        )));
    }
    let n = w.plane_len();
    let bands = w.band_count();
    w.highpass_mut()
        .par_chunks_mut(n * bands)
        .enumerate()
        .for_each(|(l, level)| {
            let th = theta.plane(l);
            let mut scale = vec![0.0; n];
            for plane in level.chunks_exact(n) {
                scale.iter_mut().zip(plane).for_each(|(s, v)| *s += v * v);
            }
            for (s, &t) in scale.iter_mut().zip(th) {
                let r = s.sqrt();
                *s = if r > 0.0 { (r - t).max(0.0) / r } else { 0.0 };
            }
            for plane in level.chunks_exact_mut(n) {
                plane.iter_mut().zip(&scale).for_each(|(v, s)| *v *= s);
            }
        });
    Ok(())
}
