//! Tensor-product masks `q_α[k] = q_{α₁}[k₁] q_{α₂}[k₂]`.
//!
//! `k₁` runs along image columns (horizontal, `x₁`) and `k₂` along rows.

use super::bank::{Filter, UnivariateFilterBank};
use super::cascade::{c_alpha_estimate, DEFAULT_DEPTH};
use crate::error::Result;

/// Band multi-index `(α₁, α₂)`.
pub type Band = (usize, usize);

/// A finitely supported 2-D mask, stored as a dense block.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask2 {
    first: (isize, isize),
    width: usize,
    height: usize,
    taps: Vec<f64>,
}

impl Mask2 {
    /// `first = (k₁, k₂)` of the top-left tap; `taps` row-major with `k₂` as the row.
    pub fn new(first: (isize, isize), width: usize, height: usize, taps: Vec<f64>) -> Self {
        assert_eq!(taps.len(), width * height);
        Mask2 {
            first,
            width,
            height,
            taps,
        }
    }

    pub fn outer(f1: &Filter, f2: &Filter) -> Self {
        let mut taps = Vec::with_capacity(f1.len() * f2.len());
        for &b in f2.taps() {
            for &a in f1.taps() {
                taps.push(a * b);
            }
        }
        Mask2::new((f1.first(), f2.first()), f1.len(), f2.len(), taps)
    }

    pub fn first(&self) -> (isize, isize) {
        self.first
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, k1: isize, k2: isize) -> f64 {
        let (i, j) = (k1 - self.first.0, k2 - self.first.1);
        if i < 0 || j < 0 || i as usize >= self.width || j as usize >= self.height {
            0.0
        } else {
            self.taps[j as usize * self.width + i as usize]
        }
    }

    /// `((k₁, k₂), value)` over the stored block.
    pub fn iter(&self) -> impl Iterator<Item = ((isize, isize), f64)> + '_ {
        self.taps.iter().enumerate().map(move |(idx, &v)| {
            let (j, i) = (idx / self.width, idx % self.width);
            ((self.first.0 + i as isize, self.first.1 + j as isize), v)
        })
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// À trous upsampling onto `2^l ℤ²`.
    pub fn upsample(&self, level: u32) -> Mask2 {
        let s = 1usize << level;
        let (w, h) = ((self.width - 1) * s + 1, (self.height - 1) * s + 1);
        let mut taps = vec![0.0; w * h];
        for j in 0..self.height {
            for i in 0..self.width {
                taps[j * s * w + i * s] = self.taps[j * self.width + i];
            }
        }
        let si = s as isize;
        Mask2::new((self.first.0 * si, self.first.1 * si), w, h, taps)
    }

    pub fn convolve(&self, other: &Mask2) -> Mask2 {
        let (w, h) = (self.width + other.width - 1, self.height + other.height - 1);
        let mut taps = vec![0.0; w * h];
        for j in 0..self.height {
            for i in 0..self.width {
                let a = self.taps[j * self.width + i];
                for jj in 0..other.height {
                    for ii in 0..other.width {
                        taps[(j + jj) * w + i + ii] += a * other.taps[jj * other.width + ii];
                    }
                }
            }
        }
        Mask2::new(
            (self.first.0 + other.first.0, self.first.1 + other.first.1),
            w,
            h,
            taps,
        )
    }
}

/// Univariate à trous cascade `q̃_{l,a} ⊛ q̃_{l−1,0} ⊛ ⋯ ⊛ q̃_{0,0}`.
pub fn cascade_filter(bank: &UnivariateFilterBank, level: u32, a: usize) -> Filter {
    let mut f = bank.filter(a).upsample(level);
    for j in (0..level).rev() {
        f = f.convolve(&bank.lowpass().upsample(j));
    }
    f
}

/// The level-`l` analysis mask of band `α` as a single 2-D filter.
pub fn cascade_mask(bank: &UnivariateFilterBank, level: u32, band: Band) -> Mask2 {
    Mask2::outer(
        &cascade_filter(bank, level, band.0),
        &cascade_filter(bank, level, band.1),
    )
}

/// Tensor-product bank: band set `{0..m}² \ {(0,0)}` with constants `c_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFilterBank {
    univariate: UnivariateFilterBank,
    bands: Vec<Band>,
    c_univariate: Vec<f64>,
    depth: u32,
}

impl TensorFilterBank {
    /// Builds the bank with `c_α` from a cascade of the default depth.
    pub fn new(univariate: UnivariateFilterBank) -> Result<Self> {
        Self::with_depth(univariate, DEFAULT_DEPTH)
    }

    pub fn with_depth(univariate: UnivariateFilterBank, depth: u32) -> Result<Self> {
        let m = univariate.order();
        let c_univariate = (0..=m)
            .map(|l| c_alpha_estimate(&univariate, l, depth))
            .collect::<Result<Vec<_>>>()?;
        let bands = (0..=m)
            .flat_map(|a1| (0..=m).map(move |a2| (a1, a2)))
            .filter(|&b| b != (0, 0))
            .collect();
        Ok(TensorFilterBank {
            univariate,
            bands,
            c_univariate,
            depth,
        })
    }

    pub fn univariate(&self) -> &UnivariateFilterBank {
        &self.univariate
    }

    pub fn order(&self) -> usize {
        self.univariate.order()
    }

    /// High-pass bands, ordered with `α₁` outer and `α₂` inner.
    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn band_index(&self, band: Band) -> Option<usize> {
        self.bands.iter().position(|&b| b == band)
    }

    pub fn mask(&self, band: Band) -> Mask2 {
        Mask2::outer(
            self.univariate.filter(band.0),
            self.univariate.filter(band.1),
        )
    }

    /// `c_α = c_{α₁} c_{α₂}`.
    pub fn c_alpha(&self, band: Band) -> f64 {
        self.c_univariate[band.0] * self.c_univariate[band.1]
    }

    pub fn c_univariate(&self) -> &[f64] {
        &self.c_univariate
    }

    /// Vanishing-moment order of band `α`, which is `α` itself.
    pub fn moment_order(&self, band: Band) -> Band {
        band
    }

    pub fn cascade_depth(&self) -> u32 {
        self.depth
    }

    pub fn half_width(&self) -> usize {
        self.univariate.half_width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framelet::bank::{cubic_bspline_bank, linear_bspline_bank};
    use crate::framelet::cascade::c_alpha_2d;

    #[test]
    fn band_set_sizes() {
        let lin = TensorFilterBank::with_depth(linear_bspline_bank(), 8).unwrap();
        assert_eq!(lin.band_count(), 8);
        assert_eq!(lin.bands()[0], (0, 1));
        let cub = TensorFilterBank::with_depth(cubic_bspline_bank(), 8).unwrap();
        assert_eq!(cub.band_count(), 24);
    }

    #[test]
    fn masks_are_outer_products() {
        let b = TensorFilterBank::with_depth(cubic_bspline_bank(), 8).unwrap();
        for &band in b.bands() {
            let m = b.mask(band);
            for ((k1, k2), v) in m.iter() {
                let expect =
                    b.univariate().filter(band.0).get(k1) * b.univariate().filter(band.1).get(k2);
                assert_eq!(v, expect);
            }
        }
    }

    #[test]
    fn product_structure_of_c() {
        let b = linear_bspline_bank();
        let t = TensorFilterBank::new(b.clone()).unwrap();
        let direct = c_alpha_2d(&b, (1, 2), 12).unwrap();
        assert!((t.c_alpha((1, 2)) - direct).abs() < 1e-8);
        for &band in t.bands() {
            assert!(t.c_alpha(band).is_finite() && t.c_alpha(band) != 0.0);
        }
    }

    #[test]
    fn mask_upsample_and_cascade_width() {
        let b = linear_bspline_bank();
        let m = cascade_mask(&b, 1, (1, 0));
        assert_eq!(m.dims(), (7, 7));
        let direct = Mask2::outer(b.filter(1), b.lowpass())
            .upsample(1)
            .convolve(&Mask2::outer(b.lowpass(), b.lowpass()));
        assert_eq!(m.dims(), direct.dims());
        for ((k1, k2), v) in m.iter() {
            assert!((v - direct.get(k1, k2)).abs() < 1e-15);
        }
    }
}
