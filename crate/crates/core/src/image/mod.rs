//! Real-valued pixel grids, binary planes, synthetic noise and the PSNR metric.
//!
//! Pixels are stored row-major in double precision. Quantization to integer
//! intensities only happens when an image is written to disk (see [`io`]).

pub mod io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// A `height × width` grid of finite real values, row-major, top-left origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Wraps a row-major buffer, rejecting empty shapes and non-finite values.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "buffer of {} values for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        assert!(value.is_finite());
        Image {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image from `f(row, col)`.
    ///
    /// # Panics
    /// If `f` returns a non-finite value.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                let v = f(r, c);
                assert!(v.is_finite(), "non-finite pixel at ({r}, {c})");
                data.push(v);
            }
        }
        Image {
            width,
            height,
            data,
        }
    }

    /// Internal constructor for buffers produced by arithmetic on finite inputs.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Image {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Side length for square images.
    pub fn square_size(&self) -> Option<usize> {
        (self.width == self.height).then_some(self.width)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(value.is_finite());
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn ensure_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: other.dims(),
            });
        }
        Ok(())
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Image {
        Image::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pointwise combination of two equally sized images.
    ///
    /// # Panics
    /// On a dimension mismatch.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Image {
        assert_eq!(self.dims(), other.dims(), "zip_map on mismatched images");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Image::from_raw(self.width, self.height, data)
    }

    pub fn add(&self, other: &Image) -> Image {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Image) -> Image {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Image {
        self.map(|v| v * s)
    }

    pub fn dot(&self, other: &Image) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Circular shift: output pixel `(r, c)` takes input `(r - dr, c - dc)` modulo the size.
    pub fn circular_shift(&self, dr: isize, dc: isize) -> Image {
        let (w, h) = (self.width as isize, self.height as isize);
        Image::from_fn(self.width, self.height, |r, c| {
            let sr = (r as isize - dr).rem_euclid(h) as usize;
            let sc = (c as isize - dc).rem_euclid(w) as usize;
            self.get(sr, sc)
        })
    }

    /// Clamps every pixel into `[lo, hi]`.
    pub fn clamped(&self, lo: f64, hi: f64) -> Image {
        self.map(|v| v.clamp(lo, hi))
    }
}

/// A `{0, 1}`-valued plane, used for inpainting masks and thresholded edge sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryPlane {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryPlane {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height || width == 0 || height == 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} bits for a {width}x{height} plane",
                bits.len()
            )));
        }
        Ok(BinaryPlane {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        BinaryPlane {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c));
            }
        }
        BinaryPlane {
            width,
            height,
            bits,
        }
    }

    /// Accepts only images whose pixels are exactly 0 or 1.
    pub fn from_image(img: &Image) -> Result<Self> {
        let mut bits = Vec::with_capacity(img.len());
        for (i, &v) in img.as_slice().iter().enumerate() {
            if v == 0.0 || v == 1.0 {
                bits.push(v == 1.0);
            } else {
                return Err(Error::InvalidParameter(format!(
                    "mask value {v} at index {i} is not 0 or 1"
                )));
            }
        }
        Ok(BinaryPlane {
            width: img.width(),
            height: img.height(),
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn count_zeros(&self) -> usize {
        self.bits.len() - self.count_ones()
    }

    /// 1.0 where set, 0.0 elsewhere.
    pub fn to_image(&self) -> Image {
        Image::from_raw(
            self.width,
            self.height,
            self.bits
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        )
    }
}

/// Returns `u + η` with `η` i.i.d. normal(0, sigma²), deterministic per `(sigma, seed, dims)`.
pub fn add_gaussian_noise(u: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(u.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(u.map(|v| v + normal.sample(&mut rng)))
}

/// Peak signal-to-noise ratio in dB, `-20 log10(‖u - ũ‖₂ / (255 N))`.
///
/// `N` is the side length; for a non-square grid `sqrt(width · height)` is used,
/// which coincides with the side length on square images. Identical images give
/// `f64::INFINITY`.
pub fn psnr(u: &Image, u_tilde: &Image) -> Result<f64> {
    u.ensure_same_dims(u_tilde)?;
    let err = u.sub(u_tilde).norm2();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let n = (u.len() as f64).sqrt();
    Ok(-20.0 * (err / (255.0 * n)).log10())
}
