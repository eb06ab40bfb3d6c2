//! Measurement operators `A`: identity, pixel mask and periodic blur.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::image::{io, BinaryPlane, Image};

/// Small blur kernel, normalized to sum 1.
///
/// Tap `(i, j)` (row `i`, column `j`) sits at offset `(i − ci, j − cj)` from the
/// center `ci = (rows − 1)/2`, `cj = (cols − 1)/2`, rounded down.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    rows: usize,
    cols: usize,
    taps: Vec<f64>,
}

impl BlurKernel {
    pub fn new(rows: usize, cols: usize, taps: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || taps.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} taps for a {rows}x{cols} kernel",
                taps.len()
            )));
        }
        if taps.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("kernel taps must be finite".into()));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "kernel sums to {sum}, not 1"
            )));
        }
        Ok(BlurKernel { rows, cols, taps })
    }

    /// Divides by the tap sum first.
    pub fn normalized(rows: usize, cols: usize, taps: Vec<f64>) -> Result<Self> {
        let sum: f64 = taps.iter().sum();
        if sum == 0.0 || !sum.is_finite() {
            return Err(Error::InvalidParameter("kernel taps sum to zero".into()));
        }
        Self::new(rows, cols, taps.into_iter().map(|v| v / sum).collect())
    }

    pub fn delta() -> Self {
        BlurKernel {
            rows: 1,
            cols: 1,
            taps: vec![1.0],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.taps[i * self.cols + j]
    }

    pub fn center(&self) -> (usize, usize) {
        ((self.rows - 1) / 2, (self.cols - 1) / 2)
    }

    /// `((dr, dc), value)` offsets from the center.
    pub fn offsets(&self) -> impl Iterator<Item = ((isize, isize), f64)> + '_ {
        let (ci, cj) = self.center();
        self.taps.iter().enumerate().map(move |(idx, &v)| {
            let (i, j) = (idx / self.cols, idx % self.cols);
            ((i as isize - ci as isize, j as isize - cj as isize), v)
        })
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows.is_multiple_of(2) || self.cols.is_multiple_of(2) {
            return false;
        }
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| self.get(i, j) == self.get(self.rows - 1 - i, self.cols - 1 - j))
        })
    }
}

/// MATLAB `fspecial('gaussian', hsize, sigma)`.
///
/// Coordinates run over `−(hsize−1)/2 … (hsize−1)/2`; entries below
/// `ε · max` are zeroed before normalizing.
pub fn matlab_gaussian_kernel(hsize: usize, sigma: f64) -> Result<BlurKernel> {
    if hsize == 0 {
        return Err(Error::InvalidParameter("hsize must be positive".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let half = (hsize as f64 - 1.0) / 2.0;
    let mut taps = Vec::with_capacity(hsize * hsize);
    for i in 0..hsize {
        for j in 0..hsize {
            let (y, x) = (i as f64 - half, j as f64 - half);
            taps.push((-(x * x + y * y) / (2.0 * sigma * sigma)).exp());
        }
    }
    let max = taps.iter().cloned().fold(0.0, f64::max);
    for t in taps.iter_mut() {
        if *t < f64::EPSILON * max {
            *t = 0.0;
        }
    }
    BlurKernel::normalized(hsize, hsize, taps)
}

/// The linear operator `A`.
#[derive(Debug, Clone, PartialEq)]
pub enum DegradationOp {
    Identity,
    /// 1 marks an observed pixel, 0 a missing one.
    InpaintMask(BinaryPlane),
    PeriodicBlur(BlurKernel),
}

impl DegradationOp {
    fn check(&self, u: &Image) -> Result<()> {
        match self {
            DegradationOp::InpaintMask(m) if m.dims() != u.dims() => {
                Err(Error::DimensionMismatch {
                    expected: m.dims(),
                    got: u.dims(),
                })
            }
            DegradationOp::PeriodicBlur(k) if k.rows > u.height() || k.cols > u.width() => {
                Err(Error::DimensionMismatch {
                    expected: (k.cols, k.rows),
                    got: u.dims(),
                })
            }
            _ => Ok(()),
        }
    }

    /// `A u`.
    pub fn apply(&self, u: &Image) -> Result<Image> {
        self.check(u)?;
        Ok(match self {
            DegradationOp::Identity => u.clone(),
            DegradationOp::InpaintMask(m) => mask_apply(m, u),
            DegradationOp::PeriodicBlur(k) => periodic_filter(k, u, false),
        })
    }

    /// `Aᵀ w`.
    pub fn adjoint(&self, w: &Image) -> Result<Image> {
        self.check(w)?;
        Ok(match self {
            DegradationOp::Identity => w.clone(),
            DegradationOp::InpaintMask(m) => mask_apply(m, w),
            DegradationOp::PeriodicBlur(k) => periodic_filter(k, w, true),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            DegradationOp::Identity => "identity",
            DegradationOp::InpaintMask(_) => "inpaint",
            DegradationOp::PeriodicBlur(_) => "blur",
        }
    }
}

fn mask_apply(m: &BinaryPlane, u: &Image) -> Image {
    let data = u
        .as_slice()
        .iter()
        .zip(m.bits())
        .map(|(&v, &b)| if b { v } else { 0.0 })
        .collect();
    Image::from_raw(u.width(), u.height(), data)
}

/// Circular convolution with the kernel, or correlation when `adjoint`.
fn periodic_filter(k: &BlurKernel, u: &Image, adjoint: bool) -> Image {
    let (w, h) = (u.width() as isize, u.height() as isize);
    let src = u.as_slice();
    let mut out = vec![0.0; src.len()];
    for ((dr, dc), t) in k.offsets() {
        if t == 0.0 {
            continue;
        }
        let (dr, dc) = if adjoint { (-dr, -dc) } else { (dr, dc) };
        for r in 0..h {
            let sr = (r - dr).rem_euclid(h) as usize;
            for c in 0..w {
                let sc = (c - dc).rem_euclid(w) as usize;
                out[(r * w + c) as usize] += t * src[sr * w as usize + sc];
            }
        }
    }
    Image::from_raw(u.width(), u.height(), out)
}

/// DFT of the kernel embedded in a `width × height` grid with its center at `(0, 0)`.
pub fn freq_symbol(kernel: &BlurKernel, width: usize, height: usize) -> Result<Vec<Complex64>> {
    if kernel.rows > height || kernel.cols > width {
        return Err(Error::InvalidParameter(format!(
            "{}x{} kernel does not fit a {width}x{height} grid",
            kernel.cols, kernel.rows
        )));
    }
    let mut embedded = vec![0.0; width * height];
    for ((dr, dc), t) in kernel.offsets() {
        let r = dr.rem_euclid(height as isize) as usize;
        let c = dc.rem_euclid(width as isize) as usize;
        embedded[r * width + c] += t;
    }
    Ok(Fft2::new(width, height).forward_real(&embedded))
}

/// Exact solver for `(AᵀA + s I) x = y`, reused across iterations.
#[derive(Debug, Clone)]
pub struct NormalInverse {
    kind: NormalKind,
    shift: f64,
}

#[derive(Debug, Clone)]
enum NormalKind {
    Diagonal(Vec<f64>),
    Circulant { fft: Fft2, denom: Vec<f64> },
}

impl NormalInverse {
    pub fn new(op: &DegradationOp, width: usize, height: usize, shift: f64) -> Result<Self> {
        if shift.is_nan() || shift < 0.0 {
            return Err(Error::InvalidParameter(format!("negative shift {shift}")));
        }
        let kind = match op {
            DegradationOp::Identity => NormalKind::Diagonal(vec![1.0 + shift; width * height]),
            DegradationOp::InpaintMask(m) => {
                if m.dims() != (width, height) {
                    return Err(Error::DimensionMismatch {
                        expected: m.dims(),
                        got: (width, height),
                    });
                }
                NormalKind::Diagonal(
                    m.bits()
                        .iter()
                        .map(|&b| if b { 1.0 + shift } else { shift })
                        .collect(),
                )
            }
            DegradationOp::PeriodicBlur(k) => {
                let symbol = freq_symbol(k, width, height)?;
                NormalKind::Circulant {
                    fft: Fft2::new(width, height),
                    denom: symbol.iter().map(|s| s.norm_sqr() + shift).collect(),
                }
            }
        };
        let singular = match &kind {
            NormalKind::Diagonal(d) => d.iter().any(|&v| v <= 0.0),
            NormalKind::Circulant { denom, .. } => denom.iter().any(|&v| v <= 1e-300),
        };
        if singular {
            return Err(Error::InvalidParameter(
                "normal operator is singular; penalties must be positive".into(),
            ));
        }
        Ok(NormalInverse { kind, shift })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn solve(&self, y: &Image) -> Image {
        let data = match &self.kind {
            NormalKind::Diagonal(d) => y.as_slice().iter().zip(d).map(|(a, b)| a / b).collect(),
            NormalKind::Circulant { fft, denom } => {
                let mut spec = fft.forward_real(y.as_slice());
                spec.iter_mut().zip(denom).for_each(|(v, d)| *v /= d);
                fft.inverse_real(spec)
            }
        };
        Image::from_raw(y.width(), y.height(), data)
    }
}

/// Axis-aligned rectangle of missing pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

/// How to build an inpainting mask.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskKind {
    /// Each pixel missing independently with probability `fraction`.
    Random {
        fraction: f64,
        seed: u64,
    },
    Rectangles(Vec<Rect>),
    /// Missing where the overlay intensity is `>= threshold`.
    FromImage {
        path: PathBuf,
        threshold: f64,
    },
}

/// Builds a `width × height` mask (1 observed, 0 missing).
pub fn make_mask(kind: &MaskKind, width: usize, height: usize) -> Result<BinaryPlane> {
    match kind {
        MaskKind::Random { fraction, seed } => {
            if !(0.0..=1.0).contains(fraction) {
                return Err(Error::InvalidParameter(format!(
                    "mask fraction {fraction} outside [0, 1]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok(BinaryPlane::from_fn(width, height, |_, _| {
                rng.random::<f64>() >= *fraction
            }))
        }
        MaskKind::Rectangles(rects) => Ok(BinaryPlane::from_fn(width, height, |r, c| {
            !rects
                .iter()
                .any(|q| r >= q.row && r < q.row + q.height && c >= q.col && c < q.col + q.width)
        })),
        MaskKind::FromImage { path, threshold } => {
            let overlay = io::load(path)?;
            if overlay.dims() != (width, height) {
                return Err(Error::DimensionMismatch {
                    expected: (width, height),
                    got: overlay.dims(),
                });
            }
            Ok(BinaryPlane::from_fn(width, height, |r, c| {
                overlay.get(r, c) < *threshold
            }))
        }
    }
}
