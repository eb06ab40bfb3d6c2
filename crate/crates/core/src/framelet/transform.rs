//! Undecimated multi-level framelet analysis `W` and its adjoint `Wᵀ` under
//! periodic boundary conditions.
//!
//! Level `l` correlates the running low-pass `c_l` with the à trous filters
//! `q̃_{l,α}`; the tensor masks are applied separably, columns first.

use rayon::prelude::*;

use super::bank::Filter;
use super::tensor::{Band, TensorFilterBank};
use crate::error::{Error, Result};
use crate::image::Image;

/// Coefficient stack: `L·|B|` high-pass planes followed by one low-pass plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCoeffs {
    width: usize,
    height: usize,
    levels: usize,
    bands: usize,
    data: Vec<f64>,
}

impl FrameCoeffs {
    pub fn zeros(width: usize, height: usize, levels: usize, bands: usize) -> Self {
        FrameCoeffs {
            width,
            height,
            levels,
            bands,
            data: vec![0.0; width * height * (levels * bands + 1)],
        }
    }

    pub fn zeros_like(other: &FrameCoeffs) -> Self {
        Self::zeros(other.width, other.height, other.levels, other.bands)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn band_count(&self) -> usize {
        self.bands
    }

    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    /// `L·|B| + 1`.
    pub fn plane_count(&self) -> usize {
        self.levels * self.bands + 1
    }

    pub fn plane(&self, level: usize, band: usize) -> &[f64] {
        assert!(level < self.levels && band < self.bands);
        let n = self.plane_len();
        let p = level * self.bands + band;
        &self.data[p * n..(p + 1) * n]
    }

    pub fn plane_mut(&mut self, level: usize, band: usize) -> &mut [f64] {
        assert!(level < self.levels && band < self.bands);
        let n = self.plane_len();
        let p = level * self.bands + band;
        &mut self.data[p * n..(p + 1) * n]
    }

    /// All high-pass planes of one level, contiguous.
    pub fn level(&self, level: usize) -> &[f64] {
        let n = self.plane_len() * self.bands;
        &self.data[level * n..(level + 1) * n]
    }

    pub fn level_mut(&mut self, level: usize) -> &mut [f64] {
        let n = self.plane_len() * self.bands;
        &mut self.data[level * n..(level + 1) * n]
    }

    pub fn highpass(&self) -> &[f64] {
        &self.data[..self.levels * self.bands * self.plane_len()]
    }

    pub fn highpass_mut(&mut self) -> &mut [f64] {
        let end = self.levels * self.bands * self.plane_len();
        &mut self.data[..end]
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.data[self.levels * self.bands * self.plane_len()..]
    }

    pub fn lowpass_mut(&mut self) -> &mut [f64] {
        let start = self.levels * self.bands * self.plane_len();
        &mut self.data[start..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn plane_image(&self, level: usize, band: usize) -> Image {
        Image::from_raw(self.width, self.height, self.plane(level, band).to_vec())
    }

    pub fn lowpass_image(&self) -> Image {
        Image::from_raw(self.width, self.height, self.lowpass().to_vec())
    }

    pub fn same_shape(&self, other: &FrameCoeffs) -> bool {
        self.dims() == other.dims() && self.levels == other.levels && self.bands == other.bands
    }

    pub fn ensure_same_shape(&self, other: &FrameCoeffs) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "coefficients {}x{} L={} |B|={} vs {}x{} L={} |B|={}",
                self.width,
                self.height,
                self.levels,
                self.bands,
                other.width,
                other.height,
                other.levels,
                other.bands
            )))
        }
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &FrameCoeffs) {
        assert!(self.same_shape(other));
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += s * b);
    }

    /// `self - other`.
    pub fn sub(&self, other: &FrameCoeffs) -> FrameCoeffs {
        assert!(self.same_shape(other));
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &FrameCoeffs) -> FrameCoeffs {
        assert!(self.same_shape(other));
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn scale(&self, s: f64) -> FrameCoeffs {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn dot(&self, other: &FrameCoeffs) -> f64 {
        assert!(self.same_shape(other));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A tensor bank applied with a fixed number of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTransform {
    bank: TensorFilterBank,
    levels: usize,
}

impl FrameTransform {
    pub fn new(bank: TensorFilterBank, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidParameter(
                "transform needs at least one level".into(),
            ));
        }
        if levels > 16 {
            return Err(Error::InvalidParameter(format!(
                "{levels} levels is unreasonably deep"
            )));
        }
        Ok(FrameTransform { bank, levels })
    }

    pub fn bank(&self) -> &TensorFilterBank {
        &self.bank
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn bands(&self) -> &[Band] {
        self.bank.bands()
    }

    /// Smallest side length whose period exceeds the deepest cascade support.
    pub fn min_size(&self) -> usize {
        2 * self.bank.half_width() * ((1usize << self.levels) - 1) + 1
    }

    pub fn check_size(&self, width: usize, height: usize) -> Result<()> {
        let required = self.min_size();
        let size = width.min(height);
        if size < required {
            return Err(Error::ImageTooSmall {
                size,
                levels: self.levels,
                required,
            });
        }
        Ok(())
    }

    pub fn zeros(&self, width: usize, height: usize) -> FrameCoeffs {
        FrameCoeffs::zeros(width, height, self.levels, self.bank.band_count())
    }

    /// `W u`.
    pub fn analysis(&self, u: &Image) -> Result<FrameCoeffs> {
        let (w, h) = u.dims();
        self.check_size(w, h)?;
        let mut out = self.zeros(w, h);
        self.analysis_into(u.as_slice(), &mut out);
        Ok(out)
    }

    /// `W u` written into a preallocated stack of matching shape.
    pub fn analysis_into(&self, u: &[f64], out: &mut FrameCoeffs) {
        let (w, h) = out.dims();
        assert_eq!(u.len(), w * h);
        assert_eq!(out.levels(), self.levels);
        let uni = self.bank.univariate();
        let n = w * h;
        let nb = self.bank.band_count();
        let mut c = u.to_vec();
        for l in 0..self.levels {
            let step = 1usize << l;
            let cols: Vec<Vec<f64>> = uni
                .filters()
                .par_iter()
                .map(|q| {
                    let mut t = vec![0.0; n];
                    add_corr_cols(&mut t, &c, w, h, q, step);
                    t
                })
                .collect();
            out.level_mut(l)
                .par_chunks_mut(n)
                .zip(self.bank.bands().par_iter())
                .for_each(|(plane, &(a1, a2))| {
                    plane.fill(0.0);
                    add_corr_rows(plane, &cols[a1], w, h, uni.filter(a2), step);
                });
            let mut next = vec![0.0; n];
            add_corr_rows(&mut next, &cols[0], w, h, uni.lowpass(), step);
            c = next;
        }
        debug_assert_eq!(out.plane_count(), self.levels * nb + 1);
        out.lowpass_mut().copy_from_slice(&c);
    }

    /// `Wᵀ c`.
    pub fn synthesis(&self, coeffs: &FrameCoeffs) -> Result<Image> {
        let (w, h) = coeffs.dims();
        if coeffs.levels() != self.levels || coeffs.band_count() != self.bank.band_count() {
            return Err(Error::ShapeMismatch(format!(
                "coefficients have L={} |B|={}, transform expects L={} |B|={}",
                coeffs.levels(),
                coeffs.band_count(),
                self.levels,
                self.bank.band_count()
            )));
        }
        self.check_size(w, h)?;
        Ok(Image::from_raw(w, h, self.synthesis_raw(coeffs)))
    }

    pub(crate) fn synthesis_raw(&self, coeffs: &FrameCoeffs) -> Vec<f64> {
        let (w, h) = coeffs.dims();
        let n = w * h;
        let uni = self.bank.univariate();
        let m = uni.order();
        let mut r = coeffs.lowpass().to_vec();
        for l in (0..self.levels).rev() {
            let step = 1usize << l;
            let per_a1: Vec<Vec<f64>> = (0..=m)
                .into_par_iter()
                .map(|a1| {
                    let mut t = vec![0.0; n];
                    for a2 in 0..=m {
                        let src = if (a1, a2) == (0, 0) {
                            &r[..]
                        } else {
                            let b = self.bank.band_index((a1, a2)).expect("band in set");
                            coeffs.plane(l, b)
                        };
                        add_conv_rows(&mut t, src, w, h, uni.filter(a2), step);
                    }
                    let mut s = vec![0.0; n];
                    add_conv_cols(&mut s, &t, w, h, uni.filter(a1), step);
                    s
                })
                .collect();
            let mut next = vec![0.0; n];
            for s in &per_a1 {
                next.iter_mut().zip(s).for_each(|(a, b)| *a += b);
            }
            r = next;
        }
        r
    }
}

/// `W u` for a bank and level count.
pub fn analysis(u: &Image, bank: &TensorFilterBank, levels: usize) -> Result<FrameCoeffs> {
    FrameTransform::new(bank.clone(), levels)?.analysis(u)
}

/// `Wᵀ c`; the level count is read from the coefficients.
pub fn synthesis(coeffs: &FrameCoeffs, bank: &TensorFilterBank) -> Result<Image> {
    FrameTransform::new(bank.clone(), coeffs.levels())?.synthesis(coeffs)
}

fn shift_of(k: isize, step: usize, n: usize) -> usize {
    (k * step as isize).rem_euclid(n as isize) as usize
}

/// `dst[r][c] += Σ_k q[k] src[r][c + s k]`, indices mod `w`.
fn add_corr_cols(dst: &mut [f64], src: &[f64], w: usize, h: usize, q: &Filter, step: usize) {
    for (k, qk) in q.iter() {
        if qk == 0.0 {
            continue;
        }
        let sh = shift_of(k, step, w);
        for r in 0..h {
            let d = &mut dst[r * w..(r + 1) * w];
            let s = &src[r * w..(r + 1) * w];
            let (head, tail) = d.split_at_mut(w - sh);
            head.iter_mut()
                .zip(&s[sh..])
                .for_each(|(a, b)| *a += qk * b);
            tail.iter_mut()
                .zip(&s[..sh])
                .for_each(|(a, b)| *a += qk * b);
        }
    }
}

/// `dst[r][c] += Σ_k q[k] src[r][c − s k]`, indices mod `w`.
fn add_conv_cols(dst: &mut [f64], src: &[f64], w: usize, h: usize, q: &Filter, step: usize) {
    for (k, qk) in q.iter() {
        if qk == 0.0 {
            continue;
        }
        let sh = shift_of(-k, step, w);
        for r in 0..h {
            let d = &mut dst[r * w..(r + 1) * w];
            let s = &src[r * w..(r + 1) * w];
            let (head, tail) = d.split_at_mut(w - sh);
            head.iter_mut()
                .zip(&s[sh..])
                .for_each(|(a, b)| *a += qk * b);
            tail.iter_mut()
                .zip(&s[..sh])
                .for_each(|(a, b)| *a += qk * b);
        }
    }
}

/// `dst[r][c] += Σ_k q[k] src[r + s k][c]`, indices mod `h`.
fn add_corr_rows(dst: &mut [f64], src: &[f64], w: usize, h: usize, q: &Filter, step: usize) {
    for (k, qk) in q.iter() {
        if qk == 0.0 {
            continue;
        }
        let sh = shift_of(k, step, h);
        for r in 0..h {
            let sr = (r + sh) % h;
            dst[r * w..(r + 1) * w]
                .iter_mut()
                .zip(&src[sr * w..(sr + 1) * w])
                .for_each(|(a, b)| *a += qk * b);
        }
    }
}

/// `dst[r][c] += Σ_k q[k] src[r − s k][c]`, indices mod `h`.
fn add_conv_rows(dst: &mut [f64], src: &[f64], w: usize, h: usize, q: &Filter, step: usize) {
    for (k, qk) in q.iter() {
        if qk == 0.0 {
            continue;
        }
        let sh = shift_of(-k, step, h);
        for r in 0..h {
            let sr = (r + sh) % h;
            dst[r * w..(r + 1) * w]
                .iter_mut()
                .zip(&src[sr * w..(sr + 1) * w])
                .for_each(|(a, b)| *a += qk * b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framelet::bank::{cubic_bspline_bank, linear_bspline_bank};
    use crate::framelet::tensor::cascade_mask;

    fn lin(levels: usize) -> FrameTransform {
        FrameTransform::new(
            TensorFilterBank::with_depth(linear_bspline_bank(), 8).unwrap(),
            levels,
        )
        .unwrap()
    }

    fn cub(levels: usize) -> FrameTransform {
        FrameTransform::new(
            TensorFilterBank::with_depth(cubic_bspline_bank(), 8).unwrap(),
            levels,
        )
        .unwrap()
    }

    fn pseudo_random(w: usize, h: usize, seed: u64) -> Image {
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        Image::from_fn(w, h, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        })
    }

    /// Direct periodic correlation with an explicit cascade mask.
    fn direct_corr(
        u: &Image,
        bank: &crate::framelet::bank::UnivariateFilterBank,
        level: u32,
        band: Band,
    ) -> Vec<f64> {
        let m = cascade_mask(bank, level, band);
        let (w, h) = u.dims();
        let mut out = vec![0.0; w * h];
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0.0;
                for ((k1, k2), v) in m.iter() {
                    let rr = (r as isize + k2).rem_euclid(h as isize) as usize;
                    let cc = (c as isize + k1).rem_euclid(w as isize) as usize;
                    acc += v * u.get(rr, cc);
                }
                out[r * w + c] = acc;
            }
        }
        out
    }

    #[test]
    fn plane_count() {
        let t = cub(2);
        let c = t.analysis(&Image::zeros(32, 32)).unwrap();
        assert_eq!(c.plane_count(), 2 * 24 + 1);
    }

    #[test]
    fn matches_explicit_cascade_masks() {
        let u = pseudo_random(20, 18, 3);
        for t in [lin(2), cub(1)] {
            let c = t.analysis(&u).unwrap();
            let uni = t.bank().univariate();
            for l in 0..t.levels() {
                for (bi, &band) in t.bands().iter().enumerate() {
                    let d = direct_corr(&u, uni, l as u32, band);
                    let err = d
                        .iter()
                        .zip(c.plane(l, bi))
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    assert!(err < 1e-10, "level {l} band {band:?}: {err}");
                }
            }
            let low = direct_corr(&u, uni, t.levels() as u32 - 1, (0, 0));
            let err = low
                .iter()
                .zip(c.lowpass())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn perfect_reconstruction_small() {
        let u = pseudo_random(24, 24, 9);
        for t in [lin(1), lin(3), cub(2)] {
            let back = t.synthesis(&t.analysis(&u).unwrap()).unwrap();
            assert!(back.max_abs_diff(&u) < 1e-10);
        }
    }

    #[test]
    fn delta_response_is_reflected_mask() {
        let t = lin(1);
        let mut u = Image::zeros(8, 8);
        u.set(0, 0, 1.0);
        let c = t.analysis(&u).unwrap();
        let b = t.bank().band_index((1, 0)).unwrap();
        let q = t.bank().mask((1, 0));
        let plane = c.plane(0, b);
        for r in 0..8isize {
            for col in 0..8isize {
                let k1 = if col > 4 { -(col - 8) } else { -col };
                let k2 = if r > 4 { -(r - 8) } else { -r };
                assert!((plane[(r * 8 + col) as usize] - q.get(k1, k2)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn too_small_rejected() {
        let t = cub(3);
        assert!(matches!(
            t.analysis(&Image::zeros(16, 16)),
            Err(Error::ImageTooSmall { required: 29, .. })
        ));
    }

    #[test]
    fn synthesis_rejects_wrong_shape() {
        let c = lin(2).analysis(&Image::zeros(16, 16)).unwrap();
        assert!(lin(1).synthesis(&c).is_err());
    }
}
