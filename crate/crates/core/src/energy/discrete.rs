//! Resolution-weighted discrete energy `F_n` and its resolution-scaled band weights.

use crate::degrade::DegradationOp;
use crate::error::{Error, Result};
use crate::framelet::{Band, FrameTransform, TensorFilterBank};
use crate::image::Image;

/// How band coefficients treat the array boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Circular correlation; every pixel is summed.
    #[default]
    Periodic,
    /// Only indices whose filter support stays inside the array are summed.
    Interior,
}

/// Index sets, scalar weights and resolution of the energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpec {
    pub i_set: Vec<Band>,
    pub i_prime: Vec<Band>,
    pub i_dprime: Vec<Band>,
    pub lambda: f64,
    pub gamma: f64,
    pub rho: f64,
    /// Resolution; the meshsize is `2^{-n}`.
    pub n: u32,
    pub boundary: Boundary,
}

/// `α ≥ β` componentwise with `α ≠ β`.
pub fn dominates(a: Band, b: Band) -> bool {
    a.0 >= b.0 && a.1 >= b.1 && a != b
}

impl EnergySpec {
    pub fn new(i_set: Vec<Band>, i_prime: Vec<Band>, i_dprime: Vec<Band>, n: u32) -> Result<Self> {
        let spec = EnergySpec {
            i_set,
            i_prime,
            i_dprime,
            lambda: 1.0,
            gamma: 1.0,
            rho: 1.0,
            n,
            boundary: Boundary::Periodic,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn meshsize(&self) -> f64 {
        (-(self.n as f64)).exp2()
    }

    pub fn with_weights(mut self, lambda: f64, gamma: f64, rho: f64) -> Self {
        self.lambda = lambda;
        self.gamma = gamma;
        self.rho = rho;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_resolution(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    /// Some `α ∈ I` must dominate every `β ∈ I′`; weights must be nonnegative.
    pub fn validate(&self) -> Result<()> {
        let ok = self.i_prime.is_empty()
            || self
                .i_set
                .iter()
                .any(|&a| self.i_prime.iter().all(|&b| dominates(a, b)));
        if !ok {
            return Err(Error::InvalidParameter(
                "no band in I dominates every band in I'".into(),
            ));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("rho", self.rho),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// `λ_α = (2^{|α|(n−1)} / c_α)²` for `α ∈ I`, 0 for the other bands; indexed like `bank.bands()`.
pub fn a2_weights(bank: &TensorFilterBank, n: u32, set: &[Band]) -> Result<Vec<f64>> {
    for b in set {
        if bank.band_index(*b).is_none() {
            return Err(Error::InvalidParameter(format!(
                "band {b:?} is not in the bank"
            )));
        }
    }
    bank.bands()
        .iter()
        .map(|&band| {
            if !set.contains(&band) {
                return Ok(0.0);
            }
            let c = bank.c_alpha(band);
            if c == 0.0 || !c.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "c_alpha of band {band:?} is {c}"
                )));
            }
            let order = (band.0 + band.1) as f64;
            Ok((2.0 * order * (n as f64 - 1.0)).exp2() / (c * c))
        })
        .collect()
}

/// The four terms of `F_n` and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub smooth: f64,
    pub edge: f64,
    pub regularity: f64,
    pub fidelity: f64,
    pub total: f64,
}

/// Level-0 band planes `W_α x` restricted to the summation region.
///
/// Returns `(planes, region)`; `region` lists `(row, col)` offsets into `x`.
pub(crate) fn band_planes(
    x: &Image,
    bank: &TensorFilterBank,
    boundary: Boundary,
) -> Result<(Vec<Vec<f64>>, Region)> {
    let (w, h) = x.dims();
    match boundary {
        Boundary::Periodic => {
            let t = FrameTransform::new(bank.clone(), 1)?;
            let c = t.analysis(x)?;
            let planes = (0..bank.band_count())
                .map(|b| c.plane(0, b).to_vec())
                .collect();
            Ok((
                planes,
                Region {
                    row0: 0,
                    col0: 0,
                    rows: h,
                    cols: w,
                },
            ))
        }
        Boundary::Interior => {
            let hw = bank.half_width();
            if w <= 2 * hw || h <= 2 * hw {
                return Err(Error::ImageTooSmall {
                    size: w.min(h),
                    levels: 1,
                    required: 2 * hw + 1,
                });
            }
            let region = Region {
                row0: hw,
                col0: hw,
                rows: h - 2 * hw,
                cols: w - 2 * hw,
            };
            let uni = bank.univariate();
            let planes = bank
                .bands()
                .iter()
                .map(|&(a1, a2)| {
                    let (q1, q2) = (uni.filter(a1), uni.filter(a2));
                    let mut out = Vec::with_capacity(region.rows * region.cols);
                    for r in region.row0..region.row0 + region.rows {
                        for c in region.col0..region.col0 + region.cols {
                            let mut acc = 0.0;
                            for (k2, v2) in q2.iter() {
                                let rr = (r as isize + k2) as usize;
                                for (k1, v1) in q1.iter() {
                                    acc += v1 * v2 * x.get(rr, (c as isize + k1) as usize);
                                }
                            }
                            out.push(acc);
                        }
                    }
                    out
                })
                .collect();
            Ok((planes, region))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Region {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Region {
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows)
            .flat_map(move |i| (0..self.cols).map(move |j| (self.row0 + i, self.col0 + j)))
    }
}

fn weighted_norms(planes: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n = planes.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; n];
    for (p, &w) in planes.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        acc.iter_mut().zip(p).for_each(|(a, x)| *a += w * x * x);
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// `F_n(u, v)` with a single-level transform shared by all three terms.
///
/// The three ℓ1 terms sum over the interior index set (everything for periodic
/// boundaries); the fidelity sums over the whole array. Every sum carries `h²`.
pub fn discrete_energy(
    u: &Image,
    v: &Image,
    bank: &TensorFilterBank,
    spec: &EnergySpec,
    op: &DegradationOp,
    f: &Image,
) -> Result<EnergyTerms> {
    spec.validate()?;
    u.ensure_same_dims(v)?;
    u.ensure_same_dims(f)?;
    let h2 = spec.meshsize().powi(2);
    let lam = a2_weights(bank, spec.n, &spec.i_set)?;
    let gam = a2_weights(bank, spec.n, &spec.i_prime)?;
    let rho = a2_weights(bank, spec.n, &spec.i_dprime)?;
    let (wu, region) = band_planes(u, bank, spec.boundary)?;
    let (wv, _) = band_planes(v, bank, spec.boundary)?;
    let g1 = weighted_norms(&wu, &lam);
    let g2 = weighted_norms(&wu, &gam);
    let g3 = weighted_norms(&wv, &rho);
    let (mut smooth, mut edge, mut regularity) = (0.0, 0.0, 0.0);
    for (i, (r, c)) in region.iter().enumerate() {
        let vk = v.get(r, c);
        smooth += (1.0 - vk) * g1[i];
        edge += vk * g2[i];
        regularity += g3[i];
    }
    let fidelity = 0.5 * h2 * op.apply(u)?.sub(f).norm2().powi(2);
    let smooth = spec.lambda * h2 * smooth;
    let edge = spec.gamma * h2 * edge;
    let regularity = spec.rho * h2 * regularity;
    Ok(EnergyTerms {
        smooth,
        edge,
        regularity,
        fidelity,
        total: smooth + edge + regularity + fidelity,
    })
}
