//! Univariate B-spline framelet filter banks and their frequency-domain checks.

use std::f64::consts::{PI, SQRT_2};

use rustfft::num_complex::Complex64;

/// A finitely supported real sequence `q[k]`, `k = first, first + 1, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    first: isize,
    taps: Vec<f64>,
}

impl Filter {
    pub fn new(first: isize, taps: Vec<f64>) -> Self {
        assert!(!taps.is_empty(), "filter needs at least one tap");
        assert!(
            taps.iter().all(|t| t.is_finite()),
            "filter taps must be finite"
        );
        Filter { first, taps }
    }

    /// Filter with odd length, centered on offset 0.
    pub fn centered(taps: Vec<f64>) -> Self {
        assert!(taps.len() % 2 == 1, "centered filters need odd length");
        let first = -((taps.len() / 2) as isize);
        Filter::new(first, taps)
    }

    pub fn first(&self) -> isize {
        self.first
    }

    pub fn last(&self) -> isize {
        self.first + self.taps.len() as isize - 1
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `q[k]`, zero outside the support.
    pub fn get(&self, k: isize) -> f64 {
        let i = k - self.first;
        if i < 0 || i as usize >= self.taps.len() {
            0.0
        } else {
            self.taps[i as usize]
        }
    }

    /// `(k, q[k])` pairs over the stored support.
    pub fn iter(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        self.taps
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.first + i as isize, v))
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// Discrete moment `Σ_k k^β q[k]`.
    pub fn moment(&self, beta: u32) -> f64 {
        self.iter()
            .map(|(k, v)| (k as f64).powi(beta as i32) * v)
            .sum()
    }

    /// `q̂(ξ) = Σ_k q[k] e^{-iξk}`.
    pub fn symbol(&self, xi: f64) -> Complex64 {
        self.iter()
            .map(|(k, v)| Complex64::from_polar(v, -xi * k as f64))
            .sum()
    }

    /// À trous upsampling: `q̃[k] = q[2^{-l} k]` on `2^l ℤ`, zero elsewhere.
    pub fn upsample(&self, level: u32) -> Filter {
        let s = 1usize << level;
        let mut taps = vec![0.0; (self.taps.len() - 1) * s + 1];
        for (i, &v) in self.taps.iter().enumerate() {
            taps[i * s] = v;
        }
        Filter::new(self.first * s as isize, taps)
    }

    /// Full linear convolution `(p ⊛ q)[k] = Σ_j p[j] q[k - j]`.
    pub fn convolve(&self, other: &Filter) -> Filter {
        let mut taps = vec![0.0; self.taps.len() + other.taps.len() - 1];
        for (i, &a) in self.taps.iter().enumerate() {
            for (j, &b) in other.taps.iter().enumerate() {
                taps[i + j] += a * b;
            }
        }
        Filter::new(self.first + other.first, taps)
    }

    pub fn scaled(&self, s: f64) -> Filter {
        Filter::new(self.first, self.taps.iter().map(|v| v * s).collect())
    }

    /// Largest `|k|` in the support.
    pub fn half_width(&self) -> usize {
        self.first.unsigned_abs().max(self.last().unsigned_abs())
    }
}

/// Which B-spline family a bank belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BankKind {
    Linear,
    Cubic,
}

impl BankKind {
    pub fn bank(self) -> UnivariateFilterBank {
        match self {
            BankKind::Linear => linear_bspline_bank(),
            BankKind::Cubic => cubic_bspline_bank(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BankKind::Linear => "linear",
            BankKind::Cubic => "cubic",
        }
    }
}

impl std::str::FromStr for BankKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(BankKind::Linear),
            "cubic" => Ok(BankKind::Cubic),
            other => Err(format!("unknown bank '{other}' (expected linear or cubic)")),
        }
    }
}

/// Refinement mask `q₀` and high-pass masks `q₁..q_m` of an order-`m` B-spline framelet.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateFilterBank {
    kind: BankKind,
    order: usize,
    filters: Vec<Filter>,
}

impl UnivariateFilterBank {
    /// Builds a bank from explicit filters, `filters[0]` being the low-pass.
    pub fn from_filters(kind: BankKind, filters: Vec<Filter>) -> Self {
        assert!(filters.len() >= 2);
        UnivariateFilterBank {
            kind,
            order: filters.len() - 1,
            filters,
        }
    }

    pub fn kind(&self) -> BankKind {
        self.kind
    }

    /// B-spline order `m`; the bank has `m + 1` filters.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    pub fn filter(&self, l: usize) -> &Filter {
        &self.filters[l]
    }

    pub fn lowpass(&self) -> &Filter {
        &self.filters[0]
    }

    /// Vanishing-moment order of each filter: entry `l` is `l`.
    pub fn vanishing_moments(&self) -> Vec<usize> {
        (0..self.filters.len()).collect()
    }

    /// Largest support half-width over all filters.
    pub fn half_width(&self) -> usize {
        self.filters
            .iter()
            .map(Filter::half_width)
            .max()
            .unwrap_or(0)
    }

    /// Largest `|Σ_k k^β q_l[k]|` over `l ≥ 1`, `β < l`.
    pub fn moment_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, q) in self.filters.iter().enumerate().skip(1) {
            for beta in 0..l as u32 {
                worst = worst.max(q.moment(beta).abs());
            }
        }
        worst
    }

    /// Same bank with filter `l` replaced; used to build corrupted banks in tests.
    pub fn with_filter(&self, l: usize, q: Filter) -> Self {
        let mut out = self.clone();
        out.filters[l] = q;
        out
    }
}

/// Piecewise linear B-spline framelet: `q₀ = ¼[1,2,1]`, `q₁ = (√2/4)[1,0,−1]`, `q₂ = ¼[−1,2,−1]`.
pub fn linear_bspline_bank() -> UnivariateFilterBank {
    let r = SQRT_2 / 4.0;
    UnivariateFilterBank::from_filters(
        BankKind::Linear,
        vec![
            Filter::centered(vec![0.25, 0.5, 0.25]),
            Filter::centered(vec![r, 0.0, -r]),
            Filter::centered(vec![-0.25, 0.5, -0.25]),
        ],
    )
}

/// Piecewise cubic B-spline framelet with refinement mask `[1,4,6,4,1]/16`.
///
/// High-pass filter `q_l` has exactly `l` vanishing moments.
pub fn cubic_bspline_bank() -> UnivariateFilterBank {
    let s6 = 6f64.sqrt() / 16.0;
    UnivariateFilterBank::from_filters(
        BankKind::Cubic,
        vec![
            Filter::centered([1.0, 4.0, 6.0, 4.0, 1.0].map(|v| v / 16.0).to_vec()),
            Filter::centered([1.0, 2.0, 0.0, -2.0, -1.0].map(|v| v / 8.0).to_vec()),
            Filter::centered([1.0, 0.0, -2.0, 0.0, 1.0].map(|v| v * s6).to_vec()),
            Filter::centered([-1.0, 2.0, 0.0, -2.0, 1.0].map(|v| v / 8.0).to_vec()),
            Filter::centered([1.0, -4.0, 6.0, -4.0, 1.0].map(|v| v / 16.0).to_vec()),
        ],
    )
}

/// Maximum deviation from the unitary extension principle over `n_freq` uniform
/// frequencies `ξ_j = −π + 2πj/n_freq`.
///
/// Both `|Σ_l |q̂_l(ξ)|² − 1|` and `|Σ_l q̂_l(ξ) conj(q̂_l(ξ+π))|` are measured.
pub fn uep_check(bank: &UnivariateFilterBank, n_freq: usize) -> f64 {
    uep_profile(bank, n_freq)
        .into_iter()
        .fold(0.0, |m, (_, d)| m.max(d))
}

/// Per-frequency UEP deviation, `(ξ, deviation)`.
pub fn uep_profile(bank: &UnivariateFilterBank, n_freq: usize) -> Vec<(f64, f64)> {
    assert!(n_freq >= 2, "n_freq must be at least 2");
    (0..n_freq)
        .map(|j| {
            let xi = -PI + 2.0 * PI * j as f64 / n_freq as f64;
            let mut power = 0.0;
            let mut cross = Complex64::new(0.0, 0.0);
            for q in bank.filters() {
                let a = q.symbol(xi);
                power += a.norm_sqr();
                cross += a * q.symbol(xi + PI).conj();
            }
            (xi, (power - 1.0).abs().max(cross.norm()))
        })
        .collect()
}
