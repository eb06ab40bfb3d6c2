//! Cascade evaluation of the refinable function `φ` and framelets `ψ_l` on
//! dyadic grids, and the constants `c_l = (−1)^l ∫ x^l ψ_l(x) dx / l!`.

use super::bank::{Filter, UnivariateFilterBank};
use crate::error::{Error, Result};

/// Default cascade depth for `c_α`.
pub const DEFAULT_DEPTH: u32 = 12;

/// Samples `g(a + i·2^{-depth})`, `i = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSamples {
    pub start: f64,
    pub depth: u32,
    pub values: Vec<f64>,
}

impl DyadicSamples {
    pub fn step(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step()
    }

    pub fn end(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    /// Riemann sum `Σ_i g(x_i) w(x_i) Δx`.
    pub fn integrate_with(&self, w: impl Fn(f64) -> f64) -> f64 {
        let h = self.step();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * w(self.x(i)))
            .sum::<f64>()
            * h
    }
}

/// Values of `φ` at the integers of its support, normalized to sum 1.
///
/// `φ(j) = 2 Σ_k q₀[k] φ(2j − k)` is an eigenvector problem for the matrix
/// `M[j, i] = 2 q₀[2j − i]`; it is solved by power iteration.
pub fn integer_values(q0: &Filter) -> Result<Vec<f64>> {
    let (a, b) = (q0.first(), q0.last());
    let n = (b - a + 1) as usize;
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let m = |j: usize, i: usize| 2.0 * q0.get(2 * (a + j as isize) - (a + i as isize));
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let mut next = vec![0.0; n];
        for (j, nj) in next.iter_mut().enumerate() {
            *nj = (0..n).map(|i| m(j, i) * v[i]).sum();
        }
        let s: f64 = next.iter().sum();
        if !s.is_finite() || s.abs() < 1e-300 {
            return Err(Error::CascadeDiverged(
                "refinement matrix has no normalizable fixed point".into(),
            ));
        }
        next.iter_mut().for_each(|x| *x /= s);
        let diff = next
            .iter()
            .zip(&v)
            .fold(0.0f64, |d, (x, y)| d.max((x - y).abs()));
        v = next;
        if diff < 1e-16 {
            return Ok(v);
        }
    }
    Err(Error::CascadeDiverged(
        "power iteration on the refinement matrix did not converge".into(),
    ))
}

/// Refinable function `φ` with mask `q₀` on the grid `2^{-depth} ℤ ∩ supp φ`.
pub fn refinable_function(q0: &Filter, depth: u32) -> Result<DyadicSamples> {
    if (q0.sum() - 1.0).abs() > 1e-12 {
        return Err(Error::CascadeDiverged(format!(
            "refinement mask sums to {} instead of 1",
            q0.sum()
        )));
    }
    let a = q0.first();
    let span = (q0.last() - a) as usize;
    let mut values = integer_values(q0)?;
    for j in 0..depth {
        let old_scale = 1isize << j;
        let len = span * (1usize << (j + 1)) + 1;
        let mut next = vec![0.0; len];
        for (i, slot) in next.iter_mut().enumerate() {
            if i % 2 == 0 {
                *slot = values[i / 2];
                continue;
            }
            let mut acc = 0.0;
            for (k, q) in q0.iter() {
                let idx = (a - k) * old_scale + i as isize;
                if idx >= 0 && (idx as usize) < values.len() {
                    acc += q * values[idx as usize];
                }
            }
            *slot = 2.0 * acc;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::CascadeDiverged(format!(
                "non-finite values at depth {j}"
            )));
        }
        values = next;
    }
    Ok(DyadicSamples {
        start: a as f64,
        depth,
        values,
    })
}

/// Framelet `ψ_l(x) = 2 Σ_k q_l[k] φ(2x − k)` on the grid `2^{-depth} ℤ`.
pub fn framelet_function(
    bank: &UnivariateFilterBank,
    l: usize,
    depth: u32,
) -> Result<DyadicSamples> {
    if depth == 0 {
        return Err(Error::InvalidParameter(
            "framelet sampling needs depth >= 1".into(),
        ));
    }
    let q = bank.filter(l);
    let phi = refinable_function(bank.lowpass(), depth)?;
    let a = bank.lowpass().first();
    let span = (bank.lowpass().last() - a) as usize + q.len() - 1;
    // ψ lives on [(a + first)/2, (b + last)/2], an interval of length span/2.
    let len = span * (1usize << (depth - 1)) + 1;
    let scale = 1isize << depth;
    let mut values = vec![0.0; len];
    for (i, slot) in values.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, c) in q.iter() {
            let idx = (q.first() - k) * scale + 2 * i as isize;
            if idx >= 0 && (idx as usize) < phi.values.len() {
                acc += c * phi.values[idx as usize];
            }
        }
        *slot = 2.0 * acc;
    }
    Ok(DyadicSamples {
        start: (a + q.first()) as f64 / 2.0,
        depth,
        values,
    })
}

/// Univariate constant `c_l = (−1)^l (∫ x^l ψ_l(x) dx) / l!`, with `c_0 = ∫ φ`.
pub fn c_alpha_estimate(bank: &UnivariateFilterBank, l: usize, depth: u32) -> Result<f64> {
    if depth < 8 {
        return Err(Error::InvalidParameter(format!(
            "cascade depth {depth} below the minimum of 8"
        )));
    }
    if l > bank.order() {
        return Err(Error::InvalidParameter(format!(
            "band {l} exceeds bank order {}",
            bank.order()
        )));
    }
    let value = if l == 0 {
        refinable_function(bank.lowpass(), depth)?.integrate_with(|_| 1.0)
    } else {
        let psi = framelet_function(bank, l, depth)?;
        let fact: f64 = (1..=l).map(|i| i as f64).product();
        let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * psi.integrate_with(|x| x.powi(l as i32)) / fact
    };
    if !value.is_finite() || value.abs() < 1e-12 {
        return Err(Error::CascadeDiverged(format!(
            "c_{l} = {value} is zero or non-finite"
        )));
    }
    Ok(value)
}

/// Two-dimensional constant `c_α = c_{α₁} c_{α₂}`.
pub fn c_alpha_2d(bank: &UnivariateFilterBank, band: (usize, usize), depth: u32) -> Result<f64> {
    Ok(c_alpha_estimate(bank, band.0, depth)? * c_alpha_estimate(bank, band.1, depth)?)
}
