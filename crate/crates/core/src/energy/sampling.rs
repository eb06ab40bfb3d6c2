//! The sampling operator `T_n u = {2^n ⟨u, φ_{n,k}⟩ : k ∈ M_n}`.

use rayon::prelude::*;

use super::fields::{Field, SeparableTerm, Univariate};
use crate::error::{Error, Result};
use crate::framelet::{refinable_function, DyadicSamples, Filter, UnivariateFilterBank};
use crate::image::Image;

/// Largest allowed change of `T_n u` between cascade depths `J` and `J+1`.
pub const REFINEMENT_TOL: f64 = 1e-6;

/// `T_n u` on the index set `M_n = first..=last` in both directions.
///
/// `values.get(r, c)` holds the entry for `k = (first + c, first + r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    pub n: u32,
    pub first: usize,
    pub values: Image,
}

impl GridSamples {
    pub fn last(&self) -> usize {
        self.first + self.values.width() - 1
    }

    pub fn meshsize(&self) -> f64 {
        (-(self.n as f64)).exp2()
    }
}

/// `M_n`: indices `k` whose scaled support `2^{-n}(k + supp φ)` lies in `[0,1]`.
pub fn index_range(q0: &Filter, n: u32) -> Result<(usize, usize)> {
    let first = -q0.first();
    let last = (1isize << n) - q0.last();
    if first < 0 || last < first {
        return Err(Error::InvalidParameter(format!(
            "resolution n = {n} leaves no interior sample for this bank"
        )));
    }
    Ok((first as usize, last as usize))
}

/// `K_n`: indices of `M_n` whose filter support `k + supp q_α` stays inside `M_n`.
pub fn interior_range(bank: &UnivariateFilterBank, n: u32) -> Result<(usize, usize)> {
    let (first, last) = index_range(bank.lowpass(), n)?;
    let lo = bank
        .filters()
        .iter()
        .map(|q| -q.first())
        .max()
        .unwrap_or(0)
        .max(0) as usize;
    let hi = bank
        .filters()
        .iter()
        .map(|q| q.last())
        .max()
        .unwrap_or(0)
        .max(0) as usize;
    if first + lo + hi > last {
        return Err(Error::InvalidParameter(format!(
            "resolution n = {n} leaves no interior index for this bank"
        )));
    }
    Ok((first + lo, last - hi))
}

/// `T_n u` from a cascade of depth `J` without the refinement check.
///
/// The inner products are Riemann sums on the grid `2^{-(n+J)} ℤ²`, which is
/// where the cascade values of `φ(2^n x − k)` live.
pub fn sample_t_n_unchecked(field: &Field, n: u32, q0: &Filter, depth: u32) -> Result<GridSamples> {
    if depth == 0 {
        return Err(Error::InvalidParameter(
            "sampling needs cascade depth >= 1".into(),
        ));
    }
    if n + depth > 15 {
        return Err(Error::InvalidParameter(format!(
            "n + J = {} exceeds the supported fine grid 2^15",
            n + depth
        )));
    }
    let (first, last) = index_range(q0, n)?;
    let phi = refinable_function(q0, depth)?;
    if let Some(terms) = field.terms() {
        return sample_separable(terms, n, q0, first, last, &phi);
    }
    let a = q0.first();
    let scale = 1usize << depth;
    let fine = (1usize << (n + depth)) + 1;
    let step = 1.0 / (fine - 1) as f64;
    let count = last - first + 1;
    let offset = |k: usize| (a + k as isize) as usize * scale;
    let span = phi.values.len();

    let acc = (0..fine)
        .into_par_iter()
        .fold(
            || (vec![0.0; count * count], vec![0.0; fine], vec![0.0; count]),
            |(mut acc, mut row, mut reduced), m2| {
                let x2 = m2 as f64 * step;
                for (m1, slot) in row.iter_mut().enumerate() {
                    *slot = field.value(m1 as f64 * step, x2);
                }
                for (j, r) in reduced.iter_mut().enumerate() {
                    let o = offset(first + j);
                    *r = phi
                        .values
                        .iter()
                        .zip(&row[o..o + span])
                        .map(|(p, u)| p * u)
                        .sum();
                }
                for j2 in 0..count {
                    let o = offset(first + j2);
                    if m2 < o || m2 >= o + span {
                        continue;
                    }
                    let w = phi.values[m2 - o];
                    if w == 0.0 {
                        continue;
                    }
                    acc[j2 * count..(j2 + 1) * count]
                        .iter_mut()
                        .zip(&reduced)
                        .for_each(|(t, r)| *t += w * r);
                }
                (acc, row, reduced)
            },
        )
        .map(|(acc, _, _)| acc)
        .reduce(
            || vec![0.0; count * count],
            |mut x, y| {
                x.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
                x
            },
        );
    let d2 = phi.step() * phi.step();
    let values = Image::new(count, count, acc.into_iter().map(|v| v * d2).collect())?;
    Ok(GridSamples { n, first, values })
}

/// Tensor-product fast path: each factor is sampled in one dimension.
fn sample_separable(
    terms: &[SeparableTerm],
    n: u32,
    q0: &Filter,
    first: usize,
    last: usize,
    phi: &DyadicSamples,
) -> Result<GridSamples> {
    let scale = 1usize << phi.depth;
    let step = (-((n + phi.depth) as f64)).exp2();
    let a = q0.first();
    let one_dim = |g: &Univariate| -> Vec<f64> {
        (first..=last)
            .map(|k| {
                let o = (a + k as isize) as usize * scale;
                phi.values
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p * g.derivative(0, (o + i) as f64 * step))
                    .sum::<f64>()
                    * phi.step()
            })
            .collect()
    };
    let count = last - first + 1;
    let mut acc = vec![0.0; count * count];
    for t in terms {
        let (s1, s2) = (one_dim(&t.x1), one_dim(&t.x2));
        for (row, y) in acc.chunks_mut(count).zip(&s2) {
            row.iter_mut()
                .zip(&s1)
                .for_each(|(v, x)| *v += t.coef * x * y);
        }
    }
    let values = Image::new(count, count, acc)?;
    Ok(GridSamples { n, first, values })
}

/// `T_n u` at depth `J`, rejected when depth `J+1` moves any entry by more
/// than [`REFINEMENT_TOL`].
pub fn sample_t_n(field: &Field, n: u32, q0: &Filter, depth: u32) -> Result<GridSamples> {
    let coarse = sample_t_n_unchecked(field, n, q0, depth)?;
    let fine = sample_t_n_unchecked(field, n, q0, depth + 1)?;
    let diff = coarse.values.max_abs_diff(&fine.values);
    if diff > REFINEMENT_TOL {
        return Err(Error::Quadrature(format!(
            "T_n at n = {n} changes by {diff:.3e} between depths {depth} and {}",
            depth + 1
        )));
    }
    Ok(coarse)
}
