//! The continuous energy `E(u, v)` by composite Gauss–Legendre quadrature.

use rayon::prelude::*;

use super::discrete::EnergySpec;
use super::fields::{Field, TestFunctionPair};
use crate::error::{Error, Result};
use crate::framelet::Band;

/// Degradation operator of the continuous model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum HarnessOperator {
    #[default]
    Identity,
    /// Multiplication by the indicator of `[x1.0, x1.1] × [x2.0, x2.1]`.
    Indicator { x1: (f64, f64), x2: (f64, f64) },
}

impl HarnessOperator {
    pub fn weight(&self, x1: f64, x2: f64) -> f64 {
        match *self {
            HarnessOperator::Identity => 1.0,
            HarnessOperator::Indicator {
                x1: (a, b),
                x2: (c, d),
            } => {
                if (a..=b).contains(&x1) && (c..=d).contains(&x2) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Gauss points per cell and direction.
    pub order: usize,
    pub initial_cells: usize,
    pub max_cells: usize,
    /// Stop once doubling the cells changes every term by less than this, relatively.
    pub rel_tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            order: 8,
            initial_cells: 4,
            max_cells: 1024,
            rel_tol: 1e-8,
        }
    }
}

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let n = order;
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule.reverse();
    rule
}

/// Integrates each component of `g` over `[0,1]²`, doubling the cells per
/// direction until every component settles.
pub fn integrate_unit_square<const K: usize>(
    g: impl Fn(f64, f64) -> [f64; K] + Sync,
    opts: &QuadratureOptions,
) -> Result<[f64; K]> {
    if opts.order == 0 || opts.initial_cells == 0 {
        return Err(Error::InvalidParameter(
            "quadrature needs order and cells >= 1".into(),
        ));
    }
    let rule = gauss_legendre(opts.order);
    let pass = |cells: usize| -> [f64; K] {
        let h = 1.0 / cells as f64;
        (0..cells)
            .into_par_iter()
            .map(|i2| {
                let mut acc = [0.0; K];
                for i1 in 0..cells {
                    for &(t2, w2) in &rule {
                        let x2 = (i2 as f64 + 0.5 * (t2 + 1.0)) * h;
                        for &(t1, w1) in &rule {
                            let x1 = (i1 as f64 + 0.5 * (t1 + 1.0)) * h;
                            let w = w1 * w2 * 0.25 * h * h;
                            for (a, v) in acc.iter_mut().zip(g(x1, x2)) {
                                *a += w * v;
                            }
                        }
                    }
                }
                acc
            })
            .reduce(
                || [0.0; K],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    };
    let mut cells = opts.initial_cells;
    let mut prev = pass(cells);
    while cells * 2 <= opts.max_cells {
        cells *= 2;
        let next = pass(cells);
        let settled = next.iter().zip(&prev).all(|(a, b)| {
            (a - b).abs() <= opts.rel_tol * a.abs().max(1e-300) || (a - b).abs() < 1e-15
        });
        prev = next;
        if settled {
            return Ok(prev);
        }
    }
    Err(Error::Quadrature(format!(
        "no convergence to relative {:.1e} with {} cells per direction",
        opts.rel_tol, opts.max_cells
    )))
}

/// Terms of `E(u, v)` and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousEnergy {
    pub smooth: f64,
    pub edge: f64,
    pub regularity: f64,
    pub fidelity: f64,
    pub total: f64,
}

fn derivative_norm(field: &Field, set: &[Band], x1: f64, x2: f64) -> f64 {
    set.iter()
        .map(|&a| field.partial(a, x1, x2).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `λ∫(1−v)|D_I u| + γ∫v|D_{I′} u| + ρ∫|D_{I″} v| + ½∫(Au − f)²` over `[0,1]²`.
pub fn continuous_energy(
    pair: &TestFunctionPair,
    spec: &EnergySpec,
    op: &HarnessOperator,
    opts: &QuadratureOptions,
) -> Result<ContinuousEnergy> {
    spec.validate()?;
    let [smooth, edge, regularity, fidelity] = integrate_unit_square(
        |x1, x2| {
            let v = pair.v.value(x1, x2);
            let r = op.weight(x1, x2) * pair.u.value(x1, x2) - pair.f.value(x1, x2);
            [
                (1.0 - v) * derivative_norm(&pair.u, &spec.i_set, x1, x2),
                v * derivative_norm(&pair.u, &spec.i_prime, x1, x2),
                derivative_norm(&pair.v, &spec.i_dprime, x1, x2),
                0.5 * r * r,
            ]
        },
        opts,
    )?;
    let (smooth, edge, regularity) = (
        spec.lambda * smooth,
        spec.gamma * edge,
        spec.rho * regularity,
    );
    Ok(ContinuousEnergy {
        smooth,
        edge,
        regularity,
        fidelity,
        total: smooth + edge + regularity + fidelity,
    })
}
