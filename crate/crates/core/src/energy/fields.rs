//! Smooth test functions on `[0,1]²` with closed-form partial derivatives.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::framelet::Band;

type ValueFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type PartialFn = dyn Fn(Band, f64, f64) -> f64 + Send + Sync;

/// One-dimensional factor of a separable term.
#[derive(Debug, Clone, PartialEq)]
pub enum Univariate {
    /// `sin(freq·x + phase)`.
    Sin { freq: f64, phase: f64 },
    /// `Σ c_i x^i`.
    Poly(Vec<f64>),
}

impl Univariate {
    pub fn sin(freq: f64) -> Self {
        Univariate::Sin { freq, phase: 0.0 }
    }

    pub fn cos(freq: f64) -> Self {
        Univariate::Sin {
            freq,
            phase: FRAC_PI_2,
        }
    }

    pub fn constant(c: f64) -> Self {
        Univariate::Poly(vec![c])
    }

    /// `d^k/dx^k` at `x`.
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        match self {
            Univariate::Sin { freq, phase } => {
                freq.powi(k as i32) * (freq * x + phase + k as f64 * FRAC_PI_2).sin()
            }
            Univariate::Poly(c) => {
                let mut acc = 0.0;
                for (i, &ci) in c.iter().enumerate().skip(k).rev() {
                    let falling: f64 = ((i - k + 1)..=i).map(|j| j as f64).product();
                    acc = acc * x + ci * falling;
                }
                acc
            }
        }
    }
}

/// `coef · g(x1) · h(x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm {
    pub coef: f64,
    pub x1: Univariate,
    pub x2: Univariate,
}

/// A scalar field with its partial derivatives `∂^α`, `α = (α1, α2)` with
/// `α1` along `x1`.
#[derive(Clone)]
pub struct Field {
    value: Arc<ValueFn>,
    partial: Arc<PartialFn>,
    terms: Option<Arc<Vec<SeparableTerm>>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Field")
    }
}

impl Field {
    /// A field from a callable and its partials; `partial((0,0), ..)` need not
    /// agree with `value`, `check_partials` will catch it.
    pub fn new(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        partial: impl Fn(Band, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Field {
            value: Arc::new(value),
            partial: Arc::new(partial),
            terms: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Field::separable(vec![SeparableTerm {
            coef: c,
            x1: Univariate::constant(1.0),
            x2: Univariate::constant(1.0),
        }])
    }

    pub fn separable(terms: Vec<SeparableTerm>) -> Self {
        let terms = Arc::new(terms);
        let t2 = Arc::clone(&terms);
        let eval = move |terms: &[SeparableTerm], a: Band, x1: f64, x2: f64| {
            terms
                .iter()
                .map(|t| t.coef * t.x1.derivative(a.0, x1) * t.x2.derivative(a.1, x2))
                .sum::<f64>()
        };
        let t3 = Arc::clone(&terms);
        let mut field = Field::new(
            move |x1, x2| eval(&terms, (0, 0), x1, x2),
            move |a, x1, x2| eval(&t2, a, x1, x2),
        );
        field.terms = Some(t3);
        field
    }

    /// The separable terms, when the field was built from them.
    pub fn terms(&self) -> Option<&[SeparableTerm]> {
        self.terms.as_deref().map(Vec::as_slice)
    }

    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        (self.value)(x1, x2)
    }

    pub fn partial(&self, alpha: Band, x1: f64, x2: f64) -> f64 {
        if alpha == (0, 0) {
            return self.value(x1, x2);
        }
        (self.partial)(alpha, x1, x2)
    }
}

/// Largest mismatch between the supplied partials and central differences
/// of the next-lower partial, over `points` random points in `[0.1, 0.9]²`.
pub fn check_partials(
    field: &Field,
    bands: &[Band],
    points: usize,
    step: f64,
    tol: f64,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x1 = rng.random_range(0.1..0.9);
        let x2 = rng.random_range(0.1..0.9);
        let base = (field.partial)((0, 0), x1, x2);
        worst = worst.max((base - field.value(x1, x2)).abs());
        for &a in bands {
            let fd = match a {
                (0, 0) => continue,
                (a1, a2) if a1 > 0 => {
                    let lower = (a1 - 1, a2);
                    (field.partial(lower, x1 + step, x2) - field.partial(lower, x1 - step, x2))
                        / (2.0 * step)
                }
                (a1, a2) => {
                    let lower = (a1, a2 - 1);
                    (field.partial(lower, x1, x2 + step) - field.partial(lower, x1, x2 - step))
                        / (2.0 * step)
                }
            };
            let exact = field.partial(a, x1, x2);
            worst = worst.max((fd - exact).abs() / exact.abs().max(1.0));
        }
    }
    if worst > tol {
        return Err(Error::InvalidParameter(format!(
            "supplied partials disagree with finite differences by {worst:.3e}"
        )));
    }
    Ok(worst)
}

/// An image `u`, an edge indicator `v` with values in `[0,1]`, and data `f`.
#[derive(Debug, Clone)]
pub struct TestFunctionPair {
    pub name: String,
    pub u: Field,
    pub v: Field,
    pub f: Field,
}

impl TestFunctionPair {
    pub fn new(name: impl Into<String>, u: Field, v: Field) -> Self {
        TestFunctionPair {
            name: name.into(),
            u,
            v,
            f: Field::constant(0.0),
        }
    }

    pub fn with_data(mut self, f: Field) -> Self {
        self.f = f;
        self
    }

    /// `u = sin(2πx1) sin(2πx2)`, `v = ½`.
    pub fn sine() -> Self {
        let w = 2.0 * PI;
        let u = Field::separable(vec![SeparableTerm {
            coef: 1.0,
            x1: Univariate::sin(w),
            x2: Univariate::sin(w),
        }]);
        TestFunctionPair::new("sine", u, Field::constant(0.5))
    }

    /// `u = sin(2πx1) sin(2πx2)`, `v = sin²(πx1) sin²(πx2)`.
    pub fn sine_bump() -> Self {
        let w = 2.0 * PI;
        let u = Field::separable(vec![SeparableTerm {
            coef: 1.0,
            x1: Univariate::sin(w),
            x2: Univariate::sin(w),
        }]);
        // sin²(πx) = ½(1 − cos 2πx)
        let half = |s: f64| Univariate::Poly(vec![0.5 * s]);
        let cos = Univariate::cos(w);
        let mut terms = Vec::new();
        for (a, b) in [(true, true), (true, false), (false, true), (false, false)] {
            let (f1, c1) = if a {
                (half(1.0), 1.0)
            } else {
                (cos.clone(), -0.5)
            };
            let (f2, c2) = if b {
                (half(1.0), 1.0)
            } else {
                (cos.clone(), -0.5)
            };
            terms.push(SeparableTerm {
                coef: c1 * c2,
                x1: f1,
                x2: f2,
            });
        }
        TestFunctionPair::new("sine-bump", u, Field::separable(terms))
    }

    /// `u = x1`, `v = x2`.
    pub fn linear() -> Self {
        let id = Univariate::Poly(vec![0.0, 1.0]);
        let one = Univariate::constant(1.0);
        let u = Field::separable(vec![SeparableTerm {
            coef: 1.0,
            x1: id.clone(),
            x2: one.clone(),
        }]);
        let v = Field::separable(vec![SeparableTerm {
            coef: 1.0,
            x1: one,
            x2: id,
        }]);
        TestFunctionPair::new("linear", u, v)
    }

    /// `u = x1² x2 + x2³`, `v = 4 x2 (1 − x2)`.
    pub fn poly() -> Self {
        let p = |c: Vec<f64>| Univariate::Poly(c);
        let u = Field::separable(vec![
            SeparableTerm {
                coef: 1.0,
                x1: p(vec![0.0, 0.0, 1.0]),
                x2: p(vec![0.0, 1.0]),
            },
            SeparableTerm {
                coef: 1.0,
                x1: p(vec![1.0]),
                x2: p(vec![0.0, 0.0, 0.0, 1.0]),
            },
        ]);
        let v = Field::separable(vec![SeparableTerm {
            coef: 4.0,
            x1: p(vec![1.0]),
            x2: p(vec![0.0, 1.0, -1.0]),
        }]);
        TestFunctionPair::new("poly", u, v)
    }

    /// `u ≡ c`, `v ≡ 0`.
    pub fn constant(c: f64) -> Self {
        TestFunctionPair::new("constant", Field::constant(c), Field::constant(0.0))
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sine" => Ok(Self::sine()),
            "sine-bump" => Ok(Self::sine_bump()),
            "linear" => Ok(Self::linear()),
            "poly" => Ok(Self::poly()),
            "constant" => Ok(Self::constant(1.0)),
            other => Err(Error::InvalidParameter(format!(
                "unknown test function pair '{other}' (sine, sine-bump, poly, linear, constant)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_derivatives() {
        let p = Univariate::Poly(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.derivative(0, 2.0), 1.0 + 4.0 + 12.0 + 32.0);
        assert_eq!(p.derivative(1, 2.0), 2.0 + 12.0 + 48.0);
        assert_eq!(p.derivative(2, 2.0), 6.0 + 48.0);
        assert_eq!(p.derivative(3, 2.0), 24.0);
        assert_eq!(p.derivative(4, 2.0), 0.0);
    }

    #[test]
    fn builtin_partials_agree_with_differences() {
        let bands = [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (2, 2)];
        for pair in [
            TestFunctionPair::sine(),
            TestFunctionPair::sine_bump(),
            TestFunctionPair::linear(),
            TestFunctionPair::poly(),
            TestFunctionPair::constant(3.0),
        ] {
            for field in [&pair.u, &pair.v] {
                check_partials(field, &bands, 100, 1e-4, 1e-5, 7).unwrap();
            }
        }
    }

    #[test]
    fn wrong_partials_are_rejected() {
        let bad = Field::new(|x, _| x * x, |a, x, _| if a == (1, 0) { x } else { 0.0 });
        assert!(check_partials(&bad, &[(1, 0)], 100, 1e-4, 1e-5, 1).is_err());
    }

    #[test]
    fn sine_bump_edge_field_is_in_unit_interval() {
        let v = TestFunctionPair::sine_bump().v;
        assert!((v.value(0.5, 0.5) - 1.0).abs() < 1e-14);
        assert!(v.value(0.0, 0.3).abs() < 1e-14);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let y = v.value(x, 1.0 - x);
            assert!((-1e-14..=1.0 + 1e-14).contains(&y));
        }
    }
}
