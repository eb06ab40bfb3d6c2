//! Semi-discrete energy `E_n = F_n ∘ T_n` and its convergence to `E`.

use super::continuous::{continuous_energy, ContinuousEnergy, HarnessOperator, QuadratureOptions};
use super::discrete::{discrete_energy, Boundary, EnergySpec, EnergyTerms};
use super::fields::TestFunctionPair;
use super::sampling::{sample_t_n, sample_t_n_unchecked, GridSamples};
use crate::degrade::DegradationOp;
use crate::error::{Error, Result};
use crate::framelet::{BankKind, TensorFilterBank};
use crate::image::BinaryPlane;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOptions {
    pub bank: BankKind,
    /// Target `n + J` for the sampling cascade.
    pub quad_resolution: u32,
    pub min_depth: u32,
    /// Compare each `T_n` against depth `J+1`.
    pub check_sampling: bool,
    pub operator: HarnessOperator,
    pub quadrature: QuadratureOptions,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            bank: BankKind::Linear,
            quad_resolution: 12,
            min_depth: 4,
            check_sampling: true,
            operator: HarnessOperator::Identity,
            quadrature: QuadratureOptions::default(),
        }
    }
}

impl ConvergenceOptions {
    pub fn depth_for(&self, n: u32) -> u32 {
        self.quad_resolution
            .saturating_sub(n)
            .max(self.min_depth)
            .max(1)
    }
}

fn operator_on_grid(op: &HarnessOperator, s: &GridSamples) -> DegradationOp {
    match op {
        HarnessOperator::Identity => DegradationOp::Identity,
        HarnessOperator::Indicator { .. } => {
            let h = s.meshsize();
            let (w, ht) = s.values.dims();
            DegradationOp::InpaintMask(BinaryPlane::from_fn(w, ht, |r, c| {
                op.weight((s.first + c) as f64 * h, (s.first + r) as f64 * h) > 0.0
            }))
        }
    }
}

/// `E_n(u, v) = F_n(T_n u, T_n v)` with data `T_n f`, summed over the interior
/// index sets. The resolution comes from `spec.n`.
pub fn semi_discrete_energy(
    pair: &TestFunctionPair,
    spec: &EnergySpec,
    bank: &TensorFilterBank,
    op: &HarnessOperator,
    depth: u32,
    checked: bool,
) -> Result<EnergyTerms> {
    let q0 = bank.univariate().lowpass();
    let sample = |field| {
        if checked {
            sample_t_n(field, spec.n, q0, depth)
        } else {
            sample_t_n_unchecked(field, spec.n, q0, depth)
        }
    };
    let (u, v, f) = (sample(&pair.u)?, sample(&pair.v)?, sample(&pair.f)?);
    let spec = spec.clone().with_boundary(Boundary::Interior);
    discrete_energy(
        &u.values,
        &v.values,
        bank,
        &spec,
        &operator_on_grid(op, &u),
        &f.values,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: u32,
    pub depth: u32,
    pub e_n: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub pair: String,
    pub continuous: ContinuousEnergy,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn final_error_is_smallest(&self) -> bool {
        match self.rows.split_last() {
            Some((last, rest)) => rest.iter().all(|r| last.abs_err < r.abs_err),
            None => false,
        }
    }

    pub fn verify(&self) -> Result<()> {
        if self.final_error_is_smallest() {
            Ok(())
        } else {
            Err(Error::NotConverging(format!(
                "the error at the finest resolution is not the smallest: {:?}",
                self.rows
                    .iter()
                    .map(|r| (r.n, r.abs_err))
                    .collect::<Vec<_>>()
            )))
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("pair {}  E = {:.10}\n", self.pair, self.continuous.total);
        s.push_str("   n   J            E_n        |E_n - E|       relative\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:>4}{:>4}{:>15.10}{:>17.3e}{:>15.3e}\n",
                r.n, r.depth, r.e_n, r.abs_err, r.rel_err
            ));
        }
        s
    }
}

/// `E_n` for each `n` against one evaluation of `E`, failing with
/// [`Error::NotConverging`] unless the last resolution has the smallest error.
pub fn convergence_experiment(
    pair: &TestFunctionPair,
    spec: &EnergySpec,
    n_values: &[u32],
    opts: &ConvergenceOptions,
) -> Result<ConvergenceTable> {
    let table = convergence_table(pair, spec, n_values, opts)?;
    table.verify()?;
    Ok(table)
}

/// The error table of [`convergence_experiment`] without the final check.
pub fn convergence_table(
    pair: &TestFunctionPair,
    spec: &EnergySpec,
    n_values: &[u32],
    opts: &ConvergenceOptions,
) -> Result<ConvergenceTable> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("no resolutions given".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "resolutions must be strictly ascending".into(),
        ));
    }
    spec.validate()?;
    let bank = TensorFilterBank::new(opts.bank.bank())?;
    let continuous = continuous_energy(pair, spec, &opts.operator, &opts.quadrature)?;
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let depth = opts.depth_for(n);
        let s = spec.clone().with_resolution(n);
        let e_n =
            semi_discrete_energy(pair, &s, &bank, &opts.operator, depth, opts.check_sampling)?
                .total;
        let abs_err = (e_n - continuous.total).abs();
        rows.push(ConvergenceRow {
            n,
            depth,
            e_n,
            abs_err,
            rel_err: abs_err / continuous.total.abs().max(f64::MIN_POSITIVE),
        });
    }
    Ok(ConvergenceTable {
        pair: pair.name.clone(),
        continuous,
        rows,
    })
}
