//! Energy of the restoration model on the periodic pixel grid.

use crate::degrade::DegradationOp;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::shrinkage::magnitudes;
use crate::solver::{EdgeField, SolverParams, Transforms};

/// The four terms of the model energy and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelEnergy {
    pub smooth: f64,
    pub edge: f64,
    pub regularity: f64,
    pub fidelity: f64,
    pub total: f64,
}

/// `λ Σ(1−v)R(Wu) + γ Σ v R(W′u) + ρ Σ_l R(W″v_l) + ½‖Au − f‖²`.
///
/// `R` is the per-pixel isotropic magnitude over all high-pass bands of a
/// level; the scalar weights multiply it from outside.
pub fn model_energy(
    u: &Image,
    v: &EdgeField,
    tr: &Transforms,
    p: &SolverParams,
    op: &DegradationOp,
    f: &Image,
) -> Result<ModelEnergy> {
    u.ensure_same_dims(f)?;
    if v.levels() != tr.w.levels() || v.dims() != u.dims() {
        return Err(Error::ShapeMismatch(format!(
            "edge field has {} planes, W has {} levels",
            v.levels(),
            tr.w.levels()
        )));
    }
    let rw = magnitudes(&tr.w.analysis(u)?);
    let mut smooth = 0.0;
    for (l, r) in rw.iter().enumerate() {
        smooth += v
            .plane(l)
            .as_slice()
            .iter()
            .zip(r)
            .map(|(vi, ri)| (1.0 - vi) * ri)
            .sum::<f64>();
    }
    let mut edge = 0.0;
    let gamma = p.effective_gamma();
    if let Some(wp) = &tr.wp {
        if gamma > 0.0 {
            for (l, r) in magnitudes(&wp.analysis(u)?).iter().enumerate() {
                edge += v
                    .plane(l)
                    .as_slice()
                    .iter()
                    .zip(r)
                    .map(|(vi, ri)| vi * ri)
                    .sum::<f64>();
            }
        }
    }
    let mut regularity = 0.0;
    if p.rho > 0.0 {
        for plane in v.planes() {
            if plane.max_abs() == 0.0 {
                continue;
            }
            for r in magnitudes(&tr.wdd.analysis(plane)?) {
                regularity += r.iter().sum::<f64>();
            }
        }
    }
    let fidelity = 0.5 * op.apply(u)?.sub(f).norm2().powi(2);
    let (smooth, edge, regularity) = (p.lambda * smooth, gamma * edge, p.rho * regularity);
    Ok(ModelEnergy {
        smooth,
        edge,
        regularity,
        fidelity,
        total: smooth + edge + regularity + fidelity,
    })
}
