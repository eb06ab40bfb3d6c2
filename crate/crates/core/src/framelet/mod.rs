//! Tight B-spline framelets: filter banks, tensor masks, cascade constants and
//! the undecimated periodic transform.

pub mod bank;
pub mod cascade;
pub mod tensor;
pub mod transform;

pub use bank::{
    cubic_bspline_bank, linear_bspline_bank, uep_check, uep_profile, BankKind, Filter,
    UnivariateFilterBank,
};
pub use cascade::{c_alpha_2d, c_alpha_estimate, refinable_function, DyadicSamples, DEFAULT_DEPTH};
pub use tensor::{cascade_filter, cascade_mask, Band, Mask2, TensorFilterBank};
pub use transform::{analysis, synthesis, FrameCoeffs, FrameTransform};

/// À trous upsampling of a 1-D filter.
pub fn upsample_filter(q: &Filter, level: u32) -> Filter {
    q.upsample(level)
}

/// Transform for a bank kind, with `c_α` from the default cascade depth.
pub fn transform(kind: BankKind, levels: usize) -> crate::Result<FrameTransform> {
    FrameTransform::new(TensorFilterBank::new(kind.bank())?, levels)
}
