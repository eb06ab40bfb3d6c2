//! Edge-driven wavelet frame image restoration.
//!
//! The crate provides tight B-spline framelet transforms, the measurement
//! operators for denoising, inpainting and deblurring, the isotropic shrinkage
//! prox, an alternating split Bregman solver for the edge-driven model, and a
//! numerical harness comparing discrete and continuous energies.

pub mod degrade;
pub mod energy;
pub mod error;
pub mod fft;
pub mod framelet;
pub mod image;
pub mod shrinkage;
pub mod solver;

pub use degrade::{BlurKernel, DegradationOp};
pub use energy::{EnergySpec, TestFunctionPair};
pub use error::{Error, Result};
pub use framelet::{BankKind, FrameCoeffs, FrameTransform, TensorFilterBank, UnivariateFilterBank};
pub use image::{add_gaussian_noise, psnr, BinaryPlane, Image};
pub use solver::{alternate, EdgeField, Model, Restoration, SolverParams, Task};
