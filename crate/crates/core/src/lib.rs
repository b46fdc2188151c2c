//! Material model and image-space machinery for single-photograph SVBRDF
//! recovery of flat, stationary materials.
//!
//! The crate is `no_std` (it needs `alloc`) and carries everything that does
//! not require automatic differentiation or file access:
//!
//! - [`material`]: the four-map SVBRDF parameterization and the colocated
//!   flash/camera scene description.
//! - [`brdf`] and [`render`]: a Cook-Torrance (GGX, height-correlated Smith,
//!   Schlick) evaluator and the per-pixel point-light renderer.
//! - [`guess`]: the illumination-normalized "guessed" diffuse map that
//!   supervises training.
//! - [`spectrum`]: a small FFT used for spectral diagnostics.
//! - [`synth`] and [`metrics`]: stationary synthetic materials and the
//!   evaluation harness (per-map RMSE, re-render error, spot ratio).
//!
//! The differentiable counterparts of the renderer and the losses live in the
//! `svbrdf-forge` crate, which builds on top of this one.

#![no_std]
#![deny(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod brdf;
pub mod error;
pub mod guess;
pub mod image;
pub mod material;
pub mod metrics;
pub mod render;
pub mod spectrum;
pub mod synth;

pub use brdf::{eval_brdf, Vec3};
pub use error::{Error, Result};
pub use guess::{estimate_illumination, guess_diffuse, GuessedDiffuse};
pub use image::{Image, LdrImage, LinearImage};
pub use material::{normalize_normals, SceneConfig, SvbrdfMaps, ALPHA_MIN, GAMMA};
pub use metrics::{evaluate, spot_ratio, EvalReport};
pub use render::{render, render_input, tonemap};
pub use synth::{synth_material, MaterialSpec, Pattern};
