//! Generator and discriminator objectives.
//!
//! The generator minimizes
//! `L_d + λ·L_adv + λ1·L_fourier + λ2·L_perceptual`, where `L_d` ties the
//! predicted diffuse albedo to the guessed diffuse map, `L_adv` is the
//! non-saturating GAN term, `L_fourier` compares magnitude spectra of every
//! predicted map against the guessed map and `L_perceptual` compares deep
//! features of the photograph and the re-render.

use std::f64::consts::PI;

use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::perceptual::FeatureExtractor;
use crate::render::{channel_mean, MapTensors};

/// Clamp applied to probabilities inside every logarithm of the GAN loss.
pub const PROB_CLAMP: f64 = 1e-7;

/// Offset inside the Fourier loss logarithm (the loss is `-∞` at a perfect match otherwise).
pub const FOURIER_EPS: f64 = 1e-8;

/// Keeps the spectrum magnitude differentiable at zero.
const MAGNITUDE_FLOOR: f64 = 1e-12;

/// Weights of the auxiliary generator terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Adversarial weight λ.
    pub lambda_gan: f64,
    /// Fourier weight λ1.
    pub lambda_fourier: f64,
    /// Perceptual weight λ2.
    pub lambda_perceptual: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_gan: 0.1,
            lambda_fourier: 0.1,
            lambda_perceptual: 0.2,
        }
    }
}

impl LossWeights {
    /// Rejects negative or non-finite weights.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_gan", self.lambda_gan),
            ("lambda_fourier", self.lambda_fourier),
            ("lambda_perceptual", self.lambda_perceptual),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ForgeError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Unweighted loss values of one training step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    /// Diffuse L1 term.
    pub diffuse: f64,
    /// Generator adversarial term.
    pub adversarial_g: f64,
    /// Discriminator objective.
    pub adversarial_d: f64,
    /// Fourier term (a logarithm, so possibly negative).
    pub fourier: f64,
    /// Perceptual term.
    pub perceptual: f64,
}

/// Every loss term of one step plus the weighted generator total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossReport {
    /// Diffuse L1 term.
    pub diffuse: f64,
    /// Generator adversarial term.
    pub adversarial_g: f64,
    /// Discriminator objective.
    pub adversarial_d: f64,
    /// Fourier term.
    pub fourier: f64,
    /// Perceptual term.
    pub perceptual: f64,
    /// `diffuse + λ·adversarial_g + λ1·fourier + λ2·perceptual`.
    pub total_generator: f64,
}

impl LossReport {
    /// True when every field is finite.
    pub fn is_finite(&self) -> bool {
        [
            self.diffuse,
            self.adversarial_g,
            self.adversarial_d,
            self.fourier,
            self.perceptual,
            self.total_generator,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Combines unweighted terms into a report.
pub fn total_generator_loss(terms: &LossTerms, weights: &LossWeights) -> LossReport {
    LossReport {
        diffuse: terms.diffuse,
        adversarial_g: terms.adversarial_g,
        adversarial_d: terms.adversarial_d,
        fourier: terms.fourier,
        perceptual: terms.perceptual,
        total_generator: terms.diffuse
            + weights.lambda_gan * terms.adversarial_g
            + weights.lambda_fourier * terms.fourier
            + weights.lambda_perceptual * terms.perceptual,
    }
}

fn check_same_shape(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(ForgeError::Shape(format!("{what}: {:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// Mean absolute difference between predicted and guessed diffuse maps.
pub fn diffuse_loss(pred: &Tensor, guessed: &Tensor) -> Result<Tensor> {
    check_same_shape(pred, guessed, "diffuse loss")?;
    Ok((pred - guessed)?.abs()?.mean_all()?)
}

fn clamped_log(p: &Tensor) -> Result<Tensor> {
    Ok(p.clamp(PROB_CLAMP, 1.0)?.log()?)
}

/// Discriminator and non-saturating generator losses from patch logits.
///
/// `d = -E[log σ(real)] - E[log(1 - σ(fake))]`, `g = -E[log σ(fake)]`.
pub fn adversarial_losses(real_logits: &Tensor, fake_logits: &Tensor) -> Result<(Tensor, Tensor)> {
    let p_real = candle_nn::ops::sigmoid(real_logits)?;
    let p_fake = candle_nn::ops::sigmoid(fake_logits)?;
    let d_real = clamped_log(&p_real)?.mean_all()?.neg()?;
    let d_fake = clamped_log(&(1.0 - &p_fake)?)?.mean_all()?.neg()?;
    let g = clamped_log(&p_fake)?.mean_all()?.neg()?;
    Ok(((d_real + d_fake)?, g))
}

/// Generator-only half of [`adversarial_losses`].
pub fn generator_adversarial_loss(fake_logits: &Tensor) -> Result<Tensor> {
    let p_fake = candle_nn::ops::sigmoid(fake_logits)?;
    Ok(clamped_log(&p_fake)?.mean_all()?.neg()?)
}

/// Discriminator-only half of [`adversarial_losses`].
pub fn discriminator_loss(real_logits: &Tensor, fake_logits: &Tensor) -> Result<Tensor> {
    let p_real = candle_nn::ops::sigmoid(real_logits)?;
    let p_fake = candle_nn::ops::sigmoid(fake_logits)?;
    let d_real = clamped_log(&p_real)?.mean_all()?.neg()?;
    let d_fake = clamped_log(&(1.0 - &p_fake)?)?.mean_all()?.neg()?;
    Ok((d_real + d_fake)?)
}

/// Which maps the Fourier loss covers and how spectra are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierOptions {
    /// Enable flags in diffuse, specular, roughness, normal order.
    pub per_map: [bool; 4],
    /// Compare complex coefficients instead of magnitudes.
    pub complex: bool,
}

impl Default for FourierOptions {
    fn default() -> Self {
        Self {
            per_map: [true; 4],
            complex: false,
        }
    }
}

/// Real DFT basis matrices for one raster size.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    cos_h: Tensor,
    sin_h: Tensor,
    cos_w: Tensor,
    sin_w: Tensor,
    dc_mask: Tensor,
}

fn dft_matrices(n: usize, dtype: DType, device: &Device) -> Result<(Tensor, Tensor)> {
    let mut c = Vec::with_capacity(n * n);
    let mut s = Vec::with_capacity(n * n);
    for k in 0..n {
        for t in 0..n {
            let a = 2.0 * PI * ((k * t) % n) as f64 / n as f64;
            c.push(a.cos());
            s.push(a.sin());
        }
    }
    Ok((
        Tensor::from_vec(c, (n, n), device)?.to_dtype(dtype)?,
        Tensor::from_vec(s, (n, n), device)?.to_dtype(dtype)?,
    ))
}

impl SpectralBasis {
    /// Basis for `height × width` maps.
    pub fn new(height: usize, width: usize, dtype: DType, device: &Device) -> Result<Self> {
        let (cos_h, sin_h) = dft_matrices(height, dtype, device)?;
        let (cos_w, sin_w) = dft_matrices(width, dtype, device)?;
        let mut mask = vec![1.0f64; height * width];
        mask[0] = 0.0;
        let dc_mask = Tensor::from_vec(mask, (height, width), device)?.to_dtype(dtype)?;
        Ok(Self {
            cos_h,
            sin_h,
            cos_w,
            sin_w,
            dc_mask,
        })
    }

    /// Raster size `(H, W)` this basis transforms.
    pub fn spatial(&self) -> Result<(usize, usize)> {
        Ok((self.cos_h.dim(0)?, self.cos_w.dim(0)?))
    }

    /// Unnormalized 2-D DFT `(re, im)` of `(N, 1, H, W)` real maps.
    pub fn transform(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let a = self.cos_h.broadcast_matmul(x)?;
        let b = self.sin_h.broadcast_matmul(x)?;
        let re = (a.broadcast_matmul(&self.cos_w)? - b.broadcast_matmul(&self.sin_w)?)?;
        let im = (b.broadcast_matmul(&self.cos_w)? + a.broadcast_matmul(&self.sin_w)?)?;
        Ok((re, im))
    }

    /// Spectrum magnitude of `(N, 1, H, W)` real maps.
    pub fn magnitude(&self, x: &Tensor) -> Result<Tensor> {
        let (re, im) = self.transform(x)?;
        Ok((re.sqr()? + im.sqr()?)?.affine(1.0, MAGNITUDE_FLOOR)?.sqrt()?)
    }

    /// Mean over bins of `|spec(a) - spec(b)|` with the DC bin zeroed.
    fn spectral_l1(&self, a: &Tensor, b: &Tensor, complex: bool) -> Result<Tensor> {
        let diff = if complex {
            let (ar, ai) = self.transform(a)?;
            let (br, bi) = self.transform(b)?;
            ((ar - br)?.sqr()? + (ai - bi)?.sqr()?)?
                .affine(1.0, MAGNITUDE_FLOOR)?
                .sqrt()?
        } else {
            (self.magnitude(a)? - self.magnitude(b)?)?.abs()?
        };
        Ok(diff.broadcast_mul(&self.dc_mask)?.mean_all()?)
    }
}

/// Fourier stationarity loss with a cached basis.
#[derive(Debug, Clone)]
pub struct FourierLoss {
    basis: SpectralBasis,
    options: FourierOptions,
}

impl FourierLoss {
    /// Loss for `height × width` maps.
    pub fn new(height: usize, width: usize, options: FourierOptions, dtype: DType, device: &Device) -> Result<Self> {
        Ok(Self {
            basis: SpectralBasis::new(height, width, dtype, device)?,
            options,
        })
    }

    /// Options in effect.
    pub fn options(&self) -> &FourierOptions {
        &self.options
    }

    /// `log(mean over enabled maps of the DC-free spectral L1 + ε)`.
    ///
    /// Multi-channel maps are reduced by their channel mean first; normals
    /// use their color encoding. With no map enabled the loss is zero.
    pub fn compute(&self, maps: &MapTensors, guessed: &Tensor) -> Result<Tensor> {
        let spatial = maps.spatial()?;
        if spatial != self.basis.spatial()? {
            return Err(ForgeError::Shape(format!(
                "maps are {spatial:?} but the Fourier basis is {:?}",
                self.basis.spatial()?
            )));
        }
        let (_, _, gh, gw) = guessed.dims4()?;
        if (gh, gw) != spatial {
            return Err(ForgeError::Shape(format!(
                "guessed map is {:?}, predicted maps are {spatial:?}",
                (gh, gw)
            )));
        }
        let reference = channel_mean(guessed)?;
        let normal = maps.normal_encoded()?;
        let sources = [&maps.diffuse, &maps.specular, &maps.roughness, &normal];
        let mut terms = Vec::new();
        for (map, enabled) in sources.iter().zip(self.options.per_map) {
            if enabled {
                let gray = channel_mean(map)?;
                terms.push(self.basis.spectral_l1(&gray, &reference, self.options.complex)?);
            }
        }
        if terms.is_empty() {
            return Ok(Tensor::zeros((), guessed.dtype(), guessed.device())?);
        }
        let n = terms.len() as f64;
        let mean = Tensor::stack(&terms, 0)?.sum_all()?.affine(1.0 / n, 0.0)?;
        Ok(mean.affine(1.0, FOURIER_EPS)?.log()?)
    }
}

/// One-shot Fourier loss that builds its basis on the fly.
pub fn fourier_loss(maps: &MapTensors, guessed: &Tensor, options: FourierOptions) -> Result<Tensor> {
    let (h, w) = maps.spatial()?;
    FourierLoss::new(h, w, options, guessed.dtype(), guessed.device())?.compute(maps, guessed)
}

/// Mean absolute feature difference between photograph and re-render,
/// averaged with equal weights over the extractor's tap layers.
pub fn perceptual_loss(photo: &Tensor, rerender: &Tensor, extractor: &FeatureExtractor) -> Result<Tensor> {
    check_same_shape(photo, rerender, "perceptual loss")?;
    let fa = extractor.features(photo)?;
    let fb = extractor.features(rerender)?;
    let n = fa.len() as f64;
    let mut acc: Option<Tensor> = None;
    for (a, b) in fa.iter().zip(&fb) {
        let term = (a - b)?.abs()?.mean_all()?;
        acc = Some(match acc {
            Some(t) => (t + term)?,
            None => term,
        });
    }
    let total = acc.ok_or_else(|| ForgeError::ExtractorUnavailable("extractor has no tap layers".into()))?;
    Ok(total.affine(1.0 / n, 0.0)?)
}
