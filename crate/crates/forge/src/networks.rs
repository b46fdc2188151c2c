//! Two-stream U-Net generator and patch discriminator.
//!
//! The generator shares one encoder between two decoders. The first decoder
//! emits normal and roughness, the second diffuse and specular. Every
//! convolution uses 4×4 kernels with padding 1.
//!
//! | stage            | stride | channels out | norm     | activation |
//! |------------------|--------|--------------|----------|------------|
//! | enc0             | 2      | b            | none     | leaky 0.2  |
//! | enc1..enc3       | 2      | 2b, 4b, 8b   | instance | leaky 0.2  |
//! | enc4             | 2      | 8b           | none     | leaky 0.2  |
//! | dec4..dec1 (×2)  | 2 (up) | 8b, 4b, 2b, b| instance | relu       |
//! | dec0 (×2)        | 2 (up) | 4            | none     | squashing  |
//!
//! Decoder `k < 4` sees the previous decoder output concatenated with the
//! output of `enc{k}`.
//!
//! The discriminator is three stride-2 blocks (b, 2b, 4b), one stride-1 block
//! (8b) and a one-channel stride-1 head. Each logit sees a 70×70 patch; a 256
//! input yields a 30×30 grid.

use std::collections::BTreeMap;

use candle_core::{DType, Device, Tensor, Var, D};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};
use svbrdf_core::material::NORMAL_MIN_Z;
use svbrdf_core::{LdrImage, SvbrdfMaps, ALPHA_MIN};

use crate::checkpoint::NamedArray;
use crate::error::{ForgeError, Result};
use crate::render::MapTensors;
use crate::tensor::image_to_tensor;

/// Standard deviation of the weight initialization.
pub const INIT_STD: f64 = 0.02;
const LEAKY_SLOPE: f64 = 0.2;
const NORM_EPS: f64 = 1e-5;
const ENCODER_DEPTH: usize = 5;
/// Smallest tile the encoder accepts.
pub const MIN_TILE: usize = 64;

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NetConfig {
    /// Channel count `b` of the first encoder block.
    pub base_channels: usize,
    /// Square tile side the networks are trained on.
    pub tile_size: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            base_channels: 64,
            tile_size: 256,
        }
    }
}

impl NetConfig {
    /// Checks the tile side and width.
    pub fn validate(&self) -> Result<()> {
        check_side(self.tile_size)?;
        if self.base_channels == 0 {
            return Err(ForgeError::Config("base_channels must be positive".into()));
        }
        Ok(())
    }

    /// Stable hash of everything that determines parameter shapes.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"two-stream-unet/patch-disc v1");
        h.update((self.base_channels as u64).to_le_bytes());
        h.update((self.tile_size as u64).to_le_bytes());
        u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
    }

    fn encoder_channels(&self) -> [usize; ENCODER_DEPTH] {
        let b = self.base_channels;
        [b, 2 * b, 4 * b, 8 * b, 8 * b]
    }

    fn discriminator_channels(&self) -> [usize; 4] {
        let b = self.base_channels;
        [b, 2 * b, 4 * b, 8 * b]
    }
}

fn check_side(side: usize) -> Result<()> {
    if side < MIN_TILE || !side.is_power_of_two() {
        return Err(ForgeError::Shape(format!(
            "tile side must be a power of two >= {MIN_TILE}, got {side}"
        )));
    }
    Ok(())
}

/// Logit-grid side of the discriminator for a square input of side `side`.
pub fn discriminator_grid_side(side: usize) -> usize {
    // Three k4 s2 p1 convolutions halve, two k4 s1 p1 convolutions shrink by one.
    (side >> 3).saturating_sub(2)
}

/// Named trainable tensors, ordered by name.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
}

impl ParamStore {
    /// Empty store.
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a parameter.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<()> {
        self.vars.insert(name.into(), Var::from_tensor(&value)?);
        Ok(())
    }

    /// Parameter by name.
    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.vars
            .get(name)
            .map(|v| v.as_tensor())
            .ok_or_else(|| ForgeError::Shape(format!("missing parameter {name}")))
    }

    /// Mutable handle used by optimizers.
    pub fn var(&self, name: &str) -> Option<&Var> {
        self.vars.get(name)
    }

    /// Parameters in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }

    /// Number of named tensors.
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    /// True when the store holds nothing.
    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    /// Shapes and f32 values of every parameter, in name order.
    pub fn to_arrays(&self) -> Result<Vec<NamedArray>> {
        self.vars
            .iter()
            .map(|(name, v)| {
                let data = v.as_tensor().to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
                Ok(NamedArray {
                    name: name.clone(),
                    shape: v.dims().to_vec(),
                    data,
                })
            })
            .collect()
    }

    /// Overwrites every parameter from arrays produced by [`ParamStore::to_arrays`].
    ///
    /// Names and shapes must match exactly; nothing is modified on error.
    pub fn assign_arrays(&self, arrays: &[NamedArray]) -> Result<()> {
        if arrays.len() != self.vars.len() {
            return Err(ForgeError::CorruptCheckpoint(format!(
                "expected {} parameter arrays, found {}",
                self.vars.len(),
                arrays.len()
            )));
        }
        let mut staged = Vec::with_capacity(arrays.len());
        for NamedArray { name, shape, data } in arrays {
            let var = self
                .vars
                .get(name)
                .ok_or_else(|| ForgeError::CorruptCheckpoint(format!("unexpected parameter {name}")))?;
            if var.dims() != shape.as_slice() {
                return Err(ForgeError::CorruptCheckpoint(format!(
                    "{name} has shape {shape:?}, expected {:?}",
                    var.dims()
                )));
            }
            let t = Tensor::from_slice(data, shape.as_slice(), var.device())?.to_dtype(var.dtype())?;
            staged.push((var, t));
        }
        for (var, t) in staged {
            var.set(&t)?;
        }
        Ok(())
    }

    /// Sets every parameter to zero.
    pub fn zero_all(&self) -> Result<()> {
        for v in self.vars.values() {
            v.set(&v.zeros_like()?)?;
        }
        Ok(())
    }

    /// Deep copy with fresh variables.
    pub fn deep_clone(&self) -> Result<Self> {
        let mut out = Self::new();
        for (name, v) in &self.vars {
            out.insert(name.clone(), v.as_tensor().copy()?)?;
        }
        Ok(out)
    }
}

/// Generator and discriminator parameters for one architecture.
#[derive(Debug, Clone)]
pub struct Networks {
    /// Architecture.
    pub config: NetConfig,
    /// Generator parameters.
    pub generator: ParamStore,
    /// Discriminator parameters.
    pub discriminator: ParamStore,
}

struct Init<'a> {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
    dtype: DType,
    device: &'a Device,
}

impl Init<'_> {
    fn weight(&mut self, shape: (usize, usize, usize, usize)) -> Result<Tensor> {
        let n = shape.0 * shape.1 * shape.2 * shape.3;
        let data: Vec<f64> = (0..n).map(|_| self.normal.sample(&mut self.rng)).collect();
        Ok(Tensor::from_vec(data, shape, self.device)?.to_dtype(self.dtype)?)
    }

    fn bias(&self, n: usize) -> Result<Tensor> {
        Ok(Tensor::zeros(n, self.dtype, self.device)?)
    }
}

/// Deterministic N(0, 0.02) initialization of both networks from `seed`.
///
/// Biases start at zero except the normal-z output bias, which starts at one
/// so initial normals lean toward the surface normal.
pub fn init_params(config: &NetConfig, seed: u64, dtype: DType, device: &Device) -> Result<Networks> {
    config.validate()?;
    let mut init = Init {
        rng: ChaCha8Rng::seed_from_u64(seed),
        normal: Normal::new(0.0, INIT_STD).expect("positive std"),
        dtype,
        device,
    };
    let mut gen = ParamStore::new();
    let enc = config.encoder_channels();
    let mut in_c = 3;
    for (i, &out_c) in enc.iter().enumerate() {
        gen.insert(format!("enc{i}.weight"), init.weight((out_c, in_c, 4, 4))?)?;
        if !encoder_normed(i) {
            gen.insert(format!("enc{i}.bias"), init.bias(out_c)?)?;
        }
        in_c = out_c;
    }
    for stream in ["nr", "ds"] {
        for i in (0..ENCODER_DEPTH).rev() {
            let in_c = if i == ENCODER_DEPTH - 1 { enc[i] } else { 2 * enc[i] };
            let out_c = if i == 0 { 4 } else { enc[i - 1] };
            // Transposed convolution kernels are (in, out, kh, kw).
            gen.insert(format!("{stream}.dec{i}.weight"), init.weight((in_c, out_c, 4, 4))?)?;
            if i == 0 {
                let mut b = vec![0.0f64; 4];
                if stream == "nr" {
                    b[2] = 1.0;
                }
                gen.insert(
                    format!("{stream}.dec0.bias"),
                    Tensor::from_vec(b, 4, device)?.to_dtype(dtype)?,
                )?;
            }
        }
    }

    let mut disc = ParamStore::new();
    let mut in_c = 3;
    for (i, &out_c) in config.discriminator_channels().iter().enumerate() {
        disc.insert(format!("c{i}.weight"), init.weight((out_c, in_c, 4, 4))?)?;
        if !discriminator_normed(i) {
            disc.insert(format!("c{i}.bias"), init.bias(out_c)?)?;
        }
        in_c = out_c;
    }
    disc.insert("head.weight", init.weight((1, in_c, 4, 4))?)?;
    disc.insert("head.bias", init.bias(1)?)?;

    Ok(Networks {
        config: *config,
        generator: gen,
        discriminator: disc,
    })
}

fn encoder_normed(i: usize) -> bool {
    i != 0 && i != ENCODER_DEPTH - 1
}

fn discriminator_normed(i: usize) -> bool {
    i != 0
}

/// Per-sample, per-channel normalization over the spatial axes.
pub fn instance_norm(x: &Tensor) -> Result<Tensor> {
    let mean = x.mean_keepdim(D::Minus1)?.mean_keepdim(D::Minus2)?;
    let centered = x.broadcast_sub(&mean)?;
    let var = centered.sqr()?.mean_keepdim(D::Minus1)?.mean_keepdim(D::Minus2)?;
    Ok(centered.broadcast_div(&(var + NORM_EPS)?.sqrt()?)?)
}

fn add_bias(x: Tensor, bias: &Tensor) -> Result<Tensor> {
    Ok(x.broadcast_add(&bias.reshape((1, (), 1, 1))?)?)
}

/// Differentiable counterpart of the material model's normal normalization:
/// `z` is replaced by `max(|z|, 1e-3·|v|, 1e-12)` before normalizing.
pub fn normalize_normal_tensor(raw: &Tensor) -> Result<Tensor> {
    let x = raw.narrow(1, 0, 1)?;
    let y = raw.narrow(1, 1, 1)?;
    let z = raw.narrow(1, 2, 1)?;
    let len = raw.sqr()?.sum_keepdim(1)?.sqrt()?;
    let z = z.abs()?.maximum(&len.affine(NORMAL_MIN_Z as f64, 0.0)?)?.maximum(1e-12)?;
    let v = Tensor::cat(&[&x, &y, &z], 1)?;
    let norm = v.sqr()?.sum_keepdim(1)?.sqrt()?;
    Ok(v.broadcast_div(&norm)?)
}

fn check_input(x: &Tensor, expected: Option<usize>) -> Result<()> {
    let (_, c, h, w) = x.dims4()?;
    if c != 3 || h != w {
        return Err(ForgeError::Shape(format!("expected square RGB input, got {:?}", x.dims())));
    }
    match expected {
        Some(side) if side != h => Err(ForgeError::Shape(format!(
            "input side {h} does not match configured tile {side}"
        ))),
        _ => Ok(()),
    }
}

/// Generator forward on `(N, 3, H, W)` display-encoded images in `[0, 1]`.
///
/// `H` may be any power of two ≥ 64; the result has the input resolution.
pub fn generator_forward(input: &Tensor, params: &ParamStore) -> Result<MapTensors> {
    check_input(input, None)?;
    check_side(input.dim(2)?)?;
    let mut h = input.affine(2.0, -1.0)?;
    let mut skips = Vec::with_capacity(ENCODER_DEPTH);
    for i in 0..ENCODER_DEPTH {
        h = h.conv2d(params.get(&format!("enc{i}.weight"))?, 1, 2, 1, 1)?;
        h = if encoder_normed(i) {
            instance_norm(&h)?
        } else {
            add_bias(h, params.get(&format!("enc{i}.bias"))?)?
        };
        h = candle_nn::ops::leaky_relu(&h, LEAKY_SLOPE)?;
        skips.push(h.clone());
    }
    let mut outputs = Vec::with_capacity(2);
    for stream in ["nr", "ds"] {
        let mut d = h.clone();
        for i in (0..ENCODER_DEPTH).rev() {
            if i != ENCODER_DEPTH - 1 {
                d = Tensor::cat(&[&d, &skips[i]], 1)?;
            }
            d = d.conv_transpose2d(params.get(&format!("{stream}.dec{i}.weight"))?, 1, 0, 2, 1)?;
            d = if i == 0 {
                add_bias(d, params.get(&format!("{stream}.dec0.bias"))?)?
            } else {
                instance_norm(&d)?.relu()?
            };
        }
        outputs.push(d);
    }
    let nr = &outputs[0];
    let ds = &outputs[1];
    let sigmoid = candle_nn::ops::sigmoid;
    Ok(MapTensors {
        normal: normalize_normal_tensor(&nr.narrow(1, 0, 3)?)?,
        roughness: sigmoid(&nr.narrow(1, 3, 1)?)?.affine(1.0 - ALPHA_MIN as f64, ALPHA_MIN as f64)?,
        diffuse: sigmoid(&ds.narrow(1, 0, 3)?)?,
        specular: sigmoid(&ds.narrow(1, 3, 1)?)?,
    })
}

/// Discriminator forward: `(N, 3, S, S)` images in `[0, 1]` to
/// `(N, 1, g, g)` logits, where `S` must equal the configured tile side.
pub fn discriminator_forward(input: &Tensor, params: &ParamStore, config: &NetConfig) -> Result<Tensor> {
    check_input(input, Some(config.tile_size))?;
    discriminator_forward_any(input, params)
}

/// Discriminator forward without the tile-size check.
pub fn discriminator_forward_any(input: &Tensor, params: &ParamStore) -> Result<Tensor> {
    let mut h = input.affine(2.0, -1.0)?;
    for i in 0..4 {
        let stride = if i < 3 { 2 } else { 1 };
        h = h.conv2d(params.get(&format!("c{i}.weight"))?, 1, stride, 1, 1)?;
        h = if discriminator_normed(i) {
            instance_norm(&h)?
        } else {
            add_bias(h, params.get(&format!("c{i}.bias"))?)?
        };
        h = candle_nn::ops::leaky_relu(&h, LEAKY_SLOPE)?;
    }
    let logits = h.conv2d(params.get("head.weight")?, 1, 1, 1, 1)?;
    add_bias(logits, params.get("head.bias")?)
}

/// Runs the generator on one image and downloads validated maps.
pub fn generate_maps(tile: &LdrImage, params: &ParamStore) -> Result<SvbrdfMaps> {
    let dtype = params.get("enc0.weight")?.dtype();
    let device = params.get("enc0.weight")?.device().clone();
    let x = image_to_tensor(tile, dtype, &device)?;
    generator_forward(&x, params)?.to_maps()
}
