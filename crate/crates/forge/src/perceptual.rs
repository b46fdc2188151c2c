//! Frozen VGG-19 feature extractor for the perceptual loss.
//!
//! Weights are read from a safetensors file using the torchvision key layout
//! (`features.{i}.weight`, `features.{i}.bias`). Features are the first ReLU
//! activation of each of the five convolutional blocks.

use std::collections::HashMap;
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ForgeError, Result};

/// Indices of the convolution layers inside `features`.
pub const CONV_INDICES: [usize; 16] = [0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28, 30, 32, 34];

/// Convolutions followed by a 2×2 max-pool before the next block.
const POOL_AFTER: [usize; 4] = [2, 7, 16, 25];

/// Convolutions whose ReLU output is a feature tap (relu1_1 … relu5_1).
pub const TAP_INDICES: [usize; 5] = [0, 5, 10, 19, 28];

/// Convolutions needed to reach the deepest tap.
const USED_CONVS: usize = 13;

const IMAGENET_MEAN: [f64; 3] = [0.485, 0.456, 0.406];
const IMAGENET_STD: [f64; 3] = [0.229, 0.224, 0.225];

#[derive(Debug, Clone)]
struct Conv {
    index: usize,
    weight: Tensor,
    bias: Tensor,
}

/// Immutable VGG-19 trunk up to `relu5_1`.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    convs: Vec<Conv>,
}

impl FeatureExtractor {
    /// Loads weights from a safetensors file.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(ForgeError::ExtractorUnavailable(format!("{} does not exist", path.display())));
        }
        let tensors = candle_core::safetensors::load(path, &Device::Cpu)
            .map_err(|e| ForgeError::ExtractorUnavailable(format!("{}: {e}", path.display())))?;
        Self::from_tensors(&tensors)
    }

    /// Builds the trunk from named tensors, checking the layer chain.
    pub fn from_tensors(tensors: &HashMap<String, Tensor>) -> Result<Self> {
        let mut convs = Vec::with_capacity(USED_CONVS);
        let mut in_channels = 3;
        for &index in &CONV_INDICES[..USED_CONVS] {
            let get = |suffix: &str| {
                let key = format!("features.{index}.{suffix}");
                tensors
                    .get(&key)
                    .cloned()
                    .ok_or_else(|| ForgeError::ExtractorUnavailable(format!("missing tensor {key}")))
            };
            let weight = get("weight")?.to_dtype(DType::F32)?;
            let bias = get("bias")?.to_dtype(DType::F32)?;
            let (out_c, in_c, kh, kw) = weight.dims4()?;
            if in_c != in_channels || (kh, kw) != (3, 3) || bias.dims() != [out_c] {
                return Err(ForgeError::ExtractorUnavailable(format!(
                    "features.{index} has shape {:?} / {:?}, expected [*, {in_channels}, 3, 3]",
                    weight.dims(),
                    bias.dims()
                )));
            }
            in_channels = out_c;
            convs.push(Conv { index, weight, bias });
        }
        Ok(Self { convs })
    }

    /// Randomly initialized trunk with the VGG-19 layer layout and the given
    /// per-block widths (He-normal weights, zero biases). Useful when no
    /// pretrained file is at hand.
    pub fn random(block_widths: [usize; 5], seed: u64) -> Self {
        let blocks = [2usize, 2, 4, 4, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut convs = Vec::with_capacity(USED_CONVS);
        let mut in_c = 3;
        let mut k = 0;
        for (block, &count) in blocks.iter().enumerate() {
            for _ in 0..count {
                let out_c = block_widths[block];
                let std = (2.0 / (in_c * 9) as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("positive std");
                let w: Vec<f32> = (0..out_c * in_c * 9).map(|_| normal.sample(&mut rng) as f32).collect();
                let weight = Tensor::from_vec(w, (out_c, in_c, 3, 3), &Device::Cpu).expect("sized buffer");
                let bias = Tensor::zeros(out_c, DType::F32, &Device::Cpu).expect("cpu alloc");
                convs.push(Conv {
                    index: CONV_INDICES[k],
                    weight,
                    bias,
                });
                in_c = out_c;
                k += 1;
            }
        }
        Self { convs }
    }

    /// Writes the trunk in the layout [`FeatureExtractor::load`] reads.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut map = HashMap::new();
        for conv in &self.convs {
            map.insert(format!("features.{}.weight", conv.index), conv.weight.clone());
            map.insert(format!("features.{}.bias", conv.index), conv.bias.clone());
        }
        candle_core::safetensors::save(&map, path)?;
        Ok(())
    }

    /// Tap activations of `(N, 3, H, W)` images with values in `[0, 1]`.
    pub fn features(&self, images: &Tensor) -> Result<Vec<Tensor>> {
        let (_, c, _, _) = images.dims4()?;
        if c != 3 {
            return Err(ForgeError::Shape(format!("feature extractor needs 3 channels, got {c}")));
        }
        let dtype = images.dtype();
        let device = images.device();
        let mean = Tensor::from_slice(&IMAGENET_MEAN, (1, 3, 1, 1), device)?.to_dtype(dtype)?;
        let std = Tensor::from_slice(&IMAGENET_STD, (1, 3, 1, 1), device)?.to_dtype(dtype)?;
        let mut x = images.broadcast_sub(&mean)?.broadcast_div(&std)?;
        let mut taps = Vec::with_capacity(TAP_INDICES.len());
        for conv in &self.convs {
            let w = conv.weight.to_dtype(dtype)?;
            let b = conv.bias.to_dtype(dtype)?.reshape((1, (), 1, 1))?;
            x = x.conv2d(&w, 1, 1, 1, 1)?.broadcast_add(&b)?.relu()?;
            if TAP_INDICES.contains(&conv.index) {
                taps.push(x.clone());
            }
            if POOL_AFTER.contains(&conv.index) {
                x = max_pool2(&x)?;
            }
        }
        Ok(taps)
    }
}

/// 2×2 stride-2 max pooling written as a reshape and two reductions.
///
/// `Tensor::max_pool2d` in candle scales its gradient by the window's mean
/// of the max mask (1/4 for a unique maximum); reductions route the full
/// gradient to the maximum.
pub fn max_pool2(x: &Tensor) -> Result<Tensor> {
    let (n, c, h, w) = x.dims4()?;
    let (h2, w2) = (h / 2, w / 2);
    let x = if (h % 2, w % 2) != (0, 0) {
        x.narrow(2, 0, 2 * h2)?.narrow(3, 0, 2 * w2)?
    } else {
        x.clone()
    };
    Ok(x.reshape((n, c, h2, 2, w2, 2))?.max(5)?.max(3)?)
}
