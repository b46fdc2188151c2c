//! Flat key/value configuration files.
//!
//! A config file is TOML restricted to scalar values; dotted keys and tables
//! are flattened, so `fourier.complex = true` and `[fourier] complex = true`
//! are the same setting. Recognized keys:
//!
//! | key                         | type   | meaning                                   |
//! |-----------------------------|--------|-------------------------------------------|
//! | `seed`                      | int    | initialization and sampling seed          |
//! | `learning_rate`             | float  | Adam step size                            |
//! | `pretrain_iters`            | int    | pretraining iterations                    |
//! | `finetune_iters`            | int    | fine-tuning iterations per image          |
//! | `scratch_iters`             | int    | from-scratch iterations per image         |
//! | `tile_size`                 | int    | training tile side                        |
//! | `base_channels`             | int    | network width                             |
//! | `adam.beta1`, `adam.beta2`  | float  | Adam decay rates                          |
//! | `lambda_gan`                | float  | adversarial weight λ                      |
//! | `lambda_fourier`            | float  | Fourier weight λ1                         |
//! | `lambda_perceptual`         | float  | perceptual weight λ2                      |
//! | `fourier.diffuse` … `fourier.normal` | bool | per-map Fourier flags            |
//! | `fourier.complex`           | bool   | compare complex spectra                   |
//! | `augment`                   | bool   | random tile rotations and flips           |
//! | `discriminator_steps`       | int    | discriminator updates per generator step  |
//! | `guess.sigma`               | float  | guessed-diffuse blur width in pixels      |
//! | `perceptual.weights_path`   | string | VGG-19 safetensors file                   |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use toml::Value;

use crate::error::{ForgeError, Result};
use crate::trainer::TrainConfig;

/// Every key [`apply`] understands.
pub const KEYS: [&str; 22] = [
    "seed",
    "learning_rate",
    "pretrain_iters",
    "finetune_iters",
    "scratch_iters",
    "tile_size",
    "base_channels",
    "adam.beta1",
    "adam.beta2",
    "lambda_gan",
    "lambda_fourier",
    "lambda_perceptual",
    "fourier.diffuse",
    "fourier.specular",
    "fourier.roughness",
    "fourier.normal",
    "fourier.complex",
    "augment",
    "discriminator_steps",
    "guess.sigma",
    "perceptual.weights_path",
    "paper_scale",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out)?,
            Value::Array(_) => return Err(ForgeError::Config(format!("{key}: arrays are not supported"))),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
    Ok(())
}

/// Parses config text into flat key/value pairs.
pub fn parse(text: &str) -> Result<BTreeMap<String, Value>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ForgeError::Config(e.to_string()))?;
    let mut out = BTreeMap::new();
    flatten("", &table, &mut out)?;
    Ok(out)
}

/// Reads and parses a config file.
pub fn read(path: &Path) -> Result<BTreeMap<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
    parse(&text)
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    v.as_integer()
        .and_then(|i| u64::try_from(i).ok())
        .ok_or_else(|| ForgeError::Config(format!("{key} must be a non-negative integer")))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(ForgeError::Config(format!("{key} must be a number"))),
    }
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| ForgeError::Config(format!("{key} must be true or false")))
}

/// Applies one setting.
pub fn set(config: &mut TrainConfig, key: &str, v: &Value) -> Result<()> {
    let fourier_index = |name: &str| ["diffuse", "specular", "roughness", "normal"].iter().position(|n| *n == name);
    match key {
        "seed" => config.seed = as_u64(key, v)?,
        "learning_rate" => config.learning_rate = as_f64(key, v)?,
        "pretrain_iters" => config.pretrain_iters = as_u64(key, v)?,
        "finetune_iters" => config.finetune_iters = as_u64(key, v)?,
        "scratch_iters" => config.scratch_iters = as_u64(key, v)?,
        "tile_size" => config.tile_size = as_u64(key, v)? as usize,
        "base_channels" => config.base_channels = as_u64(key, v)? as usize,
        "adam.beta1" => config.adam_betas.0 = as_f64(key, v)?,
        "adam.beta2" => config.adam_betas.1 = as_f64(key, v)?,
        "lambda_gan" => config.weights.lambda_gan = as_f64(key, v)?,
        "lambda_fourier" => config.weights.lambda_fourier = as_f64(key, v)?,
        "lambda_perceptual" => config.weights.lambda_perceptual = as_f64(key, v)?,
        "fourier.complex" => config.fourier_complex = as_bool(key, v)?,
        "augment" => config.augment = as_bool(key, v)?,
        "discriminator_steps" => {
            config.discriminator_steps = u32::try_from(as_u64(key, v)?)
                .map_err(|_| ForgeError::Config(format!("{key} is too large")))?
        }
        "guess.sigma" => config.guess_sigma = Some(as_f64(key, v)? as f32),
        "perceptual.weights_path" => {
            let s = v
                .as_str()
                .ok_or_else(|| ForgeError::Config(format!("{key} must be a string")))?;
            config.perceptual_weights = Some(PathBuf::from(s));
        }
        _ => match key.strip_prefix("fourier.").and_then(fourier_index) {
            Some(i) => config.fourier_per_map[i] = as_bool(key, v)?,
            None => return Err(ForgeError::Config(format!("unknown key {key:?}"))),
        },
    }
    Ok(())
}

/// Builds a configuration: the desk-scale preset (or the full-size one when
/// `paper_scale = true`), then every other key in order.
pub fn build(entries: &BTreeMap<String, Value>) -> Result<TrainConfig> {
    let paper = match entries.get("paper_scale") {
        Some(v) => as_bool("paper_scale", v)?,
        None => false,
    };
    let mut config = if paper {
        TrainConfig::paper_scale()
    } else {
        TrainConfig::desk_scale()
    };
    for (k, v) in entries {
        if k != "paper_scale" {
            set(&mut config, k, v)?;
        }
    }
    config.validate()?;
    Ok(config)
}
