//! Per-image adversarial training and the pretrain / fine-tune schedule.

use std::io::Write;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use svbrdf_core::guess::{default_sigma, guess_diffuse_with_sigma};
use svbrdf_core::{GuessedDiffuse, LdrImage, SceneConfig, SvbrdfMaps, GAMMA};

use crate::adam::{Adam, AdamConfig};
use crate::checkpoint::Checkpoint;
use crate::error::{ForgeError, Result};
use crate::losses::{
    diffuse_loss, discriminator_loss, generator_adversarial_loss, perceptual_loss, total_generator_loss,
    FourierLoss, FourierOptions, LossReport, LossTerms, LossWeights,
};
use crate::networks::{discriminator_forward, generator_forward, init_params, NetConfig, Networks};
use crate::perceptual::FeatureExtractor;
use crate::render::{render, tonemap, Geometry, MapTensors};
use crate::tensor::{image_to_tensor, scalar};

/// Environment variable consulted when no extractor path is configured.
pub const WEIGHTS_ENV: &str = "SVBRDF_FORGE_WEIGHTS";

/// Everything that shapes a training run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    /// Auxiliary loss weights.
    pub weights: LossWeights,
    /// Adam step size for both networks.
    pub learning_rate: f64,
    /// Iterations of the one-off pretraining run.
    pub pretrain_iters: u64,
    /// Iterations spent per new image when starting from a checkpoint.
    pub finetune_iters: u64,
    /// Iterations spent per image without a checkpoint.
    pub scratch_iters: u64,
    /// Square training tile side (power of two, at least 64).
    pub tile_size: usize,
    /// First-layer channel count of both networks.
    pub base_channels: usize,
    /// Seed for initialization and tile sampling.
    pub seed: u64,
    /// Adam `(β1, β2)`.
    pub adam_betas: (f64, f64),
    /// Fourier loss enable flags: diffuse, specular, roughness, normal.
    pub fourier_per_map: [bool; 4],
    /// Compare complex spectra instead of magnitudes.
    pub fourier_complex: bool,
    /// Random 90° rotations and flips of sampled tiles.
    pub augment: bool,
    /// Discriminator updates per generator update.
    pub discriminator_steps: u32,
    /// Blur width of the guessed diffuse map; `None` uses a side/8 default.
    pub guess_sigma: Option<f32>,
    /// Safetensors file of the perceptual feature extractor.
    pub perceptual_weights: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::paper_scale()
    }
}

impl TrainConfig {
    /// Full-size settings: 256 tiles, 64-channel networks, learning rate
    /// 2e-5 and 10,000 / 3,000 / 20,000 iterations.
    pub fn paper_scale() -> Self {
        Self {
            weights: LossWeights::default(),
            learning_rate: 2e-5,
            pretrain_iters: 10_000,
            finetune_iters: 3_000,
            scratch_iters: 20_000,
            tile_size: 256,
            base_channels: 64,
            seed: 0,
            adam_betas: (0.5, 0.999),
            fourier_per_map: [true; 4],
            fourier_complex: false,
            augment: true,
            discriminator_steps: 1,
            guess_sigma: None,
            perceptual_weights: None,
        }
    }

    /// Settings sized for a CPU: 64 tiles from 128 photographs, narrow
    /// networks and 2,000 / 500 / 3,000 iterations.
    pub fn desk_scale() -> Self {
        Self {
            learning_rate: 2e-4,
            pretrain_iters: 2_000,
            finetune_iters: 500,
            scratch_iters: 3_000,
            tile_size: 64,
            base_channels: 8,
            ..Self::paper_scale()
        }
    }

    /// Checks ranges.
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.net_config().validate()?;
        let bad = |msg: String| Err(ForgeError::Config(msg));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.pretrain_iters == 0 || self.scratch_iters == 0 {
            return bad("pretrain_iters and scratch_iters must be > 0".into());
        }
        let (b1, b2) = self.adam_betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad(format!("adam betas must lie in [0, 1), got ({b1}, {b2})"));
        }
        if self.discriminator_steps == 0 {
            return bad("discriminator_steps must be > 0".into());
        }
        if let Some(s) = self.guess_sigma {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("guess_sigma must be > 0, got {s}"));
            }
        }
        Ok(())
    }

    /// Architecture implied by the tile size and width.
    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            base_channels: self.base_channels,
            tile_size: self.tile_size,
        }
    }

    /// Adam settings for both networks.
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_betas.0,
            beta2: self.adam_betas.1,
            ..AdamConfig::default()
        }
    }

    /// Fourier loss options.
    pub fn fourier_options(&self) -> FourierOptions {
        FourierOptions {
            per_map: self.fourier_per_map,
            complex: self.fourier_complex,
        }
    }

    /// Stable hash of the whole configuration.
    pub fn fingerprint(&self) -> u64 {
        let text = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    /// Extractor path from the config, else from the environment.
    pub fn resolved_weights_path(&self) -> Option<PathBuf> {
        self.perceptual_weights
            .clone()
            .or_else(|| std::env::var_os(WEIGHTS_ENV).map(PathBuf::from))
    }
}

/// Crop offset and orientation of one training tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileTransform {
    /// Left column.
    pub x: usize,
    /// Top row.
    pub y: usize,
    /// Side.
    pub size: usize,
    /// Clockwise quarter turns.
    pub quarter_turns: u8,
    /// Horizontal mirror after rotation.
    pub flip: bool,
}

impl TileTransform {
    /// Draws a uniform offset and, with `augment`, a uniform orientation.
    pub fn sample(width: usize, height: usize, size: usize, augment: bool, rng: &mut impl Rng) -> Result<Self> {
        if width < size || height < size {
            return Err(ForgeError::Shape(format!(
                "photo {width}x{height} is smaller than the {size} tile"
            )));
        }
        let x = rng.random_range(0..=width - size);
        let y = rng.random_range(0..=height - size);
        let (quarter_turns, flip) = if augment {
            (rng.random_range(0..4u8), rng.random_bool(0.5))
        } else {
            (0, false)
        };
        Ok(Self {
            x,
            y,
            size,
            quarter_turns,
            flip,
        })
    }

    /// Cuts and orients the tile out of `img`.
    pub fn apply(&self, img: &LdrImage) -> Result<LdrImage> {
        Ok(img
            .crop((self.x, self.y), (self.size, self.size))?
            .rotate_flip(self.quarter_turns, self.flip))
    }
}

/// A random tile of `photo`.
pub fn sample_tile(photo: &LdrImage, size: usize, augment: bool, rng: &mut impl Rng) -> Result<LdrImage> {
    TileTransform::sample(photo.width(), photo.height(), size, augment, rng)?.apply(photo)
}

/// Networks, optimizer moments, iteration counter and sampling RNG.
#[derive(Debug, Clone)]
pub struct TrainState {
    /// Both networks.
    pub nets: Networks,
    /// Generator optimizer.
    pub gen_opt: Adam,
    /// Discriminator optimizer.
    pub disc_opt: Adam,
    /// Completed training steps.
    pub iteration: u64,
    /// Tile sampling RNG.
    pub rng: ChaCha8Rng,
    /// Fingerprint of the configuration that produced the state.
    pub config_fingerprint: u64,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Result<Vec<u8>> {
    if s.len() % 2 != 0 {
        return Err(ForgeError::CorruptCheckpoint("odd hex length".into()));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&s[i..i + 2], 16).map_err(|_| ForgeError::CorruptCheckpoint("bad hex".into()))
        })
        .collect()
}

fn parse_meta<T: std::str::FromStr>(ckpt: &Checkpoint, key: &str) -> Result<T> {
    ckpt.meta(key)?
        .parse()
        .map_err(|_| ForgeError::CorruptCheckpoint(format!("bad metadata value for {key}")))
}

impl TrainState {
    /// Fresh networks and optimizers from `config.seed`.
    pub fn new(config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let nets = init_params(&config.net_config(), config.seed, DType::F32, &Device::Cpu)?;
        let gen_opt = Adam::new(config.adam(), &nets.generator)?;
        let disc_opt = Adam::new(config.adam(), &nets.discriminator)?;
        Ok(Self {
            nets,
            gen_opt,
            disc_opt,
            iteration: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config_fingerprint: config.fingerprint(),
        })
    }

    /// Keeps the network weights, restarts optimizers, counter and RNG under
    /// `config`. This is how a pretrained checkpoint seeds a new image.
    pub fn restart(&mut self, config: &TrainConfig) -> Result<()> {
        config.validate()?;
        if config.net_config().fingerprint() != self.nets.config.fingerprint() {
            return Err(ForgeError::Fingerprint {
                expected: config.net_config().fingerprint(),
                found: self.nets.config.fingerprint(),
            });
        }
        self.gen_opt = Adam::new(config.adam(), &self.nets.generator)?;
        self.disc_opt = Adam::new(config.adam(), &self.nets.discriminator)?;
        self.iteration = 0;
        self.rng = ChaCha8Rng::seed_from_u64(config.seed);
        self.config_fingerprint = config.fingerprint();
        Ok(())
    }

    /// Serializes everything needed to resume bit-exactly.
    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut arrays = Vec::new();
        for (prefix, store) in [("gen.", &self.nets.generator), ("disc.", &self.nets.discriminator)] {
            for mut a in store.to_arrays()? {
                a.name = format!("{prefix}{}", a.name);
                arrays.push(a);
            }
        }
        arrays.extend(self.gen_opt.state_arrays("adam.gen.")?);
        arrays.extend(self.disc_opt.state_arrays("adam.disc.")?);
        let mut ckpt = Checkpoint {
            arch_fingerprint: self.nets.config.fingerprint(),
            config_fingerprint: self.config_fingerprint,
            arrays,
            ..Default::default()
        };
        let meta = &mut ckpt.metadata;
        meta.insert("base_channels".into(), self.nets.config.base_channels.to_string());
        meta.insert("tile_size".into(), self.nets.config.tile_size.to_string());
        meta.insert("iteration".into(), self.iteration.to_string());
        meta.insert("adam.gen.steps".into(), self.gen_opt.steps().to_string());
        meta.insert("adam.disc.steps".into(), self.disc_opt.steps().to_string());
        meta.insert("rng.seed".into(), hex(&self.rng.get_seed()));
        meta.insert("rng.stream".into(), self.rng.get_stream().to_string());
        meta.insert("rng.word_pos".into(), self.rng.get_word_pos().to_string());
        Ok(ckpt)
    }

    /// Restores a state. The architecture recorded in the checkpoint must
    /// match `config`; optimizer hyperparameters come from `config`.
    pub fn from_checkpoint(ckpt: &Checkpoint, config: &TrainConfig) -> Result<Self> {
        let expected = config.net_config().fingerprint();
        if ckpt.arch_fingerprint != expected {
            return Err(ForgeError::Fingerprint {
                expected,
                found: ckpt.arch_fingerprint,
            });
        }
        let mut state = Self::new(config)?;
        state.nets.generator.assign_arrays(&ckpt.arrays_with_prefix("gen."))?;
        state.nets.discriminator.assign_arrays(&ckpt.arrays_with_prefix("disc."))?;
        state
            .gen_opt
            .load_state(&ckpt.arrays_with_prefix("adam.gen."), parse_meta(ckpt, "adam.gen.steps")?)?;
        state
            .disc_opt
            .load_state(&ckpt.arrays_with_prefix("adam.disc."), parse_meta(ckpt, "adam.disc.steps")?)?;
        state.iteration = parse_meta(ckpt, "iteration")?;
        let seed: [u8; 32] = unhex(ckpt.meta("rng.seed")?)?
            .try_into()
            .map_err(|_| ForgeError::CorruptCheckpoint("rng seed must be 32 bytes".into()))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(parse_meta(ckpt, "rng.stream")?);
        rng.set_word_pos(parse_meta(ckpt, "rng.word_pos")?);
        state.rng = rng;
        state.config_fingerprint = ckpt.config_fingerprint;
        Ok(state)
    }

    /// Atomically writes the state to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint()?.write_atomic(path)
    }

    /// Reads a state written by [`TrainState::save`].
    pub fn load(path: &Path, config: &TrainConfig) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::read(path)?, config)
    }
}

/// Loss machinery that depends on the tile size but not on the weights.
#[derive(Debug)]
pub struct StepContext {
    geometry: Geometry,
    fourier: FourierLoss,
    extractor: Option<FeatureExtractor>,
    weights: LossWeights,
    net: NetConfig,
    augment: bool,
    discriminator_steps: u32,
}

impl StepContext {
    /// Builds the tile geometry and Fourier basis for a photograph of side
    /// `photo_side`, and loads the feature extractor when λ2 > 0.
    ///
    /// Without extractor weights λ2 is set to zero and a warning is logged.
    pub fn new(config: &TrainConfig, photo_side: usize) -> Result<Self> {
        config.validate()?;
        let t = config.tile_size;
        let scene = SceneConfig::default().scaled_extent(t as f32 / photo_side as f32);
        let mut weights = config.weights;
        let extractor = if weights.lambda_perceptual > 0.0 {
            let loaded = match config.resolved_weights_path() {
                Some(path) => FeatureExtractor::load(&path),
                None => Err(ForgeError::ExtractorUnavailable(format!(
                    "set perceptual.weights_path or {WEIGHTS_ENV}"
                ))),
            };
            match loaded {
                Ok(fx) => Some(fx),
                Err(e) => {
                    log::warn!("{e}; training with lambda_perceptual = 0");
                    weights.lambda_perceptual = 0.0;
                    None
                }
            }
        } else {
            None
        };
        Ok(Self {
            geometry: Geometry::new(&scene, t, t, DType::F32, &Device::Cpu)?,
            fourier: FourierLoss::new(t, t, config.fourier_options(), DType::F32, &Device::Cpu)?,
            extractor,
            weights,
            net: config.net_config(),
            augment: config.augment,
            discriminator_steps: config.discriminator_steps,
        })
    }

    /// Uses `extractor` for the perceptual term regardless of configuration.
    pub fn with_extractor(mut self, extractor: FeatureExtractor, lambda_perceptual: f64) -> Self {
        self.extractor = Some(extractor);
        self.weights.lambda_perceptual = lambda_perceptual;
        self
    }

    /// Loss weights in effect (λ2 may have been dropped to zero).
    pub fn weights(&self) -> &LossWeights {
        &self.weights
    }
}

fn value(t: &Tensor) -> Result<f64> {
    scalar(t)
}

fn non_finite(iteration: u64, report: LossReport) -> ForgeError {
    ForgeError::NonFiniteLoss { iteration, report }
}

/// One discriminator update followed by one generator update on a random
/// tile. Returns the losses measured during the step.
pub fn train_step(
    state: &mut TrainState,
    ctx: &StepContext,
    photo: &LdrImage,
    guessed: &GuessedDiffuse,
) -> Result<LossReport> {
    photo.check_same_shape(&guessed.map)?;
    let transform = TileTransform::sample(photo.width(), photo.height(), ctx.net.tile_size, ctx.augment, &mut state.rng)?;
    let tile = transform.apply(photo)?;
    let tile = image_to_tensor(&tile, DType::F32, &Device::Cpu)?;
    let guess_tile = transform.apply(&guessed.map)?;
    let guess_tile = image_to_tensor(&guess_tile, DType::F32, &Device::Cpu)?;
    let iteration = state.iteration;
    let mut report = LossReport {
        diffuse: f64::NAN,
        adversarial_g: f64::NAN,
        adversarial_d: f64::NAN,
        fourier: f64::NAN,
        perceptual: f64::NAN,
        total_generator: f64::NAN,
    };

    let maps = generator_forward(&tile, &state.nets.generator)?;
    let rerender = tonemap(&render(&maps, &ctx.geometry)?, GAMMA as f64)?;

    let fake = rerender.detach();
    for _ in 0..ctx.discriminator_steps {
        let real_logits = discriminator_forward(&tile, &state.nets.discriminator, &ctx.net)?;
        let fake_logits = discriminator_forward(&fake, &state.nets.discriminator, &ctx.net)?;
        let d_loss = discriminator_loss(&real_logits, &fake_logits)?;
        report.adversarial_d = value(&d_loss)?;
        if !report.adversarial_d.is_finite() {
            return Err(non_finite(iteration, report));
        }
        let grads = d_loss.backward()?;
        state.disc_opt.step(&state.nets.discriminator, &grads)?;
    }

    let w = &ctx.weights;
    let diffuse_display = tonemap(&maps.diffuse, GAMMA as f64)?;
    let l_diffuse = diffuse_loss(&diffuse_display, &guess_tile)?;
    let g_adv = generator_adversarial_loss(&discriminator_forward(&rerender, &state.nets.discriminator, &ctx.net)?)?;
    let spectral_maps = MapTensors {
        diffuse: diffuse_display,
        ..maps.clone()
    };
    let l_fourier = if w.lambda_fourier > 0.0 {
        ctx.fourier.compute(&spectral_maps, &guess_tile)?
    } else {
        let detached = MapTensors {
            diffuse: spectral_maps.diffuse.detach(),
            specular: spectral_maps.specular.detach(),
            roughness: spectral_maps.roughness.detach(),
            normal: spectral_maps.normal.detach(),
        };
        ctx.fourier.compute(&detached, &guess_tile)?
    };
    let l_perceptual = match &ctx.extractor {
        Some(fx) if w.lambda_perceptual > 0.0 => Some(perceptual_loss(&tile, &rerender, fx)?),
        _ => None,
    };

    let terms = LossTerms {
        diffuse: value(&l_diffuse)?,
        adversarial_g: value(&g_adv)?,
        adversarial_d: report.adversarial_d,
        fourier: value(&l_fourier)?,
        perceptual: match &l_perceptual {
            Some(p) => value(p)?,
            None => 0.0,
        },
    };
    report = total_generator_loss(&terms, w);
    if !report.is_finite() {
        return Err(non_finite(iteration, report));
    }

    let mut total = l_diffuse;
    if w.lambda_gan > 0.0 {
        total = (total + g_adv.affine(w.lambda_gan, 0.0)?)?;
    }
    if w.lambda_fourier > 0.0 {
        total = (total + l_fourier.affine(w.lambda_fourier, 0.0)?)?;
    }
    if let Some(p) = l_perceptual {
        total = (total + p.affine(w.lambda_perceptual, 0.0)?)?;
    }
    let grads = total.backward()?;
    state.gen_opt.step(&state.nets.generator, &grads)?;
    state.iteration += 1;
    Ok(report)
}

/// Loss reports of a run, in step order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossLog {
    /// `(iteration, report)` pairs.
    pub rows: Vec<(u64, LossReport)>,
}

/// Header of the loss-curve CSV.
pub const LOSS_CSV_HEADER: &str = "iter,diffuse,adv_g,adv_d,fourier,perceptual,total";

impl LossLog {
    /// CSV text with [`LOSS_CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LOSS_CSV_HEADER);
        out.push('\n');
        for (i, r) in &self.rows {
            out.push_str(&format!(
                "{i},{},{},{},{},{},{}\n",
                r.diffuse, r.adversarial_g, r.adversarial_d, r.fourier, r.perceptual, r.total_generator
            ));
        }
        out
    }

    /// Writes the CSV file.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| ForgeError::io(path, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| ForgeError::io(path, e))
    }

    /// Last report, if any.
    pub fn last(&self) -> Option<&LossReport> {
        self.rows.last().map(|(_, r)| r)
    }
}

/// The guessed diffuse map under the configured blur width.
pub fn guess_for(photo: &LdrImage, config: &TrainConfig) -> Result<GuessedDiffuse> {
    let sigma = config.guess_sigma.unwrap_or_else(|| default_sigma(photo.height()));
    Ok(guess_diffuse_with_sigma(photo, sigma)?)
}

/// Runs `iters` steps on `photo`.
pub fn run(state: &mut TrainState, config: &TrainConfig, photo: &LdrImage, iters: u64) -> Result<LossLog> {
    let guessed = guess_for(photo, config)?;
    let ctx = StepContext::new(config, photo.width().min(photo.height()))?;
    run_with(state, &ctx, photo, &guessed, iters)
}

/// Runs `iters` steps with a prepared context.
pub fn run_with(
    state: &mut TrainState,
    ctx: &StepContext,
    photo: &LdrImage,
    guessed: &GuessedDiffuse,
    iters: u64,
) -> Result<LossLog> {
    let mut log = LossLog::default();
    for _ in 0..iters {
        let it = state.iteration;
        let report = train_step(state, ctx, photo, guessed)?;
        if it % 100 == 0 {
            log::debug!("iter {it}: {report:?}");
        }
        log.rows.push((it, report));
    }
    Ok(log)
}

/// Largest centered power-of-two square (at least one tile) inside a
/// `width × height` photograph, as `(x, y, side)`.
pub fn inference_window(width: usize, height: usize, tile: usize) -> Result<(usize, usize, usize)> {
    let side = width.min(height);
    if side < tile {
        return Err(ForgeError::Shape(format!("photo side {side} is smaller than the {tile} tile")));
    }
    let s = 1usize << (usize::BITS - 1 - side.leading_zeros());
    Ok(((width - s) / 2, (height - s) / 2, s))
}

/// The photograph cropped to [`inference_window`].
pub fn inference_crop(photo: &LdrImage, tile: usize) -> Result<LdrImage> {
    let (x, y, s) = inference_window(photo.width(), photo.height(), tile)?;
    Ok(photo.crop((x, y), (s, s))?)
}

/// Generator output on the whole (cropped) photograph.
pub fn infer(state: &TrainState, photo: &LdrImage) -> Result<SvbrdfMaps> {
    let crop = inference_crop(photo, state.nets.config.tile_size)?;
    crate::networks::generate_maps(&crop, &state.nets.generator)
}

/// Trains fresh networks on `photo` for `pretrain_iters` steps.
pub fn pretrain(photo: &LdrImage, config: &TrainConfig) -> Result<(TrainState, LossLog)> {
    let mut state = TrainState::new(config)?;
    let log = run(&mut state, config, photo, config.pretrain_iters)?;
    Ok((state, log))
}

/// Continues a pretrained state on a new photograph for `finetune_iters`
/// steps with fresh optimizers, then infers the maps.
pub fn finetune(mut state: TrainState, photo: &LdrImage, config: &TrainConfig) -> Result<(SvbrdfMaps, TrainState, LossLog)> {
    state.restart(config)?;
    let log = run(&mut state, config, photo, config.finetune_iters)?;
    let maps = infer(&state, photo)?;
    Ok((maps, state, log))
}

/// Trains fresh networks for `scratch_iters` steps and infers the maps.
pub fn recover_from_scratch(photo: &LdrImage, config: &TrainConfig) -> Result<(SvbrdfMaps, TrainState, LossLog)> {
    let mut state = TrainState::new(config)?;
    let log = run(&mut state, config, photo, config.scratch_iters)?;
    let maps = infer(&state, photo)?;
    Ok((maps, state, log))
}
