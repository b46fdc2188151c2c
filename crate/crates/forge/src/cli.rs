//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use svbrdf_core::metrics::evaluate;
use svbrdf_core::{render_input, synth_material, MaterialSpec, Pattern, SceneConfig};

use crate::bench::{recover, rows_to_csv, run_ablation, score, write_ablation};
use crate::config;
use crate::error::{ForgeError, Result};
use crate::io::{read_maps, read_photo, write_maps, write_photo};
use crate::trainer::{guess_for, pretrain, TrainConfig, TrainState};

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status of a failed run.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status of a command-line usage error.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "svbrdf-forge", version, about = "Recover SVBRDF maps from one flash photograph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TrainOpts {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Iterations of this stage.
    #[arg(long)]
    iters: Option<u64>,
    /// Seed for initialization and tile sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Training tile side.
    #[arg(long)]
    tile: Option<usize>,
    /// Adversarial weight.
    #[arg(long)]
    lambda_gan: Option<f64>,
    /// Fourier weight.
    #[arg(long)]
    lambda_fourier: Option<f64>,
    /// Perceptual weight.
    #[arg(long)]
    lambda_perceptual: Option<f64>,
    /// Start from the full-size preset instead of the desk-scale one.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Debug, Clone, Copy)]
enum Stage {
    Pretrain,
    Finetune,
    Scratch,
}

impl TrainOpts {
    fn build(&self, stage: Stage) -> Result<TrainConfig> {
        let mut entries = match &self.config {
            Some(path) => config::read(path)?,
            None => Default::default(),
        };
        if self.paper_scale {
            entries.insert("paper_scale".into(), toml::Value::Boolean(true));
        }
        let mut c = config::build(&entries)?;
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.tile {
            c.tile_size = v;
        }
        if let Some(v) = self.lambda_gan {
            c.weights.lambda_gan = v;
        }
        if let Some(v) = self.lambda_fourier {
            c.weights.lambda_fourier = v;
        }
        if let Some(v) = self.lambda_perceptual {
            c.weights.lambda_perceptual = v;
        }
        if let Some(n) = self.iters {
            match stage {
                Stage::Pretrain => c.pretrain_iters = n,
                Stage::Finetune => c.finetune_iters = n,
                Stage::Scratch => c.scratch_iters = n,
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train fresh networks on one photograph and write a checkpoint.
    Pretrain {
        /// Input photograph (8-bit sRGB PNG).
        #[arg(long = "in")]
        input: PathBuf,
        /// Checkpoint to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainOpts,
    },
    /// Recover maps for a photograph, fine-tuning a checkpoint if given.
    Recover {
        /// Input photograph.
        #[arg(long = "in")]
        input: PathBuf,
        /// Pretrained checkpoint; trains from scratch when absent.
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Output directory for maps, re-render, losses and checkpoint.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainOpts,
    },
    /// Write the guessed diffuse map and print its stationarity score.
    Guess {
        /// Input photograph.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Blur width in pixels (default: side / 8).
        #[arg(long)]
        sigma: Option<f32>,
    },
    /// Generate a stationary synthetic material.
    Synth {
        /// checker, stripes, noise-tile or bricks.
        #[arg(long)]
        pattern: Pattern,
        /// Map side in pixels.
        #[arg(long, default_value_t = 128)]
        side: usize,
        /// Pattern period in pixels (default: side / 8).
        #[arg(long)]
        period: Option<usize>,
        /// Noise seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a material directory under the default colocated flash.
    Render {
        /// Material directory.
        #[arg(long)]
        maps: PathBuf,
        /// Output PNG.
        #[arg(long)]
        out: PathBuf,
        /// Double the light intensity so highlights clip.
        #[arg(long)]
        overexpose: bool,
    },
    /// Compare recovered maps against reference maps.
    Eval {
        /// Recovered material directory.
        #[arg(long)]
        rec: PathBuf,
        /// Reference material directory.
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Input photograph (default: the reference rendered without overexposure).
        #[arg(long)]
        photo: Option<PathBuf>,
        /// Also write the CSV row here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover one photograph under every loss ablation.
    Ablate {
        /// Input photograph.
        #[arg(long = "in")]
        input: PathBuf,
        /// Reference material directory for RMSE columns.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// Pretrained checkpoint to fine-tune; trains from scratch when absent.
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Output directory for ablation.csv and grid.png.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainOpts,
    },
}

fn loss_csv_path(ckpt: &Path) -> PathBuf {
    let mut name = ckpt.file_name().map(OsString::from).unwrap_or_default();
    name.push(".losses.csv");
    ckpt.with_file_name(name)
}

fn load_pretrained(path: &Path, config: &TrainConfig) -> Result<TrainState> {
    TrainState::load(path, config)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Pretrain { input, out, train } => {
            let config = train.build(Stage::Pretrain)?;
            let photo = read_photo(&input)?;
            let (state, log) = pretrain(&photo, &config)?;
            state.save(&out)?;
            log.write_csv(&loss_csv_path(&out))?;
            println!("wrote {} after {} iterations", out.display(), state.iteration);
        }
        Command::Recover {
            input,
            ckpt,
            out,
            train,
        } => {
            let stage = if ckpt.is_some() { Stage::Finetune } else { Stage::Scratch };
            let config = train.build(stage)?;
            let photo = read_photo(&input)?;
            let pretrained = match &ckpt {
                Some(p) => Some(load_pretrained(p, &config)?),
                None => None,
            };
            let (rec, state, log) = recover("recover", &photo, None, &config, pretrained.as_ref())?;
            write_maps(&out, &rec.maps)?;
            write_photo(&out.join("rerender.png"), &rec.rerender)?;
            state.save(&out.join("checkpoint.ckpt"))?;
            log.write_csv(&out.join("losses.csv"))?;
            println!("{}", rows_to_csv(&[rec.row])?.trim_end());
        }
        Command::Guess { input, out, sigma } => {
            let photo = read_photo(&input)?;
            let mut config = TrainConfig::desk_scale();
            config.guess_sigma = sigma;
            config.validate()?;
            let guessed = guess_for(&photo, &config)?;
            std::fs::create_dir_all(&out).map_err(|e| ForgeError::io(&out, e))?;
            write_photo(&out.join("guessed.png"), &guessed.map)?;
            println!("stationarity_score={:.6}", guessed.stationarity_score);
        }
        Command::Synth {
            pattern,
            side,
            period,
            seed,
            out,
        } => {
            let spec = MaterialSpec::new(pattern, side, period.unwrap_or(side / 8), seed);
            write_maps(&out, &synth_material(&spec)?)?;
            println!("wrote {} {} maps to {}", pattern.name(), side, out.display());
        }
        Command::Render {
            maps,
            out,
            overexpose,
        } => {
            let maps = read_maps(&maps)?;
            write_photo(&out, &render_input(&maps, &SceneConfig::default(), overexpose))?;
        }
        Command::Eval {
            rec,
            reference,
            photo,
            out,
        } => {
            let rec = read_maps(&rec)?;
            let reference = read_maps(&reference)?;
            let photo = match photo {
                Some(p) => read_photo(&p)?,
                None => render_input(&reference, &SceneConfig::default(), false),
            };
            let report = evaluate(&rec, &reference, &photo)?;
            let (mut row, _) = score("eval", &rec, &photo, Some(&reference), 0.0)?;
            row.rmse = Some(report.rmse);
            let text = rows_to_csv(&[row])?;
            print!("{text}");
            if let Some(path) = out {
                std::fs::write(&path, &text).map_err(|e| ForgeError::io(&path, e))?;
            }
        }
        Command::Ablate {
            input,
            reference,
            ckpt,
            out,
            train,
        } => {
            let stage = if ckpt.is_some() { Stage::Finetune } else { Stage::Scratch };
            let config = train.build(stage)?;
            let photo = read_photo(&input)?;
            let reference = match &reference {
                Some(dir) => Some(read_maps(dir)?),
                None => None,
            };
            let pretrained = match &ckpt {
                Some(p) => Some(load_pretrained(p, &config)?),
                None => None,
            };
            let recoveries = run_ablation(&photo, reference.as_ref(), &config, pretrained.as_ref())?;
            let panels = write_ablation(&out, &recoveries)?;
            let rows: Vec<_> = recoveries.into_iter().map(|r| r.row).collect();
            print!("{}", rows_to_csv(&rows)?);
            println!("grid panels: {panels}");
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
