//! Ablation driver over loss configurations.

use std::path::Path;
use std::time::Instant;

use svbrdf_core::metrics::{evaluate, spot_ratios};
use svbrdf_core::{render, tonemap, Image, LdrImage, SceneConfig, SvbrdfMaps, GAMMA};

use crate::error::{ForgeError, Result};
use crate::io::write_grid;
use crate::trainer::{finetune, inference_window, recover_from_scratch, LossLog, TrainConfig, TrainState};

/// Header of the ablation CSV.
pub const ABLATION_CSV_HEADER: [&str; 11] = [
    "variant",
    "rmse_diffuse",
    "rmse_specular",
    "rmse_roughness",
    "rmse_normal_deg",
    "rerender_l1",
    "spot_diffuse",
    "spot_specular",
    "spot_roughness",
    "spot_normal",
    "runtime_seconds",
];

/// Panels per grid row: four maps, the input and the re-render.
pub const GRID_PANELS: usize = 6;

/// One loss configuration of the ablation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    /// Row label.
    pub name: &'static str,
    /// Fourier weight λ1.
    pub lambda_fourier: f64,
    /// Perceptual weight λ2.
    pub lambda_perceptual: f64,
    /// Fourier enable flags: diffuse, specular, roughness, normal.
    pub fourier_per_map: [bool; 4],
}

impl Variant {
    /// `base` with this variant's loss settings.
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut c = base.clone();
        c.weights.lambda_fourier = self.lambda_fourier;
        c.weights.lambda_perceptual = self.lambda_perceptual;
        c.fourier_per_map = self.fourier_per_map;
        c
    }
}

/// Adversarial + diffuse only, then the Fourier term, then the perceptual
/// term, then the Fourier term without roughness or without specular.
pub fn ablation_variants(base: &TrainConfig) -> Vec<Variant> {
    let lf = if base.weights.lambda_fourier > 0.0 { base.weights.lambda_fourier } else { 0.1 };
    let lp = if base.weights.lambda_perceptual > 0.0 { base.weights.lambda_perceptual } else { 0.2 };
    let all = [true; 4];
    vec![
        Variant {
            name: "eq1-only",
            lambda_fourier: 0.0,
            lambda_perceptual: 0.0,
            fourier_per_map: all,
        },
        Variant {
            name: "fourier",
            lambda_fourier: lf,
            lambda_perceptual: 0.0,
            fourier_per_map: all,
        },
        Variant {
            name: "fourier+perceptual",
            lambda_fourier: lf,
            lambda_perceptual: lp,
            fourier_per_map: all,
        },
        Variant {
            name: "fourier-no-roughness",
            lambda_fourier: lf,
            lambda_perceptual: lp,
            fourier_per_map: [true, true, false, true],
        },
        Variant {
            name: "fourier-no-specular",
            lambda_fourier: lf,
            lambda_perceptual: lp,
            fourier_per_map: [true, false, true, true],
        },
    ]
}

/// Metrics of one recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    /// Variant label.
    pub variant: String,
    /// Per-map RMSE (normals in degrees) when a reference was supplied.
    pub rmse: Option<[f64; 4]>,
    /// Mean absolute re-render error against the input.
    pub rerender_l1: f64,
    /// Center/ring luminance ratio per recovered map.
    pub spot_ratio: [f64; 4],
    /// Wall-clock seconds of the recovery.
    pub runtime_seconds: f64,
}

/// Recovered maps plus their evaluation.
#[derive(Debug, Clone)]
pub struct Recovery {
    /// Maps at the inference resolution.
    pub maps: SvbrdfMaps,
    /// Input photograph cropped to the maps' window.
    pub photo: LdrImage,
    /// Display-encoded re-render under the default scene.
    pub rerender: LdrImage,
    /// Metrics.
    pub row: AblationRow,
}

/// Crops `photo` (and `reference`) to the generator's inference window.
pub fn crop_for_inference(
    photo: &LdrImage,
    reference: Option<&SvbrdfMaps>,
    tile: usize,
) -> Result<(LdrImage, Option<SvbrdfMaps>)> {
    let (x, y, s) = inference_window(photo.width(), photo.height(), tile)?;
    let p = photo.crop((x, y), (s, s))?;
    let r = match reference {
        Some(r) => {
            if (r.width(), r.height()) != (photo.width(), photo.height()) {
                return Err(ForgeError::Shape(format!(
                    "reference is {}x{}, photo is {}x{}",
                    r.width(),
                    r.height(),
                    photo.width(),
                    photo.height()
                )));
            }
            Some(r.crop((x, y), (s, s))?)
        }
        None => None,
    };
    Ok((p, r))
}

/// Scores recovered maps against the photograph and, if given, a reference.
pub fn score(
    variant: &str,
    maps: &SvbrdfMaps,
    photo: &LdrImage,
    reference: Option<&SvbrdfMaps>,
    runtime_seconds: f64,
) -> Result<(AblationRow, LdrImage)> {
    let (photo, reference) = crop_for_inference(photo, reference, maps.width())?;
    let rerender = tonemap(&render(maps, &SceneConfig::default()), GAMMA)?;
    let mut row = AblationRow {
        variant: variant.to_string(),
        rmse: None,
        rerender_l1: rerender.mean_abs_diff(&photo)?,
        spot_ratio: spot_ratios(maps),
        runtime_seconds,
    };
    if let Some(r) = reference {
        row.rmse = Some(evaluate(maps, &r, &photo)?.rmse);
    }
    Ok((row, rerender))
}

/// Recovers `photo` under `config`: fine-tuning a copy of `pretrained` when
/// given, otherwise training from scratch.
pub fn recover(
    variant: &str,
    photo: &LdrImage,
    reference: Option<&SvbrdfMaps>,
    config: &TrainConfig,
    pretrained: Option<&TrainState>,
) -> Result<(Recovery, TrainState, LossLog)> {
    let start = Instant::now();
    let (maps, state, log) = match pretrained {
        Some(p) => {
            let copy = TrainState::from_checkpoint(&p.to_checkpoint()?, config)?;
            finetune(copy, photo, config)?
        }
        None => recover_from_scratch(photo, config)?,
    };
    let elapsed = start.elapsed().as_secs_f64();
    let (row, rerender) = score(variant, &maps, photo, reference, elapsed)?;
    let (photo, _) = crop_for_inference(photo, None, maps.width())?;
    Ok((
        Recovery {
            maps,
            photo,
            rerender,
            row,
        },
        state,
        log,
    ))
}

/// Runs every variant of [`ablation_variants`] with the same seed.
pub fn run_ablation(
    photo: &LdrImage,
    reference: Option<&SvbrdfMaps>,
    config: &TrainConfig,
    pretrained: Option<&TrainState>,
) -> Result<Vec<Recovery>> {
    ablation_variants(config)
        .iter()
        .map(|v| Ok(recover(v.name, photo, reference, &v.apply(config), pretrained)?.0))
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// CSV text of ablation rows with [`ABLATION_CSV_HEADER`]. Missing RMSE
/// values are left empty.
pub fn rows_to_csv(rows: &[AblationRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| ForgeError::Config(format!("csv: {e}"));
    w.write_record(ABLATION_CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.variant.clone()];
        match r.rmse {
            Some(rmse) => rec.extend(rmse.iter().map(|v| fmt(*v))),
            None => rec.extend(std::iter::repeat_n(String::new(), 4)),
        }
        rec.push(fmt(r.rerender_l1));
        rec.extend(r.spot_ratio.iter().map(|v| fmt(*v)));
        rec.push(format!("{:.3}", r.runtime_seconds));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| ForgeError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes `ablation.csv` and `grid.png` into `dir`. Each grid row holds
/// diffuse, specular, roughness, encoded normal, input and re-render.
pub fn write_ablation(dir: &Path, recoveries: &[Recovery]) -> Result<usize> {
    std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
    let rows: Vec<AblationRow> = recoveries.iter().map(|r| r.row.clone()).collect();
    let csv_path = dir.join("ablation.csv");
    std::fs::write(&csv_path, rows_to_csv(&rows)?).map_err(|e| ForgeError::io(&csv_path, e))?;
    let grid: Vec<Vec<Image>> = recoveries
        .iter()
        .map(|r| {
            vec![
                r.maps.diffuse().clone(),
                r.maps.specular().clone(),
                r.maps.roughness().clone(),
                r.maps.normal_encoded(),
                (*r.photo).clone(),
                (*r.rerender).clone(),
            ]
        })
        .collect();
    write_grid(&dir.join("grid.png"), &grid)
}
