//! Recovery metrics: per-map error, re-render error and the spot ratio that
//! measures highlight residue in a map.

use crate::error::{Error, Result};
use crate::image::{Image, LdrImage};
use crate::material::{SceneConfig, SvbrdfMaps, GAMMA};
use crate::render::{render, tonemap};

/// Map order used by every per-map array in this module.
pub const MAP_NAMES: [&str; 4] = ["diffuse", "specular", "roughness", "normal"];

/// Evaluation of a recovered material against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalReport {
    /// RMSE of diffuse, specular and roughness values, then the RMS angular
    /// error of the normals in degrees.
    pub rmse: [f64; 4],
    /// Mean absolute difference between the display-encoded re-render of
    /// the recovered maps and the input photograph.
    pub rerender_l1: f64,
    /// Center-disk over outer-ring mean luminance, per recovered map.
    pub spot_ratio: [f64; 4],
    /// Wall-clock time spent producing the recovery.
    pub runtime_seconds: f64,
}

/// Center-disk (radius `H/8`) over outer-ring (`[3H/8, H/2]`) mean
/// luminance. Stationary maps score close to 1; a residual highlight at the
/// center pushes the ratio above 1.
pub fn spot_ratio(img: &Image) -> f64 {
    let lum = img.luminance();
    let (w, h) = (lum.width(), lum.height());
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let hf = h as f64;
    let (disk, inner, outer) = (hf / 8.0, 3.0 * hf / 8.0, hf / 2.0);
    let (mut ds, mut dn, mut rs, mut rn) = (0.0, 0usize, 0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            let r = libm::sqrt(dx * dx + dy * dy);
            let v = lum.get(x, y, 0) as f64;
            if r < disk {
                ds += v;
                dn += 1;
            } else if r >= inner && r <= outer {
                rs += v;
                rn += 1;
            }
        }
    }
    if dn == 0 || rn == 0 {
        return 1.0;
    }
    let (d, r) = (ds / dn as f64, rs / rn as f64);
    if r == 0.0 {
        return if d == 0.0 { 1.0 } else { f64::INFINITY };
    }
    d / r
}

fn rmse(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum();
    Ok(libm::sqrt(sum / a.data().len() as f64))
}

/// RMS angle between corresponding unit normals, in degrees.
pub fn normal_angle_rms(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, q) in a.data().chunks_exact(3).zip(b.data().chunks_exact(3)) {
        let p = [p[0] as f64, p[1] as f64, p[2] as f64];
        let q = [q[0] as f64, q[1] as f64, q[2] as f64];
        let cross = [
            p[1] * q[2] - p[2] * q[1],
            p[2] * q[0] - p[0] * q[2],
            p[0] * q[1] - p[1] * q[0],
        ];
        let sin = libm::sqrt(cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]);
        let cos = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
        let deg = libm::atan2(sin, cos).to_degrees();
        sum += deg * deg;
        n += 1;
    }
    Ok(libm::sqrt(sum / n.max(1) as f64))
}

/// Per-map spot ratios in [`MAP_NAMES`] order; normals use their color encoding.
pub fn spot_ratios(maps: &SvbrdfMaps) -> [f64; 4] {
    [
        spot_ratio(maps.diffuse()),
        spot_ratio(maps.specular()),
        spot_ratio(maps.roughness()),
        spot_ratio(&maps.normal_encoded()),
    ]
}

/// [`evaluate_with_scene`] under the default scene.
pub fn evaluate(recovered: &SvbrdfMaps, reference: &SvbrdfMaps, input_photo: &LdrImage) -> Result<EvalReport> {
    evaluate_with_scene(recovered, reference, input_photo, &SceneConfig::default())
}

/// Compares `recovered` against `reference` and re-renders it against the
/// photograph it was recovered from. `runtime_seconds` is left at zero for
/// the caller to fill in.
pub fn evaluate_with_scene(
    recovered: &SvbrdfMaps,
    reference: &SvbrdfMaps,
    input_photo: &LdrImage,
    scene: &SceneConfig,
) -> Result<EvalReport> {
    let shape = (reference.width(), reference.height(), 3);
    for actual in [
        (recovered.width(), recovered.height(), 3),
        input_photo.shape(),
    ] {
        if actual != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual,
            });
        }
    }
    let rerender = tonemap(&render(recovered, scene), GAMMA)?;
    Ok(EvalReport {
        rmse: [
            rmse(recovered.diffuse(), reference.diffuse())?,
            rmse(recovered.specular(), reference.specular())?,
            rmse(recovered.roughness(), reference.roughness())?,
            normal_angle_rms(recovered.normal(), reference.normal())?,
        ],
        rerender_l1: rerender.mean_abs_diff(input_photo)?,
        spot_ratio: spot_ratios(recovered),
        runtime_seconds: 0.0,
    })
}
