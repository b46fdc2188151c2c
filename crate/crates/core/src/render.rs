//! Point-light rendering of a planar SVBRDF seen by a colocated camera.

use alloc::vec::Vec;

use crate::brdf::{eval_brdf, Vec3};
use crate::error::{Error, Result};
use crate::image::{Image, LdrImage, LinearImage};
use crate::material::{SceneConfig, SvbrdfMaps, GAMMA};

/// Intensity multiplier applied by [`render_input`] when overexposing.
pub const OVEREXPOSE_GAIN: f32 = 2.0;

/// Outgoing radiance at pixel `(x, y)`: `f · I / d² · max(n·l, 0)`.
pub fn render_pixel(maps: &SvbrdfMaps, scene: &SceneConfig, x: usize, y: usize) -> [f64; 3] {
    let (w, h) = (maps.width(), maps.height());
    let [px, py] = scene.pixel_position(x, y, w, h);
    let to_light = Vec3::new(-px, -py, scene.light_height as f64);
    let dist2 = to_light.dot(to_light);
    let l = to_light.normalized();
    let n = maps.normal().pixel(x, y);
    let n = Vec3::new(n[0] as f64, n[1] as f64, n[2] as f64);
    let cos = n.dot(l);
    if cos <= 0.0 {
        return [0.0; 3];
    }
    let kd = maps.diffuse().pixel(x, y);
    let f = eval_brdf(
        l,
        l,
        [kd[0] as f64, kd[1] as f64, kd[2] as f64],
        maps.specular().get(x, y, 0) as f64,
        maps.roughness().get(x, y, 0) as f64,
        n,
    );
    let k = scene.light_intensity as f64 / dist2 * cos;
    [f[0] * k, f[1] * k, f[2] * k]
}

/// Renders the linear radiance image of `maps` under `scene`.
pub fn render(maps: &SvbrdfMaps, scene: &SceneConfig) -> LinearImage {
    let (w, h) = (maps.width(), maps.height());
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            data.extend(render_pixel(maps, scene, x, y).iter().map(|v| *v as f32));
        }
    }
    LinearImage::new(Image::new(w, h, 3, data).expect("render buffer"))
        .expect("rendered radiance is finite and nonnegative")
}

/// Display-encodes linear radiance: `clamp(v, 0, 1)^(1/gamma)`.
pub fn tonemap(img: &LinearImage, gamma: f32) -> Result<LdrImage> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidValue("gamma must be positive".into()));
    }
    let inv = 1.0 / gamma;
    LdrImage::new(img.map(|v| libm::powf(v.clamp(0.0, 1.0), inv)))
}

/// Produces a synthetic input photograph. With `overexpose` the light is
/// boosted by [`OVEREXPOSE_GAIN`] so the highlight clips.
pub fn render_input(maps: &SvbrdfMaps, scene: &SceneConfig, overexpose: bool) -> LdrImage {
    let mut scene = *scene;
    if overexpose {
        scene.light_intensity *= OVEREXPOSE_GAIN;
    }
    tonemap(&render(maps, &scene), GAMMA).expect("gamma is positive")
}
