//! Differentiable colocated point-light renderer.
//!
//! With light and camera at the same point the half vector equals the light
//! direction, Schlick's Fresnel reduces to the specular albedo, and the
//! height-correlated Smith term becomes `c / sqrt(c² + α²(1 - c²))` with
//! `c = n·l`. Folding the cosine factor in, each pixel's radiance is
//!
//! ```text
//! (ρ_d c / π + D(c) ρ_s / (4 sqrt(c² + α²(1 - c²)))) · I / d²
//! ```
//!
//! which has no singularity at grazing angles. Pixels with `c <= 0` are
//! masked to zero.

use std::f64::consts::PI;

use candle_core::{DType, Device, Tensor};
use svbrdf_core::{SceneConfig, SvbrdfMaps};

use crate::error::{ForgeError, Result};
use crate::tensor::{image_to_tensor, tensor_to_image};

/// Lower clamp applied before the display gamma so its gradient stays bounded.
pub const TONEMAP_FLOOR: f64 = 1e-6;

/// SVBRDF maps as `(N, C, H, W)` tensors.
#[derive(Debug, Clone)]
pub struct MapTensors {
    /// `(N, 3, H, W)` diffuse albedo.
    pub diffuse: Tensor,
    /// `(N, 1, H, W)` specular albedo.
    pub specular: Tensor,
    /// `(N, 1, H, W)` roughness.
    pub roughness: Tensor,
    /// `(N, 3, H, W)` unit normals.
    pub normal: Tensor,
}

impl MapTensors {
    /// Uploads validated maps as a batch of one.
    pub fn from_maps(maps: &SvbrdfMaps, dtype: DType, device: &Device) -> Result<Self> {
        Ok(Self {
            diffuse: image_to_tensor(maps.diffuse(), dtype, device)?,
            specular: image_to_tensor(maps.specular(), dtype, device)?,
            roughness: image_to_tensor(maps.roughness(), dtype, device)?,
            normal: image_to_tensor(maps.normal(), dtype, device)?,
        })
    }

    /// Downloads the first batch element, revalidating the invariants.
    pub fn to_maps(&self) -> Result<SvbrdfMaps> {
        Ok(SvbrdfMaps::new(
            tensor_to_image(&self.diffuse)?,
            tensor_to_image(&self.specular)?,
            tensor_to_image(&self.roughness)?,
            tensor_to_image(&self.normal)?,
        )?)
    }

    /// Spatial size `(H, W)`.
    pub fn spatial(&self) -> Result<(usize, usize)> {
        let (_, _, h, w) = self.diffuse.dims4()?;
        Ok((h, w))
    }

    /// Normals as colors, `n * 0.5 + 0.5`.
    pub fn normal_encoded(&self) -> Result<Tensor> {
        Ok(self.normal.affine(0.5, 0.5)?)
    }

    /// The maps in diffuse, specular, roughness, normal order.
    pub fn as_array(&self) -> [&Tensor; 4] {
        [&self.diffuse, &self.specular, &self.roughness, &self.normal]
    }
}

/// Per-pixel light direction and falloff for one raster size and scene.
#[derive(Debug, Clone)]
pub struct Geometry {
    /// `(1, 3, H, W)` unit vectors toward the light.
    pub light_dir: Tensor,
    /// `(1, 1, H, W)` irradiance scale `I / d²`.
    pub falloff: Tensor,
    scene: SceneConfig,
}

impl Geometry {
    /// Precomputes the geometry of a `width × height` raster.
    pub fn new(scene: &SceneConfig, width: usize, height: usize, dtype: DType, device: &Device) -> Result<Self> {
        scene.validate()?;
        let mut dirs = Vec::with_capacity(width * height * 3);
        let mut falloff = Vec::with_capacity(width * height);
        let h = scene.light_height as f64;
        for y in 0..height {
            for x in 0..width {
                let [px, py] = scene.pixel_position(x, y, width, height);
                let d2 = px * px + py * py + h * h;
                let d = d2.sqrt();
                dirs.extend([-px / d, -py / d, h / d]);
                falloff.push(scene.light_intensity as f64 / d2);
            }
        }
        let nchw = |data: Vec<f64>, c: usize| -> Result<Tensor> {
            Ok(Tensor::from_vec(data, (height, width, c), device)?
                .permute((2, 0, 1))?
                .unsqueeze(0)?
                .to_dtype(dtype)?
                .contiguous()?)
        };
        Ok(Self {
            light_dir: nchw(dirs, 3)?,
            falloff: nchw(falloff, 1)?,
            scene: *scene,
        })
    }

    /// Scene this geometry was built for.
    pub fn scene(&self) -> &SceneConfig {
        &self.scene
    }

    /// Raster size `(H, W)`.
    pub fn spatial(&self) -> Result<(usize, usize)> {
        let (_, _, h, w) = self.light_dir.dims4()?;
        Ok((h, w))
    }
}

/// Linear radiance `(N, 3, H, W)` of `maps` lit as described by `geometry`.
pub fn render(maps: &MapTensors, geometry: &Geometry) -> Result<Tensor> {
    if maps.spatial()? != geometry.spatial()? {
        return Err(ForgeError::Shape(format!(
            "maps are {:?} but geometry is {:?}",
            maps.spatial()?,
            geometry.spatial()?
        )));
    }
    let cos = maps.normal.broadcast_mul(&geometry.light_dir)?.sum_keepdim(1)?;
    let lit = cos.gt(0.0)?.to_dtype(cos.dtype())?;
    let c = cos.relu()?;
    let c2 = c.sqr()?;
    let a2 = maps.roughness.sqr()?;

    let ndf_base = (c2.mul(&(&a2 - 1.0)?)? + 1.0)?;
    let ndf = a2.div(&ndf_base.sqr()?.affine(PI, 0.0)?)?;
    let smith = (&c2 + a2.mul(&(1.0 - &c2)?)?)?.sqrt()?;
    let specular = ndf
        .mul(&maps.specular)?
        .div(&smith.affine(4.0, 0.0)?)?
        .mul(&lit)?;

    let diffuse = maps.diffuse.broadcast_mul(&c)?.affine(1.0 / PI, 0.0)?;
    let radiance = diffuse.broadcast_add(&specular)?.broadcast_mul(&geometry.falloff)?;
    Ok(radiance)
}

/// Display encoding `clamp(v, floor, 1)^(1/gamma)`.
pub fn tonemap(linear: &Tensor, gamma: f64) -> Result<Tensor> {
    Ok(linear.clamp(TONEMAP_FLOOR, 1.0)?.powf(1.0 / gamma)?)
}

/// Mean over channels, keeping the channel axis: `(N, C, H, W) → (N, 1, H, W)`.
pub fn channel_mean(t: &Tensor) -> Result<Tensor> {
    Ok(t.mean_keepdim(1)?)
}
