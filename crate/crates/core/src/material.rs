//! SVBRDF parameter maps and the colocated flash scene.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;

/// Roughness floor; the GGX distribution diverges as roughness goes to zero.
pub const ALPHA_MIN: f32 = 0.01;

/// Display gamma used for every linear/display conversion.
pub const GAMMA: f32 = 2.2;

/// Tolerance on the unit length of stored normals.
pub const NORMAL_LENGTH_TOLERANCE: f32 = 1e-5;

/// Lower bound on the normal's z component, relative to the vector length.
pub const NORMAL_MIN_Z: f32 = 1e-3;

/// The four per-pixel reflectance maps of a planar material.
///
/// Diffuse albedo (RGB), specular albedo (used as the Fresnel base
/// reflectance), GGX roughness and unit surface normal, all at one
/// resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SvbrdfMaps {
    diffuse: Image,
    specular: Image,
    roughness: Image,
    normal: Image,
}

impl SvbrdfMaps {
    /// Validates every invariant: shared resolution, channel counts,
    /// value ranges and unit, upward-facing normals.
    pub fn new(diffuse: Image, specular: Image, roughness: Image, normal: Image) -> Result<Self> {
        let (w, h) = (diffuse.width(), diffuse.height());
        for (name, img, ch) in [
            ("diffuse", &diffuse, 3),
            ("specular", &specular, 1),
            ("roughness", &roughness, 1),
            ("normal", &normal, 3),
        ] {
            if img.shape() != (w, h, ch) {
                return Err(Error::InvalidValue(format!(
                    "{name} map has shape {:?}, expected {:?}",
                    img.shape(),
                    (w, h, ch)
                )));
            }
        }
        if w == 0 || h == 0 {
            return Err(Error::InvalidValue("maps must not be empty".into()));
        }
        let in_unit = |v: &f32| (0.0..=1.0).contains(v);
        if !diffuse.data().iter().all(in_unit) {
            return Err(Error::InvalidValue("diffuse albedo outside [0, 1]".into()));
        }
        if !specular.data().iter().all(in_unit) {
            return Err(Error::InvalidValue("specular albedo outside [0, 1]".into()));
        }
        if !roughness.data().iter().all(|v| (ALPHA_MIN..=1.0).contains(v)) {
            return Err(Error::InvalidValue(format!(
                "roughness outside [{ALPHA_MIN}, 1]"
            )));
        }
        for n in normal.data().chunks_exact(3) {
            let len = libm::sqrtf(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
            if (len - 1.0).abs() > NORMAL_LENGTH_TOLERANCE || len.is_nan() || n[2] <= 0.0 {
                return Err(Error::InvalidValue(format!(
                    "normal {n:?} is not a unit vector with positive z"
                )));
            }
        }
        Ok(Self {
            diffuse,
            specular,
            roughness,
            normal,
        })
    }

    /// A spatially constant material with flat normals.
    pub fn uniform(
        width: usize,
        height: usize,
        diffuse: [f32; 3],
        specular: f32,
        roughness: f32,
    ) -> Result<Self> {
        Self::new(
            Image::from_fn(width, height, |_, _| diffuse),
            Image::filled(width, height, 1, specular),
            Image::filled(width, height, 1, roughness),
            Image::from_fn(width, height, |_, _| [0.0, 0.0, 1.0]),
        )
    }

    /// Width in pixels.
    pub fn width(&self) -> usize {
        self.diffuse.width()
    }

    /// Height in pixels.
    pub fn height(&self) -> usize {
        self.diffuse.height()
    }

    /// RGB diffuse albedo.
    pub fn diffuse(&self) -> &Image {
        &self.diffuse
    }

    /// Scalar specular albedo.
    pub fn specular(&self) -> &Image {
        &self.specular
    }

    /// Scalar GGX roughness.
    pub fn roughness(&self) -> &Image {
        &self.roughness
    }

    /// Unit normals.
    pub fn normal(&self) -> &Image {
        &self.normal
    }

    /// Normals encoded as colors, `n * 0.5 + 0.5`.
    pub fn normal_encoded(&self) -> Image {
        self.normal.map(|v| v * 0.5 + 0.5)
    }

    /// The maps in `[diffuse, specular, roughness, normal]` order.
    pub fn maps(&self) -> [&Image; 4] {
        [&self.diffuse, &self.specular, &self.roughness, &self.normal]
    }

    /// Splits into `(diffuse, specular, roughness, normal)`.
    pub fn into_parts(self) -> (Image, Image, Image, Image) {
        (self.diffuse, self.specular, self.roughness, self.normal)
    }

    /// Crops all four maps to the same window.
    pub fn crop(&self, origin: (usize, usize), size: (usize, usize)) -> Result<Self> {
        Ok(Self {
            diffuse: self.diffuse.crop(origin, size)?,
            specular: self.specular.crop(origin, size)?,
            roughness: self.roughness.crop(origin, size)?,
            normal: self.normal.crop(origin, size)?,
        })
    }
}

/// A square planar patch lit and viewed from a single point straight above
/// its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    /// The patch spans `[-plane_extent, plane_extent]²` at `z = 0`.
    pub plane_extent: f32,
    /// Height of the colocated light and camera.
    pub light_height: f32,
    /// Radiant intensity of the point light.
    pub light_intensity: f32,
    /// Light and camera share a position. Always true.
    pub colocated: bool,
}

impl SceneConfig {
    /// Validating constructor.
    pub fn new(plane_extent: f32, light_height: f32, light_intensity: f32) -> Result<Self> {
        let scene = Self {
            plane_extent,
            light_height,
            light_intensity,
            colocated: true,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Checks the positivity constraints.
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f32| v.is_finite() && v > 0.0;
        if !ok(self.plane_extent) || !ok(self.light_height) || !ok(self.light_intensity) {
            return Err(Error::InvalidValue(format!("invalid scene {self:?}")));
        }
        if !self.colocated {
            return Err(Error::InvalidValue("only colocated light/camera is supported".into()));
        }
        Ok(())
    }

    /// The intensity that renders a Lambertian plane of albedo `albedo`
    /// to the display value `target` at the center pixel.
    pub fn calibrated_intensity(albedo: f32, target: f32, light_height: f32) -> f32 {
        let linear = libm::powf(target, GAMMA);
        linear * core::f32::consts::PI * light_height * light_height / albedo
    }

    /// World-space center of pixel `(x, y)` in a `width × height` raster.
    /// Row 0 is the `+y` edge.
    #[inline]
    pub fn pixel_position(&self, x: usize, y: usize, width: usize, height: usize) -> [f64; 2] {
        let e = self.plane_extent as f64;
        let px = -e + (x as f64 + 0.5) * 2.0 * e / width as f64;
        let py = e - (y as f64 + 0.5) * 2.0 * e / height as f64;
        [px, py]
    }

    /// The same light over a sub-window whose side is `fraction` of the patch.
    pub fn scaled_extent(&self, fraction: f32) -> Self {
        Self {
            plane_extent: self.plane_extent * fraction,
            ..*self
        }
    }
}

impl Default for SceneConfig {
    /// Unit-half-width patch, light two units above, intensity calibrated so
    /// a 0.5-albedo Lambertian plane shows display value 0.5 at the center.
    fn default() -> Self {
        Self {
            plane_extent: 1.0,
            light_height: 2.0,
            light_intensity: Self::calibrated_intensity(0.5, 0.5, 2.0),
            colocated: true,
        }
    }
}

/// Maps unconstrained 3-vectors to unit normals with positive z.
///
/// Each vector has its z replaced by `max(|z|, 1e-3·|v|, 1e-12)` before
/// normalization, so the map is scale invariant and the zero vector lands
/// on `(0, 0, 1)`. Returns the normals and the number of zero vectors.
pub fn normalize_normals(raw: &Image) -> Result<(Image, usize)> {
    if raw.channels() != 3 {
        return Err(Error::InvalidValue(format!(
            "normals need 3 channels, got {}",
            raw.channels()
        )));
    }
    let mut degenerate = 0;
    let mut out = Vec::with_capacity(raw.data().len());
    for v in raw.data().chunks_exact(3) {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidValue("non-finite normal".into()));
        }
        let n = normalize_normal([v[0] as f64, v[1] as f64, v[2] as f64]);
        if v.iter().all(|c| *c == 0.0) {
            degenerate += 1;
        }
        out.extend(n.iter().map(|c| *c as f32));
    }
    Ok((Image::new(raw.width(), raw.height(), 3, out)?, degenerate))
}

/// The per-vector rule behind [`normalize_normals`].
pub fn normalize_normal(v: [f64; 3]) -> [f64; 3] {
    let len = libm::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    let z = libm::fabs(v[2]).max(NORMAL_MIN_Z as f64 * len).max(1e-12);
    let len = libm::sqrt(v[0] * v[0] + v[1] * v[1] + z * z);
    [v[0] / len, v[1] / len, z / len]
}
