//! The guessed diffuse map: the input photograph with its slowly varying
//! flash falloff divided out, renormalized and with residual peaks softened.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{Image, LdrImage};
use crate::spectrum::stationarity_score;

/// Floor applied to the illumination estimate.
pub const ILLUMINATION_FLOOR: f32 = 1e-4;

/// Median luminance the guessed map is rescaled to.
pub const TARGET_MEDIAN: f32 = 0.5;

/// Luminance percentile above which values are compressed.
pub const SOFT_CLIP_PERCENTILE: f64 = 0.99;

/// Slope applied above the soft-clip knee.
pub const SOFT_CLIP_SLOPE: f32 = 0.25;

/// Pseudo ground truth for the diffuse albedo, in display encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessedDiffuse {
    /// RGB map in `[0, 1]`, same resolution as the photograph.
    pub map: LdrImage,
    /// Low-frequency share of the map's non-DC spectral energy.
    pub stationarity_score: f64,
}

/// Default blur width: one eighth of the image height.
pub fn default_sigma(height: usize) -> f32 {
    height as f32 / 8.0
}

#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Normalized, truncated (±3σ) Gaussian kernel.
pub fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = libm::ceilf(3.0 * sigma).max(1.0) as isize;
    let mut k: Vec<f32> = (-radius..=radius)
        .map(|i| libm::expf(-((i * i) as f32) / (2.0 * sigma * sigma)))
        .collect();
    let sum: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with mirrored borders.
pub fn gaussian_blur(img: &Image, sigma: f32) -> Image {
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h, ch) = img.shape();
    let mut tmp = vec![0.0f32; w * h * ch];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (k, wt) in kernel.iter().enumerate() {
                    let sx = mirror(x as isize + k as isize - r, w);
                    acc += wt * img.get(sx, y, c);
                }
                tmp[(y * w + x) * ch + c] = acc;
            }
        }
    }
    let mut out = vec![0.0f32; w * h * ch];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (k, wt) in kernel.iter().enumerate() {
                    let sy = mirror(y as isize + k as isize - r, h);
                    acc += wt * tmp[(sy * w + x) * ch + c];
                }
                out[(y * w + x) * ch + c] = acc;
            }
        }
    }
    Image::new(w, h, ch, out).expect("same shape")
}

/// Smooth single-channel estimate of the illumination falloff: the Gaussian
/// low-pass of the luminance, floored at [`ILLUMINATION_FLOOR`].
pub fn estimate_illumination(photo: &LdrImage, sigma: f32) -> Result<Image> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidValue("sigma must be positive".into()));
    }
    Ok(gaussian_blur(&photo.luminance(), sigma).map(|v| v.max(ILLUMINATION_FLOOR)))
}

/// Linear-interpolated quantile of `values` (`q` in `[0, 1]`).
pub fn quantile(values: &[f32], q: f64) -> f32 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(v.len() - 1);
    let t = (pos - lo as f64) as f32;
    v[lo] + (v[hi] - v[lo]) * t
}

/// Builds the guessed diffuse map of `photo` with the default blur width.
pub fn guess_diffuse(photo: &LdrImage) -> Result<GuessedDiffuse> {
    guess_diffuse_with_sigma(photo, default_sigma(photo.height()))
}

/// [`guess_diffuse`] with an explicit illumination blur width.
pub fn guess_diffuse_with_sigma(photo: &LdrImage, sigma: f32) -> Result<GuessedDiffuse> {
    let lum = photo.luminance();
    if lum.data().iter().all(|v| *v <= 0.0) {
        return Err(Error::Degenerate("zero luminance"));
    }
    let illum = estimate_illumination(photo, sigma)?;
    let (w, h, _) = photo.shape();
    let mut ratio = Image::filled(w, h, 3, 0.0);
    for y in 0..h {
        for x in 0..w {
            let l = illum.get(x, y, 0);
            for (o, v) in ratio.pixel_mut(x, y).iter_mut().zip(photo.pixel(x, y)) {
                *o = v / l;
            }
        }
    }

    let ratio_lum = ratio.luminance();
    let mut center = quantile(ratio_lum.data(), 0.5);
    if center <= 0.0 {
        center = ratio_lum.mean() as f32;
    }
    let scale = TARGET_MEDIAN / center;
    let mut out = ratio.map(|v| v * scale);

    let out_lum = out.luminance();
    let knee = quantile(out_lum.data(), SOFT_CLIP_PERCENTILE);
    for y in 0..h {
        for x in 0..w {
            let l = out_lum.get(x, y, 0);
            if l > knee && l > 0.0 {
                let k = (knee + (l - knee) * SOFT_CLIP_SLOPE) / l;
                out.pixel_mut(x, y).iter_mut().for_each(|v| *v *= k);
            }
        }
    }

    let map = LdrImage::from_clamped(out)?;
    let stationarity_score = stationarity_score(&map)?;
    Ok(GuessedDiffuse {
        map,
        stationarity_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ldr(img: Image) -> LdrImage {
        LdrImage::new(img).unwrap()
    }

    #[test]
    fn mirror_indices() {
        assert_eq!(mirror(-1, 4), 0);
        assert_eq!(mirror(-2, 4), 1);
        assert_eq!(mirror(4, 4), 3);
        assert_eq!(mirror(9, 4), 1);
    }

    #[test]
    fn illumination_of_constant_is_constant() {
        let photo = ldr(Image::from_fn(16, 16, |_, _| [0.2, 0.4, 0.6]));
        let lum = 0.2126 * 0.2 + 0.7152 * 0.4 + 0.0722 * 0.6;
        let field = estimate_illumination(&photo, 3.0).unwrap();
        for v in field.data() {
            assert!((v - lum).abs() < 1e-6);
        }
    }

    #[test]
    fn illumination_peaks_at_bright_pixel() {
        let photo = ldr(Image::from_fn(21, 21, |x, y| if (x, y) == (10, 10) { [1.0; 3] } else { [0.0; 3] }));
        let field = estimate_illumination(&photo, 2.0).unwrap();
        let peak = field.get(10, 10, 0);
        for r in 1..8 {
            assert!(field.get(10 + r, 10, 0) < field.get(10 + r - 1, 10, 0));
            assert!(field.get(10 + r, 10, 0) < peak);
        }
    }

    #[test]
    fn black_photo_is_rejected() {
        let photo = ldr(Image::filled(8, 8, 3, 0.0));
        assert_eq!(guess_diffuse(&photo), Err(Error::Degenerate("zero luminance")));
    }

    #[test]
    fn uniform_mid_gray_is_fixed_point() {
        let photo = ldr(Image::filled(32, 32, 3, 0.5));
        let g = guess_diffuse(&photo).unwrap();
        for (a, b) in g.map.data().iter().zip(photo.data()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(g.stationarity_score, 0.0);
    }

    #[test]
    fn quantiles() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
    }
}
