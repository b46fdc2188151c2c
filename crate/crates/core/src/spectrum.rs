//! Discrete Fourier transforms of single-channel images.
//!
//! Power-of-two lengths use an in-place radix-2 transform; other lengths fall
//! back to a direct `O(n²)` DFT. Transforms are unnormalized.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::Image;

/// Complex number as `(re, im)`.
pub type Complex = (f64, f64);

fn fft_pow2(buf: &mut [Complex]) {
    let n = buf.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let (s, c) = libm::sincos(ang * k as f64);
                let (ar, ai) = buf[start + k];
                let (br, bi) = buf[start + k + len / 2];
                let (tr, ti) = (br * c - bi * s, br * s + bi * c);
                buf[start + k] = (ar + tr, ai + ti);
                buf[start + k + len / 2] = (ar - tr, ai - ti);
            }
        }
        len <<= 1;
    }
}

fn dft_direct(buf: &mut [Complex]) {
    let n = buf.len();
    let src = buf.to_vec();
    for (k, out) in buf.iter_mut().enumerate() {
        let mut acc = (0.0, 0.0);
        for (t, &(re, im)) in src.iter().enumerate() {
            let ang = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
            let (s, c) = libm::sincos(ang);
            acc.0 += re * c - im * s;
            acc.1 += re * s + im * c;
        }
        *out = acc;
    }
}

/// Forward 1-D transform in place.
pub fn fft(buf: &mut [Complex]) {
    if buf.len() <= 1 {
        return;
    }
    if buf.len().is_power_of_two() {
        fft_pow2(buf);
    } else {
        dft_direct(buf);
    }
}

/// Forward 2-D transform of a single-channel image, row-major `height × width`.
pub fn fft2d(img: &Image) -> Result<Vec<Complex>> {
    if img.channels() != 1 {
        return Err(Error::InvalidValue("fft2d expects a single-channel image".into()));
    }
    let (w, h) = (img.width(), img.height());
    let mut data: Vec<Complex> = img.data().iter().map(|&v| (v as f64, 0.0)).collect();
    for row in data.chunks_exact_mut(w) {
        fft(row);
    }
    let mut col = vec![(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = data[y * w + x];
        }
        fft(&mut col);
        for y in 0..h {
            data[y * w + x] = col[y];
        }
    }
    Ok(data)
}

/// Magnitude of the 2-D spectrum, same layout as the input.
pub fn magnitude_spectrum(img: &Image) -> Result<Vec<f64>> {
    Ok(fft2d(img)?
        .into_iter()
        .map(|(re, im)| libm::sqrt(re * re + im * im))
        .collect())
}

/// Signed frequency index of bin `k` in a length-`n` transform.
#[inline]
pub fn signed_frequency(k: usize, n: usize) -> isize {
    if k <= n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}

/// Fraction of non-DC spectral energy in the lowest sixteenth of the
/// frequency plane (`|kx| < W/8` and `|ky| < H/8`) of the image luminance.
///
/// Illumination gradients are low-frequency while stationary texture is not,
/// so the score drops as illumination is removed. An image with no non-DC
/// energy scores 0.
pub fn stationarity_score(img: &Image) -> Result<f64> {
    let lum = img.luminance();
    let (w, h) = (lum.width(), lum.height());
    let spec = fft2d(&lum)?;
    let (bx, by) = (w as f64 / 8.0, h as f64 / 8.0);
    let (mut low, mut total) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            if x == 0 && y == 0 {
                continue;
            }
            let (re, im) = spec[y * w + x];
            let e = re * re + im * im;
            total += e;
            let fx = signed_frequency(x, w).unsigned_abs() as f64;
            let fy = signed_frequency(y, h).unsigned_abs() as f64;
            if fx < bx && fy < by {
                low += e;
            }
        }
    }
    // Floating-point residue of a constant image is not signal.
    let dc = spec[0].0 * spec[0].0 + spec[0].1 * spec[0].1;
    if total <= 1e-20 * dc.max(1.0) {
        return Ok(0.0);
    }
    Ok(low / total)
}
