//! PNG photographs, map directories and comparison grids.
//!
//! A material directory holds `diffuse.png` (RGB, 16 bit), `specular.png`
//! and `roughness.png` (gray, 16 bit), all linear, and `normal.png`
//! (RGB, 16 bit) storing `n·0.5 + 0.5`.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use svbrdf_core::{normalize_normals, Image, LdrImage, SvbrdfMaps};

use crate::error::{ForgeError, Result};

/// File names of the four maps.
pub const MAP_FILES: [&str; 4] = ["diffuse.png", "specular.png", "roughness.png", "normal.png"];

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| match source {
        image::ImageError::IoError(e) => ForgeError::io(path, e),
        source => ForgeError::Image {
            path: path.to_path_buf(),
            source,
        },
    })
}

fn save(img: DynamicImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|source| ForgeError::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn to_rgb(img: &DynamicImage) -> Result<Image> {
    let rgb = img.to_rgb32f();
    let (w, h) = rgb.dimensions();
    let data = rgb.into_raw().into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(Image::new(w as usize, h as usize, 3, data)?)
}

fn to_gray(img: &DynamicImage) -> Result<Image> {
    let gray = img.to_luma32f();
    let (w, h) = gray.dimensions();
    let data = gray.into_raw().into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(Image::new(w as usize, h as usize, 1, data)?)
}

fn quantize16(v: f32) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

fn quantize8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn encode16(img: &Image) -> Result<DynamicImage> {
    let (w, h, c) = img.shape();
    let data: Vec<u16> = img.data().iter().map(|&v| quantize16(v)).collect();
    let (w, h) = (w as u32, h as u32);
    let bad = || ForgeError::Shape(format!("cannot encode a {c}-channel image"));
    match c {
        1 => ImageBuffer::<Luma<u16>, _>::from_raw(w, h, data).map(DynamicImage::ImageLuma16),
        3 => ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, data).map(DynamicImage::ImageRgb16),
        _ => None,
    }
    .ok_or_else(bad)
}

/// 8-bit RGB buffer of a 1- or 3-channel image (gray is replicated).
fn encode8(img: &Image) -> Result<ImageBuffer<Rgb<u8>, Vec<u8>>> {
    let (w, h, c) = img.shape();
    let data: Vec<u8> = match c {
        3 => img.data().iter().map(|&v| quantize8(v)).collect(),
        1 => img.data().iter().flat_map(|&v| [quantize8(v); 3]).collect(),
        _ => return Err(ForgeError::Shape(format!("cannot encode a {c}-channel image"))),
    };
    Ok(ImageBuffer::from_raw(w as u32, h as u32, data).expect("buffer matches dimensions"))
}

/// Reads a photograph as display-encoded RGB in `[0, 1]`.
pub fn read_photo(path: &Path) -> Result<LdrImage> {
    Ok(LdrImage::new(to_rgb(&open(path)?)?)?)
}

/// Writes an 8-bit RGB PNG.
pub fn write_photo(path: &Path, img: &LdrImage) -> Result<()> {
    save(DynamicImage::ImageRgb8(encode8(img)?), path)
}

/// Writes the four maps into `dir`, creating it if needed.
pub fn write_maps(dir: &Path, maps: &SvbrdfMaps) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
    let normal = maps.normal_encoded();
    let images = [maps.diffuse(), maps.specular(), maps.roughness(), &normal];
    for (name, img) in MAP_FILES.iter().zip(images) {
        save(encode16(img)?, &dir.join(name))?;
    }
    Ok(())
}

/// Reads the four maps from `dir`. Normals are renormalized after decoding
/// because 16-bit quantization perturbs their length.
pub fn read_maps(dir: &Path) -> Result<SvbrdfMaps> {
    let load = |i: usize| open(&dir.join(MAP_FILES[i]));
    let diffuse = to_rgb(&load(0)?)?;
    let specular = to_gray(&load(1)?)?;
    let roughness = to_gray(&load(2)?)?;
    let encoded = to_rgb(&load(3)?)?;
    let (normal, _) = normalize_normals(&encoded.map(|v| v * 2.0 - 1.0))?;
    Ok(SvbrdfMaps::new(diffuse, specular, roughness, normal)?)
}

/// Tiles equally sized panels into one 8-bit PNG, one row per inner vector.
/// Returns the number of panels written.
pub fn write_grid(path: &Path, rows: &[Vec<Image>]) -> Result<usize> {
    let first = rows
        .first()
        .and_then(|r| r.first())
        .ok_or_else(|| ForgeError::Shape("empty grid".into()))?;
    let (pw, ph) = (first.width(), first.height());
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut canvas = ImageBuffer::<Rgb<u8>, Vec<u8>>::new((cols * pw) as u32, (rows.len() * ph) as u32);
    let mut count = 0;
    for (r, row) in rows.iter().enumerate() {
        for (c, panel) in row.iter().enumerate() {
            if (panel.width(), panel.height()) != (pw, ph) {
                return Err(ForgeError::Shape(format!(
                    "grid panel {r},{c} is {}x{}, expected {pw}x{ph}",
                    panel.width(),
                    panel.height()
                )));
            }
            let tile = encode8(panel)?;
            for (x, y, px) in tile.enumerate_pixels() {
                canvas.put_pixel((c * pw) as u32 + x, (r * ph) as u32 + y, *px);
            }
            count += 1;
        }
    }
    save(DynamicImage::ImageRgb8(canvas), path)?;
    Ok(count)
}
