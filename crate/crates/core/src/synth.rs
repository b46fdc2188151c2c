//! Procedural stationary materials for benchmarking.
//!
//! Every map is an affine function of one periodic pattern, so all four maps
//! repeat with the same period, and the normal map is derived from a lightly
//! blurred copy of that pattern used as a height field.

use alloc::format;
use alloc::vec::Vec;
use core::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::guess::gaussian_kernel;
use crate::image::Image;
use crate::material::{normalize_normal, SvbrdfMaps, ALPHA_MIN};

/// Base pattern of a synthetic material.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Two-tone checkerboard; each square is half a period wide.
    Checker,
    /// Vertical two-tone stripes.
    Stripes,
    /// Periodic value noise on a 4×4 lattice per period.
    NoiseTile,
    /// Running-bond bricks with mortar joints.
    Bricks,
}

impl Pattern {
    /// All patterns, in declaration order.
    pub const ALL: [Pattern; 4] = [Pattern::Checker, Pattern::Stripes, Pattern::NoiseTile, Pattern::Bricks];

    /// Lower-case name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Pattern::Checker => "checker",
            Pattern::Stripes => "stripes",
            Pattern::NoiseTile => "noise-tile",
            Pattern::Bricks => "bricks",
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown pattern '{s}'")))
    }
}

/// Parameters of a synthetic material.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSpec {
    /// Base pattern.
    pub pattern: Pattern,
    /// Output side length in pixels.
    pub side: usize,
    /// Pattern period in pixels; must divide `side`.
    pub period: usize,
    /// Diffuse albedo where the pattern is 0 and where it is 1.
    pub diffuse: ([f32; 3], [f32; 3]),
    /// Specular albedo at pattern 0 and 1.
    pub specular: (f32, f32),
    /// Roughness at pattern 0 and 1.
    pub roughness: (f32, f32),
    /// Height-field slope multiplier for the normal map (0 = flat).
    pub normal_strength: f32,
    /// Seed for the random parts of the pattern.
    pub seed: u64,
}

impl MaterialSpec {
    /// A moderately glossy material with the given pattern.
    pub fn new(pattern: Pattern, side: usize, period: usize, seed: u64) -> Self {
        Self {
            pattern,
            side,
            period,
            diffuse: ([0.45, 0.25, 0.15], [0.75, 0.6, 0.45]),
            specular: (0.35, 0.2),
            roughness: (0.25, 0.45),
            normal_strength: 1.5,
            seed,
        }
    }

    /// The three stationary materials used by the highlight benchmark.
    pub fn benchmark_set(side: usize) -> [MaterialSpec; 3] {
        let period = (side / 8).max(2);
        let mut leather = MaterialSpec::new(Pattern::NoiseTile, side, period, 11);
        leather.diffuse = ([0.35, 0.18, 0.1], [0.6, 0.35, 0.2]);
        let tiles = MaterialSpec::new(Pattern::Checker, side, period, 12);
        let mut bricks = MaterialSpec::new(Pattern::Bricks, side, period, 13);
        bricks.diffuse = ([0.5, 0.5, 0.48], [0.6, 0.28, 0.2]);
        bricks.specular = (0.1, 0.3);
        [leather, tiles, bricks]
    }

    fn validate(&self) -> Result<()> {
        if self.period < 2 || self.side == 0 || self.side % self.period != 0 {
            return Err(Error::InvalidValue(format!(
                "period {} must be at least 2 and divide side {}",
                self.period, self.side
            )));
        }
        let unit = |v: f32| (0.0..=1.0).contains(&v);
        let rough = |v: f32| (ALPHA_MIN..=1.0).contains(&v);
        if !(self.diffuse.0.iter().chain(&self.diffuse.1).all(|v| unit(*v))
            && unit(self.specular.0)
            && unit(self.specular.1)
            && rough(self.roughness.0)
            && rough(self.roughness.1)
            && self.normal_strength.is_finite())
        {
            return Err(Error::InvalidValue(format!("material parameters out of range: {self:?}")));
        }
        Ok(())
    }
}

fn uniform01(rng: &mut ChaCha8Rng) -> f32 {
    (rng.next_u32() >> 8) as f32 / (1u32 << 24) as f32
}

fn smoothstep(t: f32) -> f32 {
    t * t * (3.0 - 2.0 * t)
}

/// Periodic pattern in `[0, 1]` sampled on the `side × side` raster.
fn pattern_field(spec: &MaterialSpec) -> Vec<f32> {
    let (n, p) = (spec.side, spec.period);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let half = p / 2;
    match spec.pattern {
        Pattern::Checker => (0..n * n)
            .map(|i| {
                let (x, y) = (i % n, i / n);
                (((x % p) / half.max(1) + (y % p) / half.max(1)) % 2) as f32
            })
            .collect(),
        Pattern::Stripes => (0..n * n)
            .map(|i| if (i % n) % p < half { 0.0 } else { 1.0 })
            .collect(),
        Pattern::NoiseTile => {
            const LATTICE: usize = 4;
            let mut lattice: Vec<f32> = (0..LATTICE * LATTICE).map(|_| uniform01(&mut rng)).collect();
            // Center the lattice on 0.5 so every seed has the same mean.
            let mean = lattice.iter().sum::<f32>() / lattice.len() as f32;
            let spread = lattice.iter().map(|v| (v - mean).abs()).fold(0.0f32, f32::max);
            let s = if spread > 0.5 { 0.5 / spread } else { 1.0 };
            lattice.iter_mut().for_each(|v| *v = 0.5 + (*v - mean) * s);
            let cell = p as f32 / LATTICE as f32;
            (0..n * n)
                .map(|i| {
                    let (x, y) = ((i % n) % p, (i / n) % p);
                    let fx = (x as f32 + 0.5) / cell - 0.5;
                    let fy = (y as f32 + 0.5) / cell - 0.5;
                    let (x0, y0) = (libm::floorf(fx), libm::floorf(fy));
                    let (tx, ty) = (smoothstep(fx - x0), smoothstep(fy - y0));
                    let idx = |a: f32, b: f32| {
                        let a = (a as isize).rem_euclid(LATTICE as isize) as usize;
                        let b = (b as isize).rem_euclid(LATTICE as isize) as usize;
                        lattice[b * LATTICE + a]
                    };
                    let top = idx(x0, y0) * (1.0 - tx) + idx(x0 + 1.0, y0) * tx;
                    let bot = idx(x0, y0 + 1.0) * (1.0 - tx) + idx(x0 + 1.0, y0 + 1.0) * tx;
                    top * (1.0 - ty) + bot * ty
                })
                .collect()
        }
        Pattern::Bricks => {
            let tones = [0.75 + 0.25 * uniform01(&mut rng), 0.75 + 0.25 * uniform01(&mut rng)];
            let mortar = (p / 16).max(1);
            (0..n * n)
                .map(|i| {
                    let (x, y) = (i % n, i / n);
                    let row = (y % p) / half.max(1);
                    let yy = (y % p) % half.max(1);
                    let xx = (x + row * half) % p;
                    if yy < mortar || xx < mortar {
                        0.0
                    } else {
                        tones[row]
                    }
                })
                .collect()
        }
    }
}

/// Circular (wrap-around) Gaussian blur of a square field.
fn blur_wrapped(field: &[f32], n: usize, sigma: f32) -> Vec<f32> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
    let mut tmp = alloc::vec![0.0f32; n * n];
    for y in 0..n {
        for x in 0..n {
            tmp[y * n + x] = k
                .iter()
                .enumerate()
                .map(|(j, w)| w * field[y * n + wrap(x as isize + j as isize - r)])
                .sum();
        }
    }
    let mut out = alloc::vec![0.0f32; n * n];
    for y in 0..n {
        for x in 0..n {
            out[y * n + x] = k
                .iter()
                .enumerate()
                .map(|(j, w)| w * tmp[wrap(y as isize + j as isize - r) * n + x])
                .sum();
        }
    }
    out
}

/// Generates the four maps of a stationary synthetic material.
pub fn synth_material(spec: &MaterialSpec) -> Result<SvbrdfMaps> {
    spec.validate()?;
    let n = spec.side;
    let field = pattern_field(spec);
    let lerp = |a: f32, b: f32, t: f32| a + (b - a) * t;

    let diffuse = Image::from_fn(n, n, |x, y| {
        let t = field[y * n + x];
        let (lo, hi) = spec.diffuse;
        [lerp(lo[0], hi[0], t), lerp(lo[1], hi[1], t), lerp(lo[2], hi[2], t)]
    });
    let specular = Image::from_fn(n, n, |x, y| [lerp(spec.specular.0, spec.specular.1, field[y * n + x])]);
    let roughness = Image::from_fn(n, n, |x, y| [lerp(spec.roughness.0, spec.roughness.1, field[y * n + x])]);

    let height = blur_wrapped(&field, n, 1.0);
    let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
    let normal = Image::from_fn(n, n, |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        let dx = (height[y * n + wrap(xi + 1)] - height[y * n + wrap(xi - 1)]) * 0.5;
        // Rows run toward -y in world space.
        let dy = (height[wrap(yi - 1) * n + x] - height[wrap(yi + 1) * n + x]) * 0.5;
        let s = spec.normal_strength as f64;
        let v = normalize_normal([-s * dx as f64, -s * dy as f64, 1.0]);
        [v[0] as f32, v[1] as f32, v[2] as f32]
    });

    SvbrdfMaps::new(diffuse, specular, roughness, normal)
}
