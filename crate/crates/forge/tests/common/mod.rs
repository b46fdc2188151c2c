//! Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use candle_core::{DType, Device, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svbrdf_forge::render::MapTensors;

pub const CPU: Device = Device::Cpu;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(1, c, n, n)` f64 tensor with entries uniform in `[lo, hi)`.
pub fn uniform(rng: &mut ChaCha8Rng, c: usize, n: usize, lo: f64, hi: f64) -> Tensor {
    let v: Vec<f64> = (0..c * n * n).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::from_vec(v, (1, c, n, n), &CPU).unwrap()
}

/// Random valid maps as f64 tensors: unit normals tilted at most ~45°.
pub fn random_maps(seed: u64, n: usize) -> MapTensors {
    let mut r = rng(seed);
    let mut normal = vec![0.0f64; 3 * n * n];
    for p in 0..n * n {
        let (x, y, z): (f64, f64, f64) = (r.random_range(-0.7..0.7), r.random_range(-0.7..0.7), 1.0);
        let len = (x * x + y * y + z * z).sqrt();
        normal[p] = x / len;
        normal[n * n + p] = y / len;
        normal[2 * n * n + p] = z / len;
    }
    MapTensors {
        diffuse: uniform(&mut r, 3, n, 0.05, 0.95),
        specular: uniform(&mut r, 1, n, 0.05, 0.95),
        roughness: uniform(&mut r, 1, n, 0.1, 0.9),
        normal: Tensor::from_vec(normal, (1, 3, n, n), &CPU).unwrap(),
    }
}

pub fn flat(t: &Tensor) -> Vec<f64> {
    t.to_dtype(DType::F64).unwrap().flatten_all().unwrap().to_vec1().unwrap()
}

pub fn value(t: &Tensor) -> f64 {
    flat(t)[0]
}

/// Copy of `t` with one flat element shifted by `delta`.
pub fn nudged(t: &Tensor, index: usize, delta: f64) -> Tensor {
    let mut v = flat(t);
    v[index] += delta;
    Tensor::from_vec(v, t.dims(), &CPU).unwrap()
}

/// Outcome of comparing autodiff against central differences.
#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    pub worst_relative: f64,
    pub checked: usize,
}

/// Compares the autodiff gradient of `loss(inputs)` w.r.t. input `which`
/// against central differences at `count` random elements. The step is small
/// enough that a probe rarely straddles a ReLU, max or abs kink.
pub fn grad_check(
    inputs: &[Tensor],
    which: usize,
    count: usize,
    seed: u64,
    loss: &dyn Fn(&[Tensor]) -> Tensor,
) -> GradCheck {
    let step = 1e-6;
    let var = Var::from_tensor(&inputs[which]).unwrap();
    let mut with_var: Vec<Tensor> = inputs.to_vec();
    with_var[which] = var.as_tensor().clone();
    let grads = loss(&with_var).backward().unwrap();
    let g = flat(grads.get(var.as_tensor()).expect("input reaches the loss"));
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let i = r.random_range(0..g.len());
        let mut plus = inputs.to_vec();
        plus[which] = nudged(&inputs[which], i, step);
        let mut minus = inputs.to_vec();
        minus[which] = nudged(&inputs[which], i, -step);
        let fd = (value(&loss(&plus)) - value(&loss(&minus))) / (2.0 * step);
        let scale = g[i].abs().max(fd.abs()).max(1e-9);
        worst = worst.max((g[i] - fd).abs() / scale);
    }
    GradCheck {
        worst_relative: worst,
        checked: count,
    }
}

/// Direct O(N⁴) DFT magnitude of a row-major `n × n` real field.
pub fn dft_magnitude(field: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for v in 0..n {
        for u in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..n {
                for x in 0..n {
                    let a = -2.0 * std::f64::consts::PI * ((u * x) as f64 + (v * y) as f64) / n as f64;
                    re += field[y * n + x] * a.cos();
                    im += field[y * n + x] * a.sin();
                }
            }
            out[v * n + u] = (re * re + im * im).sqrt();
        }
    }
    out
}

/// Fourier loss computed from scratch: channel means, direct DFT
/// magnitudes, DC removed, averaged over the four maps, then `log(· + ε)`.
pub fn fourier_oracle(maps: &MapTensors, guessed: &Tensor, n: usize) -> f64 {
    let gray = |t: &Tensor| -> Vec<f64> {
        let v = flat(t);
        let c = v.len() / (n * n);
        (0..n * n).map(|p| (0..c).map(|k| v[k * n * n + p]).sum::<f64>() / c as f64).collect()
    };
    let reference = dft_magnitude(&gray(guessed), n);
    let encoded = maps.normal.affine(0.5, 0.5).unwrap();
    let mut total = 0.0;
    for map in [&maps.diffuse, &maps.specular, &maps.roughness, &encoded] {
        let m = dft_magnitude(&gray(map), n);
        let l1: f64 = m.iter().zip(&reference).skip(1).map(|(a, b)| (a - b).abs()).sum();
        total += l1 / (n * n) as f64;
    }
    (total / 4.0 + 1e-8).ln()
}

/// Flat texture of value `base` plus a centered Gaussian of amplitude `a`.
pub fn spot_field(n: usize, base: f64, a: f64) -> Vec<f64> {
    let c = n as f64 / 2.0;
    let s = n as f64 / 8.0;
    (0..n * n)
        .map(|p| {
            let (x, y) = ((p % n) as f64 + 0.5 - c, (p / n) as f64 + 0.5 - c);
            base + a * (-(x * x + y * y) / (2.0 * s * s)).exp()
        })
        .collect()
}

/// Maps that all equal `texture` (a gray field), with the specular map
/// carrying an extra centered spot of amplitude `a`. Normals encode to the
/// same gray level, so only the specular spot separates the spectra.
pub fn spot_maps(texture: &[f64], n: usize, a: f64) -> (MapTensors, Tensor) {
    let gray1 = Tensor::from_vec(texture.to_vec(), (1, 1, n, n), &CPU).unwrap();
    let gray3 = Tensor::cat(&[&gray1, &gray1, &gray1], 1).unwrap();
    let spot = spot_field(n, 0.0, a);
    let spec: Vec<f64> = texture.iter().zip(&spot).map(|(t, s)| t + s).collect();
    let maps = MapTensors {
        diffuse: gray3.clone(),
        specular: Tensor::from_vec(spec, (1, 1, n, n), &CPU).unwrap(),
        roughness: gray1.clone(),
        normal: gray3.affine(2.0, -1.0).unwrap(),
    };
    (maps, gray3)
}

/// Stationary texture: a fine checker with mild noise.
pub fn texture(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n * n)
        .map(|p| {
            let (x, y) = (p % n, p / n);
            let checker = if ((x / 4) + (y / 4)) % 2 == 0 { 0.35 } else { 0.55 };
            checker + r.random_range(-0.05..0.05)
        })
        .collect()
}

/// Circular shift by `dx` columns and `dy` rows.
pub fn roll(t: &Tensor, dx: usize, dy: usize) -> Tensor {
    let (_, _, h, w) = t.dims4().unwrap();
    let (dx, dy) = (dx % w, dy % h);
    let t = if dy == 0 {
        t.clone()
    } else {
        Tensor::cat(&[&t.narrow(2, h - dy, dy).unwrap(), &t.narrow(2, 0, h - dy).unwrap()], 2).unwrap()
    };
    if dx == 0 {
        t
    } else {
        Tensor::cat(&[&t.narrow(3, w - dx, dx).unwrap(), &t.narrow(3, 0, w - dx).unwrap()], 3).unwrap()
    }
}
