mod common;

use candle_core::{DType, Tensor};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use svbrdf_core::{render_input, synth_material, MaterialSpec, Pattern, SceneConfig};
use svbrdf_forge::losses::{
    adversarial_losses, diffuse_loss, fourier_loss, perceptual_loss, total_generator_loss, FourierOptions, LossTerms,
    LossWeights, FOURIER_EPS,
};
use svbrdf_forge::perceptual::FeatureExtractor;
use svbrdf_forge::render::MapTensors;
use svbrdf_forge::tensor::image_to_tensor;
use svbrdf_forge::trainer::WEIGHTS_ENV;

#[test]
fn diffuse_loss_examples() {
    let a = Tensor::full(0.2f64, (1, 3, 4, 4), &CPU).unwrap();
    let b = Tensor::full(0.5f64, (1, 3, 4, 4), &CPU).unwrap();
    assert!((value(&diffuse_loss(&a, &b).unwrap()) - 0.3).abs() < 1e-12);
    assert_eq!(value(&diffuse_loss(&a, &a).unwrap()), 0.0);
    let c = Tensor::full(0.5f64, (1, 3, 4, 5), &CPU).unwrap();
    assert!(diffuse_loss(&a, &c).is_err());
}

#[test]
fn diffuse_loss_matches_loop_oracle() {
    let mut r = rng(1);
    let (a, b) = (uniform(&mut r, 3, 8, 0.0, 1.0), uniform(&mut r, 3, 8, 0.0, 1.0));
    let (va, vb) = (flat(&a), flat(&b));
    let mut sum = 0.0;
    for c in 0..3 {
        for y in 0..8 {
            for x in 0..8 {
                let i = (c * 8 + y) * 8 + x;
                sum += (va[i] - vb[i]).abs();
            }
        }
    }
    let expect = sum / (3 * 8 * 8) as f64;
    assert!((value(&diffuse_loss(&a, &b).unwrap()) - expect).abs() < 1e-14);
}

fn log_sigmoid_oracle(z: f64) -> f64 {
    (1.0 / (1.0 + (-z).exp())).clamp(1e-7, 1.0).ln()
}

#[test]
fn adversarial_losses_match_per_element_oracle() {
    let mut r = rng(2);
    let real = uniform(&mut r, 1, 4, -4.0, 4.0);
    let fake = uniform(&mut r, 1, 4, -4.0, 4.0);
    let (d, g) = adversarial_losses(&real, &fake).unwrap();
    let (vr, vf) = (flat(&real), flat(&fake));
    let n = vr.len() as f64;
    let mut d_expect = 0.0;
    let mut g_expect = 0.0;
    for (zr, zf) in vr.iter().zip(&vf) {
        let p_fake = 1.0 / (1.0 + (-zf).exp());
        d_expect -= log_sigmoid_oracle(*zr) / n;
        d_expect -= (1.0 - p_fake).clamp(1e-7, 1.0).ln() / n;
        g_expect -= log_sigmoid_oracle(*zf) / n;
    }
    assert!((value(&d) - d_expect).abs() < 1e-12, "{} vs {d_expect}", value(&d));
    assert!((value(&g) - g_expect).abs() < 1e-12);
}

#[test]
fn adversarial_limits() {
    let zeros = Tensor::zeros((1, 1, 4, 4), DType::F64, &CPU).unwrap();
    let (d, g) = adversarial_losses(&zeros, &zeros).unwrap();
    assert!((value(&d) - 2.0 * 2f64.ln()).abs() < 1e-12);
    assert!((value(&g) - 2f64.ln()).abs() < 1e-12);
    let high = Tensor::full(40.0f64, (1, 1, 4, 4), &CPU).unwrap();
    let low = Tensor::full(-40.0f64, (1, 1, 4, 4), &CPU).unwrap();
    let (d, _) = adversarial_losses(&high, &low).unwrap();
    assert!(value(&d).abs() < 1e-12);
    // The clamp keeps a hopeless generator finite.
    let (_, g) = adversarial_losses(&high, &low).unwrap();
    assert!((value(&g) - (-(1e-7f64).ln())).abs() < 1e-9);
}

#[test]
fn fourier_loss_of_matching_maps_is_log_eps() {
    let n = 16;
    let tex = texture(n, 3);
    let (maps, guessed) = spot_maps(&tex, n, 0.0);
    let got = value(&fourier_loss(&maps, &guessed, FourierOptions::default()).unwrap());
    assert!((got - FOURIER_EPS.ln()).abs() < 1e-6, "{got}");
}

#[test]
fn fourier_loss_ignores_circular_shifts() {
    let n = 32;
    let maps = random_maps(4, n);
    let mut r = rng(5);
    let guessed = uniform(&mut r, 3, n, 0.0, 1.0);
    let base = value(&fourier_loss(&maps, &guessed, FourierOptions::default()).unwrap());
    for (k, (dx, dy)) in [(1, 0), (0, 7), (5, 13), (31, 31)].into_iter().enumerate() {
        let mut shifted = maps.clone();
        match k {
            0 => shifted.diffuse = roll(&maps.diffuse, dx, dy),
            1 => shifted.specular = roll(&maps.specular, dx, dy),
            2 => shifted.roughness = roll(&maps.roughness, dx, dy),
            _ => shifted.normal = roll(&maps.normal, dx, dy),
        }
        let got = value(&fourier_loss(&shifted, &guessed, FourierOptions::default()).unwrap());
        assert!((got - base).abs() < 1e-6, "map {k}: {got} vs {base}");
    }
    // The complex variant is phase sensitive.
    let complex = FourierOptions {
        complex: true,
        ..Default::default()
    };
    let shifted = MapTensors {
        diffuse: roll(&maps.diffuse, 5, 3),
        ..maps.clone()
    };
    let a = value(&fourier_loss(&maps, &guessed, complex).unwrap());
    let b = value(&fourier_loss(&shifted, &guessed, complex).unwrap());
    assert!((a - b).abs() > 1e-6);
}

#[test]
fn fourier_loss_grows_with_spot_amplitude() {
    let n = 64;
    let tex = texture(n, 6);
    let losses: Vec<f64> = [0.0, 0.1, 0.2, 0.4]
        .iter()
        .map(|&a| {
            let (maps, guessed) = spot_maps(&tex, n, a);
            value(&fourier_loss(&maps, &guessed, FourierOptions::default()).unwrap())
        })
        .collect();
    assert!(losses.windows(2).all(|w| w[0] < w[1]), "{losses:?}");
}

#[test]
fn fourier_loss_matches_direct_dft() {
    let n = 32;
    let tex = texture(n, 7);
    let mut values = Vec::new();
    for a in [0.0, 0.3] {
        let (maps, guessed) = spot_maps(&tex, n, a);
        let got = value(&fourier_loss(&maps, &guessed, FourierOptions::default()).unwrap());
        let oracle = fourier_oracle(&maps, &guessed, n);
        assert!((got - oracle).abs() < 1e-6, "a={a}: {got} vs {oracle}");
        values.push(oracle);
    }
    assert!(values[1] > values[0]);
    // Random maps too.
    let maps = random_maps(8, n);
    let mut r = rng(9);
    let guessed = uniform(&mut r, 3, n, 0.0, 1.0);
    let got = value(&fourier_loss(&maps, &guessed, FourierOptions::default()).unwrap());
    assert!((got - fourier_oracle(&maps, &guessed, n)).abs() < 1e-6);
}

#[test]
fn fourier_flags_select_maps() {
    let n = 16;
    let tex = texture(n, 10);
    let (maps, guessed) = spot_maps(&tex, n, 0.3);
    let only = |i: usize| {
        let mut per_map = [false; 4];
        per_map[i] = true;
        value(
            &fourier_loss(
                &maps,
                &guessed,
                FourierOptions {
                    per_map,
                    complex: false,
                },
            )
            .unwrap(),
        )
    };
    // Only the specular map carries the spot.
    assert!((only(0) - FOURIER_EPS.ln()).abs() < 1e-9);
    assert!(only(1) > -5.0);
    let none = FourierOptions {
        per_map: [false; 4],
        complex: false,
    };
    assert_eq!(value(&fourier_loss(&maps, &guessed, none).unwrap()), 0.0);
    let wrong = Tensor::zeros((1, 3, n, n + 1), DType::F64, &CPU).unwrap();
    assert!(fourier_loss(&maps, &wrong, FourierOptions::default()).is_err());
}

fn extractors() -> Vec<(String, FeatureExtractor)> {
    let mut out = vec![("random".to_string(), FeatureExtractor::random([8, 16, 16, 32, 32], 4))];
    if let Some(path) = std::env::var_os(WEIGHTS_ENV) {
        if let Ok(fx) = FeatureExtractor::load(std::path::Path::new(&path)) {
            out.push(("pretrained".into(), fx));
        }
    }
    out
}

#[test]
fn perceptual_loss_orders_shift_below_noise() {
    let maps = synth_material(&MaterialSpec::new(Pattern::Bricks, 64, 16, 1)).unwrap();
    let photo = render_input(&maps, &SceneConfig::default(), false);
    let img = image_to_tensor(&photo, DType::F32, &CPU).unwrap();
    let shifted = roll(&img, 4, 4);
    // Same pixel values in random order: equal marginal statistics.
    let mut pixels: Vec<[f32; 3]> = (0..64 * 64).map(|i| {
        let p = photo.pixel(i % 64, i / 64);
        [p[0], p[1], p[2]]
    }).collect();
    pixels.shuffle(&mut rng(2));
    let noise_img = svbrdf_core::Image::from_fn::<3>(64, 64, |x, y| pixels[y * 64 + x]);
    let noise = image_to_tensor(&noise_img, DType::F32, &CPU).unwrap();
    let black = Tensor::zeros((1, 3, 64, 64), DType::F32, &CPU).unwrap();
    let white = Tensor::ones((1, 3, 64, 64), DType::F32, &CPU).unwrap();
    for (name, fx) in extractors() {
        let same = value(&perceptual_loss(&img, &img, &fx).unwrap());
        let shift = value(&perceptual_loss(&img, &shifted, &fx).unwrap());
        let unrelated = value(&perceptual_loss(&img, &noise, &fx).unwrap());
        assert_eq!(same, 0.0, "{name}");
        assert!(shift < unrelated, "{name}: shift {shift} vs noise {unrelated}");
        assert!(value(&perceptual_loss(&black, &white, &fx).unwrap()) > 0.0, "{name}");
        assert!(perceptual_loss(&img, &black.narrow(3, 0, 32).unwrap(), &fx).is_err());
    }
}

#[test]
fn total_loss_examples() {
    let terms = LossTerms {
        diffuse: 0.2,
        adversarial_g: 0.5,
        adversarial_d: 1.3,
        fourier: -3.0,
        perceptual: 1.0,
    };
    let paper = LossWeights::default();
    assert_eq!((paper.lambda_gan, paper.lambda_fourier, paper.lambda_perceptual), (0.1, 0.1, 0.2));
    assert!((total_generator_loss(&terms, &paper).total_generator - 0.15).abs() < 1e-12);
    let zero = LossWeights {
        lambda_gan: 0.0,
        lambda_fourier: 0.0,
        lambda_perceptual: 0.0,
    };
    let report = total_generator_loss(&terms, &zero);
    assert_eq!(report.total_generator, 0.2);
    assert_eq!(report.adversarial_d, 1.3);
}

proptest! {
    #[test]
    fn total_is_linear_in_each_term(
        d in 0.0f64..2.0, g in 0.0f64..5.0, f in -20.0f64..2.0, p in 0.0f64..5.0,
        wg in 0.0f64..1.0, wf in 0.0f64..1.0, wp in 0.0f64..1.0, k in -3.0f64..3.0,
    ) {
        let w = LossWeights { lambda_gan: wg, lambda_fourier: wf, lambda_perceptual: wp };
        let terms = LossTerms { diffuse: d, adversarial_g: g, adversarial_d: 0.0, fourier: f, perceptual: p };
        let report = total_generator_loss(&terms, &w);
        prop_assert_eq!(report.total_generator, d + wg * g + wf * f + wp * p);
        let base = report.total_generator;
        let bumped = |t: LossTerms| total_generator_loss(&t, &w).total_generator - base;
        let deltas = [
            bumped(LossTerms { adversarial_g: g + k, ..terms }) - wg * k,
            bumped(LossTerms { fourier: f + k, ..terms }) - wf * k,
            bumped(LossTerms { perceptual: p + k, ..terms }) - wp * k,
            bumped(LossTerms { diffuse: d + k, ..terms }) - k,
        ];
        prop_assert!(deltas.iter().all(|e| e.abs() < 1e-9), "{:?}", deltas);
    }
}
