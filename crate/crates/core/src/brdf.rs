//! Cook-Torrance reflectance: GGX distribution, height-correlated Smith
//! shadowing-masking and Schlick Fresnel with the specular albedo as `F0`.

use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

/// Minimal 3-vector for shading math.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    /// Builds a vector from components.
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self([x, y, z])
    }

    /// Dot product.
    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    /// Euclidean length.
    #[inline]
    pub fn length(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    /// Unit-length copy. The zero vector is returned unchanged.
    #[inline]
    pub fn normalized(self) -> Vec3 {
        let l = self.length();
        if l > 0.0 {
            self * (1.0 / l)
        } else {
            self
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }
}

/// GGX normal distribution for `cos_h = n·h`.
#[inline]
pub fn ggx_distribution(cos_h: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let t = cos_h * cos_h * (a2 - 1.0) + 1.0;
    a2 / (PI * t * t)
}

/// Smith auxiliary function Λ for a direction with `cos = n·w`.
#[inline]
pub fn smith_lambda(cos: f64, alpha: f64) -> f64 {
    let c2 = cos * cos;
    let tan2 = (1.0 - c2).max(0.0) / c2;
    (-1.0 + libm::sqrt(1.0 + alpha * alpha * tan2)) * 0.5
}

/// Height-correlated Smith shadowing-masking `1 / (1 + Λ(wi) + Λ(wo))`.
#[inline]
pub fn smith_g(cos_i: f64, cos_o: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + smith_lambda(cos_i, alpha) + smith_lambda(cos_o, alpha))
}

/// Schlick's Fresnel approximation for `cos_d = wi·h`.
#[inline]
pub fn schlick_fresnel(f0: f64, cos_d: f64) -> f64 {
    let m = (1.0 - cos_d).clamp(0.0, 1.0);
    let m2 = m * m;
    f0 + (1.0 - f0) * m2 * m2 * m
}

/// Evaluates the BRDF for unit directions `wi`, `wo` around the unit normal.
///
/// Directions at or below the surface contribute zero. The caller is
/// responsible for keeping `alpha >= ALPHA_MIN`.
pub fn eval_brdf(
    wi: Vec3,
    wo: Vec3,
    diffuse: [f64; 3],
    specular: f64,
    alpha: f64,
    normal: Vec3,
) -> [f64; 3] {
    let cos_i = normal.dot(wi);
    let cos_o = normal.dot(wo);
    if cos_i <= 0.0 || cos_o <= 0.0 {
        return [0.0; 3];
    }
    let h = (wi + wo).normalized();
    let d = ggx_distribution(normal.dot(h), alpha);
    let g = smith_g(cos_i, cos_o, alpha);
    let f = schlick_fresnel(specular, wi.dot(h));
    let spec = d * f * g / (4.0 * cos_i * cos_o);
    [
        diffuse[0] / PI + spec,
        diffuse[1] / PI + spec,
        diffuse[2] / PI + spec,
    ]
}
