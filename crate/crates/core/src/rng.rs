//! Reproducible random variates.
//!
//! The bit stream is xoshiro256** seeded from a single `u64` by SplitMix64,
//! exactly as in the reference implementation by Blackman and Vigna. Every
//! derived variate is specified below so the streams can be reproduced in any
//! language:
//!
//! * `uniform`: `(next_u64 >> 11) · 2⁻⁵³`, in `[0, 1)`.
//! * `normal`: Box-Muller on two uniforms, `sqrt(-2 ln(1 - u₁)) cos(2π u₂)`;
//!   the sine branch is discarded.
//! * `gamma(k)`: Marsaglia-Tsang. For `k < 1`, `gamma(k + 1) · U^(1/k)` with
//!   the uniform drawn after the inner gamma variate.
//! * `beta(α, β)`: `X / (X + Y)` with `X ~ gamma(α)` drawn before `Y ~ gamma(β)`.

use core::f64::consts::PI;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct SimRng(Xoshiro256StarStar);

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(1.0 - u1)) * libm::cos(2.0 * PI * u2)
    }

    pub fn gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            let u = self.uniform();
            return g * libm::pow(u, 1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / libm::sqrt(9.0 * d);
        loop {
            let (x, v) = loop {
                let x = self.normal();
                let v = 1.0 + c * x;
                if v > 0.0 {
                    break (x, v * v * v);
                }
            };
            let u = self.uniform();
            if u < 1.0 - 0.0331 * x * x * x * x {
                return d * v;
            }
            if libm::log(u) < 0.5 * x * x + d * (1.0 - v + libm::log(v)) {
                return d * v;
            }
        }
    }

    pub fn beta(&mut self, alpha: f64, beta: f64) -> f64 {
        let x = self.gamma(alpha);
        let y = self.gamma(beta);
        x / (x + y)
    }
}
