//! Self-contained, seedable random number generator so that every dataset
//! and experiment is reproducible bit for bit, independent of platform or
//! library versions.
//!
//! The pipeline is fully specified:
//!
//! * state seeding: four rounds of SplitMix64 applied to the `u64` seed;
//! * stream: xoshiro256++ (rotl(s0 + s3, 23) + s0 output function);
//! * uniforms: the top 53 bits scaled by 2^-53, giving doubles in `[0, 1)`;
//! * normals: Box-Muller on `u1 = 1 - uniform` (so the log argument stays
//!   positive) and `u2 = uniform`, returning `r cos` first and caching
//!   `r sin` for the next call.

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step: advances the state and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256++ with Box-Muller normals.
#[derive(Debug, Clone)]
pub struct PortableRng {
    s: [u64; 4],
    cached_normal: Option<f64>,
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self { s, cached_normal: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform double in `[0, 1)` from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal deviate via Box-Muller.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(v) = self.cached_normal.take() {
            return v;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * angle.sin());
        r * angle.cos()
    }

    /// Normal deviate with the given mean and standard deviation.
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Integer in `[0, bound)` by scaling a uniform; fine for test-harness
    /// use where a bias of 2^-53 is irrelevant.
    pub fn below(&mut self, bound: usize) -> usize {
        ((self.uniform() * bound as f64) as usize).min(bound - 1)
    }
}

/// Derives a stream seed for one grid cell repetition, so instances depend
/// on `(base, n, rep)` only and are shared across solver variants.
pub fn derive_seed(base: u64, n: usize, rep: usize) -> u64 {
    let mut s = base;
    let a = splitmix64(&mut s);
    let mut s2 = a ^ (n as u64).wrapping_mul(SPLITMIX_GAMMA);
    let b = splitmix64(&mut s2);
    let mut s3 = b ^ (rep as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut s3)
}
