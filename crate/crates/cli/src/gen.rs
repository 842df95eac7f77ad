//! Dataset generators for the benchmark protocols.

use trendfit::{Error, Result};

use crate::rng::PortableRng;

/// The three generator families used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    /// `y_i = i + e_i` with `e_i ~ Normal(0, variance 4)`, `i = 1..=n`.
    LinearNoise,
    /// `y_i ~ Uniform[0, 10)`.
    Uniform,
    /// `y_i = base_i + e_i` with `e_i ~ Normal(0, variance 1e-2)`;
    /// the base defaults to zeros when none is supplied.
    Perturb,
}

#[derive(Debug, Clone, Copy)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub seed: u64,
}

/// Produces the dataset for a spec; deterministic in the seed.
pub fn generate(spec: &GenSpec) -> Result<Vec<f64>> {
    if spec.n == 0 {
        return Err(Error::InvalidProblem("generator size must be positive".into()));
    }
    let mut rng = PortableRng::new(spec.seed);
    let out = match spec.kind {
        GenKind::LinearNoise => (1..=spec.n)
            .map(|i| i as f64 + rng.normal(0.0, 2.0))
            .collect(),
        GenKind::Uniform => (0..spec.n).map(|_| rng.uniform_in(0.0, 10.0)).collect(),
        GenKind::Perturb => (0..spec.n).map(|_| rng.normal(0.0, 0.1)).collect(),
    };
    Ok(out)
}

/// Adds `Normal(0, variance 1e-2)` noise to an existing dataset.
pub fn perturb(base: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = PortableRng::new(seed);
    base.iter().map(|&v| v + rng.normal(0.0, 0.1)).collect()
}
