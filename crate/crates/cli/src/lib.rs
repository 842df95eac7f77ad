//! Library side of the benchmark CLI: the portable RNG, dataset
//! generators, and the experiment grid runner. The binary in `main.rs` is
//! a thin argument-parsing layer over these.

pub mod gen;
pub mod grid;
pub mod rng;
