//! Library side of the `tensorgap` command-line pipeline: manifest parsing,
//! the synthetic dataset generator, and the staged experiment runners. The
//! binary in `main.rs` is a thin argument layer over these.

pub mod experiment;
pub mod manifest;
pub mod synth;
