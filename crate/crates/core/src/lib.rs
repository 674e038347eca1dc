//! Desk-scale laboratory for latent-space AIGC watermarking.
//!
//! Everything operates on starting points in a `d`-dimensional real latent
//! space. The crate provides:
//!
//! - [`codecs`]: two keyed watermarking schemes behind one [`codecs::WatermarkScheme`]
//!   interface — a sparse-parity surrogate for pseudorandom error-correcting
//!   codes and Gaussian Shading,
//! - [`attacks`]: whitenoise, stealthy, and minimal-distortion removal attacks
//!   under an l2 budget,
//! - [`defense`]: the boundary-hiding Haar-orthonormal transform wrapper, a
//!   well-behavedness probe, and a deliberately backdoored detector,
//! - [`games`]: removal and indistinguishability game harnesses with
//!   reproducible per-trial seeding,
//! - [`latent`], [`stats`], [`rng`], [`gf2`]: the numeric and bit-level
//!   machinery underneath.
//!
//! **The PRC codec here is a surrogate.** It keeps the interface, the sign
//! embedding, the parity-count detector, and the robustness profile of a
//! pseudorandom error-correcting code at desk scale, but makes no hardness
//! claim: pseudorandomness is inherited from the keystream by assumption,
//! not proven.

pub mod attacks;
pub mod codecs;
pub mod defense;
pub mod games;
pub mod gf2;
pub mod latent;
pub mod rng;
pub mod stats;

pub use attacks::{
    bits_flipped, min_distortion_attack, stealthy_attack, whitenoise_attack, AttackBudget,
    AttackOutcome,
};
pub use codecs::{
    gs_keygen, keystream, prc_keygen, DetectorVerdict, GsKey, PrcKey, StreamKey, WatermarkScheme,
};
pub use defense::{haar_sample, EnhancedScheme, OrthonormalTransform};
pub use latent::{sample_std_gauss, BitString, LatentPoint};
pub use rng::RngSeed;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("parameter out of domain: {0}")]
    InvalidParameter(String),
    #[error("GF(2) system is inconsistent")]
    InconsistentSystem,
    #[error("exhaustive probe too large: ~{estimated_patterns} patterns (d={dim}, gamma_bits={gamma_bits})")]
    ProbeTooLarge {
        dim: usize,
        gamma_bits: usize,
        estimated_patterns: u128,
    },
    #[error("issued-latent registry is full (cap {cap})")]
    RegistryFull { cap: usize },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed key record: {0}")]
    KeyFormat(String),
    #[error("malformed transform container: {0}")]
    TransformFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
