//! The two keyed watermarking codecs behind one scheme interface.
//!
//! **PRC surrogate** (`prc-sparse-parity`): a desk-scale zero-bit stand-in
//! for a pseudorandom error-correcting code. The key holds `t` secret sparse
//! parity checks of weight `w` over `d` sign bits, a keyed target syndrome,
//! and a keyed one-time pad. Sampling draws a fresh uniform GF(2) solution of
//! the parity system, pads it, and embeds it in the signs of half-normal
//! magnitudes; detection counts satisfied checks against an exact binomial
//! threshold. This preserves the interface, the sign embedding, the
//! robustness profile (per-check satisfaction `1/2 + (1-2p)^w / 2` under
//! coordinate flip rate `p`), and multi-copy unlinkability — but the
//! pseudorandomness rests on the keystream assumption, not on a hardness
//! proof.
//!
//! **Gaussian Shading** (`gaussian-shading`): an `m`-bit message repeated
//! `d/m` times, encrypted with a stream cipher, and embedded one bit per
//! coefficient through half-quantile inversion; detection decrypts the signs
//! and majority-votes each message position. Copies under one key share
//! their sign pattern — the multi-copy leak the games exercise.

use crate::gf2::Gf2Echelon;
use crate::latent::{check_dim, BitString, LatentPoint};
use crate::rng::RngSeed;
use crate::stats::{binomial_threshold, std_normal_inv_cdf};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

/// Opaque keystream key material.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey(pub [u8; 32]);

impl StreamKey {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut k = [0u8; 32];
        rng.fill(&mut k);
        StreamKey(k)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::KeyFormat(format!("bad hex: {e}")))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::KeyFormat("stream key must be 32 bytes".into()))?;
        Ok(StreamKey(arr))
    }
}

/// Keyed pseudorandom bitstream, deterministic per (key, length).
///
/// Backed by the ChaCha12 stream cipher; indistinguishability from uniform
/// for parties without the key is assumed, not proven here.
pub fn keystream(key: &StreamKey, length: usize) -> BitString {
    let mut rng = ChaCha12Rng::from_seed(key.0);
    let mut bytes = vec![0u8; length.div_ceil(8)];
    rng.fill(&mut bytes[..]);
    BitString::from_bits((0..length).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect())
}

/// Outcome of one detector invocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorVerdict {
    pub watermarked: bool,
    /// Satisfied-check count (PRC) or recovered-message-bit agreement (GS).
    pub statistic: f64,
    pub threshold: f64,
}

impl DetectorVerdict {
    fn from_count(statistic: u64, threshold: u64) -> Self {
        DetectorVerdict {
            watermarked: statistic >= threshold,
            statistic: statistic as f64,
            threshold: threshold as f64,
        }
    }
}

/// Common surface of the keyed schemes: probabilistic sampling and
/// deterministic detection. Implementations are immutable after keygen and
/// safe to share across concurrent trials.
pub trait WatermarkScheme: Send + Sync {
    fn dim(&self) -> usize;
    fn sample(&self, seed: &RngSeed) -> LatentPoint;
    fn detect(&self, x: &LatentPoint) -> Result<DetectorVerdict>;
}

// ---------------------------------------------------------------------------
// PRC surrogate
// ---------------------------------------------------------------------------

/// Secret key of the sparse-parity PRC surrogate.
#[derive(Debug, Clone)]
pub struct PrcKey {
    d: usize,
    t: usize,
    w: usize,
    alpha: f64,
    parity_rows: Vec<Vec<usize>>,
    syndrome: BitString,
    pad: BitString,
    threshold: u64,
    echelon: Gf2Echelon,
}

/// Generate a PRC surrogate key: `t` uniformly sampled weight-`w` parity
/// checks over `d` positions, plus keystream-derived pad and syndrome. The
/// syndrome is the parity image of a keyed particular solution, so the
/// system is consistent by construction.
pub fn prc_keygen(d: usize, t: usize, w: usize, alpha: f64, seed: &RngSeed) -> Result<PrcKey> {
    if d == 0 {
        return Err(Error::InvalidDimension("d must be >= 1".into()));
    }
    if t == 0 || t > d {
        return Err(Error::InvalidParameter(format!("t={t} must satisfy 1 <= t <= d={d}")));
    }
    if w == 0 || w > d {
        return Err(Error::InvalidParameter(format!("w={w} must satisfy 1 <= w <= d={d}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0,1)")));
    }
    let threshold = binomial_threshold(t as u64, alpha)?;
    if threshold > t as u64 {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} below 2^-{t}: no achievable detection threshold"
        )));
    }
    let mut rng = seed.rng();
    let parity_rows: Vec<Vec<usize>> = (0..t)
        .map(|_| {
            let mut idx = rand::seq::index::sample(&mut rng, d, w).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect();
    let stream_key = StreamKey::generate(&mut rng);
    let ks = keystream(&stream_key, 2 * d);
    let pad = BitString::from_bits(ks.as_bits()[..d].to_vec());
    let particular = BitString::from_bits(ks.as_bits()[d..].to_vec());
    let syndrome =
        BitString::from_bits(parity_rows.iter().map(|row| particular.parity_at(row)).collect());
    let echelon = Gf2Echelon::from_sparse(&parity_rows, &syndrome, d)?;
    Ok(PrcKey { d, t, w, alpha, parity_rows, syndrome, pad, threshold, echelon })
}

impl PrcKey {
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn w(&self) -> usize {
        self.w
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn parity_rows(&self) -> &[Vec<usize>] {
        &self.parity_rows
    }
    pub fn syndrome(&self) -> &BitString {
        &self.syndrome
    }
    pub fn pad(&self) -> &BitString {
        &self.pad
    }
    /// Detection threshold on the satisfied-check count.
    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    /// Satisfied-check count for a sign pattern (already unpadded).
    fn count_satisfied(&self, codeword: &BitString) -> u64 {
        self.parity_rows
            .iter()
            .enumerate()
            .filter(|(r, row)| codeword.parity_at(row) == self.syndrome.get(*r))
            .count() as u64
    }

    /// Self-describing JSON key record.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&KeyRecord::Prc {
            d: self.d,
            t: self.t,
            w: self.w,
            alpha: self.alpha,
            parity_rows: self.parity_rows.clone(),
            syndrome: self.syndrome.to_hex(),
            pad: self.pad.to_hex(),
        })
        .expect("key record serializes")
    }

    pub fn from_json(s: &str) -> Result<PrcKey> {
        match serde_json::from_str(s).map_err(|e| Error::KeyFormat(e.to_string()))? {
            KeyRecord::Prc { d, t, w, alpha, parity_rows, syndrome, pad } => {
                if parity_rows.len() != t {
                    return Err(Error::KeyFormat(format!(
                        "expected {t} parity rows, found {}",
                        parity_rows.len()
                    )));
                }
                for row in &parity_rows {
                    if row.len() != w || row.iter().any(|&j| j >= d) {
                        return Err(Error::KeyFormat("malformed parity row".into()));
                    }
                }
                let syndrome = BitString::from_hex(&syndrome, t)?;
                let pad = BitString::from_hex(&pad, d)?;
                let threshold = binomial_threshold(t as u64, alpha)?;
                let echelon = Gf2Echelon::from_sparse(&parity_rows, &syndrome, d)?;
                Ok(PrcKey { d, t, w, alpha, parity_rows, syndrome, pad, threshold, echelon })
            }
            _ => Err(Error::KeyFormat("not a prc-sparse-parity record".into())),
        }
    }
}

impl WatermarkScheme for PrcKey {
    fn dim(&self) -> usize {
        self.d
    }

    /// Draw a fresh codeword (uniform solution of the parity system), XOR the
    /// pad, and embed in signs: `x_i = (-1)^(1-b_i) |z_i|` with fresh
    /// half-normal magnitudes.
    fn sample(&self, seed: &RngSeed) -> LatentPoint {
        let mut rng = seed.rng();
        let codeword = self.echelon.sample_solution(&mut rng);
        let b = codeword.xor(&self.pad).expect("pad length matches d");
        let coords = (0..self.d)
            .map(|i| {
                let z: f64 = rng.sample(StandardNormal);
                if b.get(i) {
                    z.abs()
                } else {
                    -z.abs()
                }
            })
            .collect();
        LatentPoint::new(coords).expect("finite sample")
    }

    /// Count parity checks satisfied by the unpadded sign projection and
    /// compare against the exact binomial threshold.
    fn detect(&self, x: &LatentPoint) -> Result<DetectorVerdict> {
        check_dim(self.d, x.dim())?;
        let codeword = x.signs().xor(&self.pad)?;
        Ok(DetectorVerdict::from_count(self.count_satisfied(&codeword), self.threshold))
    }
}

/// The detector-preserving projection of the PRC surrogate: the sign map.
/// Any two latents with equal sign patterns receive identical verdicts.
pub fn prc_map(x: &LatentPoint) -> BitString {
    x.signs()
}

// ---------------------------------------------------------------------------
// Gaussian Shading
// ---------------------------------------------------------------------------

/// Secret key of the Gaussian Shading codec.
#[derive(Debug, Clone)]
pub struct GsKey {
    d: usize,
    m: usize,
    alpha: f64,
    stream_key: StreamKey,
    message: BitString,
    threshold: u64,
}

/// Generate a Gaussian Shading key with a designated `m`-bit watermark
/// message; `m` must divide `d` (each bit is repeated `d/m` times).
pub fn gs_keygen(d: usize, m: usize, alpha: f64, seed: &RngSeed) -> Result<GsKey> {
    if d == 0 {
        return Err(Error::InvalidDimension("d must be >= 1".into()));
    }
    if m == 0 || d % m != 0 {
        return Err(Error::InvalidParameter(format!("m={m} must divide d={d}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0,1)")));
    }
    let threshold = binomial_threshold(m as u64, alpha)?;
    if threshold > m as u64 {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} below 2^-{m}: no achievable detection threshold"
        )));
    }
    let mut rng = seed.rng();
    let stream_key = StreamKey::generate(&mut rng);
    let message = BitString::from_bits((0..m).map(|_| rng.random()).collect());
    Ok(GsKey { d, m, alpha, stream_key, message, threshold })
}

impl GsKey {
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn message(&self) -> &BitString {
        &self.message
    }
    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    /// The encrypted repeated message: bit `i` is `message[i mod m] ^ ks[i]`.
    fn cipher_bits(&self) -> BitString {
        let ks = keystream(&self.stream_key, self.d);
        BitString::from_bits(
            (0..self.d).map(|i| self.message.get(i % self.m) ^ ks.get(i)).collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&KeyRecord::Gs {
            d: self.d,
            m: self.m,
            alpha: self.alpha,
            stream_key: self.stream_key.to_hex(),
            message: self.message.to_hex(),
        })
        .expect("key record serializes")
    }

    pub fn from_json(s: &str) -> Result<GsKey> {
        match serde_json::from_str(s).map_err(|e| Error::KeyFormat(e.to_string()))? {
            KeyRecord::Gs { d, m, alpha, stream_key, message } => {
                if m == 0 || d % m != 0 {
                    return Err(Error::KeyFormat(format!("m={m} must divide d={d}")));
                }
                let stream_key = StreamKey::from_hex(&stream_key)?;
                let message = BitString::from_hex(&message, m)?;
                let threshold = binomial_threshold(m as u64, alpha)?;
                Ok(GsKey { d, m, alpha, stream_key, message, threshold })
            }
            _ => Err(Error::KeyFormat("not a gaussian-shading record".into())),
        }
    }
}

impl WatermarkScheme for GsKey {
    fn dim(&self) -> usize {
        self.d
    }

    /// Half-quantile embedding: coordinate `i` is `Phi^-1((c_i + u_i) / 2)`
    /// with `u_i` uniform on the open unit interval, so the cipher bit is the
    /// sign bit and the marginal over a uniform cipher bit is exactly
    /// standard normal.
    fn sample(&self, seed: &RngSeed) -> LatentPoint {
        let cipher = self.cipher_bits();
        let mut rng = seed.rng();
        let coords = (0..self.d)
            .map(|i| {
                let u: f64 = rng.sample(Open01);
                let p = (u + if cipher.get(i) { 1.0 } else { 0.0 }) / 2.0;
                std_normal_inv_cdf(p).expect("p strictly inside (0,1)")
            })
            .collect();
        LatentPoint::new(coords).expect("finite sample")
    }

    /// Decrypt the sign projection and majority-vote each message position
    /// over its `d/m` repetitions; ties break toward bit 0.
    fn detect(&self, x: &LatentPoint) -> Result<DetectorVerdict> {
        check_dim(self.d, x.dim())?;
        let ks = keystream(&self.stream_key, self.d);
        let dec = x.signs().xor(&ks)?;
        let reps = self.d / self.m;
        let statistic = (0..self.m)
            .filter(|&p| {
                let ones = (0..reps).filter(|&j| dec.get(p + j * self.m)).count();
                let recovered = 2 * ones > reps;
                recovered == self.message.get(p)
            })
            .count() as u64;
        Ok(DetectorVerdict::from_count(statistic, self.threshold))
    }
}

// ---------------------------------------------------------------------------
// Key records
// ---------------------------------------------------------------------------

/// On-disk key format: self-describing JSON, bitstrings hex-encoded.
#[derive(Serialize, Deserialize)]
#[serde(tag = "scheme")]
enum KeyRecord {
    #[serde(rename = "prc-sparse-parity")]
    Prc {
        d: usize,
        t: usize,
        w: usize,
        alpha: f64,
        parity_rows: Vec<Vec<usize>>,
        syndrome: String,
        pad: String,
    },
    #[serde(rename = "gaussian-shading")]
    Gs { d: usize, m: usize, alpha: f64, stream_key: String, message: String },
}

/// Either codec, for callers that resume keys from disk.
#[derive(Debug, Clone)]
pub enum SchemeKey {
    Prc(PrcKey),
    Gs(GsKey),
}

impl SchemeKey {
    pub fn from_json(s: &str) -> Result<SchemeKey> {
        match serde_json::from_str::<KeyRecord>(s).map_err(|e| Error::KeyFormat(e.to_string()))? {
            KeyRecord::Prc { .. } => Ok(SchemeKey::Prc(PrcKey::from_json(s)?)),
            KeyRecord::Gs { .. } => Ok(SchemeKey::Gs(GsKey::from_json(s)?)),
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            SchemeKey::Prc(k) => k.to_json(),
            SchemeKey::Gs(k) => k.to_json(),
        }
    }
}

impl WatermarkScheme for SchemeKey {
    fn dim(&self) -> usize {
        match self {
            SchemeKey::Prc(k) => k.dim(),
            SchemeKey::Gs(k) => k.dim(),
        }
    }
    fn sample(&self, seed: &RngSeed) -> LatentPoint {
        match self {
            SchemeKey::Prc(k) => k.sample(seed),
            SchemeKey::Gs(k) => k.sample(seed),
        }
    }
    fn detect(&self, x: &LatentPoint) -> Result<DetectorVerdict> {
        match self {
            SchemeKey::Prc(k) => k.detect(x),
            SchemeKey::Gs(k) => k.detect(x),
        }
    }
}
