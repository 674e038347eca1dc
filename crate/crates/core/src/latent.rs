//! Latent points and bit strings.
//!
//! A [`LatentPoint`] is a point in the latent space `R^d` — the starting
//! point of a generation process and the object every codec, attack, and
//! game operates on. A [`BitString`] carries codewords, sign projections,
//! and keystreams.

use crate::rng::RngSeed;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// A `d`-dimensional real vector with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPoint {
    coords: Vec<f64>,
}

impl LatentPoint {
    /// Build from raw coordinates. Rejects empty vectors and non-finite values.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension("latent dimension must be positive".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "non-finite coordinate {} at index {i}",
                coords[i]
            )));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    /// Euclidean norm.
    pub fn l2_norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `x / ||x||_2`. Errors on the zero vector.
    pub fn normalize(&self) -> Result<LatentPoint> {
        let n = self.l2_norm();
        if n == 0.0 {
            return Err(Error::DegenerateInput("cannot normalize the zero vector".into()));
        }
        Ok(LatentPoint {
            coords: self.coords.iter().map(|c| c / n).collect(),
        })
    }

    /// Sign projection: bit i is 1 iff coordinate i is strictly positive.
    ///
    /// Exact zeros map to 0. Zeros have probability zero under the continuous
    /// model, so any fixed convention works; this one is shared by the
    /// detectors and the attacks so both sides agree on what counts as a flip.
    pub fn signs(&self) -> BitString {
        BitString::from_bits(self.coords.iter().map(|&c| c > 0.0).collect())
    }

    /// Euclidean distance to another point of the same dimension.
    pub fn distance(&self, other: &LatentPoint) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// Coordinate-wise sum.
    pub fn add(&self, other: &LatentPoint) -> Result<LatentPoint> {
        check_dim(self.dim(), other.dim())?;
        Ok(LatentPoint {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        })
    }

    /// Coordinate-wise difference.
    pub fn sub(&self, other: &LatentPoint) -> Result<LatentPoint> {
        check_dim(self.dim(), other.dim())?;
        Ok(LatentPoint {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect(),
        })
    }

    /// Scale every coordinate.
    pub fn scale(&self, c: f64) -> LatentPoint {
        LatentPoint {
            coords: self.coords.iter().map(|x| x * c).collect(),
        }
    }

    pub fn dot(&self, other: &LatentPoint) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).sum())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `d` i.i.d. draws from the standard normal, deterministic given the seed.
pub fn sample_std_gauss(d: usize, seed: &RngSeed) -> Result<LatentPoint> {
    if d == 0 {
        return Err(Error::InvalidDimension("d must be >= 1".into()));
    }
    let mut rng = seed.rng();
    let coords = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    Ok(LatentPoint { coords })
}

/// A fixed-length binary sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn as_bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Bitwise XOR with an equal-length string.
    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        check_dim(self.len(), other.len())?;
        Ok(BitString {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect(),
        })
    }

    pub fn complement(&self) -> BitString {
        BitString {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Number of positions where the two strings differ.
    pub fn hamming(&self, other: &BitString) -> Result<usize> {
        check_dim(self.len(), other.len())?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }

    /// Parity (XOR) of the bits at the given indices.
    pub fn parity_at(&self, indices: &[usize]) -> bool {
        indices.iter().fold(false, |acc, &i| acc ^ self.bits[i])
    }

    /// Hex encoding, 8 bits per byte, MSB first, zero-padded at the tail.
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        hex::encode(bytes)
    }

    /// Inverse of [`BitString::to_hex`]; `len` recovers the unpadded length.
    pub fn from_hex(s: &str, len: usize) -> Result<BitString> {
        let bytes = hex::decode(s).map_err(|e| Error::KeyFormat(format!("bad hex: {e}")))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::KeyFormat(format!(
                "hex length {} does not match bit length {len}",
                bytes.len()
            )));
        }
        let bits = (0..len).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect();
        Ok(BitString { bits })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gauss_is_deterministic() {
        let s = RngSeed::new(11, 0);
        assert_eq!(sample_std_gauss(4, &s).unwrap(), sample_std_gauss(4, &s).unwrap());
    }

    #[test]
    fn gauss_rejects_zero_dim() {
        assert!(matches!(sample_std_gauss(0, &RngSeed::new(0, 0)), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn gauss_moments_at_one_million() {
        // Law of large numbers: mean within 0.005, variance within 0.01.
        let x = sample_std_gauss(1_000_000, &RngSeed::new(2024, 0)).unwrap();
        let n = x.dim() as f64;
        let mean = x.as_slice().iter().sum::<f64>() / n;
        let var = x.as_slice().iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn gauss_norm_concentrates() {
        // Chi concentration: ||x|| within sqrt(d) +/- 4 (about 5.7 sigma).
        let d = 16_384;
        for k in 0..20 {
            let x = sample_std_gauss(d, &RngSeed::new(77, k)).unwrap();
            let n = x.l2_norm();
            let root_d = (d as f64).sqrt();
            assert!(n > root_d - 4.0 && n < root_d + 4.0, "norm {n}");
        }
    }

    #[test]
    fn norm_examples() {
        assert_eq!(LatentPoint::new(vec![0.0, 0.0, 0.0]).unwrap().l2_norm(), 0.0);
        assert_eq!(LatentPoint::new(vec![3.0, 4.0]).unwrap().l2_norm(), 5.0);
        assert_eq!(LatentPoint::new(vec![1.0, 1.0, 1.0, 1.0]).unwrap().l2_norm(), 2.0);
    }

    #[test]
    fn normalize_examples() {
        let x = LatentPoint::new(vec![3.0, 4.0]).unwrap().normalize().unwrap();
        assert!((x.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((x.as_slice()[1] - 0.8).abs() < 1e-15);
        let unit = LatentPoint::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(unit.normalize().unwrap(), unit);
        assert!(LatentPoint::new(vec![0.0, 0.0]).unwrap().normalize().is_err());
    }

    #[test]
    fn signs_examples() {
        let s = LatentPoint::new(vec![0.5, -2.0, 3.0]).unwrap().signs();
        assert_eq!(s.as_bits(), &[true, false, true]);
        let neg = LatentPoint::new(vec![-1.0, -0.1]).unwrap().signs();
        assert_eq!(neg.ones(), 0);
        // Zero maps to bit 0.
        let z = LatentPoint::new(vec![0.0, 1.0]).unwrap().signs();
        assert_eq!(z.as_bits(), &[false, true]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(LatentPoint::new(vec![1.0, f64::NAN]).is_err());
        assert!(LatentPoint::new(vec![f64::INFINITY]).is_err());
        assert!(LatentPoint::new(vec![]).is_err());
    }

    #[test]
    fn hex_round_trip_odd_length() {
        let b = BitString::from_bits(vec![true, false, true, true, false, true, true, false, true]);
        assert_eq!(BitString::from_hex(&b.to_hex(), b.len()).unwrap(), b);
    }

    proptest! {
        #[test]
        fn normalize_unit_norm(coords in proptest::collection::vec(-1e6f64..1e6, 1..64)) {
            prop_assume!(coords.iter().any(|c| *c != 0.0));
            let x = LatentPoint::new(coords).unwrap();
            let n = x.normalize().unwrap().l2_norm();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }

        #[test]
        fn scaled_norm_is_abs_scale(coords in proptest::collection::vec(-100.0f64..100.0, 1..32), c in -50.0f64..50.0) {
            prop_assume!(coords.iter().map(|x| x*x).sum::<f64>() > 1e-6);
            let x = LatentPoint::new(coords).unwrap();
            let normalized = x.normalize().unwrap().scale(c);
            prop_assert!((normalized.l2_norm() - c.abs()).abs() < 1e-9);
        }

        #[test]
        fn signs_of_negation_complement(coords in proptest::collection::vec(-100.0f64..100.0, 1..64)) {
            prop_assume!(coords.iter().all(|c| *c != 0.0));
            let x = LatentPoint::new(coords.clone()).unwrap();
            let neg = x.scale(-1.0);
            prop_assert_eq!(x.signs().complement(), neg.signs());
        }

        #[test]
        fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            prop_assume!(!bits.is_empty());
            let b = BitString::from_bits(bits);
            prop_assert_eq!(BitString::from_hex(&b.to_hex(), b.len()).unwrap(), b);
        }
    }
}
