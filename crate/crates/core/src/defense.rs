//! The boundary-hiding defense and its failure mode.
//!
//! A secret orthonormal transform drawn from the Haar measure is applied
//! after sampling and inverted before detection. Because the transform hides
//! everything about a perturbation except its norm, a budget-constrained
//! attacker on the enhanced scheme can do no better than whitenoise —
//! provided the base detector is *well-behaved* (a Hamming ball around every
//! sampled codeword's sign projection stays watermarked). The module also
//! ships the probe that checks that property and a deliberately backdoored
//! detector demonstrating why it is necessary.

use crate::attacks::{outcome, AttackOutcome};
use crate::codecs::{DetectorVerdict, WatermarkScheme};
use crate::latent::{check_dim, LatentPoint};
use crate::rng::RngSeed;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use std::io::{Read, Write};
use std::path::Path;

/// A dense `dim x dim` orthonormal matrix with its transpose as the inverse.
///
/// Stored explicitly (O(d^2) memory, O(d^2) apply); structured fast
/// transforms are out of scope.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalTransform {
    dim: usize,
    /// Column-major entries.
    data: Vec<f64>,
}

/// Sample from the Haar measure on the orthogonal group: QR-decompose a
/// matrix of i.i.d. standard normals and multiply each column of Q by the
/// sign of the corresponding diagonal entry of R. The sign correction is
/// mandatory — plain QR output is not Haar-distributed.
pub fn haar_sample(dim: usize, seed: &RngSeed) -> Result<OrthonormalTransform> {
    if dim == 0 {
        return Err(Error::InvalidDimension("transform dimension must be >= 1".into()));
    }
    let mut rng = seed.rng();
    let mut a: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut diag_sign = vec![1.0f64; dim];
    let mut v = vec![0.0f64; dim];

    // Householder elimination; the reflector vectors stay in the lower
    // triangle of `a` for the accumulation pass.
    for k in 0..dim {
        let col = &a[k * dim..(k + 1) * dim];
        let norm = col[k..].iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if col[k] >= 0.0 { -norm } else { norm };
        diag_sign[k] = if alpha >= 0.0 { 1.0 } else { -1.0 };
        v[k..dim].copy_from_slice(&col[k..]);
        v[k] -= alpha;
        let vtv: f64 = v[k..].iter().map(|c| c * c).sum();
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;
        a[k * dim + k..(k + 1) * dim].copy_from_slice(&v[k..]);
        for j in k + 1..dim {
            let cj = &mut a[j * dim..(j + 1) * dim];
            let dot: f64 = v[k..].iter().zip(&cj[k..]).map(|(x, y)| x * y).sum();
            let scale = beta * dot;
            for (ci, vi) in cj[k..].iter_mut().zip(&v[k..]) {
                *ci -= scale * vi;
            }
        }
    }

    // Backward accumulation of Q = H_0 H_1 ... H_{dim-1}.
    let mut q = vec![0.0f64; dim * dim];
    for k in 0..dim {
        q[k * dim + k] = 1.0;
    }
    for k in (0..dim).rev() {
        v[k..dim].copy_from_slice(&a[k * dim + k..(k + 1) * dim]);
        let vtv: f64 = v[k..].iter().map(|c| c * c).sum();
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;
        for j in k..dim {
            let qj = &mut q[j * dim..(j + 1) * dim];
            let dot: f64 = v[k..].iter().zip(&qj[k..]).map(|(x, y)| x * y).sum();
            let scale = beta * dot;
            for (qi, vi) in qj[k..].iter_mut().zip(&v[k..]) {
                *qi -= scale * vi;
            }
        }
    }

    for k in 0..dim {
        if diag_sign[k] < 0.0 {
            for x in &mut q[k * dim..(k + 1) * dim] {
                *x = -*x;
            }
        }
    }
    Ok(OrthonormalTransform { dim, data: q })
}

impl OrthonormalTransform {
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("transform dimension must be >= 1".into()));
        }
        let mut data = vec![0.0; dim * dim];
        for k in 0..dim {
            data[k * dim + k] = 1.0;
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry at (row, col).
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.dim + row]
    }

    /// `Q x`.
    pub fn apply(&self, x: &LatentPoint) -> Result<LatentPoint> {
        check_dim(self.dim, x.dim())?;
        let mut y = vec![0.0f64; self.dim];
        for (j, &xj) in x.as_slice().iter().enumerate() {
            let col = &self.data[j * self.dim..(j + 1) * self.dim];
            for (yi, ci) in y.iter_mut().zip(col) {
                *yi += xj * ci;
            }
        }
        LatentPoint::new(y)
    }

    /// `Q^T y`; exact inverse of [`OrthonormalTransform::apply`] for an
    /// orthonormal matrix, so no general inversion is ever performed.
    pub fn invert(&self, y: &LatentPoint) -> Result<LatentPoint> {
        check_dim(self.dim, y.dim())?;
        let ys = y.as_slice();
        let x = (0..self.dim)
            .map(|j| {
                self.data[j * self.dim..(j + 1) * self.dim]
                    .iter()
                    .zip(ys)
                    .map(|(c, v)| c * v)
                    .sum()
            })
            .collect();
        LatentPoint::new(x)
    }

    /// Frobenius norm of `Q^T Q - I`.
    pub fn orthonormality_residual(&self) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for j in 0..d {
            let cj = &self.data[j * d..(j + 1) * d];
            for k in j..d {
                let ck = &self.data[k * d..(k + 1) * d];
                let dot: f64 = cj.iter().zip(ck).map(|(a, b)| a * b).sum();
                let err = dot - if j == k { 1.0 } else { 0.0 };
                acc += if j == k { err * err } else { 2.0 * err * err };
            }
        }
        acc.sqrt()
    }

    /// In-memory size of the stored matrix in bytes.
    pub fn storage_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f64>()
    }

    const MAGIC: &'static [u8; 4] = b"LMTX";

    /// Binary container: magic, u64 dimension, then row-major 64-bit floats.
    /// A reloaded transform reproduces `apply` bit-exactly.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                w.write_all(&self.data[j * self.dim + i].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::TransformFormat("bad magic".into()));
        }
        let mut dim_bytes = [0u8; 8];
        r.read_exact(&mut dim_bytes)?;
        let dim = u64::from_le_bytes(dim_bytes) as usize;
        if dim == 0 {
            return Err(Error::TransformFormat("zero dimension".into()));
        }
        let mut data = vec![0.0f64; dim * dim];
        let mut buf = [0u8; 8];
        for i in 0..dim {
            for j in 0..dim {
                r.read_exact(&mut buf)?;
                let v = f64::from_le_bytes(buf);
                if !v.is_finite() {
                    return Err(Error::TransformFormat(format!("non-finite entry at ({i},{j})")));
                }
                data[j * dim + i] = v;
            }
        }
        let mut tail = [0u8; 1];
        if r.read(&mut tail)? != 0 {
            return Err(Error::TransformFormat("trailing bytes".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

/// Closed-form storage requirement of a dense `d x d` transform.
pub fn transform_storage_bytes(dim: usize, element_bytes: usize) -> u128 {
    dim as u128 * dim as u128 * element_bytes as u128
}

/// A base scheme wrapped in a secret transform: sampling post-composes the
/// transform, detection pre-composes its inverse, so the transform cancels
/// exactly on clean samples and costs zero detection accuracy.
#[derive(Debug, Clone)]
pub struct EnhancedScheme<S> {
    base: S,
    transform: OrthonormalTransform,
}

impl<S: WatermarkScheme> EnhancedScheme<S> {
    pub fn new(base: S, transform: OrthonormalTransform) -> Result<Self> {
        check_dim(base.dim(), transform.dim())?;
        Ok(Self { base, transform })
    }

    pub fn base(&self) -> &S {
        &self.base
    }

    pub fn transform(&self) -> &OrthonormalTransform {
        &self.transform
    }

    /// The base sample before the transform is applied; the oracle of the
    /// backdoored-detector experiment records these.
    pub fn sample_pre_transform(&self, seed: &RngSeed) -> LatentPoint {
        self.base.sample(seed)
    }
}

impl<S: WatermarkScheme> WatermarkScheme for EnhancedScheme<S> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn sample(&self, seed: &RngSeed) -> LatentPoint {
        self.transform.apply(&self.base.sample(seed)).expect("dimensions checked at construction")
    }

    fn detect(&self, y: &LatentPoint) -> Result<DetectorVerdict> {
        self.base.detect(&self.transform.invert(y)?)
    }
}

// ---------------------------------------------------------------------------
// Well-behavedness probe
// ---------------------------------------------------------------------------

/// How the probe explores the Hamming ball around a sample's sign pattern.
#[derive(Debug, Clone, Copy)]
pub enum ProbeMode {
    /// Every flip subset of size up to `gamma_bits`; refused above
    /// d = 32 or gamma_bits = 3.
    Exhaustive,
    /// Random flip subsets, `patterns_per_trial` of them per trial.
    Sampled { patterns_per_trial: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeReport {
    pub trials: usize,
    pub patterns_checked: u64,
    pub failures: u64,
}

impl ProbeReport {
    pub fn failure_fraction(&self) -> f64 {
        if self.patterns_checked == 0 {
            0.0
        } else {
            self.failures as f64 / self.patterns_checked as f64
        }
    }

    pub fn all_watermarked(&self) -> bool {
        self.failures == 0
    }
}

fn binomial_count(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance to the next lexicographic combination.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Draw watermarked samples and check that every sign pattern within Hamming
/// distance `gamma_bits` of the sample's projection is still declared
/// watermarked. Patterns are lifted back to latents with the sampled
/// magnitudes (sign flips leave `|x_i|` untouched).
pub fn well_behaved_probe<S: WatermarkScheme>(
    scheme: &S,
    gamma_bits: usize,
    trials: usize,
    mode: ProbeMode,
    seed: &RngSeed,
) -> Result<ProbeReport> {
    let d = scheme.dim();
    if let ProbeMode::Exhaustive = mode {
        if d > 32 || gamma_bits > 3 {
            let estimated: u128 = (0..=gamma_bits.min(d)).map(|k| binomial_count(d, k)).sum();
            return Err(Error::ProbeTooLarge { dim: d, gamma_bits, estimated_patterns: estimated });
        }
    }
    let mut patterns_checked = 0u64;
    let mut failures = 0u64;
    for trial in 0..trials {
        let trial_seed = seed.derive(trial as u64);
        let x = scheme.sample(&trial_seed);
        let mut check_pattern = |subset: &[usize]| -> Result<()> {
            let mut coords = x.as_slice().to_vec();
            for &i in subset {
                coords[i] = -coords[i];
            }
            let v = scheme.detect(&LatentPoint::new(coords)?)?;
            patterns_checked += 1;
            if !v.watermarked {
                failures += 1;
            }
            Ok(())
        };
        match mode {
            ProbeMode::Exhaustive => {
                let mut err = None;
                for k in 0..=gamma_bits.min(d) {
                    for_each_combination(d, k, &mut |subset| {
                        if err.is_none() {
                            if let Err(e) = check_pattern(subset) {
                                err = Some(e);
                            }
                        }
                    });
                }
                if let Some(e) = err {
                    return Err(e);
                }
            }
            ProbeMode::Sampled { patterns_per_trial } => {
                let mut rng = trial_seed.derive(u64::MAX).rng();
                for _ in 0..patterns_per_trial {
                    if gamma_bits == 0 {
                        check_pattern(&[])?;
                        continue;
                    }
                    let size = rng.random_range(1..=gamma_bits.min(d));
                    let subset = rand::seq::index::sample(&mut rng, d, size).into_vec();
                    check_pattern(&subset)?;
                }
            }
        }
    }
    Ok(ProbeReport { trials, patterns_checked, failures })
}

// ---------------------------------------------------------------------------
// Backdoored detector counterexample
// ---------------------------------------------------------------------------

/// Cosine tolerance of the backdoor's "approximates a codeword pair sum"
/// test, tuned for the noiseless setting.
pub const DEFAULT_BACKDOOR_ETA: f64 = 1e-6;

/// Pre-transform watermarked latents issued under one key. The pair search
/// is quadratic in the registry, so it is capped; two-query adversaries stay
/// far below the cap.
#[derive(Debug, Clone, Default)]
pub struct IssuedRegistry {
    latents: Vec<LatentPoint>,
}

impl IssuedRegistry {
    pub const CAP: usize = 64;

    pub fn new() -> Self {
        Self { latents: Vec::new() }
    }

    pub fn push(&mut self, latent: LatentPoint) -> Result<()> {
        if self.latents.len() >= Self::CAP {
            return Err(Error::RegistryFull { cap: Self::CAP });
        }
        self.latents.push(latent);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.latents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latents.is_empty()
    }

    pub fn as_slice(&self) -> &[LatentPoint] {
        &self.latents
    }

    /// Index of the issued latent nearest to `x`; ties break to the lowest
    /// index, so lookups are deterministic.
    pub fn nearest(&self, x: &LatentPoint) -> Result<Option<usize>> {
        let mut best: Option<(usize, f64)> = None;
        for (i, w) in self.latents.iter().enumerate() {
            let dist = x.distance(w)?;
            if best.map_or(true, |(_, b)| dist < b) {
                best = Some((i, dist));
            }
        }
        Ok(best.map(|(i, _)| i))
    }
}

fn cosine(a: &LatentPoint, b: &LatentPoint) -> Result<Option<f64>> {
    let na = a.l2_norm();
    let nb = b.l2_norm();
    if na == 0.0 || nb == 0.0 {
        return Ok(None);
    }
    Ok(Some(a.dot(b)? / (na * nb)))
}

/// The deliberately non-well-behaved detector: invert the transform, subtract
/// the nearest issued latent, and if the residual direction approximates any
/// pairwise sum of issued latents (cosine above `1 - eta`), declare
/// non-watermarked; otherwise defer to the base detector. A registry with
/// fewer than two entries always defers.
pub fn backdoored_detect<S: WatermarkScheme>(
    base: &S,
    registry: &IssuedRegistry,
    transform: &OrthonormalTransform,
    y: &LatentPoint,
    eta: f64,
) -> Result<DetectorVerdict> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta {eta} outside (0,1)")));
    }
    let s_inv = transform.invert(y)?;
    if registry.len() < 2 {
        return base.detect(&s_inv);
    }
    let nearest = registry.nearest(&s_inv)?.expect("registry nonempty");
    let residual = s_inv.sub(&registry.as_slice()[nearest])?;
    let mut best = f64::NEG_INFINITY;
    let n = registry.len();
    for i in 0..n {
        for j in i + 1..n {
            let pair_sum = registry.as_slice()[i].add(&registry.as_slice()[j])?;
            if let Some(c) = cosine(&residual, &pair_sum)? {
                best = best.max(c);
            }
        }
    }
    if best > 1.0 - eta {
        return Ok(DetectorVerdict {
            watermarked: false,
            statistic: -best,
            threshold: -(1.0 - eta),
        });
    }
    base.detect(&s_inv)
}

/// The two-query adversary of the counterexample: obtain `w1`, `w2` from the
/// watermark oracle and output `target + delta1 (w1 + w2)`.
pub fn sum_codeword_attack(
    mut oracle: impl FnMut() -> LatentPoint,
    target: &LatentPoint,
    delta1: f64,
) -> Result<AttackOutcome> {
    if !(delta1 >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta1 {delta1} must be >= 0")));
    }
    let w1 = oracle();
    let w2 = oracle();
    let perturbed = target.add(&w1.add(&w2)?.scale(delta1))?;
    Ok(outcome(target, perturbed, false))
}
