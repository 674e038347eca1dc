//! Security-game harnesses.
//!
//! The removal game runs, per trial: keygen (including the defense transform
//! when configured), a fresh watermarked sample, an adversary bound by an l2
//! budget, and detection of the adversary's output. Inversion error is
//! modeled as an additive Gaussian channel applied independently on the
//! attacker's side and the detector's side — exact inversion is the zero
//! channel. Trials derive child seeds from the experiment seed, so the full
//! record sequence is a pure function of the configuration and trials can
//! run on any number of workers without changing results.

use crate::attacks::{
    bits_flipped, min_distortion_attack, outcome, stealthy_attack, whitenoise_attack,
    AttackOutcome,
};
use crate::codecs::{gs_keygen, prc_keygen, SchemeKey, WatermarkScheme};
use crate::defense::{
    backdoored_detect, haar_sample, sum_codeword_attack, EnhancedScheme, IssuedRegistry,
    OrthonormalTransform,
};
use crate::latent::{sample_std_gauss, LatentPoint};
use crate::rng::RngSeed;
use crate::stats::{two_proportion_ci, wilson_interval};
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const ROLE_KEYGEN: u64 = 1;
const ROLE_TRANSFORM: u64 = 2;
const ROLE_SAMPLE: u64 = 3;
const ROLE_CHANNEL_ATTACK: u64 = 4;
const ROLE_CHANNEL_CLEAN: u64 = 5;
const ROLE_CHANNEL_DETECT: u64 = 6;
const ROLE_ATTACK: u64 = 7;
const ROLE_ORACLE: u64 = 8;
const ROLE_CHALLENGE_BIT: u64 = 9;

/// Which codec a game instantiates, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeSpec {
    Prc { d: usize, t: usize, w: usize, alpha: f64 },
    Gs { d: usize, m: usize, alpha: f64 },
}

impl SchemeSpec {
    pub fn dim(&self) -> usize {
        match self {
            SchemeSpec::Prc { d, .. } | SchemeSpec::Gs { d, .. } => *d,
        }
    }

    pub fn keygen(&self, seed: &RngSeed) -> Result<SchemeKey> {
        match *self {
            SchemeSpec::Prc { d, t, w, alpha } => {
                Ok(SchemeKey::Prc(prc_keygen(d, t, w, alpha, seed)?))
            }
            SchemeSpec::Gs { d, m, alpha } => Ok(SchemeKey::Gs(gs_keygen(d, m, alpha, seed)?)),
        }
    }
}

/// Whether the boundary-hiding transform wraps the codec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenseSpec {
    None,
    Haar,
}

/// One trial's scheme instance: the codec key, optionally wrapped in a fresh
/// secret transform.
pub enum TrialScheme {
    Plain(SchemeKey),
    Enhanced(EnhancedScheme<SchemeKey>),
}

impl TrialScheme {
    /// Keygen for one trial; the transform (when defended) is part of the
    /// per-trial secret.
    pub fn build(scheme: &SchemeSpec, defense: DefenseSpec, seed: &RngSeed) -> Result<TrialScheme> {
        let key = scheme.keygen(&seed.derive(ROLE_KEYGEN))?;
        match defense {
            DefenseSpec::None => Ok(TrialScheme::Plain(key)),
            DefenseSpec::Haar => {
                let transform = haar_sample(scheme.dim(), &seed.derive(ROLE_TRANSFORM))?;
                Ok(TrialScheme::Enhanced(EnhancedScheme::new(key, transform)?))
            }
        }
    }
}

impl WatermarkScheme for TrialScheme {
    fn dim(&self) -> usize {
        match self {
            TrialScheme::Plain(s) => s.dim(),
            TrialScheme::Enhanced(s) => s.dim(),
        }
    }
    fn sample(&self, seed: &RngSeed) -> LatentPoint {
        match self {
            TrialScheme::Plain(s) => s.sample(seed),
            TrialScheme::Enhanced(s) => s.sample(seed),
        }
    }
    fn detect(&self, x: &LatentPoint) -> Result<crate::codecs::DetectorVerdict> {
        match self {
            TrialScheme::Plain(s) => s.detect(x),
            TrialScheme::Enhanced(s) => s.detect(x),
        }
    }
}

/// The removal adversary a game runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    /// Outputs its input unchanged; sanity baseline.
    Identity,
    /// Outputs `-s`; always a budget violation at realistic budgets.
    Negate,
    Whitenoise { tau: f64 },
    Stealthy,
    MinDistortion { gamma: f64 },
    /// Two oracle queries, output `s + delta1 (w1 + w2)`.
    SumCodeword { delta1: f64 },
}

impl AdversarySpec {
    pub fn name(&self) -> &'static str {
        match self {
            AdversarySpec::Identity => "identity",
            AdversarySpec::Negate => "negate",
            AdversarySpec::Whitenoise { .. } => "whitenoise",
            AdversarySpec::Stealthy => "stealthy",
            AdversarySpec::MinDistortion { .. } => "min_distortion",
            AdversarySpec::SumCodeword { .. } => "sum_codeword",
        }
    }
}

/// Full description of one removal-game run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemovalGameConfig {
    pub scheme: SchemeSpec,
    pub defense: DefenseSpec,
    pub adversary: AdversarySpec,
    /// Game budget: success requires `||victim - output||_2 <= epsilon`.
    pub epsilon: f64,
    /// Inversion-noise standard deviation per coordinate; 0 is exact
    /// inversion.
    pub sigma_inv: f64,
    pub trials: usize,
    pub seed: RngSeed,
}

impl RemovalGameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if !(self.sigma_inv >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_inv {} must be >= 0",
                self.sigma_inv
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        // Admissibility: a configured adversary budget must not exceed the
        // game budget.
        if let AdversarySpec::Whitenoise { tau } = self.adversary {
            if !(tau >= 0.0) || tau > self.epsilon {
                return Err(Error::InvalidParameter(format!(
                    "whitenoise tau {tau} must lie in [0, epsilon={}]",
                    self.epsilon
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of a single removal-game trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    /// Whether the clean sample was detected through the detector-side
    /// channel; trials failing this are excluded from ASR denominators.
    pub watermark_detected_before: bool,
    /// The game bit: detector output 0 on the attacked latent, within budget.
    pub removal_success: bool,
    /// Attack distortion `||victim - output||_2`, measured on the latent the
    /// adversary actually saw.
    pub realized_l2: f64,
    pub bits_flipped_fraction: f64,
    pub budget_violation: bool,
}

/// Additive Gaussian inversion-noise channel; `sigma_inv = 0` is exact
/// inversion.
pub fn inversion_channel(x: &LatentPoint, sigma_inv: f64, seed: &RngSeed) -> Result<LatentPoint> {
    if !(sigma_inv >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_inv {sigma_inv} must be >= 0")));
    }
    if sigma_inv == 0.0 {
        return Ok(x.clone());
    }
    let noise = sample_std_gauss(x.dim(), seed)?.scale(sigma_inv);
    x.add(&noise)
}

fn budget_ok(realized: f64, epsilon: f64) -> bool {
    realized <= epsilon + 1e-9 * epsilon.max(1.0)
}

fn run_removal_trial(cfg: &RemovalGameConfig, trial: usize) -> Result<TrialRecord> {
    let seed = cfg.seed.derive(trial as u64);
    let scheme = TrialScheme::build(&cfg.scheme, cfg.defense, &seed)?;
    let s = scheme.sample(&seed.derive(ROLE_SAMPLE));

    // The adversary operates on the latent it can actually reach: the noisy
    // inversion of the generated object.
    let victim = inversion_channel(&s, cfg.sigma_inv, &seed.derive(ROLE_CHANNEL_ATTACK))?;

    // Detection-before-attack sanity, through an independent channel draw.
    let clean_view = inversion_channel(&s, cfg.sigma_inv, &seed.derive(ROLE_CHANNEL_CLEAN))?;
    let watermark_detected_before = scheme.detect(&clean_view)?.watermarked;

    let out: AttackOutcome = match cfg.adversary {
        AdversarySpec::Identity => outcome(&victim, victim.clone(), false),
        AdversarySpec::Negate => outcome(&victim, victim.scale(-1.0), false),
        AdversarySpec::Whitenoise { tau } => {
            whitenoise_attack(&victim, tau, &seed.derive(ROLE_ATTACK))?
        }
        AdversarySpec::Stealthy => stealthy_attack(&victim, cfg.epsilon)?,
        AdversarySpec::MinDistortion { gamma } => {
            min_distortion_attack(&victim, cfg.epsilon, gamma)?
        }
        AdversarySpec::SumCodeword { delta1 } => {
            let oracle_seed = seed.derive(ROLE_ORACLE);
            let mut query = 0u64;
            sum_codeword_attack(
                || {
                    query += 1;
                    scheme.sample(&oracle_seed.derive(query))
                },
                &victim,
                delta1,
            )?
        }
    };

    let budget_violation = !budget_ok(out.realized_l2, cfg.epsilon);
    let detector_view =
        inversion_channel(&out.perturbed, cfg.sigma_inv, &seed.derive(ROLE_CHANNEL_DETECT))?;
    let verdict = scheme.detect(&detector_view)?;
    let removal_success = watermark_detected_before && !budget_violation && !verdict.watermarked;

    Ok(TrialRecord {
        trial_index: trial,
        watermark_detected_before,
        removal_success,
        realized_l2: out.realized_l2,
        bits_flipped_fraction: bits_flipped(&victim, &out.perturbed)?,
        budget_violation,
    })
}

/// Run the removal game; trials execute on the current rayon pool and the
/// returned records are in trial order regardless of scheduling.
pub fn removal_game(cfg: &RemovalGameConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    (0..cfg.trials).into_par_iter().map(|t| run_removal_trial(cfg, t)).collect()
}

/// Attack success rate with its Wilson interval. Trials whose clean sample
/// was not detected are excluded from the denominator — removal is vacuous
/// there — and reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsrEstimate {
    pub successes: u64,
    pub denominator: u64,
    pub excluded_undetected: u64,
    pub budget_violations: u64,
    pub asr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_realized_l2: f64,
    pub mean_bits_flipped: f64,
}

pub fn asr_estimate(records: &[TrialRecord]) -> Result<AsrEstimate> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no trial records".into()));
    }
    let denominator = records.iter().filter(|r| r.watermark_detected_before).count() as u64;
    let excluded = records.len() as u64 - denominator;
    if denominator == 0 {
        return Err(Error::DegenerateInput(
            "no trial detected the clean watermark; ASR undefined".into(),
        ));
    }
    let successes = records.iter().filter(|r| r.removal_success).count() as u64;
    let violations = records.iter().filter(|r| r.budget_violation).count() as u64;
    let (ci_low, ci_high) = wilson_interval(successes, denominator, 0.95)?;
    let n = records.len() as f64;
    Ok(AsrEstimate {
        successes,
        denominator,
        excluded_undetected: excluded,
        budget_violations: violations,
        asr: successes as f64 / denominator as f64,
        ci_low,
        ci_high,
        mean_realized_l2: records.iter().map(|r| r.realized_l2).sum::<f64>() / n,
        mean_bits_flipped: records.iter().map(|r| r.bits_flipped_fraction).sum::<f64>() / n,
    })
}

/// Advantage of an adversary over the best whitenoise attacker on a tau grid:
/// `ASR(A) - max_tau ASR(whitenoise_tau)`, with a 95% two-proportion CI
/// against the maximizing grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    pub delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub best_whitenoise_asr: f64,
}

pub fn advantage(
    adversary_records: &[TrialRecord],
    whitenoise_runs: &[Vec<TrialRecord>],
) -> Result<AdvantageEstimate> {
    if whitenoise_runs.is_empty() {
        return Err(Error::InvalidParameter("advantage needs at least one whitenoise run".into()));
    }
    let a = asr_estimate(adversary_records)?;
    let mut best: Option<AsrEstimate> = None;
    for run in whitenoise_runs {
        let est = asr_estimate(run)?;
        if best.map_or(true, |b| est.asr > b.asr) {
            best = Some(est);
        }
    }
    let w = best.expect("nonempty grid");
    let (ci_low, ci_high) =
        two_proportion_ci(a.successes, a.denominator, w.successes, w.denominator, 0.95)?;
    Ok(AdvantageEstimate { delta: a.asr - w.asr, ci_low, ci_high, best_whitenoise_asr: w.asr })
}

/// Number of whitenoise grid points used when maximizing over `tau <= epsilon`.
pub const WHITENOISE_TAU_GRID: usize = 16;

/// The discrete stand-in for "any tau below the budget": an evenly spaced
/// grid on (0, epsilon].
pub fn whitenoise_tau_grid(epsilon: f64) -> Vec<f64> {
    (1..=WHITENOISE_TAU_GRID)
        .map(|i| epsilon * i as f64 / WHITENOISE_TAU_GRID as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Indistinguishability game
// ---------------------------------------------------------------------------

/// Distinguishers available to the IND game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistinguisherSpec {
    /// Always guesses "not watermarked".
    Constant0,
    /// Guesses "watermarked" when the challenge's sign agreement with an
    /// oracle copy strays from 1/2 by more than `band`.
    SignCorrelation { band: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndGameConfig {
    pub scheme: SchemeSpec,
    pub defense: DefenseSpec,
    pub distinguisher: DistinguisherSpec,
    pub trials: usize,
    /// Oracle copies shown to the distinguisher per game.
    pub oracle_budget: usize,
    pub seed: RngSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndOutcome {
    pub wins: u64,
    pub trials: u64,
    pub win_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

fn run_ind_trial(cfg: &IndGameConfig, trial: usize) -> Result<bool> {
    let seed = cfg.seed.derive(trial as u64);
    let scheme = TrialScheme::build(&cfg.scheme, cfg.defense, &seed)?;
    let watermarked: bool = seed.derive(ROLE_CHALLENGE_BIT).rng().random();
    let challenge = if watermarked {
        scheme.sample(&seed.derive(ROLE_SAMPLE))
    } else {
        sample_std_gauss(cfg.scheme.dim(), &seed.derive(ROLE_SAMPLE))?
    };
    let oracle_seed = seed.derive(ROLE_ORACLE);
    let copies: Vec<LatentPoint> =
        (0..cfg.oracle_budget).map(|i| scheme.sample(&oracle_seed.derive(i as u64))).collect();

    let guess = match cfg.distinguisher {
        DistinguisherSpec::Constant0 => false,
        DistinguisherSpec::SignCorrelation { band } => match copies.first() {
            None => false,
            Some(copy) => {
                let d = challenge.dim() as f64;
                let agreement = 1.0 - challenge.signs().hamming(&copy.signs())? as f64 / d;
                (agreement - 0.5).abs() > band
            }
        },
    };
    Ok(guess == watermarked)
}

/// Run the IND game and report the win rate with a 95% Wilson interval.
pub fn ind_game(cfg: &IndGameConfig) -> Result<IndOutcome> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let wins: u64 = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_ind_trial(cfg, t).map(u64::from))
        .sum::<Result<u64>>()?;
    let (ci_low, ci_high) = wilson_interval(wins, cfg.trials as u64, 0.95)?;
    Ok(IndOutcome {
        wins,
        trials: cfg.trials as u64,
        win_rate: wins as f64 / cfg.trials as f64,
        ci_low,
        ci_high,
    })
}

// ---------------------------------------------------------------------------
// Backdoored-detector counterexample game
// ---------------------------------------------------------------------------

/// Adversaries faced by the backdoored detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CounterexampleAdversary {
    SumCodeword { delta1: f64 },
    Whitenoise { tau: f64 },
}

/// Configuration of the counterexample run: an enhanced PRC scheme whose
/// detector carries the pair-sum backdoor; noiseless inversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    pub d: usize,
    pub t: usize,
    pub w: usize,
    pub alpha: f64,
    pub adversary: CounterexampleAdversary,
    pub epsilon: f64,
    /// Backdoor cosine tolerance.
    pub eta: f64,
    pub trials: usize,
    pub seed: RngSeed,
}

fn run_counterexample_trial(cfg: &CounterexampleConfig, trial: usize) -> Result<TrialRecord> {
    let seed = cfg.seed.derive(trial as u64);
    let key = prc_keygen(cfg.d, cfg.t, cfg.w, cfg.alpha, &seed.derive(ROLE_KEYGEN))?;
    let transform: OrthonormalTransform = haar_sample(cfg.d, &seed.derive(ROLE_TRANSFORM))?;

    // Everything issued under this key is logged pre-transform: the victim
    // and the adversary's two oracle copies.
    let victim_pre = key.sample(&seed.derive(ROLE_SAMPLE));
    let oracle_seed = seed.derive(ROLE_ORACLE);
    let copy1_pre = key.sample(&oracle_seed.derive(1));
    let copy2_pre = key.sample(&oracle_seed.derive(2));
    let mut registry = IssuedRegistry::new();
    registry.push(victim_pre.clone())?;
    registry.push(copy1_pre.clone())?;
    registry.push(copy2_pre.clone())?;

    let target = transform.apply(&victim_pre)?;
    let watermark_detected_before =
        backdoored_detect(&key, &registry, &transform, &target, cfg.eta)?.watermarked;

    let out = match cfg.adversary {
        CounterexampleAdversary::SumCodeword { delta1 } => {
            let copies = [transform.apply(&copy1_pre)?, transform.apply(&copy2_pre)?];
            let mut q = 0usize;
            sum_codeword_attack(
                || {
                    let v = copies[q].clone();
                    q += 1;
                    v
                },
                &target,
                delta1,
            )?
        }
        CounterexampleAdversary::Whitenoise { tau } => {
            whitenoise_attack(&target, tau, &seed.derive(ROLE_ATTACK))?
        }
    };

    let budget_violation = !budget_ok(out.realized_l2, cfg.epsilon);
    let verdict = backdoored_detect(&key, &registry, &transform, &out.perturbed, cfg.eta)?;
    let removal_success = watermark_detected_before && !budget_violation && !verdict.watermarked;

    Ok(TrialRecord {
        trial_index: trial,
        watermark_detected_before,
        removal_success,
        realized_l2: out.realized_l2,
        bits_flipped_fraction: bits_flipped(&target, &out.perturbed)?,
        budget_violation,
    })
}

/// Run the counterexample game against the backdoored detector.
pub fn counterexample_game(cfg: &CounterexampleConfig) -> Result<Vec<TrialRecord>> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    (0..cfg.trials).into_par_iter().map(|t| run_counterexample_trial(cfg, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_prc() -> SchemeSpec {
        SchemeSpec::Prc { d: 256, t: 32, w: 3, alpha: 0.01 }
    }

    #[test]
    fn identity_adversary_never_succeeds_noiselessly() {
        let cfg = RemovalGameConfig {
            scheme: small_prc(),
            defense: DefenseSpec::None,
            adversary: AdversarySpec::Identity,
            epsilon: 1.0,
            sigma_inv: 0.0,
            trials: 50,
            seed: RngSeed::new(1, 0),
        };
        let records = removal_game(&cfg).unwrap();
        let est = asr_estimate(&records).unwrap();
        assert_eq!(est.asr, 0.0);
        assert_eq!(est.denominator, 50);
        assert!(records.iter().all(|r| r.watermark_detected_before));
    }

    #[test]
    fn negate_adversary_violates_budget() {
        let cfg = RemovalGameConfig {
            scheme: small_prc(),
            defense: DefenseSpec::None,
            adversary: AdversarySpec::Negate,
            epsilon: 2.0, // far below 2 ||s|| ~ 32
            sigma_inv: 0.0,
            trials: 20,
            seed: RngSeed::new(2, 0),
        };
        let records = removal_game(&cfg).unwrap();
        assert!(records.iter().all(|r| r.budget_violation && !r.removal_success));
    }

    #[test]
    fn admissibility_enforced_on_every_record() {
        for adversary in [
            AdversarySpec::Stealthy,
            AdversarySpec::Whitenoise { tau: 4.0 },
            AdversarySpec::MinDistortion { gamma: 0.05 },
        ] {
            let cfg = RemovalGameConfig {
                scheme: small_prc(),
                defense: DefenseSpec::None,
                adversary,
                epsilon: 4.0,
                sigma_inv: 0.0,
                trials: 40,
                seed: RngSeed::new(3, 0),
            };
            let records = removal_game(&cfg).unwrap();
            for r in &records {
                assert!(!(r.removal_success && r.budget_violation));
                if r.removal_success {
                    assert!(r.realized_l2 <= cfg.epsilon + 1e-6);
                }
            }
        }
    }

    #[test]
    fn records_reproduce_exactly() {
        let cfg = RemovalGameConfig {
            scheme: small_prc(),
            defense: DefenseSpec::Haar,
            adversary: AdversarySpec::Stealthy,
            epsilon: 3.0,
            sigma_inv: 0.1,
            trials: 12,
            seed: RngSeed::new(4, 9),
        };
        let a = removal_game(&cfg).unwrap();
        let b = removal_game(&cfg).unwrap();
        assert_eq!(a, b);
        assert!((0..12).all(|i| a[i].trial_index == i));
    }

    #[test]
    fn config_validation() {
        let mut cfg = RemovalGameConfig {
            scheme: small_prc(),
            defense: DefenseSpec::None,
            adversary: AdversarySpec::Whitenoise { tau: 5.0 },
            epsilon: 4.0,
            sigma_inv: 0.0,
            trials: 10,
            seed: RngSeed::new(5, 0),
        };
        assert!(cfg.validate().is_err()); // tau exceeds the game budget
        cfg.adversary = AdversarySpec::Whitenoise { tau: 4.0 };
        assert!(cfg.validate().is_ok());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 10;
        cfg.sigma_inv = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn inversion_channel_basics() {
        let x = sample_std_gauss(4096, &RngSeed::new(6, 0)).unwrap();
        assert_eq!(inversion_channel(&x, 0.0, &RngSeed::new(7, 0)).unwrap(), x);
        let sigma = 0.3;
        let mut norms = 0.0;
        let reps = 30;
        for i in 0..reps {
            let y = inversion_channel(&x, sigma, &RngSeed::new(8, i)).unwrap();
            norms += y.sub(&x).unwrap().l2_norm();
        }
        let mean = norms / reps as f64;
        let expect = sigma * (4096f64).sqrt();
        assert!((mean - expect).abs() < 0.02 * expect, "mean {mean} expect {expect}");
        assert!(inversion_channel(&x, -0.1, &RngSeed::new(8, 0)).is_err());
    }

    #[test]
    fn channel_detection_matches_flip_rate_composition() {
        // Under the channel alone, the mean satisfied-check fraction tracks
        // 1/2 + (1 - 2 p)^w / 2 with p = arctan(sigma) / pi.
        let spec = SchemeSpec::Prc { d: 1024, t: 64, w: 3, alpha: 0.01 };
        for sigma in [0.2f64, 0.5] {
            let p = sigma.atan() / std::f64::consts::PI;
            let q = 0.5 + 0.5 * (1.0 - 2.0 * p).powi(3);
            let mut acc = 0.0;
            let trials = 60;
            for i in 0..trials {
                let seed = RngSeed::new(700 + i, 0);
                let scheme = TrialScheme::build(&spec, DefenseSpec::None, &seed).unwrap();
                let s = scheme.sample(&seed.derive(ROLE_SAMPLE));
                let view = inversion_channel(&s, sigma, &seed.derive(ROLE_CHANNEL_DETECT)).unwrap();
                acc += scheme.detect(&view).unwrap().statistic / 64.0;
            }
            let mean = acc / trials as f64;
            assert!((mean - q).abs() < 0.02, "sigma {sigma}: mean {mean} vs {q}");
        }
    }

    #[test]
    fn asr_estimate_edges() {
        let mk = |success: bool, i: usize| TrialRecord {
            trial_index: i,
            watermark_detected_before: true,
            removal_success: success,
            realized_l2: 1.0,
            bits_flipped_fraction: 0.1,
            budget_violation: false,
        };
        let all: Vec<_> = (0..100).map(|i| mk(true, i)).collect();
        let est = asr_estimate(&all).unwrap();
        assert_eq!(est.asr, 1.0);
        assert_eq!(est.ci_high, 1.0);
        let none: Vec<_> = (0..100).map(|i| mk(false, i)).collect();
        let est = asr_estimate(&none).unwrap();
        assert_eq!(est.asr, 0.0);
        assert_eq!(est.ci_low, 0.0);
        assert!(asr_estimate(&[]).is_err());
        let adv = advantage(&all, &[none.clone(), all.clone()]).unwrap();
        assert_eq!(adv.delta, 0.0);
        assert_eq!(adv.best_whitenoise_asr, 1.0);
    }

    #[test]
    fn stealthy_beats_whitenoise_on_undefended_prc() {
        // Mini version of the full sweep: at a mid-range budget the stealthy
        // ASR clearly exceeds the whitenoise ASR.
        let epsilon = 3.5;
        let base = RemovalGameConfig {
            scheme: SchemeSpec::Prc { d: 512, t: 64, w: 3, alpha: 0.01 },
            defense: DefenseSpec::None,
            adversary: AdversarySpec::Stealthy,
            epsilon,
            sigma_inv: 0.0,
            trials: 120,
            seed: RngSeed::new(9, 0),
        };
        let stealthy = asr_estimate(&removal_game(&base).unwrap()).unwrap();
        let wn_cfg = RemovalGameConfig {
            adversary: AdversarySpec::Whitenoise { tau: epsilon },
            ..base.clone()
        };
        let wn = asr_estimate(&removal_game(&wn_cfg).unwrap()).unwrap();
        assert!(
            stealthy.asr > wn.asr + 0.3,
            "stealthy {} vs whitenoise {}",
            stealthy.asr,
            wn.asr
        );
    }

    #[test]
    fn ind_constant_zero_wins_half() {
        let cfg = IndGameConfig {
            scheme: SchemeSpec::Gs { d: 256, m: 32, alpha: 0.01 },
            defense: DefenseSpec::None,
            distinguisher: DistinguisherSpec::Constant0,
            trials: 400,
            oracle_budget: 0,
            seed: RngSeed::new(10, 0),
        };
        let out = ind_game(&cfg).unwrap();
        assert!(out.ci_low <= 0.5 && 0.5 <= out.ci_high, "win rate {}", out.win_rate);
    }

    #[test]
    fn sign_correlation_separates_gs_from_prc() {
        let gs = IndGameConfig {
            scheme: SchemeSpec::Gs { d: 256, m: 32, alpha: 0.01 },
            defense: DefenseSpec::None,
            distinguisher: DistinguisherSpec::SignCorrelation { band: 0.25 },
            trials: 200,
            oracle_budget: 1,
            seed: RngSeed::new(11, 0),
        };
        let out = ind_game(&gs).unwrap();
        assert!(out.win_rate >= 0.95, "GS win rate {}", out.win_rate);

        let prc = IndGameConfig {
            scheme: SchemeSpec::Prc { d: 256, t: 32, w: 3, alpha: 0.01 },
            ..gs
        };
        let out = ind_game(&prc).unwrap();
        assert!(out.ci_low <= 0.5 && 0.5 <= out.ci_high, "PRC win rate {}", out.win_rate);
    }

    #[test]
    fn counterexample_gap_mini() {
        let common = CounterexampleConfig {
            d: 256,
            t: 32,
            w: 3,
            alpha: 0.01,
            adversary: CounterexampleAdversary::SumCodeword { delta1: 1e-3 },
            epsilon: 0.16, // 0.01 * sqrt(256)
            eta: 1e-6,
            trials: 25,
            seed: RngSeed::new(12, 0),
        };
        let sum = asr_estimate(&counterexample_game(&common).unwrap()).unwrap();
        assert!(sum.asr >= 0.95, "sum-codeword ASR {}", sum.asr);
        let wn = CounterexampleConfig {
            adversary: CounterexampleAdversary::Whitenoise { tau: 0.16 },
            ..common
        };
        let wn = asr_estimate(&counterexample_game(&wn).unwrap()).unwrap();
        assert_eq!(wn.asr, 0.0);
    }

    #[test]
    fn tau_grid_covers_budget() {
        let grid = whitenoise_tau_grid(4.0);
        assert_eq!(grid.len(), WHITENOISE_TAU_GRID);
        assert!(grid.iter().all(|&t| t > 0.0 && t <= 4.0));
        assert_eq!(*grid.last().unwrap(), 4.0);
    }
}
