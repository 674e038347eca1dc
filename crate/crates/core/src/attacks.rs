//! Removal adversaries operating on latent starting points under an l2
//! budget.
//!
//! The whitenoise attacker adds a tau-scaled random unit direction. The
//! stealthy attacker negates the smallest-magnitude coordinates it can afford
//! (flipping `s_i` moves the point by `2|s_i|`, so the squared budget
//! accumulates `4 s_i^2`); magnitudes are preserved, so the attacked latent
//! keeps the marginal distribution of the original. The minimal-distortion
//! attacker collapses the selected coordinates to `-(gamma/i0) sign(s_i)`
//! instead, flipping more bits per unit of distortion at the price of a
//! visibly distorted distribution.

use crate::latent::{check_dim, LatentPoint};
use crate::rng::RngSeed;
use crate::{Error, Result};
use rand_distr::StandardNormal;

/// Distortion budget of a removal adversary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackBudget {
    /// l2 budget on `||s - s_tilde||`.
    pub epsilon: f64,
    /// Residual magnitude of the minimal-distortion attack; unused elsewhere.
    /// Distinct from a detector's well-behavedness radius.
    pub gamma: f64,
}

impl AttackBudget {
    pub fn new(epsilon: f64, gamma: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be >= 0")));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma {gamma} must be >= 0")));
        }
        Ok(Self { epsilon, gamma })
    }
}

/// Result of one attack invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub perturbed: LatentPoint,
    /// `||original - perturbed||_2`.
    pub realized_l2: f64,
    /// Coordinates whose sign bit changed.
    pub flipped_count: usize,
    /// Set when the attack could not afford any change and returned the
    /// input untouched.
    pub no_op: bool,
}

pub(crate) fn outcome(original: &LatentPoint, perturbed: LatentPoint, no_op: bool) -> AttackOutcome {
    let realized_l2 = original.distance(&perturbed).expect("same dimension");
    let flipped_count =
        original.signs().hamming(&perturbed.signs()).expect("same dimension");
    AttackOutcome { perturbed, realized_l2, flipped_count, no_op }
}

/// Baseline attacker: `s + tau * g / ||g||` with `g ~ N(0, I)`.
///
/// The realized distortion is `tau` exactly (up to rounding), whatever the
/// dimension.
pub fn whitenoise_attack(s: &LatentPoint, tau: f64, seed: &RngSeed) -> Result<AttackOutcome> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau {tau} must be >= 0")));
    }
    if tau == 0.0 {
        return Ok(outcome(s, s.clone(), false));
    }
    let mut rng = seed.rng();
    let g: Vec<f64> = (0..s.dim()).map(|_| rand::Rng::sample(&mut rng, StandardNormal)).collect();
    let noise = LatentPoint::new(g)?.normalize()?.scale(tau);
    let perturbed = s.add(&noise)?;
    Ok(outcome(s, perturbed, false))
}

/// Indices of the smallest-magnitude coordinates whose accumulated
/// per-coordinate cost stays within `epsilon^2`. Ties in the magnitude sort
/// break by ascending index, so the selection is deterministic.
fn greedy_selection(s: &LatentPoint, epsilon: f64, cost_factor: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.dim()).collect();
    let coords = s.as_slice();
    order.sort_by(|&a, &b| {
        coords[a]
            .abs()
            .partial_cmp(&coords[b].abs())
            .expect("finite coordinates")
            .then(a.cmp(&b))
    });
    let budget_sq = epsilon * epsilon;
    let mut acc = 0.0;
    let mut selected = Vec::new();
    for &i in &order {
        let cost = cost_factor * coords[i] * coords[i];
        if acc + cost > budget_sq {
            break;
        }
        acc += cost;
        selected.push(i);
    }
    selected
}

/// Stealthy removal: negate as many smallest-magnitude coordinates as the
/// budget allows. `|s_hat_i| = |s_i|` for every `i`, so the attack preserves
/// each coordinate's marginal distribution, and `||s - s_hat|| <= epsilon`
/// holds by construction.
pub fn stealthy_attack(s: &LatentPoint, epsilon: f64) -> Result<AttackOutcome> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be >= 0")));
    }
    let selected = greedy_selection(s, epsilon, 4.0);
    if selected.is_empty() {
        return Ok(outcome(s, s.clone(), false));
    }
    let mut coords = s.as_slice().to_vec();
    for &i in &selected {
        coords[i] = -coords[i];
    }
    Ok(outcome(s, LatentPoint::new(coords)?, false))
}

/// Minimal-distortion removal: the selected coordinates (per-coordinate cost
/// `s_i^2`, no factor for flipping) are all set to `-(gamma/i0) sign(s_i)`,
/// where `sign` maps zero to the negative side. Flips more bits than the
/// stealthy attack at equal budget but visibly re-shapes the distribution.
pub fn min_distortion_attack(s: &LatentPoint, epsilon: f64, gamma: f64) -> Result<AttackOutcome> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be >= 0")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} must be > 0")));
    }
    let selected = greedy_selection(s, epsilon, 1.0);
    if selected.is_empty() {
        return Ok(outcome(s, s.clone(), true));
    }
    let residual = gamma / selected.len() as f64;
    let mut coords = s.as_slice().to_vec();
    for &i in &selected {
        let sign = if coords[i] > 0.0 { 1.0 } else { -1.0 };
        coords[i] = -residual * sign;
    }
    Ok(outcome(s, LatentPoint::new(coords)?, false))
}

/// Fraction of coordinates whose sign bit differs between two latents.
pub fn bits_flipped(original: &LatentPoint, attacked: &LatentPoint) -> Result<f64> {
    check_dim(original.dim(), attacked.dim())?;
    Ok(original.signs().hamming(&attacked.signs())? as f64 / original.dim() as f64)
}
