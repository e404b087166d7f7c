//! Causal attacks on a fixed set of compromised sensors.
//!
//! An attack chooses a bias `yᵃ(k)` supported on the compromised set `𝓘`, so
//! the fusion center receives `y'(k) = y(k) + yᵃ(k)`. The attacker sees θ, the
//! true measurements of its own sensors, and what it reported in the past.
//! Reported values are kept inside the support of the measurement model so
//! every report has a finite log-likelihood ratio.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::NetworkShape;
use crate::measures::{DistributionPair, Hypothesis};
use crate::rates::RateProfile;

/// Absolute slack when checking `I_θ(λ̄) ≥ z_s` on rounded running means.
pub const RATE_SLACK: f64 = 1e-9;

/// Attack configuration, as it appears in scenario JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackKind {
    None,
    /// Compromised sensors report samples from the other hypothesis.
    Flip,
    /// Compromised sensors steer their running mean so that
    /// `I_θ(λ̄_i(k)) ≥ z_s` while staying close to `I_θ⁻¹(z_s)`.
    RateTarget { z_s: f64 },
}

/// What an attack may look at when choosing its bias at time `k`.
#[derive(Debug, Clone, Copy)]
pub struct AttackContext<'a> {
    /// Compromised sensor indices `𝓘`.
    pub compromised: &'a [usize],
    /// Maximum number of compromised sensors `n`.
    pub budget: usize,
    /// Total number of sensors `m`.
    pub m: usize,
    pub theta: Hypothesis,
    /// Current time, starting at 1.
    pub k: usize,
    /// True measurements `y_i(k)` for `i ∈ 𝓘`, aligned with `compromised`.
    pub measurements: &'a [f64],
    /// `Σ_{t<k} λ(y'_i(t))` for `i ∈ 𝓘`, aligned with `compromised`; a
    /// sufficient statistic of the attacker's past reports.
    pub reported_llr_sum: &'a [f64],
}

/// Bias plus whether every compromised sensor met the rate constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub bias: Vec<f64>,
    pub constraint_met: bool,
}

/// Compromised sets of the distribution-flipping attack:
/// `{1..n}` when θ = 0 and `{m−n+1..m} \ {1..n}` when θ = 1 (zero-based here).
pub fn flip_compromised_set(shape: &NetworkShape, theta: Hypothesis) -> Vec<usize> {
    let (m, n) = (shape.m, shape.n);
    match theta {
        Hypothesis::H0 => (0..n).collect(),
        Hypothesis::H1 => (m - n..m).filter(|&i| i >= n).collect(),
    }
}

/// Each compromised sensor reports a fresh draw from the other hypothesis.
pub fn flip_attack<R: Rng + ?Sized>(ctx: &AttackContext<'_>, pair: &DistributionPair, rng: &mut R) -> Vec<f64> {
    let mut bias = vec![0.0; ctx.m];
    for (slot, &i) in ctx.compromised.iter().enumerate() {
        let forged = pair.sample_one(ctx.theta.other(), rng);
        bias[i] = forged - ctx.measurements[slot];
    }
    bias
}

/// Per-hypothesis targets of the rate-targeting attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTarget {
    pub z_s: f64,
    /// `I_0⁻¹(z_s)` and `I_1⁻¹(z_s)`, clamped to the branch endpoint when
    /// `z_s` exceeds the branch range.
    pub x_star: [f64; 2],
    /// Rate each branch must reach: `z_s`, or the endpoint rate when clamped.
    pub z_eff: [f64; 2],
    pub clamped: bool,
}

impl RateTarget {
    pub fn new(profile: &RateProfile, z_s: f64) -> Result<Self> {
        if !(z_s >= 0.0) || !z_s.is_finite() {
            return Err(Error::TargetInfeasible(format!("z_s = {z_s} must be finite and nonnegative")));
        }
        let mut clamped = false;
        let (lo, hi) = profile.lambda_range;
        let x0 = profile.inv_rate0(z_s).unwrap_or_else(|_| {
            clamped = true;
            hi
        });
        let x1 = profile.inv_rate1(z_s).unwrap_or_else(|_| {
            clamped = true;
            lo
        });
        let z_eff = [z_s.min(profile.rate0(x0)), z_s.min(profile.rate1(x1))];
        Ok(RateTarget { z_s, x_star: [x0, x1], z_eff, clamped })
    }
}

/// Rate-targeting attack. Continuous pairs place `λ̄_i(k)` exactly on the
/// target. Discrete pairs pick the support point whose resulting mean is
/// closest to the target among those satisfying `I_θ(λ̄_i(k)) ≥ z_s`, or
/// simply the closest one while no choice satisfies it.
pub fn rate_target_attack(
    ctx: &AttackContext<'_>,
    profile: &RateProfile,
    target: &RateTarget,
) -> Result<AttackOutcome> {
    let pair = &profile.pair;
    let x_star = target.x_star[ctx.theta.index()];
    let z_req = target.z_eff[ctx.theta.index()];
    let kf = ctx.k as f64;
    let mut bias = vec![0.0; ctx.m];
    let mut constraint_met = true;
    let table = pair.llr_table();
    for (slot, &i) in ctx.compromised.iter().enumerate() {
        let prev = ctx.reported_llr_sum[slot];
        let report = match &table {
            Some(points) => {
                let (lo, hi) = profile.lambda_range;
                let score = |l: f64| {
                    let mean = (prev + l) / kf;
                    let feasible = profile.rate(ctx.theta, mean.clamp(lo, hi)) >= z_req - RATE_SLACK;
                    (feasible, (mean - x_star).abs())
                };
                let mut best: Option<(f64, bool, f64)> = None;
                for &(y, l) in points {
                    let (feasible, dist) = score(l);
                    let better = match best {
                        None => true,
                        Some((_, bf, bd)) => (feasible && !bf) || (feasible == bf && dist < bd),
                    };
                    if better {
                        best = Some((y, feasible, dist));
                    }
                }
                let (y, feasible, _) = best.expect("discrete support is nonempty");
                constraint_met &= feasible;
                y
            }
            None => {
                let l = kf * x_star - prev;
                pair.llr_preimage(l)
                    .ok_or_else(|| Error::TargetInfeasible(format!("no measurement has llr {l}")))?
            }
        };
        bias[i] = report - ctx.measurements[slot];
    }
    Ok(AttackOutcome { bias, constraint_met })
}

/// Whether `bias` is supported on the compromised set and the set respects
/// the budget.
pub fn validate_admissible(ctx: &AttackContext<'_>, bias: &[f64]) -> bool {
    if ctx.compromised.len() > ctx.budget || bias.len() != ctx.m {
        return false;
    }
    bias.iter()
        .enumerate()
        .all(|(i, &b)| b == 0.0 || ctx.compromised.contains(&i))
}

/// Trial-private driver: holds the compromised set and the attacker's
/// running statistics, and turns true measurements into reports.
#[derive(Debug, Clone)]
pub struct Attacker {
    kind: AttackKind,
    profile: RateProfile,
    shape: NetworkShape,
    theta: Hypothesis,
    compromised: Vec<usize>,
    target: Option<RateTarget>,
    reported_llr_sum: Vec<f64>,
    k: usize,
    burn_in: Option<usize>,
}

impl Attacker {
    pub fn new(kind: AttackKind, profile: RateProfile, shape: NetworkShape, theta: Hypothesis) -> Result<Self> {
        let (compromised, target) = match kind {
            AttackKind::None => (Vec::new(), None),
            AttackKind::Flip => (flip_compromised_set(&shape, theta), None),
            AttackKind::RateTarget { z_s } => ((0..shape.n).collect(), Some(RateTarget::new(&profile, z_s)?)),
        };
        let slots = compromised.len();
        Ok(Attacker {
            kind,
            profile,
            shape,
            theta,
            compromised,
            target,
            reported_llr_sum: vec![0.0; slots],
            k: 0,
            burn_in: None,
        })
    }

    pub fn compromised(&self) -> &[usize] {
        &self.compromised
    }

    /// First time step from which every compromised sensor has met the rate
    /// constraint at every step so far (rate-targeting attack only).
    pub fn burn_in(&self) -> Option<usize> {
        self.burn_in
    }

    pub fn target(&self) -> Option<&RateTarget> {
        self.target.as_ref()
    }

    /// Produces `y'(k)` from the true `y(k)`.
    pub fn corrupt<R: Rng + ?Sized>(&mut self, y: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        self.k += 1;
        if self.compromised.is_empty() {
            return Ok(y.to_vec());
        }
        let own: Vec<f64> = self.compromised.iter().map(|&i| y[i]).collect();
        let ctx = AttackContext {
            compromised: &self.compromised,
            budget: self.shape.n,
            m: self.shape.m,
            theta: self.theta,
            k: self.k,
            measurements: &own,
            reported_llr_sum: &self.reported_llr_sum,
        };
        let bias = match self.kind {
            AttackKind::None => unreachable!("empty compromised set"),
            AttackKind::Flip => flip_attack(&ctx, &self.profile.pair, rng),
            AttackKind::RateTarget { .. } => {
                let out = rate_target_attack(&ctx, &self.profile, self.target.as_ref().unwrap())?;
                match (out.constraint_met, self.burn_in) {
                    (true, None) => self.burn_in = Some(self.k),
                    (false, Some(_)) => self.burn_in = None,
                    _ => {}
                }
                out.bias
            }
        };
        if !validate_admissible(&ctx, &bias) {
            return Err(Error::Config("attack produced a bias outside the compromised set".into()));
        }
        let reported: Vec<f64> = y.iter().zip(&bias).map(|(a, b)| a + b).collect();
        for (slot, &i) in self.compromised.iter().enumerate() {
            self.reported_llr_sum[slot] += self.profile.pair.llr(reported[i])?;
        }
        Ok(reported)
    }
}
