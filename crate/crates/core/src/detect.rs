//! Sequential detectors at the fusion center.
//!
//! Every detector keeps the running per-sensor mean of the log-likelihood
//! ratio, `λ̄_i(k) = ((k−1)/k)·λ̄_i(k−1) + λ(y'_i(k))/k`, and maps it to a
//! decision at every step. The secure family compares subset sums of the
//! rate values `I_j(λ̄_i)` against a security target before falling back to
//! the sign of `Σ λ̄_i`.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::limits::NetworkShape;
use crate::measures::{log_add_exp, Hypothesis};
use crate::rates::RateProfile;

/// Threshold schedule for the q-out-of-m rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QSchedule {
    /// `q_k` for `k = 1, 2, …`.
    Explicit(Vec<u64>),
    /// Resolve with [`qom_optimize`] before use; written as `"optimal"`.
    Optimal(OptimalTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalTag {
    Optimal,
}

/// Detector configuration, as it appears in scenario JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorKind {
    /// Decide 1 iff `Σ_{i∈subset} λ̄_i ≥ chi`; the subset defaults to all sensors.
    Bayes {
        #[serde(default)]
        chi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subset: Option<Vec<usize>>,
    },
    /// The optimal secure detector for security target `z_s`.
    Secure { z_s: f64 },
    /// Secure detector that treats the last `m_s` sensors as uncompromisable.
    SecureSensors { z_s: f64, m_s: usize },
    /// Secure detector for an unknown attacker count; `z_tuple[n_a]` is the
    /// target with `n_a` compromised sensors, `n_a = 0..=n`.
    UnknownN { z_tuple: Vec<f64> },
    /// Drop the `n` largest and `n` smallest `λ̄_i`, test the sign of the rest.
    Trimmed,
    /// Decide 1 iff the number of ones received so far reaches `q_k`.
    Qom { q_schedule: QSchedule },
}

impl DetectorKind {
    pub fn naive_bayes() -> Self {
        DetectorKind::Bayes { chi: 0.0, subset: None }
    }

    /// Replaces an `"optimal"` q-out-of-m schedule with the explicit
    /// thresholds for `k = 1..=horizon`.
    pub fn resolve(&self, profile: &RateProfile, shape: &NetworkShape, horizon: usize) -> Result<Self> {
        match self {
            DetectorKind::Qom { q_schedule: QSchedule::Optimal(_) } => {
                let qs = (1..=horizon)
                    .map(|k| qom_optimize(profile, shape, k).map(|o| o.q_star))
                    .collect::<Result<Vec<_>>>()?;
                Ok(DetectorKind::Qom { q_schedule: QSchedule::Explicit(qs) })
            }
            other => Ok(other.clone()),
        }
    }
}

/// Detector output in `[0, 1]`: the probability of announcing θ̂ = 1.
/// Every detector here is deterministic and emits exactly 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Decision(f64);

impl Decision {
    pub const ZERO: Decision = Decision(0.0);
    pub const ONE: Decision = Decision(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Decision(value))
        } else {
            Err(Error::range("decision in [0, 1]", value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Probability that this decision is wrong when the truth is `theta`.
    pub fn error_under(self, theta: Hypothesis) -> f64 {
        match theta {
            Hypothesis::H0 => self.0,
            Hypothesis::H1 => 1.0 - self.0,
        }
    }

    fn from_bool(one: bool) -> Self {
        if one {
            Decision::ONE
        } else {
            Decision::ZERO
        }
    }
}

/// Sum of the `size` smallest entries of `values`, i.e. the minimum of
/// `Σ_{i∈O} values[i]` over index sets with `|O| = size`. Sorts in place.
pub fn min_subset_sum(values: &mut [f64], size: usize) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().take(size).sum()
}

/// Running state of one detector over one measurement stream.
#[derive(Debug, Clone)]
pub struct Detector {
    kind: DetectorKind,
    profile: RateProfile,
    shape: NetworkShape,
    lam_bar: Vec<f64>,
    k: usize,
    ones: f64,
    rates0: Vec<f64>,
    rates1: Vec<f64>,
}

impl Detector {
    pub fn new(kind: DetectorKind, profile: RateProfile, shape: NetworkShape) -> Result<Self> {
        shape.validate()?;
        let m = shape.m;
        match &kind {
            DetectorKind::Bayes { chi, subset } => {
                if !chi.is_finite() {
                    return Err(Error::Config(format!("bayes threshold must be finite, got {chi}")));
                }
                if let Some(s) = subset {
                    if s.iter().any(|&i| i >= m) {
                        return Err(Error::Config(format!("bayes subset {s:?} has indices >= m = {m}")));
                    }
                }
            }
            DetectorKind::Secure { z_s } => check_security_target(*z_s, &profile, &shape)?,
            DetectorKind::SecureSensors { z_s, m_s } => {
                if shape.m_s != 0 && shape.m_s != *m_s {
                    return Err(Error::Config(format!(
                        "detector m_s = {m_s} disagrees with network m_s = {}",
                        shape.m_s
                    )));
                }
                if shape.n + m_s > m {
                    return Err(Error::Config(format!("n + m_s = {} exceeds m = {m}", shape.n + m_s)));
                }
                let cap = shape.honest_margin().max(*m_s) as f64 * profile.c;
                if !(*z_s >= 0.0 && *z_s <= cap + 1e-12) {
                    return Err(Error::Config(format!("z_s = {z_s} outside [0, {cap}]")));
                }
            }
            DetectorKind::UnknownN { z_tuple } => {
                if z_tuple.len() != shape.n + 1 {
                    return Err(Error::Config(format!(
                        "z_tuple needs n + 1 = {} entries, got {}",
                        shape.n + 1,
                        z_tuple.len()
                    )));
                }
                let curves = crate::limits::TradeoffCurves::new(profile, shape)?;
                if !curves.is_admissible_tuple(z_tuple) {
                    return Err(Error::Config(format!("z_tuple {z_tuple:?} is not admissible")));
                }
            }
            DetectorKind::Trimmed => {
                if 2 * shape.n >= m {
                    return Err(Error::Config(format!("trimmed mean needs m > 2n, got m={m}, n={}", shape.n)));
                }
            }
            DetectorKind::Qom { q_schedule } => {
                if !profile.pair.is_binary() {
                    return Err(Error::UnsupportedPair);
                }
                if let QSchedule::Optimal(_) = q_schedule {
                    return Err(Error::Config("resolve the optimal q schedule before use".into()));
                }
            }
        }
        Ok(Detector {
            kind,
            profile,
            shape,
            lam_bar: vec![0.0; m],
            k: 0,
            ones: 0.0,
            rates0: vec![0.0; m],
            rates1: vec![0.0; m],
        })
    }

    pub fn kind(&self) -> &DetectorKind {
        &self.kind
    }

    /// Current `λ̄(k)`.
    pub fn lam_bar(&self) -> &[f64] {
        &self.lam_bar
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Consumes the reported measurements `y'(k)` and decides.
    pub fn step(&mut self, y_prime: &[f64]) -> Result<Decision> {
        let m = self.shape.m;
        if y_prime.len() != m {
            return Err(Error::Config(format!("expected {m} measurements, got {}", y_prime.len())));
        }
        let llrs = y_prime
            .iter()
            .map(|&y| self.profile.pair.llr(y))
            .collect::<Result<Vec<_>>>()?;
        self.k += 1;
        let kf = self.k as f64;
        for (bar, l) in self.lam_bar.iter_mut().zip(llrs) {
            *bar = ((kf - 1.0) / kf) * *bar + l / kf;
        }
        self.ones += y_prime.iter().sum::<f64>();
        self.decide()
    }

    fn decide(&mut self) -> Result<Decision> {
        let total: f64 = self.lam_bar.iter().sum();
        let bayes = Decision::from_bool(total >= 0.0);
        if matches!(
            self.kind,
            DetectorKind::Secure { .. } | DetectorKind::SecureSensors { .. } | DetectorKind::UnknownN { .. }
        ) {
            self.fill_rates();
        }
        match &self.kind {
            DetectorKind::Bayes { chi, subset } => {
                let s: f64 = match subset {
                    Some(idx) => idx.iter().map(|&i| self.lam_bar[i]).sum(),
                    None => total,
                };
                Ok(Decision::from_bool(s >= *chi))
            }
            DetectorKind::Secure { z_s } => {
                let z_s = *z_s;
                let keep = self.shape.benign();
                if min_subset_sum(&mut self.rates0, keep) < z_s {
                    return Ok(Decision::ZERO);
                }
                if min_subset_sum(&mut self.rates1, keep) < z_s {
                    return Ok(Decision::ONE);
                }
                Ok(bayes)
            }
            DetectorKind::SecureSensors { z_s, m_s } => {
                let (z_s, m_s) = (*z_s, *m_s);
                let normal = self.shape.m - m_s;
                let keep = normal - self.shape.n;
                let secure0: f64 = self.rates0[normal..].iter().sum();
                let secure1: f64 = self.rates1[normal..].iter().sum();
                if min_subset_sum(&mut self.rates0[..normal], keep) + secure0 < z_s {
                    return Ok(Decision::ZERO);
                }
                if min_subset_sum(&mut self.rates1[..normal], keep) + secure1 < z_s {
                    return Ok(Decision::ONE);
                }
                Ok(bayes)
            }
            DetectorKind::UnknownN { z_tuple } => {
                self.rates0.sort_unstable_by(f64::total_cmp);
                self.rates1.sort_unstable_by(f64::total_cmp);
                for n_a in (1..=self.shape.n).rev() {
                    let keep = self.shape.m - n_a;
                    let target = z_tuple[n_a];
                    if self.rates0[..keep].iter().sum::<f64>() < target {
                        return Ok(Decision::ZERO);
                    }
                    if self.rates1[..keep].iter().sum::<f64>() < target {
                        return Ok(Decision::ONE);
                    }
                }
                Ok(bayes)
            }
            DetectorKind::Trimmed => {
                let n = self.shape.n;
                let m = self.shape.m;
                let mut sorted = self.lam_bar.clone();
                sorted.sort_unstable_by(f64::total_cmp);
                Ok(Decision::from_bool(sorted[n..m - n].iter().sum::<f64>() >= 0.0))
            }
            DetectorKind::Qom { q_schedule: QSchedule::Explicit(qs) } => {
                let q = *qs.get(self.k - 1).ok_or_else(|| {
                    Error::Config(format!("q schedule has {} entries, reached k = {}", qs.len(), self.k))
                })?;
                Ok(Decision::from_bool(self.ones >= q as f64))
            }
            DetectorKind::Qom { q_schedule: QSchedule::Optimal(_) } => {
                unreachable!("rejected at construction")
            }
        }
    }

    /// Per-sensor `I_0(λ̄_i)` and `I_1(λ̄_i)`. Values drifting past the range of
    /// λ by rounding are clamped to the boundary atom.
    fn fill_rates(&mut self) {
        let (lo, hi) = self.profile.lambda_range;
        for i in 0..self.lam_bar.len() {
            let x = self.lam_bar[i].clamp(lo, hi);
            let (r0, r1) = self.profile.rates(x);
            self.rates0[i] = r0;
            self.rates1[i] = r1;
        }
    }
}

fn check_security_target(z_s: f64, profile: &RateProfile, shape: &NetworkShape) -> Result<()> {
    let cap = shape.honest_margin() as f64 * profile.c;
    if !(z_s >= 0.0 && z_s <= cap + 1e-12) {
        return Err(Error::Config(format!("z_s = {z_s} outside [0, (m-2n)C = {cap}]")));
    }
    Ok(())
}

/// Miss and false-alarm probabilities of the q-out-of-m rule at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QomError {
    pub p_miss: f64,
    pub p_fa: f64,
}

impl QomError {
    pub fn worst(&self) -> f64 {
        self.p_miss.max(self.p_fa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QomOptimum {
    pub q_star: u64,
    pub worst_error: f64,
}

/// `P(lo ≤ Bin(trials, p) ≤ hi)`, summed in log space.
fn binomial_range(trials: u64, p: f64, lo: i64, hi: i64) -> f64 {
    let lo = lo.max(0) as u64;
    if hi < lo as i64 {
        return 0.0;
    }
    let hi = (hi as u64).min(trials);
    if lo == 0 && hi == trials {
        return 1.0;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut acc = f64::NEG_INFINITY;
    for j in lo..=hi {
        let term = ln_binomial(trials, j) + j as f64 * lp + (trials - j) as f64 * lq;
        acc = log_add_exp(acc, term);
    }
    acc.exp().min(1.0)
}

fn binary_probs(profile: &RateProfile) -> Result<(f64, f64)> {
    match profile.pair {
        crate::measures::DistributionPair::Bernoulli { p0, p1 } => Ok((p0, p1)),
        _ => Err(Error::UnsupportedPair),
    }
}

/// Exact error of the q-out-of-m rule at time `k` under the worst-case attack,
/// where the `n` compromised sensors always report the opposite of θ.
///
/// The rule announces 1 iff the count of ones reaches `q_k`, so with
/// `S_θ ~ Bin((m−n)k, p_θ)` counting the benign ones,
/// `p_miss = P(S_1 ≤ q_k − 1)` and `p_fa = P(S_0 ≥ q_k − nk)`.
pub fn qom_exact_error(profile: &RateProfile, shape: &NetworkShape, q_k: u64, k: usize) -> Result<QomError> {
    let (p0, p1) = binary_probs(profile)?;
    let k = k as u64;
    let benign = (shape.m - shape.n) as u64 * k;
    let forged = shape.n as u64 * k;
    let q = q_k as i64;
    Ok(QomError {
        p_miss: binomial_range(benign, p1, 0, q - 1),
        p_fa: binomial_range(benign, p0, q - forged as i64, benign as i64),
    })
}

/// Exact error of the q-out-of-m rule at time `k` without an attacker.
pub fn qom_clean_error(profile: &RateProfile, shape: &NetworkShape, q_k: u64, k: usize) -> Result<QomError> {
    let (p0, p1) = binary_probs(profile)?;
    let total = (shape.m * k) as u64;
    let q = q_k as i64;
    Ok(QomError {
        p_miss: binomial_range(total, p1, 0, q - 1),
        p_fa: binomial_range(total, p0, q, total as i64),
    })
}

/// Threshold minimizing the worst-case error at time `k`, searched over the
/// non-degenerate range `nk < q ≤ (m−n)k`; ties go to the smaller `q`.
pub fn qom_optimize(profile: &RateProfile, shape: &NetworkShape, k: usize) -> Result<QomOptimum> {
    let lo = (shape.n * k) as u64 + 1;
    let hi = (shape.benign() * k) as u64;
    let mut best: Option<QomOptimum> = None;
    for q in lo..=hi.max(lo) {
        let worst = qom_exact_error(profile, shape, q, k)?.worst();
        if best.is_none_or(|b| worst < b.worst_error) {
            best = Some(QomOptimum { q_star: q, worst_error: worst });
        }
    }
    Ok(best.expect("range holds at least one threshold"))
}
