//! Efficiency/security trade-off curves.
//!
//! With `m` sensors of which `n` may be Byzantine, every detector obeys
//! `E ≤ mC`, `S ≤ (m−2n)⁺C`, `S ≤ E`, and `S ≤ h(E)` where
//!
//! ```text
//! h(z) = (m−n) · min{ I_0(I_1⁻¹(z/(m−n))), I_1(I_0⁻¹(z/(m−n))) },  0 < z < (m−n)·D_min
//! ```
//!
//! `h` is decreasing and involutory, so the same curve bounds efficiency given
//! security. All evaluation goes through the numerical rate functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Hypothesis;
use crate::rates::RateProfile;

/// Sensor counts: `m` total, up to `n` compromised, `m_s` secure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub m_s: usize,
}

impl NetworkShape {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        Self::with_secure(m, n, 0)
    }

    pub fn with_secure(m: usize, n: usize, m_s: usize) -> Result<Self> {
        let shape = NetworkShape { m, n, m_s };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("network needs at least one sensor".into()));
        }
        if self.n + self.m_s > self.m {
            return Err(Error::Config(format!(
                "n + m_s = {} exceeds m = {}",
                self.n + self.m_s,
                self.m
            )));
        }
        Ok(())
    }

    /// `(m − 2n)⁺`.
    pub fn honest_margin(&self) -> usize {
        self.m.saturating_sub(2 * self.n)
    }

    /// `m − n`, the number of sensors guaranteed benign.
    pub fn benign(&self) -> usize {
        self.m - self.n
    }
}

/// Caps from the fundamental limits, plus the efficiency-dependent security cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem2Bounds {
    pub eff_cap: f64,
    pub sec_cap: f64,
    pub sec_given_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Caps {
    pub eff_cap: f64,
    pub sec_cap: f64,
}

/// Trade-off curves for a rate profile and a network shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffCurves {
    pub profile: RateProfile,
    pub shape: NetworkShape,
}

impl TradeoffCurves {
    pub fn new(profile: RateProfile, shape: NetworkShape) -> Result<Self> {
        shape.validate()?;
        Ok(TradeoffCurves { profile, shape })
    }

    fn c(&self) -> f64 {
        self.profile.c
    }

    /// `m·C`, the efficiency cap.
    pub fn max_efficiency(&self) -> f64 {
        self.shape.m as f64 * self.c()
    }

    /// `(m−2n)⁺·C`, the security cap.
    pub fn max_security(&self) -> f64 {
        self.shape.honest_margin() as f64 * self.c()
    }

    /// Upper end of the open domain of `h`, `(m−n)·D_min`.
    pub fn h_domain_end(&self) -> f64 {
        self.shape.benign() as f64 * self.profile.dmin
    }

    /// `z ↦ I_0(I_1⁻¹(z))` on `(0, D_min)`.
    pub fn branch0(&self, z: f64) -> Result<f64> {
        Ok(self.profile.rate0(self.profile.inv_rate1(z)?))
    }

    /// `z ↦ I_1(I_0⁻¹(z))` on `(0, D_min)`.
    pub fn branch1(&self, z: f64) -> Result<f64> {
        Ok(self.profile.rate1(self.profile.inv_rate0(z)?))
    }

    /// The trade-off curve `h(z)` on `0 < z < (m−n)·D_min`.
    pub fn h(&self, z: f64) -> Result<f64> {
        let end = self.h_domain_end();
        if !(z > 0.0 && z < end) {
            return Err(Error::range("h: 0 < z < (m-n)*D_min", z));
        }
        let k = self.shape.benign() as f64;
        let u = z / k;
        Ok(k * self.branch0(u)?.min(self.branch1(u)?))
    }

    /// Maximum efficiency given security `z_s ∈ [0, (m−2n)⁺C]`.
    pub fn h_e(&self, z_s: f64) -> Result<f64> {
        if !(z_s >= 0.0 && z_s <= self.max_security()) {
            return Err(Error::range("h_e: 0 <= z_s <= (m-2n)+ C", z_s));
        }
        if z_s == 0.0 {
            return Ok(self.max_efficiency());
        }
        Ok(self.max_efficiency().min(self.h(z_s)?))
    }

    /// Maximum security given efficiency `z_e ≥ 0`. Efficiencies beyond
    /// `(m−n)·D_min` (including the unattainable ones above `mC`) give zero.
    pub fn h_s(&self, z_e: f64) -> Result<f64> {
        if !(z_e >= 0.0) || z_e.is_infinite() {
            return Err(Error::range("h_s: z_e >= 0", z_e));
        }
        if z_e == 0.0 || z_e >= self.h_domain_end() {
            return Ok(0.0);
        }
        Ok(z_e.min(self.max_security()).min(self.h(z_e)?))
    }

    /// Whether `(z_e, z_s)` is an admissible efficiency/security pair.
    pub fn is_admissible(&self, z_e: f64, z_s: f64) -> bool {
        const SLACK: f64 = 1e-9;
        if !(z_s >= 0.0 && z_s <= self.max_security()) || z_e.is_nan() {
            return false;
        }
        if z_s == 0.0 {
            return z_e <= self.max_efficiency() + SLACK;
        }
        match self.h_e(z_s) {
            Ok(cap) => z_e <= cap + SLACK,
            Err(_) => false,
        }
    }

    pub fn theorem2_bounds(&self, z_e: f64) -> Result<Theorem2Bounds> {
        if !(z_e >= 0.0) {
            return Err(Error::range("theorem2_bounds: z_e >= 0", z_e));
        }
        let sec_given_eff = if z_e > 0.0 && z_e < self.h_domain_end() { self.h(z_e)? } else { 0.0 };
        Ok(Theorem2Bounds {
            eff_cap: self.max_efficiency(),
            sec_cap: self.max_security(),
            sec_given_eff,
        })
    }

    /// Caps when `m_s` of the sensors cannot be compromised.
    pub fn secure_sensor_caps(&self) -> Caps {
        let s = self.shape;
        let factor = s.honest_margin().max(s.m_s) as f64;
        Caps { eff_cap: self.max_efficiency(), sec_cap: factor * self.c() }
    }

    /// Pairwise trade-off for an unknown number of compromised sensors:
    /// performance with `n_a` attackers given performance `z` with `n_a'`.
    pub fn h_tilde(&self, n_a: usize, n_a_prime: usize, z: f64) -> Result<f64> {
        let n = self.shape.n;
        if n_a > n || n_a_prime > n {
            return Err(Error::Config(format!(
                "h_tilde: attacker counts ({n_a}, {n_a_prime}) exceed n = {n}"
            )));
        }
        if !(z > 0.0) {
            return Err(Error::range("h_tilde: z > 0", z));
        }
        let rest = self.shape.m as isize - (n_a + n_a_prime) as isize;
        if rest <= 0 {
            return Ok(0.0);
        }
        let k = rest as f64;
        let u = z / k;
        let b0 = if u < self.profile.d01 { self.branch0(u)? } else { 0.0 };
        let b1 = if u < self.profile.d10 { self.branch1(u)? } else { 0.0 };
        Ok(k * b0.min(b1))
    }

    /// Checks an `(n+1)`-tuple of per-attacker-count performance targets.
    /// Inequalities are weak, with `1e-9` slack; a zero target imposes no
    /// pairwise constraint on the others.
    pub fn is_admissible_tuple(&self, z: &[f64]) -> bool {
        const SLACK: f64 = 1e-9;
        let n = self.shape.n;
        if z.len() != n + 1 || z.iter().any(|v| !(*v >= 0.0)) {
            return false;
        }
        for (na, &zn) in z.iter().enumerate() {
            let cap = self.shape.m.saturating_sub(2 * na) as f64 * self.c();
            if zn > cap + SLACK {
                return false;
            }
            for (nb, &zb) in z.iter().enumerate() {
                if zb == 0.0 {
                    continue;
                }
                match self.h_tilde(na, nb, zb) {
                    Ok(bound) if zn <= bound + SLACK => {}
                    _ => return false,
                }
            }
        }
        true
    }
}

/// Whether `I_0'(0) = −I_1'(0)` (within `1e-8`), the condition under which
/// maximal security and maximal efficiency are simultaneously achievable.
pub fn is_symmetric_case(profile: &RateProfile) -> bool {
    match (
        profile.rate_derivative(Hypothesis::H0, 0.0),
        profile.rate_derivative(Hypothesis::H1, 0.0),
    ) {
        (Ok(a), Ok(b)) => (a + b).abs() <= 1e-8,
        _ => false,
    }
}

/// `p·I_1(I_0⁻¹(z/p))`: the least total `I_1` cost of `p` coordinates whose
/// total `I_0` cost is at most `z`.
pub fn lemma2_value(profile: &RateProfile, p: usize, z: f64) -> Result<f64> {
    let pf = p as f64;
    if p == 0 || !(z > 0.0 && z <= pf * profile.d10) {
        return Err(Error::range("lemma2_value: 0 < z <= p*D(1||0)", z));
    }
    Ok(pf * profile.rate1(profile.inv_rate0(z / pf)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DistributionPair;

    fn reference_setup() -> TradeoffCurves {
        let p = RateProfile::build(DistributionPair::bernoulli(0.02, 0.6).unwrap()).unwrap();
        TradeoffCurves::new(p, NetworkShape::new(9, 2).unwrap()).unwrap()
    }

    fn gauss(m: usize, n: usize) -> TradeoffCurves {
        let p = RateProfile::build(DistributionPair::gaussian_shift(1.0, 0.0, 1.0).unwrap()).unwrap();
        TradeoffCurves::new(p, NetworkShape::new(m, n).unwrap()).unwrap()
    }

    #[test]
    fn shape_validation() {
        assert!(NetworkShape::with_secure(5, 3, 3).is_err());
        assert!(NetworkShape::new(0, 0).is_err());
        assert_eq!(NetworkShape::new(4, 3).unwrap().honest_margin(), 0);
    }

    #[test]
    fn fixed_point_at_benign_chernoff() {
        let t = reference_setup();
        let z = 7.0 * t.profile.c;
        assert!((t.h(z).unwrap() - z).abs() < 1e-7);
    }

    #[test]
    fn involution_spot_values() {
        let t = reference_setup();
        for z in [0.5, 1.0, 2.0] {
            let hz = t.h(z).unwrap();
            assert!((t.h(hz).unwrap() - z).abs() < 1e-6, "z={z}");
        }
    }

    #[test]
    fn table_efficiency_at_chosen_security() {
        let t = reference_setup();
        assert!(t.h(1.4282).unwrap() >= 2.877);
        assert!((t.h_e(1.4282).unwrap() - 2.8777).abs() < 1e-3);
        assert!((t.h_e(0.0).unwrap() - 2.8777).abs() < 1e-3);
        assert!((t.max_security() - 1.5987).abs() < 1e-3);
    }

    #[test]
    fn h_domain_errors() {
        let t = reference_setup();
        assert!(t.h(0.0).is_err());
        assert!(t.h(t.h_domain_end()).is_err());
        assert!(t.h_e(t.max_security() + 1e-6).is_err());
        assert!(t.h_e(-1e-6).is_err());
    }

    #[test]
    fn h_s_cases() {
        let t = reference_setup();
        assert_eq!(t.h_s(0.0).unwrap(), 0.0);
        assert_eq!(t.h_s(t.h_domain_end()).unwrap(), 0.0);
        assert_eq!(t.h_s(t.h_domain_end() + 3.0).unwrap(), 0.0);
        let z: f64 = 1.0;
        let expect = z.min(t.max_security()).min(t.h(z).unwrap());
        assert_eq!(t.h_s(z).unwrap(), expect);
        assert!(t.h_s(-1.0).is_err());
    }

    #[test]
    fn admissibility() {
        let t = reference_setup();
        assert!(t.is_admissible(t.max_efficiency(), 0.0));
        assert!(!t.is_admissible(t.max_efficiency() + 1e-6, 0.0));
        assert!(!t.is_admissible(0.1, t.max_security() + 1e-6));
        assert!(t.is_admissible(2.0, 1.4282));
        let g = gauss(9, 2);
        assert!(g.is_admissible(g.max_efficiency(), g.max_security()));
    }

    #[test]
    fn theorem2() {
        let t = reference_setup();
        let b = t.theorem2_bounds(2.0).unwrap();
        assert!((b.sec_cap - 1.5987).abs() < 1e-3);
        assert!((b.sec_given_eff - t.h(2.0).unwrap()).abs() < 1e-12);
        assert_eq!(t.theorem2_bounds(t.h_domain_end()).unwrap().sec_given_eff, 0.0);
        let p = t.profile;
        let crowded = TradeoffCurves::new(p, NetworkShape::new(4, 2).unwrap()).unwrap();
        assert_eq!(crowded.theorem2_bounds(1.0).unwrap().sec_cap, 0.0);
    }

    #[test]
    fn secure_sensors() {
        let t = reference_setup();
        assert_eq!(t.secure_sensor_caps().sec_cap, t.theorem2_bounds(1.0).unwrap().sec_cap);
        let p = t.profile;
        let s = TradeoffCurves::new(p, NetworkShape::with_secure(9, 4, 3).unwrap()).unwrap();
        assert!((s.secure_sensor_caps().sec_cap - 3.0 * p.c).abs() < 1e-15);
        assert!((s.secure_sensor_caps().sec_cap - 0.959).abs() < 1e-3);
        let no_gain = TradeoffCurves::new(p, NetworkShape::with_secure(9, 2, 2).unwrap()).unwrap();
        assert!((no_gain.secure_sensor_caps().sec_cap - 5.0 * p.c).abs() < 1e-15);
    }

    #[test]
    fn h_tilde_specializations() {
        let t = reference_setup();
        // n_a + n_a' = n reproduces h
        for z in [0.4, 1.2, 3.0] {
            assert!((t.h_tilde(1, 1, z).unwrap() - t.h(z).unwrap()).abs() < 1e-12);
            assert!((t.h_tilde(2, 0, z).unwrap() - t.h(z).unwrap()).abs() < 1e-12);
        }
        // n_a = n_a' = n: the same formula on m − 2n sensors
        let p = t.profile;
        let five_benign = TradeoffCurves::new(p, NetworkShape::new(6, 1).unwrap()).unwrap();
        for z in [0.3, 1.0, 3.5] {
            assert!((t.h_tilde(2, 2, z).unwrap() - five_benign.h(z).unwrap()).abs() < 1e-12);
        }
        let cut = 5.0 * p.d01.max(p.d10);
        assert_eq!(t.h_tilde(2, 2, cut).unwrap(), 0.0);
        assert_eq!(t.h_tilde(2, 2, cut * 2.0).unwrap(), 0.0);
        assert!(t.h_tilde(1, 1, 0.0).is_err());
        assert!(t.h_tilde(3, 1, 1.0).is_err());
    }

    #[test]
    fn tuple_admissibility() {
        let t = reference_setup();
        let c = t.profile.c;
        assert!(t.is_admissible_tuple(&[2.0, 1.0, 0.8]));
        assert!(t.is_admissible_tuple(&[t.h_tilde(0, 2, 1.5).unwrap(), 0.0, 1.5]));
        assert!(!t.is_admissible_tuple(&[9.0 * c, 0.0, 1.4282]));
        assert!(t.is_admissible_tuple(&[0.0, 0.0, 0.0]));
        assert!(!t.is_admissible_tuple(&[9.0 * c, 5.0 * c, 5.0 * c + 0.01]));
        assert!(!t.is_admissible_tuple(&[0.0, 0.0]));
    }

    #[test]
    fn symmetric_cases() {
        assert!(is_symmetric_case(&gauss(3, 1).profile));
        let g2 = RateProfile::build(DistributionPair::gaussian_shift(-2.5, 1.0, 0.7).unwrap()).unwrap();
        assert!(is_symmetric_case(&g2));
        let flip = RateProfile::build(DistributionPair::bernoulli(0.2, 0.8).unwrap()).unwrap();
        assert!(is_symmetric_case(&flip));
        assert!(!is_symmetric_case(&reference_setup().profile));
    }

    #[test]
    fn symmetric_pair_reaches_both_caps() {
        let g = gauss(9, 2);
        assert!(g.h(g.max_security()).unwrap() >= g.max_efficiency() - 1e-9);
    }

    #[test]
    fn lemma2_anchor_values() {
        let p = reference_setup().profile;
        assert!((lemma2_value(&p, 3, 3.0 * p.c).unwrap() - 3.0 * p.c).abs() < 1e-8);
        let small = lemma2_value(&p, 2, 1e-9).unwrap();
        assert!((small - 2.0 * p.d01).abs() < 1e-3);
        assert!(lemma2_value(&p, 2, 0.0).is_err());
        assert!(lemma2_value(&p, 2, 2.0 * p.d10 + 0.1).is_err());
    }
}
