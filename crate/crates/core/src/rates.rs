//! Rate functions of the log-likelihood ratio.
//!
//! `I_j(x) = sup_w { w x − log M_j(w) }` is evaluated at its stationary point:
//! the maximizing tilt `φ_j(x)` solves `ψ_j(w) = x` where `ψ_j` is the
//! (strictly increasing) derivative of `log M_j`. Then `I_j'(x) = φ_j(x)`.
//!
//! Because `M_1(w) = M_0(w + 1)`, the two transforms are tied by
//! `φ_1 = φ_0 − 1` and `I_1(x) = I_0(x) − x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DistributionPair, Hypothesis};
use crate::solve;

/// KL divergences below this are treated as `ν = μ`.
pub const DEGENERATE_KL: f64 = 1e-12;

/// Solver tolerances used by a [`RateProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute tolerance on tilts `w`.
    pub tilt: f64,
    /// Residual tolerance `|I_j(x) − z|` for the branch inverses.
    pub inverse: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tilt: 1e-12, inverse: 1e-10 }
    }
}

/// Everything derived from one [`DistributionPair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateProfile {
    pub pair: DistributionPair,
    /// `D(0‖1) = E_ν[−λ]`.
    pub d01: f64,
    /// `D(1‖0) = E_μ[λ]`.
    pub d10: f64,
    pub dmin: f64,
    /// Chernoff information `C = I_0(0) = I_1(0) = −min_w log M_0(w)`.
    pub c: f64,
    /// Minimizer of `log M_0` on `(0, 1)`.
    pub wstar: f64,
    /// Closed range of λ; the rate functions are `+∞` outside it.
    pub lambda_range: (f64, f64),
    #[serde(skip)]
    pub tol: Tolerances,
}

impl RateProfile {
    pub fn build(pair: DistributionPair) -> Result<Self> {
        Self::with_tolerances(pair, Tolerances::default())
    }

    pub fn with_tolerances(pair: DistributionPair, tol: Tolerances) -> Result<Self> {
        let d01 = -pair.log_mgf_slope(Hypothesis::H0, 0.0);
        let d10 = pair.log_mgf_slope(Hypothesis::H0, 1.0);
        if !(d01 > DEGENERATE_KL && d10 > DEGENERATE_KL) {
            return Err(Error::DegeneratePair { d01, d10 });
        }
        let wstar = solve::increasing_root(
            |w| {
                (
                    pair.log_mgf_slope(Hypothesis::H0, w),
                    pair.log_mgf_curvature(Hypothesis::H0, w),
                )
            },
            0.0,
            1.0,
            tol.tilt,
            0.0,
        )?;
        let c = -pair.log_mgf(Hypothesis::H0, wstar);
        Ok(RateProfile {
            pair,
            d01,
            d10,
            dmin: d01.min(d10),
            c,
            wstar,
            lambda_range: pair.llr_range(),
            tol,
        })
    }

    fn in_open_range(&self, x: f64) -> bool {
        x > self.lambda_range.0 && x < self.lambda_range.1
    }

    /// Maximizing tilt `φ_j(x)` for `x` strictly inside the range of λ.
    pub fn tilt(&self, j: Hypothesis, x: f64) -> Option<f64> {
        if !self.in_open_range(x) {
            return None;
        }
        self.pair.tilt_for_mean(j, x).or_else(|| self.tilt_by_root(j, x))
    }

    /// Same as [`tilt`](Self::tilt) but always through root finding on
    /// `ψ_j(w) = x`, ignoring any closed form the pair offers.
    pub fn tilt_by_root(&self, j: Hypothesis, x: f64) -> Option<f64> {
        if !self.in_open_range(x) {
            return None;
        }
        let pair = self.pair;
        let f = |w: f64| (pair.log_mgf_slope(j, w) - x, pair.log_mgf_curvature(j, w));
        let lo = if f(0.0).0 <= 0.0 { 0.0 } else { solve::expand_until(0.0, -1.0, |w| f(w).0 <= 0.0).ok()? };
        let hi = if f(0.0).0 >= 0.0 { 0.0 } else { solve::expand_until(0.0, 1.0, |w| f(w).0 >= 0.0).ok()? };
        solve::increasing_root(f, lo, hi, self.tol.tilt, 0.0).ok()
    }

    /// `I_j(x)`; `+∞` outside the range of λ, `−log P_j(λ = x)` at an atom on
    /// the boundary of the range.
    pub fn rate(&self, j: Hypothesis, x: f64) -> f64 {
        let (lo, hi) = self.lambda_range;
        if x.is_nan() {
            return f64::NAN;
        }
        if x < lo || x > hi {
            return f64::INFINITY;
        }
        if x == lo || x == hi {
            let mass = self.pair.llr_atom_mass(j, x);
            return if mass > 0.0 { -mass.ln() } else { f64::INFINITY };
        }
        match self.tilt(j, x) {
            Some(w) => (w * x - self.pair.log_mgf(j, w)).max(0.0),
            None => f64::INFINITY,
        }
    }

    pub fn rate0(&self, x: f64) -> f64 {
        self.rate(Hypothesis::H0, x)
    }

    pub fn rate1(&self, x: f64) -> f64 {
        self.rate(Hypothesis::H1, x)
    }

    /// `(I_0(x), I_1(x))` from a single tilt solve.
    pub fn rates(&self, x: f64) -> (f64, f64) {
        let r0 = self.rate0(x);
        let r1 = if r0.is_finite() { (r0 - x).max(0.0) } else { f64::INFINITY };
        (r0, r1)
    }

    /// Largest finite value of `I_0` on its increasing branch, `I_0(λ_max)`.
    pub fn rate0_branch_sup(&self) -> f64 {
        self.rate0(self.lambda_range.1)
    }

    /// Largest finite value of `I_1` on its decreasing branch, `I_1(λ_min)`.
    pub fn rate1_branch_sup(&self) -> f64 {
        self.rate1(self.lambda_range.0)
    }

    /// `I_0⁻¹(z) = max{x : I_0(x) = z}`, the root on `x ≥ −D(0‖1)`.
    pub fn inv_rate0(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::range("inv_rate0: z >= 0", z));
        }
        if z == 0.0 {
            return Ok(-self.d01);
        }
        let sup = self.rate0_branch_sup();
        if z > sup {
            return Err(Error::range("inv_rate0: z <= I0(lambda_max)", z));
        }
        if z == sup {
            return Ok(self.lambda_range.1);
        }
        let lo = -self.d01;
        let hi = if self.lambda_range.1.is_finite() {
            self.lambda_range.1
        } else {
            solve::expand_until(lo, 1.0, |x| self.rate0(x) >= z)?
        };
        solve::increasing_root(
            |x| (self.rate0(x) - z, self.tilt(Hypothesis::H0, x).unwrap_or(f64::NAN)),
            lo,
            hi,
            1e-15,
            self.tol.inverse,
        )
    }

    /// `I_1⁻¹(z) = min{x : I_1(x) = z}`, the root on `x ≤ D(1‖0)`.
    pub fn inv_rate1(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::range("inv_rate1: z >= 0", z));
        }
        if z == 0.0 {
            return Ok(self.d10);
        }
        let sup = self.rate1_branch_sup();
        if z > sup {
            return Err(Error::range("inv_rate1: z <= I1(lambda_min)", z));
        }
        if z == sup {
            return Ok(self.lambda_range.0);
        }
        let hi = self.d10;
        let lo = if self.lambda_range.0.is_finite() {
            self.lambda_range.0
        } else {
            solve::expand_until(hi, -1.0, |x| self.rate1(x) >= z)?
        };
        // z − I_1(x) is increasing on the decreasing branch.
        solve::increasing_root(
            |x| (z - self.rate1(x), -self.tilt(Hypothesis::H1, x).unwrap_or(f64::NAN)),
            lo,
            hi,
            1e-15,
            self.tol.inverse,
        )
    }

    pub fn inv_rate(&self, j: Hypothesis, z: f64) -> Result<f64> {
        match j {
            Hypothesis::H0 => self.inv_rate0(z),
            Hypothesis::H1 => self.inv_rate1(z),
        }
    }

    /// `I_j'(x) = φ_j(x)` on the interior of the range of λ.
    pub fn rate_derivative(&self, j: Hypothesis, x: f64) -> Result<f64> {
        self.tilt(j, x).ok_or(Error::range("rate_derivative: x in interior of lambda range", x))
    }
}
