//! The untrusted source as seen through Alice's passive monitor.
//!
//! Alice keeps only pulses whose input photon number lies in the window
//! `[(1-delta) M_A, (1+delta) M_A]`. For those pulses the output photon-number
//! distribution is enveloped by binomial masses evaluated at the two window
//! edges. The passive beam-splitter arrangement is analysed through its active
//! equivalent, which amounts to using `lambda' = lambda q_A / (1 - q_A)` in the
//! envelopes.

use crate::error::{Error, Result};
use crate::numerics::{deviation_xi, erf, log_generalized_binomial, Probability};
use crate::params::ErfArgument;

/// Source, channel and attenuator settings for one pulse class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceConfig {
    pub m_b: f64,
    pub q_a: f64,
    /// dB/km
    pub beta: f64,
    /// km
    pub distance_km: f64,
    /// Half-width of the untagged window, relative to `M_A`.
    pub delta: f64,
    /// Alice's internal transmittance for this class.
    pub lambda: f64,
}

impl SourceConfig {
    pub fn new(
        m_b: f64,
        q_a: f64,
        beta: f64,
        distance_km: f64,
        delta: f64,
        lambda: f64,
    ) -> Result<Self> {
        let cfg = SourceConfig {
            m_b,
            q_a,
            beta,
            distance_km,
            delta,
            lambda,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, range| Err(Error::OutOfRange { name, value, range });
        if !(self.m_b > 0.0 && self.m_b.is_finite()) {
            return bad("M_B", self.m_b, "(0, inf)");
        }
        if !(self.q_a > 0.0 && self.q_a < 1.0) {
            return bad("q_A", self.q_a, "(0, 1)");
        }
        if !(self.beta >= 0.0) {
            return bad("beta", self.beta, "[0, inf)");
        }
        if !(self.distance_km >= 0.0 && self.distance_km.is_finite()) {
            return bad("L", self.distance_km, "[0, inf)");
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return bad("delta", self.delta, "[0, 1)");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda", self.lambda, "[0, 1]");
        }
        if self.lambda_prime() > 1.0 {
            return bad("lambda'", self.lambda_prime(), "[0, 1]");
        }
        Ok(())
    }

    /// Mean photon number entering Alice's device, `M_B 10^(-beta L/10)`.
    pub fn photons_at_alice(&self) -> f64 {
        self.m_b * 10f64.powf(-self.beta * self.distance_km / 10.0)
    }

    /// Transmittance of the equivalent active arrangement, `lambda q_A / (1 - q_A)`.
    pub fn lambda_prime(&self) -> f64 {
        self.lambda * self.q_a / (1.0 - self.q_a)
    }

    /// `(1+delta) M_A lambda'`, which must stay below one for the envelopes to hold.
    pub fn window_load(&self) -> f64 {
        (1.0 + self.delta) * self.photons_at_alice() * self.lambda_prime()
    }

    pub fn window_satisfied(&self) -> bool {
        self.window_load() < 1.0
    }

    /// Mean photon number sent to Bob, `mu = M_A lambda q_A`.
    pub fn mean_output_intensity(&self) -> f64 {
        self.photons_at_alice() * self.lambda * self.q_a
    }

    /// Envelopes for this class; fails if the window condition does not hold.
    pub fn photon_bounds(&self) -> Result<PhotonBounds> {
        let load = self.window_load();
        if !(load < 1.0) {
            return Err(Error::WindowConditionViolated(load));
        }
        Ok(PhotonBounds {
            photons_at_alice: self.photons_at_alice(),
            delta: self.delta,
            lambda_prime: self.lambda_prime(),
        })
    }

    pub fn photon_bound_upper(&self, n: u64) -> Result<Probability> {
        Ok(self.photon_bounds()?.upper(n))
    }

    pub fn photon_bound_lower(&self, n: u64) -> Result<Probability> {
        Ok(self.photon_bounds()?.lower(n))
    }

    fn erf_argument(&self, form: ErfArgument) -> f64 {
        let spread = self.photons_at_alice() * (1.0 - self.q_a);
        match form {
            ErfArgument::HalfUnderRoot => self.delta * (spread / 2.0).sqrt(),
            ErfArgument::HalfOutsideRoot => self.delta * spread.sqrt() / 2.0,
        }
    }

    /// Probability that a pulse lands in the untagged window, asymptotically.
    pub fn untagged_probability_infinite(&self, form: ErfArgument) -> Probability {
        Probability::saturating(erf(self.erf_argument(form)))
    }

    /// Tagged complement `erfc(..)` of [`untagged_probability_infinite`](Self::untagged_probability_infinite).
    pub fn tagged_probability_infinite(&self, form: ErfArgument) -> Probability {
        Probability::saturating(crate::numerics::erfc(self.erf_argument(form)))
    }

    /// `max(0, P_u(inf) - xi(eps_u, N))`.
    pub fn untagged_probability_finite(
        &self,
        form: ErfArgument,
        epsilon_u: f64,
        pulses: f64,
    ) -> Result<Probability> {
        let xi = deviation_xi(epsilon_u, pulses)?;
        let p = self.untagged_probability_infinite(form).value();
        Ok(Probability::saturating(p - xi))
    }
}

/// Upper and lower envelopes of the output photon-number distribution of
/// untagged pulses.
///
/// Values are computed on demand for each `n`; only `n <= 2` is used by the rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonBounds {
    photons_at_alice: f64,
    delta: f64,
    lambda_prime: f64,
}

impl PhotonBounds {
    /// Builds envelopes directly from `M_A`, `delta` and `lambda'`.
    pub fn from_parts(photons_at_alice: f64, delta: f64, lambda_prime: f64) -> Result<Self> {
        let load = (1.0 + delta) * photons_at_alice * lambda_prime;
        if !(load < 1.0) {
            return Err(Error::WindowConditionViolated(load));
        }
        Ok(PhotonBounds {
            photons_at_alice,
            delta,
            lambda_prime,
        })
    }

    pub fn photons_at_alice(&self) -> f64 {
        self.photons_at_alice
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lambda_prime(&self) -> f64 {
        self.lambda_prime
    }

    /// `((1-delta) M_A, (1+delta) M_A)`.
    pub fn window(&self) -> (f64, f64) {
        (
            (1.0 - self.delta) * self.photons_at_alice,
            (1.0 + self.delta) * self.photons_at_alice,
        )
    }

    // log of C(trials, n) p^n (1-p)^(trials-n), zero past the edge
    fn binomial_mass(&self, trials: f64, n: u64) -> f64 {
        let nf = n as f64;
        if nf > trials {
            return 0.0;
        }
        let p = self.lambda_prime;
        if p == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let log_mass =
            log_generalized_binomial(trials, n) + nf * p.ln() + (trials - nf) * (-p).ln_1p();
        log_mass.exp()
    }

    fn vacuum(&self, trials: f64) -> f64 {
        (trials * (-self.lambda_prime).ln_1p()).exp()
    }

    /// Upper envelope `P_n` (bar).
    pub fn upper(&self, n: u64) -> Probability {
        let (lo, hi) = self.window();
        let v = if n == 0 {
            self.vacuum(lo)
        } else {
            self.binomial_mass(hi, n)
        };
        Probability::saturating(v)
    }

    /// Lower envelope `P_n` (underbar).
    pub fn lower(&self, n: u64) -> Probability {
        let (lo, hi) = self.window();
        let v = if n == 0 {
            self.vacuum(hi)
        } else {
            self.binomial_mass(lo, n)
        };
        Probability::saturating(v)
    }
}
