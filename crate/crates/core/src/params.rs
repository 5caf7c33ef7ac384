//! Fixed hardware/channel constants and the bound-convention switches.

use crate::channel::DetectorParams;
use crate::error::{Error, Result};

/// Constants held fixed across an optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Bob's internal transmittance.
    pub eta_b: f64,
    /// Fiber loss in dB/km.
    pub beta: f64,
    /// Background yield per pulse.
    pub y0: f64,
    /// Intrinsic detector error rate.
    pub e_det: f64,
    /// Error rate of background counts.
    pub e0: f64,
    /// Error rate of the vacuum class.
    pub e0_vacuum: f64,
    /// Mean photon number of Bob's bright pulses.
    pub m_b: f64,
    /// Beam-splitter fraction routed to the encoder.
    pub q_a: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
    /// Total security parameter.
    pub eps_total: f64,
    /// Error-correction failure probability (not optimized).
    pub eps_ec: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            eta_b: 0.045,
            beta: 0.21,
            y0: 1.7e-6,
            e_det: 0.033,
            e0: 0.5,
            e0_vacuum: 0.5,
            m_b: 1e6,
            q_a: 0.01,
            f_ec: 1.22,
            eps_total: 1e-9,
            eps_ec: 1e-10,
        }
    }
}

fn check(name: &'static str, value: f64, ok: bool, range: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        check(
            "eta_B",
            self.eta_b,
            self.eta_b > 0.0 && self.eta_b <= 1.0,
            "(0, 1]",
        )?;
        check(
            "beta",
            self.beta,
            self.beta >= 0.0 && self.beta.is_finite(),
            "[0, inf)",
        )?;
        check("Y_0", self.y0, (0.0..1.0).contains(&self.y0), "[0, 1)")?;
        check(
            "e_det",
            self.e_det,
            (0.0..=1.0).contains(&self.e_det),
            "[0, 1]",
        )?;
        check("E_0", self.e0, (0.0..=1.0).contains(&self.e0), "[0, 1]")?;
        check(
            "E_0_V",
            self.e0_vacuum,
            (0.0..=1.0).contains(&self.e0_vacuum),
            "[0, 1]",
        )?;
        check(
            "M_B",
            self.m_b,
            self.m_b > 0.0 && self.m_b.is_finite(),
            "(0, inf)",
        )?;
        check("q_A", self.q_a, self.q_a > 0.0 && self.q_a < 1.0, "(0, 1)")?;
        check(
            "f",
            self.f_ec,
            self.f_ec >= 1.0 && self.f_ec.is_finite(),
            "[1, inf)",
        )?;
        check(
            "eps",
            self.eps_total,
            self.eps_total > 0.0 && self.eps_total < 1.0,
            "(0, 1)",
        )?;
        check(
            "eps_EC",
            self.eps_ec,
            self.eps_ec > 0.0 && self.eps_ec < self.eps_total,
            "(0, eps)",
        )?;
        Ok(())
    }

    pub fn detector(&self) -> DetectorParams {
        DetectorParams {
            eta_b: self.eta_b,
            y0: self.y0,
            e_det: self.e_det,
            e0: self.e0,
            e0_vacuum: self.e0_vacuum,
            f_ec: self.f_ec,
        }
    }

    /// Budget left for the optimized components once `eps_EC` is set aside.
    pub fn eps_free(&self) -> f64 {
        self.eps_total - self.eps_ec
    }

    /// `M_A = M_B 10^(-beta L / 10)`.
    pub fn photons_at_alice(&self, distance_km: f64) -> f64 {
        self.m_b * 10f64.powf(-self.beta * distance_km / 10.0)
    }
}

/// Which one-photon probability enters `Q1u = Qu + P0 + P1 - 1` without decoys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SinglePhotonTerm {
    /// Lower bound on P0 with the upper bound on P1, as written in the rate formula.
    #[default]
    UpperP1,
    /// Lower bounds on both P0 and P1.
    LowerP1,
}

/// How the finite-size untagged lower gain is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluctuationForm {
    /// Gain bound with `P_u(N) = P_u(inf) - xi` substituted.
    #[default]
    Composed,
    /// `max(0, (Q - P_u(inf) - xi) / (1 - P_u(inf) - xi))`.
    Printed,
}

/// Coefficient of the vacuum gain in the decoy single-photon estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VacuumFactor {
    /// `P0S_lo * P2D_lo - P0D_hi * P0S_lo`.
    Printed,
    /// `P0S_lo * P2D_lo - P0D_hi * P2S_hi`, the coefficient left after
    /// eliminating the vacuum yield from the signal and decoy equations.
    #[default]
    Symmetric,
}

/// Which bound on `P1^S` multiplies the decoy single-photon estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecoyPrefactor {
    #[default]
    Lower,
    Upper,
}

/// Argument of the untagged-probability error function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErfArgument {
    /// `delta * sqrt(M_A (1 - q_A) / 2)`.
    #[default]
    HalfUnderRoot,
    /// `delta * sqrt(M_A (1 - q_A)) / 2`.
    HalfOutsideRoot,
}

/// Whether the channel transmittance multiplies the mean photon number in the gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainModel {
    /// `Q = Y0 + 1 - exp(-mu eta)`.
    #[default]
    WithTransmittance,
    /// `Q = Y0 + 1 - exp(-mu)`.
    WithoutTransmittance,
}

/// Sifting factor used in the finite-key rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SiftingFactor {
    /// `n / N_B`: raw-key bits per detection, so sampled bits are paid for.
    #[default]
    RawKeyFraction,
    /// Constant 1/2.
    Half,
}

/// Switches between alternative readings of the bound formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Conventions {
    pub single_photon: SinglePhotonTerm,
    pub fluctuation: FluctuationForm,
    pub vacuum_factor: VacuumFactor,
    pub decoy_prefactor: DecoyPrefactor,
    pub erf_argument: ErfArgument,
    pub gain_model: GainModel,
    pub sifting: SiftingFactor,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let p = PhysicalParams::default();
        assert_eq!(p.eta_b, 0.045);
        assert_eq!(p.beta, 0.21);
        assert_eq!(p.y0, 1.7e-6);
        assert_eq!(p.e_det, 0.033);
        assert_eq!(p.m_b, 1e6);
        assert_eq!(p.q_a, 0.01);
        assert_eq!(p.f_ec, 1.22);
        assert_eq!(p.eps_ec, 1e-10);
        assert_eq!(p.eps_total, 1e-9);
        p.validate().unwrap();
        assert!((p.eps_free() - 9e-10).abs() < 1e-24);
    }

    #[test]
    fn validation_names_the_field() {
        let p = PhysicalParams {
            q_a: 1.5,
            ..Default::default()
        };
        match p.validate() {
            Err(Error::OutOfRange { name, .. }) => assert_eq!(name, "q_A"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn photons_at_alice_decays_one_decade_per_ten_over_beta() {
        let p = PhysicalParams::default();
        assert_eq!(p.photons_at_alice(0.0), 1e6);
        let l = 10.0 / p.beta;
        assert!((p.photons_at_alice(l) - 1e5).abs() < 1e-6);
    }
}
