//! Secure key rates for the four scenarios and the bounds they are built from.
//!
//! Evaluators never clamp the final rate: a non-positive `rate` means no
//! secure key at that point, and the optimizer treats it as such.

use std::fmt;
use std::str::FromStr;

use crate::channel::{channel_transmittance, gain_and_qber, vacuum_observables, Observables};
use crate::error::{Error, Result};
use crate::numerics::{binary_entropy, deviation_xi, ln_gamma, Probability};
use crate::params::{
    Conventions, DecoyPrefactor, FluctuationForm, GainModel, PhysicalParams, SiftingFactor,
    SinglePhotonTerm, VacuumFactor,
};
use crate::source::{PhotonBounds, SourceConfig};

/// BB84 basis-agreement probability.
pub const SIFTING: f64 = 0.5;

/// Signal probability used by the infinite-key decoy rate.
pub const RANDOM_SIGNAL_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    NoDecoyInfinite,
    NoDecoyFinite,
    DecoyInfinite,
    DecoyFinite,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::NoDecoyInfinite,
        Scenario::NoDecoyFinite,
        Scenario::DecoyInfinite,
        Scenario::DecoyFinite,
    ];

    pub fn is_finite(self) -> bool {
        matches!(self, Scenario::NoDecoyFinite | Scenario::DecoyFinite)
    }

    pub fn uses_decoys(self) -> bool {
        matches!(self, Scenario::DecoyInfinite | Scenario::DecoyFinite)
    }

    /// The same protocol with the other key-length regime.
    pub fn with_finite(self, finite: bool) -> Scenario {
        match (self.uses_decoys(), finite) {
            (false, false) => Scenario::NoDecoyInfinite,
            (false, true) => Scenario::NoDecoyFinite,
            (true, false) => Scenario::DecoyInfinite,
            (true, true) => Scenario::DecoyFinite,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Scenario::NoDecoyInfinite => "no-decoy-infinite",
            Scenario::NoDecoyFinite => "no-decoy-finite",
            Scenario::DecoyInfinite => "decoy-infinite",
            Scenario::DecoyFinite => "decoy-finite",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.token() == norm || sc.token().replace('-', "") == norm)
            .ok_or_else(|| Error::InvalidPoint(format!("unknown scenario '{s}'")))
    }
}

/// Probabilities of sending a signal, decoy or vacuum pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbabilities {
    pub signal: f64,
    pub decoy: f64,
    pub vacuum: f64,
}

impl ClassProbabilities {
    pub const SIGNAL_ONLY: ClassProbabilities = ClassProbabilities {
        signal: 1.0,
        decoy: 0.0,
        vacuum: 0.0,
    };

    /// Signals with probability 1/2, decoy and vacuum sharing the rest.
    pub const RANDOM: ClassProbabilities = ClassProbabilities {
        signal: RANDOM_SIGNAL_PROBABILITY,
        decoy: 0.25,
        vacuum: 0.25,
    };
}

/// Split of the total security parameter.
///
/// `untagged_decoy` and `untagged_vacuum` are zero in the no-decoy scenarios;
/// all components are zero in the infinite-key scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorBudget {
    pub privacy_amplification: f64,
    pub error_correction: f64,
    pub smoothing: f64,
    pub untagged_signal: f64,
    pub untagged_decoy: f64,
    pub untagged_vacuum: f64,
    pub qber: f64,
}

impl ErrorBudget {
    /// Components that are free in the given scenario, in reporting order.
    pub fn free_components(&self, scenario: Scenario) -> Vec<f64> {
        match scenario {
            Scenario::NoDecoyFinite => vec![
                self.privacy_amplification,
                self.smoothing,
                self.untagged_signal,
                self.qber,
            ],
            Scenario::DecoyFinite => vec![
                self.privacy_amplification,
                self.smoothing,
                self.untagged_signal,
                self.untagged_decoy,
                self.untagged_vacuum,
                self.qber,
            ],
            _ => Vec::new(),
        }
    }

    /// Inverse of [`free_components`](Self::free_components).
    pub fn from_free_components(scenario: Scenario, eps_ec: f64, c: &[f64]) -> ErrorBudget {
        match scenario {
            Scenario::NoDecoyFinite => ErrorBudget {
                privacy_amplification: c[0],
                error_correction: eps_ec,
                smoothing: c[1],
                untagged_signal: c[2],
                qber: c[3],
                ..Default::default()
            },
            Scenario::DecoyFinite => ErrorBudget {
                privacy_amplification: c[0],
                error_correction: eps_ec,
                smoothing: c[1],
                untagged_signal: c[2],
                untagged_decoy: c[3],
                untagged_vacuum: c[4],
                qber: c[5],
            },
            _ => ErrorBudget::default(),
        }
    }

    pub fn total(&self) -> f64 {
        self.privacy_amplification
            + self.error_correction
            + self.smoothing
            + self.untagged_signal
            + self.untagged_decoy
            + self.untagged_vacuum
            + self.qber
    }

    /// The parameter-estimation failure probability entering the finite-size
    /// correction: the smallest estimation component.
    pub fn parameter_estimation(&self, scenario: Scenario) -> f64 {
        let mut e = self.untagged_signal.min(self.qber);
        if scenario.uses_decoys() {
            e = e.min(self.untagged_decoy).min(self.untagged_vacuum);
        }
        e
    }

    pub fn validate(&self, scenario: Scenario, eps_total: f64) -> Result<()> {
        if !scenario.is_finite() {
            return Ok(());
        }
        let mut parts = self.free_components(scenario);
        parts.push(self.error_correction);
        if let Some(bad) = parts.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::InvalidPoint(format!(
                "error-budget component {bad} outside (0, 1)"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - eps_total).abs() > 1e-9 * eps_total {
            return Err(Error::InvalidPoint(format!(
                "error budget sums to {sum:e}, expected {eps_total:e}"
            )));
        }
        Ok(())
    }
}

/// Free parameters of one scenario at one distance and pulse count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolPoint {
    pub scenario: Scenario,
    pub distance_km: f64,
    /// Pulses sent by Alice; infinite for the asymptotic scenarios. A finite
    /// scenario with infinitely many pulses (and sampled bits) evaluates its
    /// N_A -> inf limit, where every fluctuation term vanishes.
    pub pulses: f64,
    /// Signal transmittance (the only one without decoys).
    pub lambda_signal: f64,
    /// Decoy transmittance; zero without decoys.
    pub lambda_decoy: f64,
    pub delta: f64,
    /// Sifted bits sacrificed for QBER estimation; zero for infinite keys.
    pub sampled_bits: f64,
    pub classes: ClassProbabilities,
    pub budget: ErrorBudget,
}

impl ProtocolPoint {
    pub fn validate(&self, params: &PhysicalParams) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPoint(msg));
        if !(self.distance_km >= 0.0 && self.distance_km.is_finite()) {
            return bad(format!("distance {} km", self.distance_km));
        }
        if self.scenario.is_finite() {
            if !(self.pulses > 0.0) {
                return bad(format!("pulse count {} for a finite key", self.pulses));
            }
            if !(self.sampled_bits > 0.0)
                || (self.sampled_bits.is_infinite() && self.pulses.is_finite())
            {
                return bad(format!("sampled bits {}", self.sampled_bits));
            }
        }
        if !(self.lambda_signal > 0.0 && self.lambda_signal <= 1.0) {
            return bad(format!("lambda_S = {}", self.lambda_signal));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {}", self.delta));
        }
        if self.scenario.uses_decoys() {
            if !(self.lambda_decoy > 0.0 && self.lambda_decoy < self.lambda_signal) {
                return bad(format!(
                    "need 0 < lambda_D < lambda_S, got {} and {}",
                    self.lambda_decoy, self.lambda_signal
                ));
            }
            let c = self.classes;
            if !(c.signal > 0.0 && c.decoy > 0.0 && c.vacuum > 0.0) {
                return bad(format!("class probabilities {c:?}"));
            }
            if (c.signal + c.decoy + c.vacuum - 1.0).abs() > 1e-12 {
                return bad(format!(
                    "class probabilities sum to {}",
                    c.signal + c.decoy + c.vacuum
                ));
            }
        }
        self.budget.validate(self.scenario, params.eps_total)
    }

    fn source(&self, params: &PhysicalParams, lambda: f64) -> Result<SourceConfig> {
        SourceConfig::new(
            params.m_b,
            params.q_a,
            params.beta,
            self.distance_km,
            self.delta,
            lambda,
        )
    }

    /// Mean photon number of the signal pulses.
    pub fn mu_signal(&self, params: &PhysicalParams) -> f64 {
        params.photons_at_alice(self.distance_km) * self.lambda_signal * params.q_a
    }

    pub fn mu_decoy(&self, params: &PhysicalParams) -> f64 {
        params.photons_at_alice(self.distance_km) * self.lambda_decoy * params.q_a
    }
}

/// All intermediates of one rate evaluation.
///
/// Fields referring to a pulse class describe the signal class (the only class
/// without decoys). Decoy-only fields are zero in the no-decoy scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateBreakdown {
    pub gain: f64,
    pub qber: f64,
    pub gain_decoy: f64,
    pub qber_decoy: f64,
    pub gain_vacuum: f64,
    pub qber_vacuum: f64,
    /// Asymptotic untagged probability `P_u(inf)`.
    pub untagged_infinite: f64,
    /// Lower untagged probability actually used for the signal class.
    pub untagged_lower: f64,
    pub untagged_lower_decoy: f64,
    pub untagged_lower_vacuum: f64,
    pub gain_untagged_upper: f64,
    pub gain_untagged_lower: f64,
    pub gain_untagged_lower_decoy: f64,
    pub gain_untagged_upper_vacuum: f64,
    /// Upper bound on `E_u Q_u` of the signal class.
    pub error_gain_untagged_upper: f64,
    pub error_gain_untagged_lower_vacuum: f64,
    pub q1u_lower: f64,
    /// Upper single-photon error rate; infinite when `q1u_lower` is zero.
    pub e1u_upper: f64,
    /// Finite-size correction; zero for infinite keys.
    pub finite_correction: f64,
    /// Sifted bits of the signal class (`N_B/2`); infinite for infinite keys.
    pub sifted_bits: f64,
    /// Raw key length `n`.
    pub raw_key_bits: f64,
    pub sifting_factor: f64,
    pub error_correction_term: f64,
    pub privacy_term: f64,
    pub rate: f64,
}

impl RateBreakdown {
    /// Fraction of the sifted key sacrificed for QBER estimation.
    pub fn sampling_ratio(&self, sampled_bits: f64) -> f64 {
        if self.sifted_bits.is_finite() && self.sifted_bits > 0.0 {
            sampled_bits / self.sifted_bits
        } else {
            0.0
        }
    }
}

/// Bounds on the untagged part of an observable `X` (a gain or an error-gain):
/// `(X / P_u, max(0, (X - (1 - P_u)) / P_u))`.
pub fn untagged_bounds(x: f64, untagged_lower: Probability) -> Result<(f64, f64)> {
    let pu = untagged_lower.value();
    if pu <= 0.0 {
        return Err(Error::NoUntaggedPulses(pu));
    }
    let tagged_upper = 1.0 - pu;
    Ok((x / pu, ((x - tagged_upper) / pu).max(0.0)))
}

/// `max(0, Qu_lo + P0 + P1 - 1)`.
pub fn q1u_lower_no_decoy(q_u_lower: f64, p0: f64, p1: f64) -> f64 {
    (q_u_lower + p0 + p1 - 1.0).max(0.0)
}

/// Finite-size correction
/// `(1/n) log2(2/eps_PE) + 7 sqrt((1 - log2 eps_bar)/n) + (2/n) log2(1/(2 eps_PA))`.
pub fn finite_correction_delta(n: f64, eps_pe: f64, eps_bar: f64, eps_pa: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::EmptyRawKey(n));
    }
    for (name, e) in [("eps_PE", eps_pe), ("eps_bar", eps_bar), ("eps_PA", eps_pa)] {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::OutOfRange {
                name,
                value: e,
                range: "(0, 1)",
            });
        }
    }
    if n.is_infinite() {
        return Ok(0.0);
    }
    let estimation = (2.0 / eps_pe).log2() / n;
    let smoothing = 7.0 * ((1.0 - eps_bar.log2()) / n).sqrt();
    let amplification = 2.0 / n * (1.0 / (2.0 * eps_pa)).log2();
    Ok(estimation + smoothing + amplification)
}

/// Bounded untagged gains feeding the decoy single-photon estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyGainBounds {
    pub decoy_lower: f64,
    pub signal_upper: f64,
    pub vacuum_upper: f64,
}

/// Lower bound on the single-photon untagged gain of the signal class from
/// weak + vacuum decoys.
///
/// The result is clamped to `[0, signal_upper]`. A non-positive denominator
/// means the classes cannot be told apart and is reported as
/// [`Error::BoundUnavailable`].
pub fn q1u_lower_decoy(
    gains: &DecoyGainBounds,
    signal: &PhotonBounds,
    decoy: &PhotonBounds,
    lambda_decoy: f64,
    factor: VacuumFactor,
    prefactor: DecoyPrefactor,
) -> Result<f64> {
    let (p0s_lo, p1s_lo, p2s_lo) = (
        signal.lower(0).value(),
        signal.lower(1).value(),
        signal.lower(2).value(),
    );
    let (p1s_hi, p2s_hi) = (signal.upper(1).value(), signal.upper(2).value());
    let (p0d_hi, p1d_hi, p2d_hi) = (
        decoy.upper(0).value(),
        decoy.upper(1).value(),
        decoy.upper(2).value(),
    );
    let p2d_lo = decoy.lower(2).value();

    let denominator = p1d_hi * p2s_hi - p1s_lo * p2d_lo;
    if !(denominator > 0.0) {
        return Err(Error::BoundUnavailable(
            "decoy and signal envelopes overlap",
        ));
    }

    let vacuum_coeff = match factor {
        VacuumFactor::Printed => p0s_lo * p2d_lo - p0d_hi * p0s_lo,
        VacuumFactor::Symmetric => p0s_lo * p2d_lo - p0d_hi * p2s_hi,
    };

    // 2 delta M_A (1-lambda_D)^(2 delta M_A - 1) P2S_lo / Gamma((1-delta) M_A + 2)
    let m_a = signal.photons_at_alice();
    let delta = signal.delta();
    let spread = 2.0 * delta * m_a;
    let correction = if spread > 0.0 && p2s_lo > 0.0 {
        (spread.ln() + (spread - 1.0) * (-lambda_decoy).ln_1p() + p2s_lo.ln()
            - ln_gamma((1.0 - delta) * m_a + 2.0))
        .exp()
    } else {
        0.0
    };

    let numerator = gains.decoy_lower * p2s_lo - gains.signal_upper * p2d_hi
        + gains.vacuum_upper * vacuum_coeff
        - correction;
    let p1s = match prefactor {
        DecoyPrefactor::Lower => p1s_lo,
        DecoyPrefactor::Upper => p1s_hi,
    };
    Ok((p1s * numerator / denominator).clamp(0.0, gains.signal_upper))
}

/// Upper bound on the single-photon untagged QBER of the signal class,
/// `max(0, (EQ_S_hi - P0S_lo * EQ_V_lo) / Q1u_lo)`.
pub fn e1u_upper_decoy(
    error_gain_signal_upper: f64,
    p0_signal_lower: f64,
    error_gain_vacuum_lower: f64,
    q1u_lower: f64,
) -> Result<f64> {
    if !(q1u_lower > 0.0) {
        return Err(Error::BoundUnavailable("no single-photon gain"));
    }
    Ok(
        ((error_gain_signal_upper - p0_signal_lower * error_gain_vacuum_lower) / q1u_lower)
            .max(0.0),
    )
}

/// `1 - h2(e)` with `e` clamped to 1/2.
fn privacy_fraction(e: f64) -> f64 {
    1.0 - binary_entropy(Probability::saturating(e.min(0.5)))
}

/// Rate model: fixed constants plus the chosen bound conventions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KeyRateModel {
    pub params: PhysicalParams,
    pub conventions: Conventions,
}

impl KeyRateModel {
    pub fn new(params: PhysicalParams, conventions: Conventions) -> Self {
        KeyRateModel {
            params,
            conventions,
        }
    }

    /// Dispatches on `point.scenario`.
    pub fn evaluate(&self, point: &ProtocolPoint) -> Result<RateBreakdown> {
        match point.scenario {
            Scenario::NoDecoyInfinite => self.rate_infinite_no_decoy(point),
            Scenario::NoDecoyFinite => self.rate_finite_no_decoy(point),
            Scenario::DecoyInfinite => self.rate_infinite_decoy(point),
            Scenario::DecoyFinite => self.rate_finite_decoy(point),
        }
    }

    /// Overall transmittance multiplying `mu` in the gain.
    pub fn transmittance(&self, distance_km: f64) -> f64 {
        match self.conventions.gain_model {
            GainModel::WithTransmittance => {
                channel_transmittance(self.params.eta_b, self.params.beta, distance_km)
            }
            GainModel::WithoutTransmittance => 1.0,
        }
    }

    /// Gain and QBER at mean photon number `mu`.
    pub fn observables(&self, mu: f64, distance_km: f64) -> Observables {
        gain_and_qber(mu, self.transmittance(distance_km), &self.params.detector())
    }

    fn expect(point: &ProtocolPoint, expected: Scenario) -> Result<()> {
        if point.scenario == expected {
            Ok(())
        } else {
            Err(Error::ScenarioMismatch {
                expected: expected.token(),
                got: point.scenario.token(),
            })
        }
    }

    pub fn rate_infinite_no_decoy(&self, point: &ProtocolPoint) -> Result<RateBreakdown> {
        Self::expect(point, Scenario::NoDecoyInfinite)?;
        self.no_decoy(point)
    }

    pub fn rate_finite_no_decoy(&self, point: &ProtocolPoint) -> Result<RateBreakdown> {
        Self::expect(point, Scenario::NoDecoyFinite)?;
        self.no_decoy(point)
    }

    pub fn rate_infinite_decoy(&self, point: &ProtocolPoint) -> Result<RateBreakdown> {
        Self::expect(point, Scenario::DecoyInfinite)?;
        self.decoy(point)
    }

    pub fn rate_finite_decoy(&self, point: &ProtocolPoint) -> Result<RateBreakdown> {
        Self::expect(point, Scenario::DecoyFinite)?;
        self.decoy(point)
    }

    fn sifting_factor(&self, raw_key_bits: f64, detections: f64) -> f64 {
        match self.conventions.sifting {
            SiftingFactor::RawKeyFraction if detections.is_finite() => raw_key_bits / detections,
            _ => SIFTING,
        }
    }

    fn no_decoy(&self, point: &ProtocolPoint) -> Result<RateBreakdown> {
        point.validate(&self.params)?;
        let finite = point.scenario.is_finite();
        let conv = &self.conventions;
        let source = point.source(&self.params, point.lambda_signal)?;
        let bounds = source.photon_bounds()?;
        let mu = source.mean_output_intensity();
        let obs = self.observables(mu, point.distance_km);
        let (q, e) = (obs.gain, obs.qber.value());

        let p_inf = source
            .untagged_probability_infinite(conv.erf_argument)
            .value();
        let (xi_u, xi_e) = if finite {
            (
                deviation_xi(point.budget.untagged_signal, point.pulses)?,
                deviation_xi(point.budget.qber, point.sampled_bits)?,
            )
        } else {
            (0.0, 0.0)
        };
        let p_u = p_inf - xi_u;
        if finite && p_u <= 0.0 {
            return Err(Error::FluctuationExceedsUntagged {
                untagged: p_inf,
                xi: xi_u,
            });
        }
        let (q_u_hi, mut q_u_lo) = untagged_bounds(q, Probability::saturating(p_u))?;
        if finite && conv.fluctuation == FluctuationForm::Printed {
            q_u_lo = ((q - p_inf - xi_u) / (1.0 - p_inf - xi_u)).max(0.0);
        }

        let p1 = match conv.single_photon {
            SinglePhotonTerm::UpperP1 => bounds.upper(1),
            SinglePhotonTerm::LowerP1 => bounds.lower(1),
        };
        let q1u = q1u_lower_no_decoy(q_u_lo, bounds.lower(0).value(), p1.value());
        let e1u = if q1u > 0.0 {
            q * (e + xi_e) / q1u
        } else {
            f64::INFINITY
        };
        let privacy = if q1u > 0.0 {
            q1u * privacy_fraction(e1u)
        } else {
            0.0
        };

        let (sifted, raw, delta_corr, detections) = if finite && point.pulses.is_finite() {
            let detections = q * point.pulses;
            let sifted = detections / 2.0;
            let raw = sifted - point.sampled_bits;
            let d = finite_correction_delta(
                raw,
                point.budget.parameter_estimation(point.scenario),
                point.budget.smoothing,
                point.budget.privacy_amplification,
            )?;
            (sifted, raw, d, detections)
        } else {
            (f64::INFINITY, f64::INFINITY, 0.0, f64::INFINITY)
        };
        let qf = self.sifting_factor(raw, detections);
        let ec = q * (self.params.f_ec * binary_entropy(obs.qber) + delta_corr);
        let rate = qf * (privacy - ec);

        Ok(RateBreakdown {
            gain: q,
            qber: e,
            untagged_infinite: p_inf,
            untagged_lower: p_u,
            gain_untagged_upper: q_u_hi,
            gain_untagged_lower: q_u_lo,
            error_gain_untagged_upper: q * (e + xi_e) / p_u,
            q1u_lower: q1u,
            e1u_upper: e1u,
            finite_correction: delta_corr,
            sifted_bits: sifted,
            raw_key_bits: raw,
            sifting_factor: qf,
            error_correction_term: ec,
            privacy_term: privacy,
            rate,
            ..Default::default()
        })
    }

    fn decoy(&self, point: &ProtocolPoint) -> Result<RateBreakdown> {
        point.validate(&self.params)?;
        let finite = point.scenario.is_finite();
        let conv = &self.conventions;
        let classes = if finite {
            point.classes
        } else {
            ClassProbabilities::RANDOM
        };
        let signal_src = point.source(&self.params, point.lambda_signal)?;
        let decoy_src = point.source(&self.params, point.lambda_decoy)?;
        let signal_bounds = signal_src.photon_bounds()?;
        let decoy_bounds = decoy_src.photon_bounds()?;

        let sig = self.observables(signal_src.mean_output_intensity(), point.distance_km);
        let dec = self.observables(decoy_src.mean_output_intensity(), point.distance_km);
        let vac = vacuum_observables(&self.params.detector());

        let p_inf = signal_src
            .untagged_probability_infinite(conv.erf_argument)
            .value();
        let b = &point.budget;
        let untagged = |eps: f64, share: f64| -> Result<(f64, f64)> {
            if !finite {
                return Ok((p_inf, 0.0));
            }
            let xi = deviation_xi(eps, point.pulses * share)?;
            let pu = p_inf - xi;
            if pu <= 0.0 {
                return Err(Error::FluctuationExceedsUntagged {
                    untagged: p_inf,
                    xi,
                });
            }
            Ok((pu, xi))
        };
        let (pu_s, _) = untagged(b.untagged_signal, classes.signal)?;
        let (pu_d, xi_d) = untagged(b.untagged_decoy, classes.decoy)?;
        let (pu_v, _) = untagged(b.untagged_vacuum, classes.vacuum)?;
        let xi_e = if finite {
            deviation_xi(b.qber, point.sampled_bits)?
        } else {
            0.0
        };

        let (q_s_hi, q_s_lo) = untagged_bounds(sig.gain, Probability::saturating(pu_s))?;
        let (_, mut q_d_lo) = untagged_bounds(dec.gain, Probability::saturating(pu_d))?;
        if finite && conv.fluctuation == FluctuationForm::Printed {
            q_d_lo = ((dec.gain - p_inf - xi_d) / (1.0 - p_inf - xi_d)).max(0.0);
        }
        let (q_v_hi, _) = untagged_bounds(vac.gain, Probability::saturating(pu_v))?;
        let (_, eq_v_lo) = untagged_bounds(vac.error_gain(), Probability::saturating(pu_v))?;
        let eq_s_hi = sig.gain * (sig.qber.value() + xi_e) / pu_s;

        let gains = DecoyGainBounds {
            decoy_lower: q_d_lo,
            signal_upper: q_s_hi,
            vacuum_upper: q_v_hi,
        };
        let q1u = match q1u_lower_decoy(
            &gains,
            &signal_bounds,
            &decoy_bounds,
            point.lambda_decoy,
            conv.vacuum_factor,
            conv.decoy_prefactor,
        ) {
            Ok(v) => v,
            Err(Error::BoundUnavailable(_)) => 0.0,
            Err(e) => return Err(e),
        };
        let (e1u, privacy) =
            match e1u_upper_decoy(eq_s_hi, signal_bounds.lower(0).value(), eq_v_lo, q1u) {
                Ok(e1u) => (e1u, pu_s * q1u * privacy_fraction(e1u)),
                Err(_) => (f64::INFINITY, 0.0),
            };

        let (sifted, raw, delta_corr, detections) = if finite && point.pulses.is_finite() {
            let detections = point.pulses * classes.signal * sig.gain;
            let sifted = detections / 2.0;
            let raw = sifted - point.sampled_bits;
            let d = finite_correction_delta(
                raw,
                b.parameter_estimation(point.scenario),
                b.smoothing,
                b.privacy_amplification,
            )?;
            (sifted, raw, d, detections)
        } else {
            (f64::INFINITY, f64::INFINITY, 0.0, f64::INFINITY)
        };
        let qf = self.sifting_factor(raw, detections);
        let ec = sig.gain * (self.params.f_ec * binary_entropy(sig.qber) + delta_corr);
        let rate = qf * classes.signal * (privacy - ec);

        Ok(RateBreakdown {
            gain: sig.gain,
            qber: sig.qber.value(),
            gain_decoy: dec.gain,
            qber_decoy: dec.qber.value(),
            gain_vacuum: vac.gain,
            qber_vacuum: vac.qber.value(),
            untagged_infinite: p_inf,
            untagged_lower: pu_s,
            untagged_lower_decoy: pu_d,
            untagged_lower_vacuum: pu_v,
            gain_untagged_upper: q_s_hi,
            gain_untagged_lower: q_s_lo,
            gain_untagged_lower_decoy: q_d_lo,
            gain_untagged_upper_vacuum: q_v_hi,
            error_gain_untagged_upper: eq_s_hi,
            error_gain_untagged_lower_vacuum: eq_v_lo,
            q1u_lower: q1u,
            e1u_upper: e1u,
            finite_correction: delta_corr,
            sifted_bits: sifted,
            raw_key_bits: raw,
            sifting_factor: qf,
            error_correction_term: ec,
            privacy_term: privacy,
            rate,
        })
    }
}
