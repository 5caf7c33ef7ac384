//! Poisson source plus background-yield detection model.

use crate::numerics::Probability;

/// Bob's detection constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub eta_b: f64,
    pub y0: f64,
    pub e_det: f64,
    pub e0: f64,
    pub e0_vacuum: f64,
    pub f_ec: f64,
}

/// Gain and QBER of one pulse class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub gain: f64,
    pub qber: Probability,
}

impl Observables {
    /// `E * Q`.
    pub fn error_gain(&self) -> f64 {
        self.qber.value() * self.gain
    }
}

/// One-way transmittance `eta_B 10^(-beta L / 10)`.
pub fn channel_transmittance(eta_b: f64, beta: f64, distance_km: f64) -> f64 {
    eta_b * 10f64.powf(-beta * distance_km / 10.0)
}

/// `Q = Y0 + 1 - exp(-mu eta)` and `E Q = E0 Y0 + e_det (1 - exp(-mu eta))`.
pub fn gain_and_qber(mu: f64, eta: f64, det: &DetectorParams) -> Observables {
    let detected = -(-mu * eta).exp_m1();
    let gain = det.y0 + detected;
    if gain == 0.0 {
        return Observables {
            gain,
            qber: Probability::saturating(det.e0),
        };
    }
    let error_gain = det.e0 * det.y0 + det.e_det * detected;
    Observables {
        gain,
        qber: Probability::saturating(error_gain / gain),
    }
}

/// Vacuum class: background counts only, with error rate `E0_V`.
pub fn vacuum_observables(det: &DetectorParams) -> Observables {
    Observables {
        gain: det.y0,
        qber: Probability::saturating(det.e0_vacuum),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhysicalParams;
    use approx::assert_relative_eq;

    fn det() -> DetectorParams {
        PhysicalParams::default().detector()
    }

    #[test]
    fn transmittance_examples() {
        assert_eq!(channel_transmittance(0.045, 0.21, 0.0), 0.045);
        assert_relative_eq!(
            channel_transmittance(0.045, 0.21, 10.0 / 0.21),
            0.0045,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            channel_transmittance(0.045, 0.21, 60.0),
            0.002_472_933_932_359_310_5,
            max_relative = 1e-13
        );
    }

    #[test]
    fn gain_and_qber_examples() {
        let d = det();
        let o = gain_and_qber(0.0, 0.5, &d);
        assert_eq!(o.gain, 1.7e-6);
        assert_eq!(o.qber.value(), 0.5);

        let o = gain_and_qber(1.0, 0.1, &d);
        assert_relative_eq!(o.gain, 0.095_164_281_964_040_43, max_relative = 1e-13);
        assert_relative_eq!(
            o.qber.value(),
            0.033_008_342_415_700_67,
            max_relative = 1e-12
        );

        let o = gain_and_qber(1e4, 1.0, &d);
        assert_relative_eq!(o.gain, 1.0 + 1.7e-6, max_relative = 1e-15);
        assert!((o.qber.value() - 0.033).abs() < 1e-5);
    }

    #[test]
    fn vacuum_matches_zero_intensity() {
        let d = det();
        assert_eq!(vacuum_observables(&d), gain_and_qber(0.0, 0.01, &d));
        let dark_free = DetectorParams { y0: 0.0, ..d };
        let v = vacuum_observables(&dark_free);
        assert_eq!((v.gain, v.qber.value()), (0.0, 0.5));
    }

    #[test]
    fn gain_increases_and_qber_decreases_with_intensity() {
        let d = det();
        let mut last = gain_and_qber(0.0, 0.01, &d);
        for k in 1..200 {
            let mu = k as f64 * 0.05;
            let o = gain_and_qber(mu, 0.01, &d);
            assert!(o.gain > last.gain);
            assert!(o.qber.value() < last.qber.value());
            last = o;
        }
        let mut last = gain_and_qber(0.5, 1e-4, &d).gain;
        for k in 2..100 {
            let g = gain_and_qber(0.5, k as f64 * 1e-4, &d).gain;
            assert!(g > last);
            last = g;
        }
    }
}
