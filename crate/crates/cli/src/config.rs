//! Flat TOML run configuration: physical constants, bound conventions and
//! run-level options. Every key is optional.

use std::path::PathBuf;

use pnpqkd_core::experiments::{Experiment, DEFAULT_THRESHOLD};
use pnpqkd_core::params;
use pnpqkd_core::{Conventions, Error as CoreError, KeyRateModel, PhysicalParams, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Malformed document, unknown key or wrongly typed value.
    #[error("{0}")]
    Syntax(String),
    #[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

// Config-file spelling of each convention switch. The first variant is the default.
macro_rules! toggle {
    ($name:ident => $core:ident { $first:ident = $first_text:literal $(, $variant:ident = $text:literal)* $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
        pub enum $name {
            #[default]
            #[serde(rename = $first_text)]
            $first,
            $(#[serde(rename = $text)] $variant,)*
        }

        impl From<$name> for params::$core {
            fn from(t: $name) -> Self {
                match t {
                    $name::$first => params::$core::$first,
                    $($name::$variant => params::$core::$variant,)*
                }
            }
        }
    };
}

toggle!(SinglePhoton => SinglePhotonTerm { UpperP1 = "upper-p1", LowerP1 = "lower-p1" });
toggle!(Fluctuation => FluctuationForm { Composed = "composed", Printed = "printed" });
toggle!(Vacuum => VacuumFactor { Symmetric = "symmetric", Printed = "printed" });
toggle!(Prefactor => DecoyPrefactor { Lower = "lower", Upper = "upper" });
toggle!(ErfArg => ErfArgument { HalfUnderRoot = "half-under-root", HalfOutsideRoot = "half-outside-root" });
toggle!(Gain => GainModel { WithTransmittance = "with-transmittance", WithoutTransmittance = "without-transmittance" });
toggle!(Sifting => SiftingFactor { RawKeyFraction = "raw-key-fraction", Half = "half" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "eta_B")]
    pub eta_b: f64,
    pub beta: f64,
    #[serde(rename = "Y_0")]
    pub y0: f64,
    pub e_det: f64,
    #[serde(rename = "M_B")]
    pub m_b: f64,
    #[serde(rename = "q_A")]
    pub q_a: f64,
    pub f: f64,
    #[serde(rename = "E_0")]
    pub e0: f64,
    #[serde(rename = "E_0_V")]
    pub e0_vacuum: f64,
    #[serde(rename = "eps_EC")]
    pub eps_ec: f64,
    pub eps: f64,

    pub single_photon: SinglePhoton,
    pub fluctuation: Fluctuation,
    pub vacuum_factor: Vacuum,
    pub decoy_prefactor: Prefactor,
    pub erf_argument: ErfArg,
    pub gain_model: Gain,
    pub sifting: Sifting,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    /// Pulse counts; defaults to the standard set of the scenario.
    #[serde(rename = "N_A", skip_serializing_if = "Option::is_none")]
    pub pulses: Option<Vec<f64>>,
    pub lmin: f64,
    pub lmax_km: f64,
    pub lstep: f64,
    pub threshold: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PhysicalParams::default();
        RunConfig {
            eta_b: p.eta_b,
            beta: p.beta,
            y0: p.y0,
            e_det: p.e_det,
            m_b: p.m_b,
            q_a: p.q_a,
            f: p.f_ec,
            e0: p.e0,
            e0_vacuum: p.e0_vacuum,
            eps_ec: p.eps_ec,
            eps: p.eps_total,
            single_photon: Default::default(),
            fluctuation: Default::default(),
            vacuum_factor: Default::default(),
            decoy_prefactor: Default::default(),
            erf_argument: Default::default(),
            gain_model: Default::default(),
            sifting: Default::default(),
            scenario: None,
            pulses: None,
            lmin: 0.0,
            lmax_km: 130.0,
            lstep: 2.0,
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

/// 1-based line on which `key` is assigned, if it is.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|line| {
            line.split_once('=')
                .is_some_and(|(k, _)| k.trim().trim_matches('"') == key)
        })
        .map(|i| i + 1)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    config.validate_in(text)?;
    Ok(config)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            eta_b: self.eta_b,
            beta: self.beta,
            y0: self.y0,
            e_det: self.e_det,
            e0: self.e0,
            e0_vacuum: self.e0_vacuum,
            m_b: self.m_b,
            q_a: self.q_a,
            f_ec: self.f,
            eps_total: self.eps,
            eps_ec: self.eps_ec,
        }
    }

    pub fn conventions(&self) -> Conventions {
        Conventions {
            single_photon: self.single_photon.into(),
            fluctuation: self.fluctuation.into(),
            vacuum_factor: self.vacuum_factor.into(),
            decoy_prefactor: self.decoy_prefactor.into(),
            erf_argument: self.erf_argument.into(),
            gain_model: self.gain_model.into(),
            sifting: self.sifting.into(),
        }
    }

    pub fn experiment(&self) -> Experiment {
        Experiment {
            model: KeyRateModel::new(self.params(), self.conventions()),
            seed: self.seed,
            threshold: self.threshold,
            ..Experiment::default()
        }
    }

    pub fn scenario(&self) -> Result<Option<Scenario>, ConfigError> {
        self.scenario
            .as_deref()
            .map(|s| {
                s.parse().map_err(|_| ConfigError::Invalid {
                    key: "scenario".into(),
                    line: None,
                    message: format!(
                        "unknown scenario '{s}' (expected one of {})",
                        Scenario::ALL.map(Scenario::token).join(", ")
                    ),
                })
            })
            .transpose()
    }

    /// Checks every constraint; `text` is only used to point at the offending line.
    pub fn validate_in(&self, text: &str) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            key: key.into(),
            line: key_line(text, key),
            message,
        };
        if let Err(e) = self.params().validate() {
            return Err(match e {
                CoreError::OutOfRange { name, value, range } => {
                    invalid(name, format!("{value} is outside {range}"))
                }
                other => invalid("parameters", other.to_string()),
            });
        }
        self.scenario().map_err(|e| match e {
            ConfigError::Invalid { key, message, .. } => invalid(&key, message),
            other => other,
        })?;
        if let Some(list) = &self.pulses {
            if list.is_empty() {
                return Err(invalid("N_A", "empty list".into()));
            }
            if let Some(bad) = list.iter().find(|n| !(**n > 0.0)) {
                return Err(invalid("N_A", format!("pulse count {bad} is not positive")));
            }
        }
        if !self.threshold.is_finite() {
            return Err(invalid(
                "threshold",
                format!("{} is not finite", self.threshold),
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_in("")
    }
}
