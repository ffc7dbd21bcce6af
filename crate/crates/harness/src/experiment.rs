//! Experiment description, validation and the flat config-file format.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ensemble_core::bell::{BellOutcome, DetectorModel, MeasurementConfig};
use ensemble_core::dj::{CnotBackend, DjSetup, OracleId, OracleRepresentation, Readout};
use ensemble_core::teleport::MeasurementBackend;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Bell,
    Chi,
    Cnot,
    Dj,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bell => "bell",
            Self::Chi => "chi",
            Self::Cnot => "cnot",
            Self::Dj => "dj",
        }
    }
}

impl FromStr for Protocol {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bell" => Ok(Self::Bell),
            "chi" => Ok(Self::Chi),
            "cnot" => Ok(Self::Cnot),
            "dj" => Ok(Self::Dj),
            _ => Err(HarnessError::config(format!(
                "unknown protocol `{s}`, expected bell, chi, cnot or dj"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Ideal,
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CnotMode {
    Direct,
    Teleported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleImpl {
    Direct,
    Decomposed,
}

/// Everything that determines a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub protocol: Protocol,
    /// Bell input (`phi+`, `phi-`, `psi+`, `psi-`) or, for `cnot`, the
    /// control and target as `C,T` with each of `0 1 + - +i -i`.
    pub state: Option<String>,
    pub oracle: Option<OracleId>,
    pub backend: Backend,
    pub config: MeasurementConfig,
    pub detectors: DetectorModel,
    /// How the `dj` oracles execute their C-NOTs.
    pub cnot: CnotMode,
    pub oracle_impl: OracleImpl,
    pub trials: u64,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(protocol: Protocol, trials: u64, seed: u64) -> Self {
        Self {
            protocol,
            state: None,
            oracle: None,
            backend: Backend::Ideal,
            config: MeasurementConfig::Psi,
            detectors: DetectorModel::ideal(),
            cnot: CnotMode::Direct,
            oracle_impl: OracleImpl::Decomposed,
            trials,
            seed,
        }
    }

    /// Checks every parameter and resolves the protocol-specific inputs.
    pub fn plan(&self) -> Result<Plan> {
        if self.trials == 0 {
            return Err(HarnessError::config("trials must be at least 1"));
        }
        self.detectors.validate().map_err(HarnessError::Config)?;
        let measurement = match self.backend {
            Backend::Ideal => MeasurementBackend::Ideal,
            Backend::Physical => MeasurementBackend::Physical {
                config: self.config,
                detectors: self.detectors,
            },
        };
        let reject_unused = |what: &str, present: bool| {
            if present {
                Err(HarnessError::config(format!(
                    "{what} does not apply to the {} protocol",
                    self.protocol.name()
                )))
            } else {
                Ok(())
            }
        };
        match self.protocol {
            Protocol::Bell => {
                reject_unused("--oracle", self.oracle.is_some())?;
                let input = parse_bell_state(self.state.as_deref().unwrap_or("psi+"))?;
                Ok(Plan::Bell {
                    input,
                    backend: measurement,
                })
            }
            Protocol::Chi => {
                reject_unused("--oracle", self.oracle.is_some())?;
                reject_unused("--state", self.state.is_some())?;
                Ok(Plan::Chi {
                    backend: measurement,
                })
            }
            Protocol::Cnot => {
                reject_unused("--oracle", self.oracle.is_some())?;
                let (control, target) = parse_cnot_input(self.state.as_deref().unwrap_or("+,0"))?;
                Ok(Plan::Cnot {
                    control,
                    target,
                    backend: measurement,
                })
            }
            Protocol::Dj => {
                reject_unused("--state", self.state.is_some())?;
                let oracle = self
                    .oracle
                    .ok_or_else(|| HarnessError::config("the dj protocol needs --oracle"))?;
                let cnot = match self.cnot {
                    CnotMode::Direct => CnotBackend::Direct,
                    CnotMode::Teleported => CnotBackend::Teleported(measurement),
                };
                let readout = match self.backend {
                    Backend::Ideal => Readout::Ideal,
                    Backend::Physical => Readout::Physical(self.detectors),
                };
                let representation = match self.oracle_impl {
                    OracleImpl::Direct => OracleRepresentation::Direct,
                    OracleImpl::Decomposed => OracleRepresentation::Decomposed,
                };
                if representation == OracleRepresentation::Direct
                    && self.cnot == CnotMode::Teleported
                {
                    return Err(HarnessError::config(
                        "teleported C-NOTs need the decomposed oracle implementation",
                    ));
                }
                Ok(Plan::Dj {
                    oracle,
                    setup: DjSetup {
                        representation,
                        cnot,
                        readout,
                    },
                })
            }
        }
    }
}

/// A validated, ready-to-run experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Plan {
    Bell {
        input: BellOutcome,
        backend: MeasurementBackend,
    },
    Chi {
        backend: MeasurementBackend,
    },
    Cnot {
        control: [Complex64; 2],
        target: [Complex64; 2],
        backend: MeasurementBackend,
    },
    Dj {
        oracle: OracleId,
        setup: DjSetup,
    },
}

pub fn parse_bell_state(s: &str) -> Result<BellOutcome> {
    match s.to_ascii_lowercase().as_str() {
        "phi+" | "phiplus" => Ok(BellOutcome::PhiPlus),
        "phi-" | "phiminus" => Ok(BellOutcome::PhiMinus),
        "psi+" | "psiplus" => Ok(BellOutcome::PsiPlus),
        "psi-" | "psiminus" => Ok(BellOutcome::PsiMinus),
        _ => Err(HarnessError::config(format!(
            "unknown Bell state `{s}`, expected phi+, phi-, psi+ or psi-"
        ))),
    }
}

pub fn parse_qubit(s: &str) -> Result<[Complex64; 2]> {
    let r = |x| Complex64::new(x, 0.0);
    let i = |x| Complex64::new(0.0, x);
    let h = FRAC_1_SQRT_2;
    match s.trim() {
        "0" => Ok([r(1.0), r(0.0)]),
        "1" => Ok([r(0.0), r(1.0)]),
        "+" => Ok([r(h), r(h)]),
        "-" => Ok([r(h), r(-h)]),
        "+i" => Ok([r(h), i(h)]),
        "-i" => Ok([r(h), i(-h)]),
        other => Err(HarnessError::config(format!(
            "unknown qubit state `{other}`, expected 0, 1, +, -, +i or -i"
        ))),
    }
}

fn parse_cnot_input(s: &str) -> Result<([Complex64; 2], [Complex64; 2])> {
    let (c, t) = s
        .split_once(',')
        .ok_or_else(|| HarnessError::config(format!("C-NOT input `{s}` must look like `+,0`")))?;
    Ok((parse_qubit(c)?, parse_qubit(t)?))
}

/// Keys accepted in a config file; each mirrors the command-line flag of
/// the same name.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub state: Option<String>,
    pub oracle: Option<String>,
    pub backend: Option<Backend>,
    pub config: Option<MeasurementConfig>,
    pub eta: Option<f64>,
    pub dark: Option<f64>,
    pub number_resolving: Option<bool>,
    pub cnot: Option<CnotMode>,
    pub oracle_impl: Option<OracleImpl>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::config(format!("bad config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Csv => "csv",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_rejected() {
        let spec = ExperimentSpec::new(Protocol::Bell, 0, 1);
        assert!(matches!(spec.plan(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn dj_requires_oracle() {
        let mut spec = ExperimentSpec::new(Protocol::Dj, 1, 1);
        assert!(spec.plan().is_err());
        spec.oracle = Some(OracleId::F3);
        assert!(spec.plan().is_ok());
        spec.state = Some("psi+".into());
        assert!(spec.plan().is_err());
    }

    #[test]
    fn detector_ranges_checked() {
        let mut spec = ExperimentSpec::new(Protocol::Bell, 1, 1);
        spec.detectors.efficiency = 1.5;
        assert!(spec.plan().is_err());
        spec.detectors.efficiency = 0.5;
        spec.detectors.dark_count_prob = -0.1;
        assert!(spec.plan().is_err());
    }

    #[test]
    fn state_names() {
        assert_eq!(parse_bell_state("PSI-").unwrap(), BellOutcome::PsiMinus);
        assert!(parse_bell_state("bell").is_err());
        let mut spec = ExperimentSpec::new(Protocol::Cnot, 1, 1);
        spec.state = Some("+i,1".into());
        assert!(spec.plan().is_ok());
        spec.state = Some("+i".into());
        assert!(spec.plan().is_err());
    }

    #[test]
    fn config_file_keys() {
        let cfg = ConfigFile::parse("eta = 0.7\nbackend = \"physical\"\nseed = 9\n").unwrap();
        assert_eq!(cfg.eta, Some(0.7));
        assert_eq!(cfg.backend, Some(Backend::Physical));
        assert_eq!(cfg.seed, Some(9));
        assert!(ConfigFile::parse("colour = 1").is_err());
    }
}
