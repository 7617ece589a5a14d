//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rslax_core::lax::{self, CMConfig, RSConfig};
use rslax_core::Lattice;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Lax,
    Evolve,
    Limit,
    Reduce,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Lax => "lax",
            Command::Evolve => "evolve",
            Command::Limit => "limit",
            Command::Reduce => "reduce",
        }
    }
}

fn default_seed() -> u64 {
    42
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("rslax-out")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Must agree with the subcommand when present.
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::ConfigInvalid(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Typed view of `params`; a missing `params` reads as `{}`.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        let value = match &self.params {
            serde_json::Value::Null => serde_json::Value::Object(Default::default()),
            v => v.clone(),
        };
        serde_json::from_value(value).map_err(|e| CliError::ConfigInvalid(format!("params: {e}")))
    }
}

/// A complex number written as a bare real, `[re, im]` or `{"re": …, "im": …}`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
    Parts(Parts),
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parts {
    re: f64,
    #[serde(default)]
    im: f64,
}

impl From<ComplexValue> for C64 {
    fn from(v: ComplexValue) -> Self {
        match v {
            ComplexValue::Real(re) => C64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => C64::new(re, im),
            ComplexValue::Parts(Parts { re, im }) => C64::new(re, im),
        }
    }
}

pub fn complexes(v: &[ComplexValue]) -> Vec<C64> {
    v.iter().map(|&x| x.into()).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeSpec {
    /// Either `tau` (periods `1, τ`) or both periods.
    Elliptic {
        #[serde(default)]
        tau: Option<ComplexValue>,
        #[serde(default)]
        omega1: Option<ComplexValue>,
        #[serde(default)]
        omega2: Option<ComplexValue>,
    },
    Trigonometric {},
    Rational {},
}

impl LatticeSpec {
    pub fn build(&self) -> Result<Lattice, CliError> {
        let invalid = |e: rslax_core::Error| CliError::ConfigInvalid(format!("lattice: {e}"));
        match self {
            LatticeSpec::Elliptic { tau, omega1, omega2 } => match (tau, omega1, omega2) {
                (Some(t), None, None) => Lattice::from_tau((*t).into()).map_err(invalid),
                (None, Some(a), Some(b)) => Lattice::elliptic((*a).into(), (*b).into()).map_err(invalid),
                _ => Err(CliError::ConfigInvalid(
                    "lattice: give either `tau` or both `omega1` and `omega2`".into(),
                )),
            },
            LatticeSpec::Trigonometric {} => Ok(Lattice::trigonometric()),
            LatticeSpec::Rational {} => Ok(Lattice::rational()),
        }
    }
}

/// RS phase point and couplings. Exactly one of `p` (exponents) and
/// `rapidities` (symmetric-gauge rapidities) is given.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsSpec {
    pub q: Vec<ComplexValue>,
    #[serde(default)]
    pub p: Option<Vec<ComplexValue>>,
    #[serde(default)]
    pub rapidities: Option<Vec<ComplexValue>>,
    pub hbar: ComplexValue,
    #[serde(default)]
    pub mu: Option<ComplexValue>,
    #[serde(default)]
    pub q_inf: Option<ComplexValue>,
    pub lattice: LatticeSpec,
}

impl RsSpec {
    pub fn build(&self) -> Result<RSConfig, CliError> {
        let lat = self.lattice.build()?;
        let q = complexes(&self.q);
        let hbar: C64 = self.hbar.into();
        let invalid = |e: rslax_core::Error| CliError::ConfigInvalid(format!("rs: {e}"));
        let p = match (&self.p, &self.rapidities) {
            (Some(p), None) => complexes(p),
            (None, Some(r)) => {
                if r.len() != q.len() {
                    return Err(CliError::ConfigInvalid(
                        "rs: `rapidities` and `q` differ in length".into(),
                    ));
                }
                lax::momenta_from_rapidities(&q, &complexes(r), hbar, &lat).map_err(invalid)?
            }
            _ => {
                return Err(CliError::ConfigInvalid(
                    "rs: give exactly one of `p` and `rapidities`".into(),
                ))
            }
        };
        let mut conf = RSConfig::new(q, p, hbar, lat).map_err(invalid)?;
        if let Some(q_inf) = self.q_inf {
            conf = conf.with_framing(q_inf.into());
        }
        if let Some(mu) = self.mu {
            conf = conf.with_mu(mu.into());
        }
        Ok(conf)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmSpec {
    pub q: Vec<ComplexValue>,
    pub p: Vec<ComplexValue>,
    pub g: ComplexValue,
    pub lattice: LatticeSpec,
}

impl CmSpec {
    pub fn build(&self) -> Result<CMConfig, CliError> {
        CMConfig::new(
            complexes(&self.q),
            complexes(&self.p),
            self.g.into(),
            self.lattice.build()?,
        )
        .map_err(|e| CliError::ConfigInvalid(format!("cm: {e}")))
    }
}
