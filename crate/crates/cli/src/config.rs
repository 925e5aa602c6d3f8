//! Experiment configuration.
//!
//! A configuration is a TOML document. Every key is optional; missing keys
//! take the defaults below. The grammar:
//!
//! ```toml
//! group = "free:2"            # or "z2:4"
//! seed = 0
//! out = "hypbrw-out"
//!
//! [walk]
//! kind = "srw"                # "srw" | "lazy" | "table"
//! p0 = 0.5                    # lazy only
//! support = { a1 = 0.3, A1 = 0.3, a2 = 0.2, A2 = 0.2 }   # table only; "e" is the identity
//!
//! [green]
//! r = [1.0, 1.05, 1.1]
//! n_max = 60
//!
//! [brw]
//! lambda = 1.1
//! offspring = "binary"        # family name, or a full law such as "pmf:1:0.5,2:0.5"
//! replicas = 20
//! moment_replicas = 0
//!
//! [dimension]
//! lambdas = [1.0, 1.05, 1.1]
//!
//! [pressure]
//! points = 10
//!
//! [exponent]
//! j_lo = 4.0
//!
//! [verify.tolerances]
//! rho = 1e-3
//! ```

use crate::error::CliError;
use hypbrw::brw::OffspringDistribution;
use hypbrw::walk::{GreenSettings, StepDistribution};
use hypbrw::{GroupModel, Word};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub walk: WalkConfig,
    pub green: GreenConfig,
    pub brw: BrwSection,
    pub dimension: DimensionSection,
    pub pressure: PressureSection,
    pub exponent: ExponentSection,
    pub verify: VerifySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            group: "free:2".into(),
            seed: 0,
            out: None,
            walk: WalkConfig::default(),
            green: GreenConfig::default(),
            brw: BrwSection::default(),
            dimension: DimensionSection::default(),
            pressure: PressureSection::default(),
            exponent: ExponentSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub kind: String,
    pub p0: f64,
    pub support: BTreeMap<String, f64>,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            kind: "srw".into(),
            p0: 0.0,
            support: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenConfig {
    pub r: Vec<f64>,
    pub n_max: usize,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig {
            r: vec![1.0, 1.05, 1.1],
            n_max: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrwSection {
    pub lambda: f64,
    pub offspring: String,
    pub replicas: u64,
    /// Killing radius; by default the settled window plus a margin.
    pub kill_radius: Option<usize>,
    pub max_generation: Option<usize>,
    pub population_budget: u64,
    pub population_target: f64,
    pub margin: usize,
    /// Replicas of the moment experiment; 0 skips it.
    pub moment_replicas: u64,
    pub moment_radius: usize,
    pub pair_radius: usize,
    pub moment_kill_radius: usize,
}

impl Default for BrwSection {
    fn default() -> Self {
        BrwSection {
            lambda: 1.1,
            offspring: "binary".into(),
            replicas: 20,
            kill_radius: None,
            max_generation: None,
            population_budget: 50_000_000,
            population_target: 1e6,
            margin: 12,
            moment_replicas: 2_000,
            moment_radius: 2,
            pair_radius: 1,
            moment_kill_radius: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionSection {
    pub lambdas: Vec<f64>,
    pub a: f64,
    pub replicas: u64,
    pub batches: usize,
    pub population_target: f64,
    pub margin: usize,
    pub max_radius: usize,
    pub epsilon: f64,
    /// Relative tolerance against `log_a H(λ)`.
    pub tolerance: f64,
    /// Absolute tolerance where the target is 0.
    pub zero_tolerance: f64,
}

impl Default for DimensionSection {
    fn default() -> Self {
        DimensionSection {
            lambdas: vec![1.0, 1.05, 1.1],
            a: std::f64::consts::E,
            replicas: 40,
            batches: 5,
            population_target: 1e6,
            margin: 12,
            max_radius: 80,
            epsilon: 0.0,
            tolerance: 0.1,
            zero_tolerance: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureSection {
    /// Explicit weights; empty means `points` equally spaced in `[1, 1/ρ̂)`.
    pub r: Vec<f64>,
    pub points: usize,
    /// Cylinder horizon; by default 0 for isotropic walks and 2 otherwise.
    pub horizon: Option<usize>,
    pub hnr_n: usize,
    /// Relative tolerance of the series comparison; by default 1e-3 at
    /// horizon 0 and 1e-2 otherwise.
    pub tolerance: Option<f64>,
}

impl Default for PressureSection {
    fn default() -> Self {
        PressureSection {
            r: vec![],
            points: 10,
            horizon: None,
            hnr_n: 8,
            tolerance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentSection {
    pub j_lo: f64,
    pub j_hi: f64,
    pub step: f64,
    pub eta_j_lo: f64,
    pub eta_j_hi: f64,
    pub horizon: usize,
    pub tolerance: f64,
}

impl Default for ExponentSection {
    fn default() -> Self {
        ExponentSection {
            j_lo: 4.0,
            j_hi: 12.0,
            step: 1.0,
            eta_j_lo: 8.0,
            eta_j_hi: 16.0,
            horizon: 0,
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Overrides of named check tolerances.
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn group_model(&self) -> Result<GroupModel, CliError> {
        parse_group(&self.group)
    }

    pub fn step_distribution(&self) -> Result<StepDistribution, CliError> {
        let g = self.group_model()?;
        let mu = match self.walk.kind.as_str() {
            "srw" => StepDistribution::simple(&g),
            "lazy" => StepDistribution::lazy(&g, self.walk.p0)?,
            "table" => {
                let mut support: Vec<(Word, f64)> = vec![];
                for (token, &p) in &self.walk.support {
                    support.push((g.parse_word(token)?, p));
                }
                StepDistribution::from_weights(&g, &support)?
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown walk kind `{other}`; expected srw, lazy or table"
                )))
            }
        };
        Ok(mu)
    }

    /// Offspring law of mean `lambda` in the configured family.
    pub fn offspring(&self, lambda: f64) -> hypbrw::Result<OffspringDistribution> {
        offspring_law(&self.brw.offspring, lambda)
    }
}

pub fn offspring_law(spec: &str, lambda: f64) -> hypbrw::Result<OffspringDistribution> {
    if spec.contains(':') {
        OffspringDistribution::parse(spec)
    } else {
        OffspringDistribution::parse(&format!("{spec}:{lambda}"))
    }
}

/// `free:q` or `z2:d`.
pub fn parse_group(spec: &str) -> Result<GroupModel, CliError> {
    let (kind, n) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("group `{spec}` must look like free:2 or z2:4")))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("group `{spec}`: `{n}` is not a count")))?;
    Ok(match kind.trim() {
        "free" => GroupModel::free(n)?,
        "z2" => GroupModel::z2_product(n)?,
        other => return Err(CliError::Config(format!("unknown group kind `{other}`"))),
    })
}

/// `srw` or `lazy:p0`, as accepted by `--walk`.
pub fn parse_walk_flag(spec: &str) -> Result<WalkConfig, CliError> {
    let mut w = WalkConfig::default();
    match spec.split_once(':') {
        None if spec == "srw" => {}
        Some(("lazy", p)) => {
            w.kind = "lazy".into();
            w.p0 = p
                .parse()
                .map_err(|_| CliError::Config(format!("walk `{spec}`: `{p}` is not a probability")))?;
        }
        _ => return Err(CliError::Config(format!("walk `{spec}` must be srw or lazy:p0"))),
    }
    Ok(w)
}

/// Green engine settings for a run.
pub fn green_settings(quick: bool) -> GreenSettings {
    if quick {
        GreenSettings::quick()
    } else {
        GreenSettings::default()
    }
}
