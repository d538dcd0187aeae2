//! Declarative run configuration: a versioned TOML file with fail-fast
//! validation (unknown keys are errors).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vecm_core::dataset::{Deterministic, Transform};
use vecm_core::johansen::VecmDeterministic;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// One panel variable with its measurement transform and the deterministic
/// case of its unit-root test.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableConfig {
    pub name: String,
    #[serde(default = "default_transform")]
    pub transform: Transform,
    #[serde(default = "default_adf_deterministic")]
    pub adf_deterministic: Deterministic,
    /// Free-text provenance note (e.g. seasonal-adjustment source), echoed
    /// into the reports.
    #[serde(default)]
    pub note: Option<String>,
}

fn default_transform() -> Transform {
    Transform::Level
}

fn default_adf_deterministic() -> Deterministic {
    Deterministic::Constant
}

/// Either a named preset or an explicit permutation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderingSpec {
    Preset(String),
    Explicit(Vec<String>),
}

/// Bootstrap block of the configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_true() -> bool {
    true
}
fn default_replications() -> usize {
    1000
}
fn default_level() -> f64 {
    0.95
}
fn default_seed() -> u64 {
    1
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            replications: default_replications(),
            level: default_level(),
            seed: default_seed(),
        }
    }
}

/// Expected long-run sign of a variable's effect on the normalized price
/// relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignExpectation {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "ambiguous")]
    Ambiguous,
}

/// Full description of a pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub input: PathBuf,
    pub date_column: String,
    pub output_dir: PathBuf,
    pub variables: Vec<VariableConfig>,
    #[serde(default = "default_p_max")]
    pub p_max: usize,
    /// VAR lag order; defaults to the Schwarz choice.
    #[serde(default)]
    pub lags: Option<usize>,
    /// Cointegration rank; defaults to the 5% trace-test selection.
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default = "default_deterministic")]
    pub deterministic: VecmDeterministic,
    /// Significance level for unit-root classification and rank selection.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_lm_lags")]
    pub lm_lags: Vec<usize>,
    /// Variables carrying the identity block of beta, one per relation;
    /// defaults to the first `rank` configured variables.
    #[serde(default)]
    pub normalization: Option<Vec<String>>,
    pub orderings: Vec<OrderingSpec>,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    /// Expected-sign table for the first relation; enables the sign report.
    #[serde(default)]
    pub signs: Option<BTreeMap<String, SignExpectation>>,
    /// Refuse to run inference on an unstable model (exit code 5).
    #[serde(default)]
    pub strict_stability: bool,
}

fn default_p_max() -> usize {
    8
}
fn default_deterministic() -> VecmDeterministic {
    VecmDeterministic::RestrictedTrend
}
fn default_alpha() -> f64 {
    0.05
}
fn default_horizon() -> usize {
    6
}
fn default_lm_lags() -> Vec<usize> {
    vec![1, 2]
}

/// The four preset Cholesky orderings over the standard seven-variable
/// panel, most exogenous first.
pub fn preset_ordering(name: &str) -> Option<Vec<&'static str>> {
    match name {
        "order1" => Some(vec![
            "Imports Prices",
            "M2",
            "Interest Rate",
            "Activity Level",
            "NEER",
            "Regulated Prices",
            "CPI",
        ]),
        "order2" => Some(vec![
            "Imports Prices",
            "M2",
            "Interest Rate",
            "NEER",
            "Activity Level",
            "Regulated Prices",
            "CPI",
        ]),
        "order3" => Some(vec![
            "Imports Prices",
            "NEER",
            "Regulated Prices",
            "CPI",
            "Activity Level",
            "M2",
            "Interest Rate",
        ]),
        "order4" => Some(vec![
            "Imports Prices",
            "NEER",
            "Activity Level",
            "Regulated Prices",
            "M2",
            "Interest Rate",
            "CPI",
        ]),
        _ => None,
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Fail-fast validation of everything checkable without the data.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "config version {} not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.variables.is_empty() {
            return Err(CliError::Config("no variables configured".to_string()));
        }
        let names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(CliError::Config(format!("duplicate variable {name:?}")));
            }
        }
        if let Some(rank) = self.rank {
            if rank > names.len() {
                return Err(CliError::Config(format!(
                    "rank {rank} exceeds the {} configured variables",
                    names.len()
                )));
            }
        }
        if let Some(lags) = self.lags {
            if lags == 0 {
                return Err(CliError::Config("lags must be at least 1".to_string()));
            }
        }
        if self.p_max == 0 {
            return Err(CliError::Config("p_max must be at least 1".to_string()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.orderings.is_empty() {
            return Err(CliError::Config("no orderings configured".to_string()));
        }
        for ordering in &self.orderings {
            let (_, resolved) = self.resolve_ordering(ordering)?;
            for name in &resolved {
                if !names.contains(&name.as_str()) {
                    return Err(CliError::Config(format!(
                        "ordering references unknown variable {name:?}"
                    )));
                }
            }
        }
        if let Some(normalization) = &self.normalization {
            for name in normalization {
                if !names.contains(&name.as_str()) {
                    return Err(CliError::Config(format!(
                        "normalization references unknown variable {name:?}"
                    )));
                }
            }
        }
        if let Some(signs) = &self.signs {
            for name in signs.keys() {
                if !names.contains(&name.as_str()) {
                    return Err(CliError::Config(format!(
                        "sign expectation references unknown variable {name:?}"
                    )));
                }
            }
        }
        if self.bootstrap.enabled {
            if self.bootstrap.replications < 100 {
                return Err(CliError::Config(
                    "bootstrap needs at least 100 replications".to_string(),
                ));
            }
            if !(self.bootstrap.level > 0.0 && self.bootstrap.level < 1.0) {
                return Err(CliError::Config(format!(
                    "bootstrap level {} outside (0, 1)",
                    self.bootstrap.level
                )));
            }
        }
        Ok(())
    }

    /// Expand a preset name or pass an explicit list through.
    pub fn resolve_ordering(&self, spec: &OrderingSpec) -> Result<(String, Vec<String>), CliError> {
        match spec {
            OrderingSpec::Preset(name) => {
                let names = preset_ordering(name).ok_or_else(|| {
                    CliError::Config(format!("unknown ordering preset {name:?}"))
                })?;
                Ok((
                    name.clone(),
                    names.into_iter().map(|s| s.to_string()).collect(),
                ))
            }
            OrderingSpec::Explicit(names) => {
                Ok((format!("custom: {}", names.join(" -> ")), names.clone()))
            }
        }
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> String {
        r#"
version = 1
input = "panel.csv"
date_column = "date"
output_dir = "out"
orderings = [["b", "a"]]

[[variables]]
name = "a"
transform = "log"
adf_deterministic = "constant_trend"

[[variables]]
name = "b"
"#
        .to_string()
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: RunConfig = toml::from_str(&minimal_toml()).unwrap();
        config.validate().unwrap();
        assert_eq!(config.p_max, 8);
        assert_eq!(config.horizon, 6);
        assert_eq!(config.alpha, 0.05);
        assert!(config.bootstrap.enabled);
        assert_eq!(config.bootstrap.replications, 1000);
        assert_eq!(config.variables[1].transform, Transform::Level);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let toml_text = minimal_toml().replace("version = 1", "version = 1\ntypo_key = true");
        let err = toml::from_str::<RunConfig>(&toml_text).unwrap_err();
        assert!(err.to_string().contains("typo_key"), "{err}");
    }

    #[test]
    fn unknown_ordering_variable_rejected() {
        let toml_text = minimal_toml().replace("[[\"b\", \"a\"]]", "[[\"b\", \"ghost\"]]");
        let config: RunConfig = toml::from_str(&toml_text).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn presets_resolve_to_the_four_published_orders() {
        for name in ["order1", "order2", "order3", "order4"] {
            let ordering = preset_ordering(name).unwrap();
            assert_eq!(ordering.len(), 7);
            assert_eq!(ordering[0], "Imports Prices");
        }
        assert_eq!(preset_ordering("order1").unwrap()[6], "CPI");
        assert_eq!(preset_ordering("order3").unwrap()[6], "Interest Rate");
        assert!(preset_ordering("order5").is_none());
    }

    #[test]
    fn version_mismatch_rejected() {
        let toml_text = minimal_toml().replace("version = 1", "version = 2");
        let config: RunConfig = toml::from_str(&toml_text).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn mixed_preset_and_explicit_orderings() {
        let toml_text = r#"
version = 1
input = "panel.csv"
date_column = "date"
output_dir = "out"
orderings = ["order1", ["CPI", "M2", "Activity Level", "Interest Rate", "NEER", "Imports Prices", "Regulated Prices"]]

[[variables]]
name = "CPI"
[[variables]]
name = "M2"
[[variables]]
name = "Activity Level"
[[variables]]
name = "Interest Rate"
[[variables]]
name = "NEER"
[[variables]]
name = "Imports Prices"
[[variables]]
name = "Regulated Prices"
"#;
        let config: RunConfig = toml::from_str(toml_text).unwrap();
        config.validate().unwrap();
    }

    #[test]
    fn sign_table_parses() {
        let toml_text = format!(
            "{}\n[signs]\n\"a\" = \"+\"\n\"b\" = \"ambiguous\"\n",
            minimal_toml()
        );
        let config: RunConfig = toml::from_str(&toml_text).unwrap();
        config.validate().unwrap();
        let signs = config.signs.unwrap();
        assert_eq!(signs["a"], SignExpectation::Positive);
        assert_eq!(signs["b"], SignExpectation::Ambiguous);
    }
}
