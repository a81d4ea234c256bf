//! Run configuration: a JSON file, dotted-path overrides and provenance.

use std::path::{Path, PathBuf};

use gfe_core::behavioral::BehavioralParams;
use gfe_core::estimators::GfeOptions;
use gfe_core::panel::{DesignSpec, PanelSchema};
use gfe_core::simulation::{Estimator, StudyConfig};
use gfe_core::smm::SmmConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

fn default_estimators() -> Vec<Estimator> {
    vec![Estimator::Ols, Estimator::Fe]
}

/// A contiguous range of group counts scanned with the information criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRange {
    pub min: usize,
    pub max: usize,
    /// Group count whose fit supplies the error variance; defaults to `max`.
    #[serde(default)]
    pub g_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRegressionConfig {
    /// Column regressed on the assigned profile.
    pub behavior: String,
    pub groups: usize,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default)]
    pub unit_fe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub panel: PathBuf,
    #[serde(default)]
    pub schema: PanelSchema,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Expand onto the full unit × period grid before estimating.
    #[serde(default = "default_true")]
    pub balance: bool,
    pub model: DesignSpec,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(default)]
    pub groups: Option<GroupRange>,
    #[serde(default)]
    pub gfe: GfeOptions,
    /// Group count whose profiles are written as plot data.
    #[serde(default)]
    pub profile_groups: Option<usize>,
    #[serde(default)]
    pub profile_regression: Option<ProfileRegressionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Nonempty `study.dgp.lags` switches to the distributed-lag design.
    #[serde(default)]
    pub study: StudyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitModelConfig {
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Target moment file: two rows (low, high risk) of per-age rates.
    #[serde(default)]
    pub targets: Option<PathBuf>,
    /// Generate the targets from these parameters instead of a file.
    #[serde(default)]
    pub self_target: Option<BehavioralParams>,
    #[serde(default)]
    pub smm: SmmConfig,
    #[serde(default = "default_true")]
    pub counterfactual: bool,
}

/// Fields every command shares.
pub trait RunConfig: Serialize + DeserializeOwned {
    const COMMAND: &'static str;
    fn output_dir(&mut self) -> &mut PathBuf;
    fn seed(&self) -> Option<u64>;
    fn workers(&self) -> Option<usize>;
    /// Input paths, resolved against the config directory by [`load`].
    fn inputs(&mut self) -> Vec<&mut PathBuf>;
    fn validate(&self) -> Result<(), CliError>;
}

impl RunConfig for EstimateConfig {
    const COMMAND: &'static str = "estimate";
    fn output_dir(&mut self) -> &mut PathBuf {
        &mut self.output_dir
    }
    fn seed(&self) -> Option<u64> {
        self.seed
    }
    fn workers(&self) -> Option<usize> {
        self.workers
    }
    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        vec![&mut self.panel]
    }
    fn validate(&self) -> Result<(), CliError> {
        let stochastic = self.groups.is_some() || self.estimators.iter().any(|e| matches!(e, Estimator::Gfe(_)));
        if stochastic && self.seed.is_none() {
            return Err(CliError::config("`seed` is required when grouped fixed effects are estimated"));
        }
        if self.estimators.is_empty() && self.groups.is_none() {
            return Err(CliError::config("nothing to estimate: give `estimators` or `groups`"));
        }
        if let Some(r) = &self.groups {
            if r.min == 0 || r.min > r.max {
                return Err(CliError::config("`groups` needs 1 ≤ min ≤ max"));
            }
            if r.g_max.is_some_and(|g| g < r.max) {
                return Err(CliError::config("`groups.g_max` must be at least `groups.max`"));
            }
        }
        if self.estimators.iter().any(|e| matches!(e, Estimator::Gfe(0))) || self.profile_groups == Some(0) {
            return Err(CliError::config("group counts must be positive"));
        }
        if let Some(p) = &self.profile_regression {
            if p.groups == 0 {
                return Err(CliError::config("`profile_regression.groups` must be positive"));
            }
        }
        Ok(())
    }
}

impl RunConfig for SimulateConfig {
    const COMMAND: &'static str = "simulate";
    fn output_dir(&mut self) -> &mut PathBuf {
        &mut self.output_dir
    }
    fn seed(&self) -> Option<u64> {
        self.seed
    }
    fn workers(&self) -> Option<usize> {
        self.workers
    }
    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        Vec::new()
    }
    fn validate(&self) -> Result<(), CliError> {
        if self.seed.is_none() {
            return Err(CliError::config("`seed` is required for `simulate`"));
        }
        self.study.dgp.validate().map_err(|e| CliError::config(e.to_string()))?;
        if self.study.replications == 0 {
            return Err(CliError::config("`study.replications` must be positive"));
        }
        Ok(())
    }
}

impl RunConfig for FitModelConfig {
    const COMMAND: &'static str = "fit-model";
    fn output_dir(&mut self) -> &mut PathBuf {
        &mut self.output_dir
    }
    fn seed(&self) -> Option<u64> {
        self.seed
    }
    fn workers(&self) -> Option<usize> {
        self.workers
    }
    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        self.targets.iter_mut().collect()
    }
    fn validate(&self) -> Result<(), CliError> {
        if self.seed.is_none() {
            return Err(CliError::config("`seed` is required for `fit-model`"));
        }
        match (&self.targets, &self.self_target) {
            (None, None) => return Err(CliError::config("give `targets` (a file) or `self_target` (parameters)")),
            (Some(_), Some(_)) => return Err(CliError::config("`targets` and `self_target` are exclusive")),
            _ => {}
        }
        if let Some(p) = &self.self_target {
            p.validate().map_err(|e| CliError::config(e.to_string()))?;
        }
        self.smm.start.validate().map_err(|e| CliError::config(e.to_string()))?;
        self.smm.model.solver.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(())
    }
}

/// A `--key.path=value` flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl Override {
    /// Parse `--a.b=value`; values that parse as JSON keep their type,
    /// anything else is a string.
    pub fn parse(arg: &str) -> Result<Self, CliError> {
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| CliError::config(format!("override `{arg}` must start with `--`")))?;
        let (key, raw) = body
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override `{arg}` needs `=value`")))?;
        let path: Vec<String> = key.split('.').map(str::to_string).collect();
        if path.iter().any(String::is_empty) {
            return Err(CliError::config(format!("override `{arg}` has an empty key segment")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        Ok(Override { path, value })
    }

    fn apply(&self, root: &mut Value) -> Result<(), CliError> {
        let mut node = root;
        for (i, key) in self.path.iter().enumerate() {
            let obj = match node {
                Value::Object(m) => m,
                Value::Null => {
                    *node = Value::Object(Default::default());
                    node.as_object_mut().expect("just created")
                }
                _ => {
                    return Err(CliError::config(format!(
                        "override `{}` descends into a non-object",
                        self.path.join(".")
                    )))
                }
            };
            if i + 1 == self.path.len() {
                if matches!(obj.get(key), Some(Value::Object(_) | Value::Array(_))) {
                    return Err(CliError::config(format!("override `{}` must target a scalar", self.path.join("."))));
                }
                obj.insert(key.clone(), self.value.clone());
                return Ok(());
            }
            node = obj.entry(key.clone()).or_insert(Value::Null);
        }
        Ok(())
    }

    /// The override must survive a round trip through the typed config.
    fn check_applied(&self, resolved: &Value) -> Result<(), CliError> {
        let mut node = resolved;
        for key in &self.path {
            node = node
                .get(key)
                .ok_or_else(|| CliError::config(format!("unknown configuration key `{}`", self.path.join("."))))?;
        }
        Ok(())
    }
}

/// A resolved configuration with its provenance.
#[derive(Debug, Clone)]
pub struct Loaded<C> {
    pub config: C,
    pub hash: String,
    pub seed: Option<u64>,
}

/// Read, override, type-check, resolve paths and validate.
pub fn load<C: RunConfig>(path: &Path, overrides: &[Override], output: Option<&Path>) -> Result<Loaded<C>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("config {} is not valid JSON: {e}", path.display())))?;
    if let Value::Object(m) = &mut value {
        if let Some(cmd) = m.remove("command") {
            if cmd != Value::String(C::COMMAND.into()) {
                return Err(CliError::config(format!("config is for `{cmd}`, not `{}`", C::COMMAND)));
            }
        }
    } else {
        return Err(CliError::config("config must be a JSON object"));
    }
    for o in overrides {
        o.apply(&mut value)?;
    }
    let mut config: C = serde_json::from_value(value).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
    let resolved = serde_json::to_value(&config).map_err(|e| CliError::config(e.to_string()))?;
    for o in overrides {
        o.check_applied(&resolved)?;
    }
    // provenance covers the config as written plus overrides, without the
    // output location or worker count
    let mut canonical = resolved;
    if let Value::Object(m) = &mut canonical {
        m.remove("output_dir");
        m.remove("workers");
    }
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    let hash = digest.iter().map(|b| format!("{b:02x}")).collect();

    let base = path.parent().unwrap_or_else(|| Path::new(""));
    for p in config.inputs() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
        if !p.is_file() {
            return Err(CliError::config(format!("input file {} does not exist", p.display())));
        }
    }
    match output {
        Some(o) => *config.output_dir() = o.to_path_buf(),
        None => {
            let o = config.output_dir();
            if o.is_relative() {
                *o = base.join(&*o);
            }
        }
    }
    config.validate()?;

    let seed = config.seed();
    Ok(Loaded { config, hash, seed })
}
