//! Experiment configuration file (TOML) and command-line overrides.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! Overrides are applied after the file is read, in the order given.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cross_learning::Fault;
use crate::environment::{DEFAULT_NOISE_STD, DYNAMIC_REWARD};
use crate::error::{Error, Result};
use crate::fitting::{DeParams, FitBounds};
use crate::foraging::SigmoidParams;
use crate::metrics::{CONSENSUS_THRESHOLD, DEFAULT_RESAMPLES};
use crate::scenarios::{DynamicAdaptation, StaticValidation, VALIDATION_DENSITIES};
use crate::sim::{ExplorerMode, PopulationConfig, DEFAULT_BATCH_SIZE};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Validate,
    Adapt,
    Sweep,
    Verify,
    Fit,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Validate => "validate",
            ExperimentKind::Adapt => "adapt",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Verify => "verify",
            ExperimentKind::Fit => "fit",
        }
    }
}

/// Encoding of per-epoch tables. Summaries are always JSON.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// TOML integers are signed 64-bit, so seeds above `i64::MAX` are written
/// as decimal strings.
mod seed_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => u64::try_from(v).map_err(|_| de::Error::custom("seed must be >= 0")),
            Repr::Str(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub h: f64,
    pub k: f64,
    pub d_attract: f64,
    pub q_deposit: f64,
    pub batch_size: usize,
    pub noise_std: f64,
    pub explorer_mode: ExplorerMode,
}

impl Default for ModelSection {
    fn default() -> Self {
        let s = SigmoidParams::OP50;
        Self {
            h: s.h(),
            k: s.k(),
            d_attract: s.d_attract(),
            q_deposit: 0.02,
            batch_size: DEFAULT_BATCH_SIZE,
            noise_std: DEFAULT_NOISE_STD,
            explorer_mode: ExplorerMode::PerDecision,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    pub runs: usize,
    pub epochs: usize,
    pub densities: Vec<f64>,
    pub memory: usize,
    pub epsilon: f64,
    pub outside_share: f64,
    /// Wall-clock span mapped onto the epochs; labels only.
    pub seconds_total: f64,
    pub confidence: f64,
    pub resamples: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            runs: 58,
            epochs: 120,
            densities: VALIDATION_DENSITIES.to_vec(),
            memory: 350,
            epsilon: 0.0,
            outside_share: 0.96,
            seconds_total: 7200.0,
            confidence: 0.95,
            resamples: DEFAULT_RESAMPLES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptSection {
    pub runs: usize,
    pub epochs: usize,
    pub delta: usize,
    pub memory: usize,
    pub epsilon: f64,
    pub reward: f64,
    pub threshold: f64,
}

impl Default for AdaptSection {
    fn default() -> Self {
        Self {
            runs: 100,
            epochs: 500,
            delta: 100,
            memory: 350,
            epsilon: 0.0,
            reward: DYNAMIC_REWARD,
            threshold: CONSENSUS_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub runs: usize,
    pub epochs: usize,
    pub memories: Vec<usize>,
    pub deltas: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub reward: f64,
    pub threshold: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            runs: 5,
            epochs: 1000,
            memories: vec![100, 200, 400, 800],
            deltas: vec![50, 100, 150, 200, 300],
            epsilons: vec![0.001, 0.01, 0.05, 0.1, 0.2],
            reward: DYNAMIC_REWARD,
            threshold: CONSENSUS_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub configurations: usize,
    pub steps: usize,
    pub tolerance: f64,
    pub drift_samples: usize,
    pub drift_gain: f64,
    pub drift_policy: Vec<f64>,
    pub drift_payoffs: Vec<f64>,
    /// Allowed deviation of the drift estimate, in standard errors.
    pub drift_sigmas: f64,
    /// Negative control; never set outside tests.
    pub inject_fault: Fault,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            configurations: 1000,
            steps: 200,
            tolerance: 1e-12,
            drift_samples: 100_000,
            drift_gain: 0.05,
            drift_policy: vec![0.3, 0.7],
            drift_payoffs: vec![1.0, 0.4],
            drift_sigmas: 3.0,
            inject_fault: Fault::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// Occupancy CSV in the layout written by `validate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<PathBuf>,
    pub runs_per_eval: usize,
    pub bounds: FitBounds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    pub differential_weight: f64,
    pub crossover_rate: f64,
    pub generations: usize,
    pub de_seed: u64,
    pub convergence_tol: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        let de = DeParams::default();
        Self {
            target: None,
            runs_per_eval: 8,
            bounds: FitBounds::default(),
            population: de.population,
            differential_weight: de.differential_weight,
            crossover_rate: de.crossover_rate,
            generations: de.max_generations,
            de_seed: 1,
            convergence_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(with = "seed_serde")]
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub model: ModelSection,
    pub validate: ValidateSection,
    pub adapt: AdaptSection,
    pub sweep: SweepSection,
    pub verify: VerifySection,
    pub fit: FitSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::default(),
            seed: 20_250_101,
            out_dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
            model: ModelSection::default(),
            validate: ValidateSection::default(),
            adapt: AdaptSection::default(),
            sweep: SweepSection::default(),
            verify: VerifySection::default(),
            fit: FitSection::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Run count of the active command.
    pub runs: Option<usize>,
    pub format: Option<OutputFormat>,
    /// Dotted `section.key=value` assignments, value in TOML syntax.
    pub set: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// File (or defaults), then `kind`, then overrides.
    pub fn load(path: Option<&Path>, kind: ExperimentKind, overrides: &Overrides) -> Result<Self> {
        let mut config = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        config.kind = kind;
        config.apply(overrides)?;
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<()> {
        for assignment in &overrides.set {
            let (key, value) = assignment
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected key=value, got `{assignment}`")))?;
            self.set(key.trim(), value.trim())?;
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.out_dir {
            self.out_dir = out.clone();
        }
        if let Some(format) = overrides.format {
            self.format = format;
        }
        if let Some(runs) = overrides.runs {
            match self.kind {
                ExperimentKind::Validate => self.validate.runs = runs,
                ExperimentKind::Adapt => self.adapt.runs = runs,
                ExperimentKind::Sweep => self.sweep.runs = runs,
                ExperimentKind::Verify => self.verify.configurations = runs,
                ExperimentKind::Fit => self.fit.runs_per_eval = runs,
            }
        }
        Ok(())
    }

    /// Assign one dotted key, e.g. `set("adapt.epsilon", "0.1")`.
    ///
    /// The value is read as a TOML value and falls back to a bare string.
    /// Integers assigned to float keys are widened.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut root = toml::Table::try_from(&*self).map_err(|e| Error::config(e.to_string()))?;
        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));

        let mut parts: Vec<&str> = key.split('.').collect();
        let leaf = parts
            .pop()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::config(format!("empty key `{key}`")))?;
        let mut table = &mut root;
        for part in parts {
            table = table
                .get_mut(part)
                .and_then(toml::Value::as_table_mut)
                .ok_or_else(|| Error::config(format!("unknown section `{part}` in `{key}`")))?;
        }
        let value = match (table.get(leaf), parsed) {
            (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (_, v) => v,
        };
        table.insert(leaf.to_string(), value);
        *self = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("`{key}`: {e}")))?;
        Ok(())
    }

    pub fn sigmoid(&self) -> Result<SigmoidParams> {
        SigmoidParams::new(self.model.h, self.model.k, self.model.d_attract)
    }

    pub fn population(&self, epsilon: f64) -> Result<PopulationConfig> {
        let p = PopulationConfig {
            epsilon,
            batch_size: self.model.batch_size,
            explorer_mode: self.model.explorer_mode,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn static_validation(&self) -> Result<StaticValidation> {
        Ok(StaticValidation {
            sigmoid: self.sigmoid()?,
            densities: self.validate.densities.clone(),
            q_deposit: self.model.q_deposit,
            memory_capacity: self.validate.memory,
            epochs: self.validate.epochs,
            population: self.population(self.validate.epsilon)?,
            noise_std: self.model.noise_std,
            outside_share: self.validate.outside_share,
        })
    }

    pub fn dynamic_adaptation(&self, memory: usize, delta: usize, epsilon: f64, epochs: usize, reward: f64) -> DynamicAdaptation {
        DynamicAdaptation {
            delta,
            epochs,
            memory_capacity: memory,
            epsilon,
            q_deposit: self.model.q_deposit,
            reward,
            noise_std: self.model.noise_std,
            batch_size: self.model.batch_size,
        }
    }

    pub fn de_params(&self) -> DeParams {
        DeParams {
            population: self.fit.population,
            differential_weight: self.fit.differential_weight,
            crossover_rate: self.fit.crossover_rate,
            max_generations: self.fit.generations,
            seed: self.fit.de_seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig {
            seed: u64::MAX - 3,
            ..Default::default()
        };
        c.fit.target = Some(PathBuf::from("target/occupancy.csv"));
        c.verify.inject_fault = Fault::OffByOneRho;
        c.model.explorer_mode = ExplorerMode::FixedIdentity;
        c.adapt.epsilon = 0.1 + 0.2;
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml_str("[adapt]\nepsilom = 0.1\n").is_err());
        let mut c = ExperimentConfig::default();
        assert!(c.set("adapt.epsilom", "0.1").is_err());
        assert!(c.set("nosuch.key", "1").is_err());
    }

    #[test]
    fn set_dotted_keys() {
        let mut c = ExperimentConfig::default();
        c.set("adapt.epsilon", "0.1").unwrap();
        c.set("model.noise_std", "0").unwrap();
        c.set("sweep.memories", "[100, 800]").unwrap();
        c.set("fit.target", "data/occ.csv").unwrap();
        c.set("verify.inject_fault", "off_by_one_rho").unwrap();
        assert_eq!(c.adapt.epsilon, 0.1);
        assert_eq!(c.model.noise_std, 0.0);
        assert_eq!(c.sweep.memories, vec![100, 800]);
        assert_eq!(c.fit.target, Some(PathBuf::from("data/occ.csv")));
        assert_eq!(c.verify.inject_fault, Fault::OffByOneRho);
    }

    #[test]
    fn flags_win_over_file() {
        let file = "seed = 5\n[adapt]\nruns = 7\nepsilon = 0.2\n";
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, file).unwrap();
        let o = Overrides {
            seed: Some(9),
            runs: Some(3),
            set: vec!["adapt.epsilon=0.05".into()],
            ..Default::default()
        };
        let c = ExperimentConfig::load(Some(&path), ExperimentKind::Adapt, &o).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.adapt.runs, 3);
        assert_eq!(c.adapt.epsilon, 0.05);
        assert_eq!(c.kind, ExperimentKind::Adapt);
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = ExperimentConfig::from_file(Path::new("/nonexistent/cfg.toml")).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
