//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 0
//! epochs = 5
//! batch_size = 64
//! output = "runs/pogd.csv"
//!
//! [dataset]
//! name = "mnist"
//! train_subset = 10000
//!
//! [model]
//! name = "mnist-cnn"
//!
//! [optimizer]
//! name = "pogd"
//! omega = 0.9
//!
//! [schedule]
//! kind = "step-decay"
//! eta0 = 0.01
//! factor = 0.5
//! every_n_epochs = 2
//! ```
//!
//! Omitted keys take their defaults; unknown keys are rejected.

use std::path::PathBuf;

use pogd_core::{
    AdagradHyper, AdamHyper, MomentumHyper, OptimizerKind, PogdHyper, PogdUpdate, PsoHyper, RandMode, SgdHyper,
    TestFunction,
};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::schedule::LrSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::output")]
    pub output: PathBuf,
    /// Label for the rows of this run; defaults to the optimizer name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    /// Evaluate on the validation split every this many epochs (and always
    /// after the last one).
    #[serde(default = "defaults::one")]
    pub eval_every: usize,
    /// Also write one row per optimizer step to a `.iter.csv` companion.
    #[serde(default)]
    pub iter_log: bool,
    /// Fill `wall_ms`. Off by default because timings break byte-identical
    /// reruns.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    /// Defaults to step decay for training and a constant 0.01 for test
    /// functions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<LrSchedule>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetConfig {
    #[default]
    None,
    Mnist {
        #[serde(default = "defaults::mnist_train_images")]
        train_images: PathBuf,
        #[serde(default = "defaults::mnist_train_labels")]
        train_labels: PathBuf,
        #[serde(default = "defaults::mnist_val_images")]
        val_images: PathBuf,
        #[serde(default = "defaults::mnist_val_labels")]
        val_labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        train_subset: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        val_subset: Option<usize>,
    },
    Cifar10 {
        #[serde(default = "defaults::cifar_train_batches")]
        train_batches: Vec<PathBuf>,
        #[serde(default = "defaults::cifar_val_batches")]
        val_batches: Vec<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        train_subset: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        val_subset: Option<usize>,
        /// Per-channel standardization with training-split statistics.
        #[serde(default = "defaults::yes")]
        standardize: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    MnistCnn,
    CifarCnn,
    Testfn {
        /// `sphere`, `rosenbrock`, `rastrigin` or `double-well`.
        function: String,
        /// Starting point; its length is the dimension.
        start: Vec<f64>,
        #[serde(default = "defaults::iterations")]
        iterations: usize,
    },
}

impl ModelConfig {
    pub fn test_function(&self) -> Option<TestFunction> {
        match self {
            ModelConfig::Testfn { function, start, .. } => TestFunction::from_name(function, start.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawMode {
    #[default]
    PerStepScalar,
    PerElement,
}

impl From<DrawMode> for RandMode {
    fn from(m: DrawMode) -> Self {
        match m {
            DrawMode::PerStepScalar => RandMode::PerStepScalar,
            DrawMode::PerElement => RandMode::PerElement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    #[default]
    GradientPlusVelocity,
    MomentRatio,
}

/// Optimizer name plus hyperparameter overrides. The learning rate comes
/// from the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Sgd,
    Momentum {
        #[serde(default = "defaults::momentum")]
        momentum: f64,
    },
    Adagrad {
        #[serde(default = "defaults::epsilon")]
        epsilon: f64,
    },
    Adam {
        #[serde(default = "defaults::beta1")]
        beta1: f64,
        #[serde(default = "defaults::beta2")]
        beta2: f64,
        #[serde(default = "defaults::epsilon")]
        epsilon: f64,
        #[serde(default)]
        bias_correction: bool,
    },
    Pogd {
        #[serde(default = "defaults::omega")]
        omega: f64,
        #[serde(default = "defaults::pogd_c1")]
        c1: f64,
        #[serde(default = "defaults::pogd_c2")]
        c2: f64,
        #[serde(default = "defaults::epsilon")]
        epsilon: f64,
        #[serde(default)]
        rand_mode: DrawMode,
        #[serde(default)]
        update: UpdateRule,
    },
    /// Gradient-free reference; test-function mode only.
    Pso {
        #[serde(default = "defaults::particles")]
        particles: usize,
        #[serde(default = "defaults::inertia")]
        w: f64,
        #[serde(default = "defaults::pso_c")]
        c1: f64,
        #[serde(default = "defaults::pso_c")]
        c2: f64,
        #[serde(default = "defaults::pso_draws")]
        draws: DrawMode,
    },
}

impl OptimizerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Sgd => "sgd",
            OptimizerConfig::Momentum { .. } => "momentum",
            OptimizerConfig::Adagrad { .. } => "adagrad",
            OptimizerConfig::Adam { .. } => "adam",
            OptimizerConfig::Pogd { .. } => "pogd",
            OptimizerConfig::Pso { .. } => "pso",
        }
    }

    /// Core hyperparameters with `eta` as the nominal rate; `None` for PSO.
    pub fn kind(&self, eta: f64) -> Option<OptimizerKind<f64>> {
        Some(match *self {
            OptimizerConfig::Sgd => OptimizerKind::Sgd(SgdHyper { eta }),
            OptimizerConfig::Momentum { momentum } => OptimizerKind::Momentum(MomentumHyper { eta, p: momentum }),
            OptimizerConfig::Adagrad { epsilon } => OptimizerKind::Adagrad(AdagradHyper { eta, epsilon }),
            OptimizerConfig::Adam { beta1, beta2, epsilon, bias_correction } => OptimizerKind::Adam(AdamHyper {
                eta,
                beta1,
                beta2,
                epsilon,
                bias_correction,
            }),
            OptimizerConfig::Pogd { omega, c1, c2, epsilon, rand_mode, update } => OptimizerKind::Pogd(PogdHyper {
                eta,
                omega,
                c1,
                c2,
                epsilon,
                rand_mode: rand_mode.into(),
                update: match update {
                    UpdateRule::GradientPlusVelocity => PogdUpdate::GradientPlusVelocity,
                    UpdateRule::MomentRatio => PogdUpdate::MomentRatio,
                },
            }),
            OptimizerConfig::Pso { .. } => return None,
        })
    }

    pub fn pso(&self) -> Option<(usize, PsoHyper<f64>)> {
        match *self {
            OptimizerConfig::Pso { particles, w, c1, c2, draws } => Some((
                particles,
                PsoHyper {
                    w,
                    c1,
                    c2,
                    draws: draws.into(),
                },
            )),
            _ => None,
        }
    }
}

mod defaults {
    use std::path::PathBuf;

    use pogd_core::{AdamHyper, MomentumHyper, PogdHyper, PsoHyper, RandMode};

    use super::DrawMode;

    pub fn epochs() -> usize {
        5
    }
    pub fn batch_size() -> usize {
        64
    }
    pub fn one() -> usize {
        1
    }
    pub fn yes() -> bool {
        true
    }
    pub fn output() -> PathBuf {
        "metrics.csv".into()
    }
    pub fn iterations() -> usize {
        1000
    }
    pub fn mnist_train_images() -> PathBuf {
        "data/mnist/train-images-idx3-ubyte".into()
    }
    pub fn mnist_train_labels() -> PathBuf {
        "data/mnist/train-labels-idx1-ubyte".into()
    }
    pub fn mnist_val_images() -> PathBuf {
        "data/mnist/t10k-images-idx3-ubyte".into()
    }
    pub fn mnist_val_labels() -> PathBuf {
        "data/mnist/t10k-labels-idx1-ubyte".into()
    }
    pub fn cifar_train_batches() -> Vec<PathBuf> {
        (1..=5).map(|i| format!("data/cifar-10-batches-bin/data_batch_{i}.bin").into()).collect()
    }
    pub fn cifar_val_batches() -> Vec<PathBuf> {
        vec!["data/cifar-10-batches-bin/test_batch.bin".into()]
    }
    pub fn momentum() -> f64 {
        MomentumHyper::with_eta(0.01).p
    }
    pub fn epsilon() -> f64 {
        PogdHyper::<f64>::default().epsilon
    }
    pub fn beta1() -> f64 {
        AdamHyper::with_eta(0.01).beta1
    }
    pub fn beta2() -> f64 {
        AdamHyper::with_eta(0.01).beta2
    }
    pub fn omega() -> f64 {
        PogdHyper::<f64>::default().omega
    }
    pub fn pogd_c1() -> f64 {
        PogdHyper::<f64>::default().c1
    }
    pub fn pogd_c2() -> f64 {
        PogdHyper::<f64>::default().c2
    }
    pub fn particles() -> usize {
        30
    }
    pub fn inertia() -> f64 {
        PsoHyper::<f64>::default().w
    }
    pub fn pso_c() -> f64 {
        PsoHyper::<f64>::default().c1
    }
    pub fn pso_draws() -> DrawMode {
        match PsoHyper::<f64>::default().draws {
            RandMode::PerStepScalar => DrawMode::PerStepScalar,
            RandMode::PerElement => DrawMode::PerElement,
        }
    }
}

impl ExperimentConfig {
    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| self.optimizer.name().to_string())
    }

    pub fn schedule(&self) -> LrSchedule {
        self.schedule.unwrap_or_else(|| match self.model {
            ModelConfig::Testfn { .. } => LrSchedule::Constant { eta0: 0.01 },
            _ => LrSchedule::default(),
        })
    }

    pub fn is_testfn(&self) -> bool {
        matches!(self.model, ModelConfig::Testfn { .. })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}

/// Parses, fills defaults and validates. Errors carry the line of the
/// offending key where it can be located.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|span| refine_line(text, span, e.message()));
        ConfigError::new(line, e.message().trim_end().to_string())
    })?;
    config.schedule = Some(config.schedule());
    validate(&config).map_err(|(table, key, msg)| ConfigError::new(key_line(text, table, key), msg))?;
    Ok(config)
}

type Invalid = (Option<&'static str>, &'static str, String);

pub fn validate(config: &ExperimentConfig) -> Result<(), Invalid> {
    if config.batch_size == 0 {
        return Err((None, "batch_size", "batch_size must be at least 1".into()));
    }
    if config.eval_every == 0 {
        return Err((None, "eval_every", "eval_every must be at least 1".into()));
    }
    if let Err((key, msg)) = config.schedule().validate() {
        return Err((Some("schedule"), key, msg));
    }
    let model = |key, msg: String| Err((Some("model"), key, msg));
    match (&config.model, &config.dataset) {
        (ModelConfig::Testfn { function, start, .. }, _) => {
            let Some(f) = config.model.test_function() else {
                return model("function", format!("unknown test function `{function}`"));
            };
            if start.is_empty() {
                return model("start", "start point is empty".into());
            }
            if f == TestFunction::DoubleWell && start.len() != 1 {
                return model("start", format!("double-well is 1-D, start has {} entries", start.len()));
            }
            if start.iter().any(|x| !x.is_finite()) {
                return model("start", "start point must be finite".into());
            }
        }
        (ModelConfig::MnistCnn, DatasetConfig::Mnist { .. }) | (ModelConfig::CifarCnn, DatasetConfig::Cifar10 { .. }) => {}
        (m, d) => {
            let (m, d) = (
                toml::to_string(m).unwrap_or_default(),
                toml::to_string(d).unwrap_or_default(),
            );
            return model("name", format!("model {} does not fit dataset {}", m.trim(), d.trim()));
        }
    }
    let opt = &config.optimizer;
    if let Some((particles, hyper)) = opt.pso() {
        if !config.is_testfn() {
            return Err((Some("optimizer"), "name", "pso runs in test-function mode only".into()));
        }
        if particles == 0 {
            return Err((Some("optimizer"), "particles", "particles must be at least 1".into()));
        }
        hyper.validate().map_err(|e| (Some("optimizer"), hyper_key(&e), e.to_string()))?;
    } else if let Some(kind) = opt.kind(config.schedule().eta(0)) {
        kind.validate().map_err(|e| (Some("optimizer"), hyper_key(&e), e.to_string()))?;
    }
    Ok(())
}

fn hyper_key(e: &pogd_core::Error) -> &'static str {
    match e {
        pogd_core::Error::InvalidHyper { name, .. } => match *name {
            "p" => "momentum",
            other => other,
        },
        _ => "name",
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Errors from tagged tables point at the table header; move to the line
/// inside that table naming the offending key or value when there is one.
fn refine_line(text: &str, span: std::ops::Range<usize>, message: &str) -> usize {
    let start = line_of_offset(text, span.start);
    let Some(culprit) = message.split('`').nth(1) else {
        return start;
    };
    let quoted = format!("\"{culprit}\"");
    text.lines()
        .enumerate()
        .skip(start - 1)
        .take_while(|(i, l)| *i + 1 == start || !l.trim_start().starts_with('['))
        .find(|(_, l)| {
            let l = l.trim();
            let key = l.split('=').next().unwrap_or("").trim();
            l.contains('=') && (key == culprit || l.contains(&quoted))
        })
        .map_or(start, |(i, _)| i + 1)
}

/// 1-based line of `key` inside `[table]` (or the top level), if present.
fn key_line(text: &str, table: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = Some(header.trim());
            continue;
        }
        if current == table {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    // Fall back to the table header when the key was defaulted.
    table.and_then(|t| {
        text.lines()
            .position(|l| l.trim().trim_start_matches('[').trim_end_matches(']').trim() == t)
            .map(|i| i + 1)
    })
}
