use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::DEFAULT_SEED;
use crate::features::{Featurizer, NGramScheme, SelectionSpec};
use crate::neural::{Arch, NetConfig, NetConfigPatch};
use crate::preprocess::TextForm;
use crate::svm::{GridSpec, KernelSpec, SvmHyper};

/// Model family of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SvmLinear,
    SvmRbf,
    WvcnnRand,
    WvcnnNonstatic,
    OhCnn,
    OhBilstmP,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::SvmLinear,
        Family::SvmRbf,
        Family::WvcnnRand,
        Family::WvcnnNonstatic,
        Family::OhCnn,
        Family::OhBilstmP,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::SvmLinear => "svm_linear",
            Family::SvmRbf => "svm_rbf",
            Family::WvcnnRand => "wvcnn_rand",
            Family::WvcnnNonstatic => "wvcnn_nonstatic",
            Family::OhCnn => "oh_cnn",
            Family::OhBilstmP => "oh_bilstm_p",
        }
    }

    /// Name used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Family::SvmLinear => "SVML",
            Family::SvmRbf => "SVM (RBF)",
            Family::WvcnnRand => "wvCNN_random",
            Family::WvcnnNonstatic => "wvCNN_non-static",
            Family::OhCnn => "Oh-CNN",
            Family::OhBilstmP => "Oh-biLSTMp",
        }
    }

    pub fn arch(self) -> Option<Arch> {
        match self {
            Family::SvmLinear | Family::SvmRbf => None,
            Family::WvcnnRand => Some(Arch::WvcnnRand),
            Family::WvcnnNonstatic => Some(Arch::WvcnnNonstatic),
            Family::OhCnn => Some(Arch::OhCnn),
            Family::OhBilstmP => Some(Arch::OhBilstmP),
        }
    }

    pub fn is_svm(self) -> bool {
        self.arch().is_none()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model family {s:?}")))
    }
}

/// Hyperparameter search mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Fixed hyperparameters.
    #[default]
    Off,
    /// SVM: the two-level exponent search. Networks: each published list varied
    /// alone around the configured network.
    Sweep,
    /// SVM: same as `sweep`. Networks: the full cartesian product of the lists.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// One file, or two files that are concatenated in order.
    pub paths: Vec<PathBuf>,
    /// Annotation files parallel to `paths`; empty runs on text alone.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Replace each context window by its citation sentence before use.
    #[serde(default)]
    pub derive_context_less: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    #[serde(default = "default_scheme")]
    pub scheme: NGramScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionSpec>,
    #[serde(default = "one")]
    pub min_df: usize,
    #[serde(default)]
    pub text_form: TextForm,
}

fn default_scheme() -> NGramScheme {
    NGramScheme::Uni
}

fn one() -> usize {
    1
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            scheme: default_scheme(),
            selection: None,
            min_df: 1,
            text_form: TextForm::default(),
        }
    }
}

impl FeatureConfig {
    pub fn featurizer(&self) -> Featurizer {
        Featurizer {
            scheme: self.scheme,
            min_df: self.min_df,
            selection: self.selection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmConfig {
    #[serde(default = "unit")]
    pub c: f64,
    /// Missing means 1 / number of features of each training fold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_cache_mb")]
    pub cache_mb: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_exponents: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_exponents: Option<Vec<i32>>,
    #[serde(default = "yes")]
    pub refine: bool,
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_tolerance() -> f64 {
    SvmHyper::new(1.0, KernelSpec::Linear).tolerance
}

fn default_max_iter() -> usize {
    SvmHyper::new(1.0, KernelSpec::Linear).max_iter
}

fn default_cache_mb() -> usize {
    SvmHyper::new(1.0, KernelSpec::Linear).cache_mb
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: None,
            tolerance: default_tolerance(),
            max_iter: default_max_iter(),
            cache_mb: default_cache_mb(),
            c_exponents: None,
            g_exponents: None,
            refine: true,
        }
    }
}

impl SvmConfig {
    /// Fixed hyperparameters; `n_features` resolves a missing gamma.
    pub fn hyper(&self, family: Family, n_features: usize) -> SvmHyper {
        let kernel = match family {
            Family::SvmRbf => KernelSpec::Rbf {
                gamma: self.gamma.unwrap_or(1.0 / n_features.max(1) as f64),
            },
            _ => KernelSpec::Linear,
        };
        SvmHyper {
            tolerance: self.tolerance,
            max_iter: self.max_iter,
            cache_mb: self.cache_mb,
            ..SvmHyper::new(self.c, kernel)
        }
    }

    pub fn grid(&self, family: Family) -> GridSpec {
        let mut g = match family {
            Family::SvmRbf => GridSpec::rbf_default(),
            _ => GridSpec::linear_default(),
        };
        if let Some(c) = &self.c_exponents {
            g.c_exponents = c.clone();
        }
        if let (Some(gs), Some(_)) = (&self.g_exponents, &g.g_exponents) {
            g.g_exponents = Some(gs.clone());
        }
        g.refine = self.refine;
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    #[serde(default)]
    pub grid: GridMode,
}

/// One model family on one dataset under one fold plan.
///
/// ```toml
/// folds = 10
/// seed = 42
/// output = "runs/elsev"
///
/// [dataset]
/// paths = ["data/elsev_context_full.jsonl"]
/// annotations = ["data/elsev_context_full.annotations.jsonl"]
///
/// [features]
/// scheme = "tri"
/// selection = "chi_500"
///
/// [model]
/// family = "svm_rbf"
///
/// [svm]
/// c = 32768
/// gamma = 0.625
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub svm: SvmConfig,
    /// Network settings over the architecture's preset.
    #[serde(default)]
    pub net: NetConfigPatch,
}

fn default_folds() -> usize {
    10
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

/// Sets `dotted.key = value` in a TOML table. The value is parsed as TOML and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut node = table;
    for p in parents {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p:?} is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text, overrides)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.dataset.paths.iter_mut().for_each(fix);
        self.dataset.annotations.iter_mut().for_each(fix);
        if let Some(p) = &mut self.dataset.stopwords {
            fix(p);
        }
        if let Some(Some(p)) = &mut self.net.embeddings {
            fix(p);
        }
        fix(&mut self.output);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Network configuration for neural families: preset, then `[net]`, with the
    /// run seed unless `[net]` sets one.
    pub fn net_config(&self) -> Option<NetConfig> {
        let arch = self.model.family.arch()?;
        let mut cfg = self.net.apply(NetConfig::preset(arch));
        cfg.arch = arch;
        if self.net.seed.is_none() {
            cfg.seed = self.seed;
        }
        Some(cfg)
    }

    /// Checks everything that can be checked before loading data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = &self.dataset;
        if d.paths.is_empty() || d.paths.len() > 2 {
            return bad(format!("dataset.paths needs one or two files, got {}", d.paths.len()));
        }
        if !d.annotations.is_empty() && d.annotations.len() != d.paths.len() {
            return bad(format!(
                "dataset.annotations has {} files for {} dataset files",
                d.annotations.len(),
                d.paths.len()
            ));
        }
        for p in d.paths.iter().chain(&d.annotations).chain(&d.stopwords) {
            if !p.is_file() {
                return bad(format!("file not found: {}", p.display()));
            }
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.model.family.is_svm() {
            let s = &self.svm;
            self.svm.hyper(self.model.family, 1).validate()?;
            if s.gamma.is_some_and(|g| !(g > 0.0 && g.is_finite())) {
                return bad(format!("svm.gamma must be positive, got {:?}", s.gamma));
            }
            let g = s.grid(self.model.family);
            if self.model.grid != GridMode::Off
                && (g.c_exponents.is_empty() || g.g_exponents.as_ref().is_some_and(Vec::is_empty))
            {
                return bad("empty svm exponent grid".into());
            }
        } else {
            if self.net.arch.is_some_and(|a| Some(a) != self.model.family.arch()) {
                return bad("net.arch disagrees with model.family".into());
            }
            let net = self.net_config().expect("neural family");
            net.validate()?;
            if let Some(p) = &net.embeddings {
                if !p.is_file() {
                    return bad(format!("embeddings file not found: {}", p.display()));
                }
            }
        }
        Ok(())
    }

    /// Dataset label: the configured name, the file stem, or both stems joined.
    pub fn dataset_name(&self) -> String {
        if let Some(n) = &self.dataset.name {
            return n.clone();
        }
        let stems: Vec<String> = self
            .dataset
            .paths
            .iter()
            .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
            .collect();
        let name = stems.join("+");
        if self.dataset.derive_context_less {
            format!("{name}_derived")
        } else {
            name
        }
    }
}
