//! Run configuration: defaults, a line-oriented `key = value` config file,
//! and command-line overrides, applied in that order.

use std::fs;
use std::path::{Path, PathBuf};

use graphmal_core::model::{GraphModel, Hyperparams, Optimizer};

use crate::error::CliError;

/// Which recovered graph is serialized for the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GraphSource {
    #[default]
    CallGraph,
    Cfg,
}

/// Accepted-but-inert execution hint; a single compute backend exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Cpu,
    Gpu,
}

/// Everything a command needs beyond its own file arguments.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub hyperparams: Hyperparams,
    pub optimizer: Optimizer,
    pub mode: Mode,
    pub lib_paths: Vec<PathBuf>,
    pub strict_libs: bool,
    pub graph_source: GraphSource,
    pub include_library_nodes: bool,
    pub verify_hashes: bool,
    pub jobs: Option<usize>,
    pub log_level: String,
}

impl RunConfig {
    /// Library search paths must exist before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        for path in &self.lib_paths {
            if !path.is_dir() {
                return Err(CliError::Config(format!(
                    "library search path {} is not a directory",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

/// Optional settings collected from the config file or command-line flags;
/// `None` means "keep the current value".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub gm: Option<String>,
    pub mode: Option<String>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub feat_dim: Option<usize>,
    pub num_class: Option<usize>,
    pub num_epochs: Option<usize>,
    pub latent_dim: Option<usize>,
    pub out_dim: Option<usize>,
    pub hidden: Option<usize>,
    pub max_lv: Option<usize>,
    pub learning_rate: Option<f64>,
    pub train_fraction: Option<f64>,
    pub optimizer: Option<String>,
    pub lib_path: Vec<PathBuf>,
    pub strict_libs: Option<bool>,
    pub graph_source: Option<String>,
    pub include_library_nodes: Option<bool>,
    pub verify_hashes: Option<bool>,
    pub jobs: Option<usize>,
    pub log_level: Option<String>,
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("expected a boolean, got {other:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value {value:?} for {key}"))
}

impl Overrides {
    /// Parses a config file: one `key = value` per line, `#` comments,
    /// `lib_path` may repeat.
    pub fn from_file(path: &Path) -> Result<Overrides, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut o = Overrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fail = |message: String| CliError::FileFormat {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let set = |message: Result<(), String>| message.map_err(fail);
            set(o.apply_key(key, value))?;
        }
        Ok(o)
    }

    fn apply_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "gm" => self.gm = Some(value.to_string()),
            "mode" => self.mode = Some(value.to_string()),
            "batch_size" => self.batch_size = Some(parse_num(value, key)?),
            "seed" => self.seed = Some(parse_num(value, key)?),
            "feat_dim" => self.feat_dim = Some(parse_num(value, key)?),
            "num_class" => self.num_class = Some(parse_num(value, key)?),
            "num_epochs" => self.num_epochs = Some(parse_num(value, key)?),
            "latent_dim" => self.latent_dim = Some(parse_num(value, key)?),
            "out_dim" => self.out_dim = Some(parse_num(value, key)?),
            "hidden" => self.hidden = Some(parse_num(value, key)?),
            "max_lv" => self.max_lv = Some(parse_num(value, key)?),
            "learning_rate" => self.learning_rate = Some(parse_num(value, key)?),
            "train_fraction" => self.train_fraction = Some(parse_num(value, key)?),
            "optimizer" => self.optimizer = Some(value.to_string()),
            "lib_path" => self.lib_path.push(PathBuf::from(value)),
            "strict_libs" => self.strict_libs = Some(parse_bool(value)?),
            "graph_source" => self.graph_source = Some(value.to_string()),
            "include_library_nodes" => self.include_library_nodes = Some(parse_bool(value)?),
            "verify_hashes" => self.verify_hashes = Some(parse_bool(value)?),
            "jobs" => self.jobs = Some(parse_num(value, key)?),
            "log_level" => self.log_level = Some(value.to_string()),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }
}

impl RunConfig {
    /// Defaults, then the config file (if any), then command-line flags.
    pub fn resolve(file: Option<Overrides>, flags: Overrides) -> Result<RunConfig, CliError> {
        let mut config = RunConfig {
            log_level: "warn".to_string(),
            ..RunConfig::default()
        };
        if let Some(file) = file {
            config.apply(file)?;
        }
        config.apply(flags)?;
        if config.hyperparams.batch_size == 0 {
            return Err(CliError::Config("batch_size must be at least 1".into()));
        }
        for (name, value) in [
            ("latent_dim", config.hyperparams.latent_dim),
            ("out_dim", config.hyperparams.out_dim),
            ("hidden", config.hyperparams.hidden),
        ] {
            if value == 0 {
                return Err(CliError::Config(format!("{name} must be at least 1")));
            }
        }
        if config.hyperparams.learning_rate <= 0.0 {
            return Err(CliError::Config("learning_rate must be positive".into()));
        }
        let f = config.hyperparams.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::Config(
                "train_fraction must lie strictly between 0 and 1".into(),
            ));
        }
        Ok(config)
    }

    fn apply(&mut self, o: Overrides) -> Result<(), CliError> {
        let bad = |message: String| CliError::Config(message);
        if let Some(gm) = o.gm {
            self.hyperparams.gm = match gm.as_str() {
                "mean_field" => GraphModel::MeanField,
                "loopy_bp" => {
                    return Err(bad(
                        "gm loopy_bp is not implemented; only mean_field is available".into(),
                    ))
                }
                other => return Err(bad(format!("unknown gm {other:?}"))),
            };
        }
        if let Some(mode) = o.mode {
            self.mode = match mode.as_str() {
                "cpu" => Mode::Cpu,
                "gpu" => Mode::Gpu,
                other => return Err(bad(format!("unknown mode {other:?}"))),
            };
        }
        if let Some(optimizer) = o.optimizer {
            self.optimizer = match optimizer.as_str() {
                "adam" => Optimizer::Adam,
                "sgd" => Optimizer::Sgd,
                other => return Err(bad(format!("unknown optimizer {other:?}"))),
            };
        }
        if let Some(graph_source) = o.graph_source {
            self.graph_source = match graph_source.as_str() {
                "call_graph" => GraphSource::CallGraph,
                "cfg" => GraphSource::Cfg,
                other => return Err(bad(format!("unknown graph source {other:?}"))),
            };
        }
        let hp = &mut self.hyperparams;
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(value) = o.$field { hp.$field = value; })*
            };
        }
        take!(
            batch_size,
            seed,
            feat_dim,
            num_class,
            num_epochs,
            latent_dim,
            out_dim,
            hidden,
            max_lv,
            learning_rate,
            train_fraction
        );
        self.lib_paths.extend(o.lib_path);
        if let Some(v) = o.strict_libs {
            self.strict_libs = v;
        }
        if let Some(v) = o.include_library_nodes {
            self.include_library_nodes = v;
        }
        if let Some(v) = o.verify_hashes {
            self.verify_hashes = v;
        }
        if let Some(v) = o.jobs {
            self.jobs = Some(v);
        }
        if let Some(v) = o.log_level {
            self.log_level = v;
        }
        Ok(())
    }
}
