//! Flat `key = value` run configuration.
//!
//! Precedence is defaults, then the config file, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use replyset_core::planner::{PlanMode, PlannerConfig};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Matching,
    Mmr,
    Topic,
    PlannerOnline,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Self::Matching, Self::Mmr, Self::Topic, Self::PlannerOnline];

    pub fn name(self) -> &'static str {
        match self {
            Self::Matching => "matching",
            Self::Mmr => "mmr",
            Self::Topic => "topic",
            Self::PlannerOnline => "planner-online",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (matching | mmr | topic | planner-online)"))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn parse_mode(s: &str) -> Result<PlanMode, String> {
    match s {
        "offline" => Ok(PlanMode::Offline),
        "online" => Ok(PlanMode::Online),
        _ => Err(format!("unknown mode `{s}` (offline | online)")),
    }
}

fn mode_name(m: PlanMode) -> &'static str {
    match m {
        PlanMode::Offline => "offline",
        PlanMode::Online => "online",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub test_corpus: Option<PathBuf>,
    pub pool: Option<PathBuf>,
    pub emb_dir: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub persona: bool,
    pub dim: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub beta: f64,
    pub mode: PlanMode,
    pub strategy: Strategy,
    pub theta: f64,
    pub n_topics: usize,
    pub threads: usize,
    pub batch_size: usize,
    /// Messages used by `bench`; 0 means all.
    pub limit: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PlannerConfig::default();
        Self {
            corpus: None,
            test_corpus: None,
            pool: None,
            emb_dir: None,
            output: None,
            predictions: None,
            persona: false,
            dim: 256,
            seed: p.seed,
            n: p.n_candidates,
            m: p.n_simulations,
            k: p.set_size,
            alpha: p.alpha,
            lambda: p.lambda,
            beta: p.beta,
            mode: PlanMode::Offline,
            strategy: Strategy::Matching,
            theta: 0.5,
            n_topics: 50,
            threads: 1,
            batch_size: 32,
            limit: 0,
        }
    }
}

/// One entry per configuration key: name and help text.
pub const KEYS: &[(&str, &str)] = &[
    ("corpus", "training corpus, JSON lines with context/reply[/persona]"),
    ("test_corpus", "held-out corpus for predict, evaluate and bench"),
    ("pool", "candidate pool file written by ingest"),
    ("emb_dir", "directory holding encoder.json and *.emb matrices"),
    ("output", "output file"),
    ("predictions", "predictions file read by evaluate"),
    ("persona", "prepend the persona lines to each message"),
    ("dim", "built-in encoder dimension (power of two, >= 64)"),
    ("seed", "seed for encoder hashing and topic clustering"),
    ("n", "shortlist size N"),
    ("m", "simulated replies M"),
    ("k", "reply set size K"),
    ("alpha", "query augmentation weight on the message"),
    ("lambda", "redundancy penalty weight"),
    ("beta", "LM bias weight"),
    ("mode", "planning mode for bootstrap: offline | online"),
    ("strategy", "predict strategy: matching | mmr | topic | planner-online"),
    ("theta", "MMR relevance weight"),
    ("n_topics", "topic clusters for the topic strategy"),
    ("threads", "worker threads (never changes output bytes)"),
    ("batch_size", "bench batch size"),
    ("limit", "bench message count, 0 for all"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| CliError::Usage(format!("invalid value `{value}` for {key}: {e}")))
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.replace('-', "_").as_str() {
            "corpus" => self.corpus = path(value),
            "test_corpus" => self.test_corpus = path(value),
            "pool" => self.pool = path(value),
            "emb_dir" => self.emb_dir = path(value),
            "output" => self.output = path(value),
            "predictions" => self.predictions = path(value),
            "persona" => self.persona = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "mode" => self.mode = parse_mode(value).map_err(CliError::Usage)?,
            "strategy" => self.strategy = value.parse().map_err(CliError::Usage)?,
            "theta" => self.theta = parse(key, value)?,
            "n_topics" => self.n_topics = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "limit" => self.limit = parse(key, value)?,
            other => return Err(CliError::Usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let p = |v: &Option<PathBuf>| v.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        match key {
            "corpus" => p(&self.corpus),
            "test_corpus" => p(&self.test_corpus),
            "pool" => p(&self.pool),
            "emb_dir" => p(&self.emb_dir),
            "output" => p(&self.output),
            "predictions" => p(&self.predictions),
            "persona" => self.persona.to_string(),
            "dim" => self.dim.to_string(),
            "seed" => self.seed.to_string(),
            "n" => self.n.to_string(),
            "m" => self.m.to_string(),
            "k" => self.k.to_string(),
            "alpha" => self.alpha.to_string(),
            "lambda" => self.lambda.to_string(),
            "beta" => self.beta.to_string(),
            "mode" => mode_name(self.mode).to_string(),
            "strategy" => self.strategy.to_string(),
            "theta" => self.theta.to_string(),
            "n_topics" => self.n_topics.to_string(),
            "threads" => self.threads.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "limit" => self.limit.to_string(),
            other => panic!("unknown config key {other}"),
        }
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_str(&text)
    }

    /// Serialises every key, so parsing the result reproduces `self`.
    pub fn to_config_string(&self) -> String {
        KEYS.iter().map(|(k, _)| format!("{k} = {}\n", self.get(k))).collect()
    }

    /// Config echo for output headers. Thread count is left out because it
    /// must not change output bytes.
    pub fn echo(&self) -> Value {
        let map: Map<String, Value> = KEYS
            .iter()
            .filter(|(k, _)| *k != "threads")
            .map(|(k, _)| (k.to_string(), Value::String(self.get(k))))
            .collect();
        Value::Object(map)
    }

    pub fn planner(&self) -> PlannerConfig {
        PlannerConfig {
            n_candidates: self.n,
            n_simulations: self.m,
            set_size: self.k,
            alpha: self.alpha,
            lambda: self.lambda,
            beta: self.beta,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.planner().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(CliError::Usage(format!("theta {} outside [0, 1]", self.theta)));
        }
        if self.threads == 0 || self.batch_size == 0 {
            return Err(CliError::Usage("threads and batch_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn require<'a>(&self, key: &str, v: &'a Option<PathBuf>) -> Result<&'a Path> {
        v.as_deref().ok_or_else(|| CliError::Usage(format!("--{} is required", key.replace('_', "-"))))
    }
}
