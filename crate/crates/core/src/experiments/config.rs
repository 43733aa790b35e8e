//! TOML experiment files.
//!
//! ```toml
//! name = "mp-one-memory"      # optional
//! algorithm = "discrete"      # or "continuous"
//! eta = 1e-3
//! gamma = 1e-6
//! steps = 200000
//! record_every = 1000
//! rk4_h = 0.02
//! t_end = 180.0
//! samples = 10
//! seed = 7
//! reference = "auto"          # or { x = [..], y = [..] }
//!
//! [game]
//! name = "matching-pennies"   # or matrix = [[1, -1], [-1, 1]]
//!
//! [memory]
//! n_x = 1
//! n_y = 0
//!
//! [init]                      # optional; random interior start otherwise
//! x = [[0.2, 0.8], [0.3, 0.7], [0.7, 0.3], [0.8, 0.2]]
//! y = [[0.5, 0.5]]
//! ```
//!
//! Omitted learning parameters take the defaults of [`LearnConfig`].

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::game::{GameSpec, MemoryConfig};
use crate::learning::{LearnConfig, Reference};

use super::presets::{builtin_game, default_reference};
use super::{Algorithm, CaseConfig, ExperimentConfig, InitialProfile};

pub const DEFAULT_CONFIG_SEED: u64 = 0;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    name: Option<String>,
    matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemoryFile {
    n_x: usize,
    n_y: usize,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ReferenceFile {
    Keyword(String),
    Vectors { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitFile {
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    name: Option<String>,
    game: GameFile,
    memory: MemoryFile,
    algorithm: Option<Algorithm>,
    eta: Option<f64>,
    gamma: Option<f64>,
    steps: Option<u64>,
    record_every: Option<u64>,
    rk4_h: Option<f64>,
    t_end: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    reference: Option<ReferenceFile>,
    init: Option<InitFile>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;

    let (game_name, game) = match (file.game.name, file.game.matrix) {
        (Some(name), None) => {
            let game = builtin_game(&name)?;
            (name, game)
        }
        (None, Some(rows)) => ("custom".to_string(), GameSpec::from_rows(&rows)?),
        _ => return Err(Error::Config("[game] needs exactly one of `name` or `matrix`".into())),
    };
    let memory = MemoryConfig::new(file.memory.n_x, file.memory.n_y)?;

    let defaults = LearnConfig::default();
    let learn = LearnConfig {
        eta: file.eta.unwrap_or(defaults.eta),
        gamma: file.gamma.unwrap_or(defaults.gamma),
        steps: file.steps.unwrap_or(defaults.steps),
        record_every: file.record_every.unwrap_or(defaults.record_every),
        rk4_h: file.rk4_h.unwrap_or(defaults.rk4_h),
        t_end: file.t_end.unwrap_or(defaults.t_end),
    };

    let reference = match file.reference {
        None => default_reference(&game_name, &game)?,
        Some(ReferenceFile::Keyword(k)) if k == "auto" => default_reference(&game_name, &game)?,
        Some(ReferenceFile::Keyword(k)) => {
            return Err(Error::Config(format!("reference must be \"auto\" or {{ x, y }}, got \"{k}\"")))
        }
        Some(ReferenceFile::Vectors { x, y }) => {
            for v in [&x, &y] {
                let sum: f64 = v.iter().sum();
                if v.iter().any(|&p| !(p > 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("reference {v:?} is not an interior distribution")));
                }
            }
            Reference { x, y }
        }
    };

    let init = match file.init {
        None => InitialProfile::Random,
        Some(InitFile { x, y }) => InitialProfile::Explicit { x, y },
    };

    let name = file.name.unwrap_or_else(|| "custom".to_string());
    let config = ExperimentConfig {
        cases: vec![CaseConfig {
            label: name.clone(),
            game_name,
            game,
            memory,
            algorithm: file.algorithm.unwrap_or(Algorithm::Discrete),
            learn,
            reference,
            init,
        }],
        name,
        samples: file.samples.unwrap_or(1),
        seed: file.seed.unwrap_or(DEFAULT_CONFIG_SEED),
    };
    config.validate().map_err(|e| match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    })?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
