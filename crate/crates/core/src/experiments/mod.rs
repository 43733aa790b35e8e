//! Experiment configuration, multi-sample sweeps, statistics, and output files.
//!
//! Output layout of [`run_experiment`]:
//!
//! ```text
//! <out>/manifest.json
//! <out>/<case label>/sample_000.csv ... sample_NNN.csv
//! <out>/<case label>/stats.csv
//! ```

pub mod config;
pub mod output;
pub mod point;
pub mod presets;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSetup, GameSpec, MemoryConfig, Strategy};
use crate::learning::{run_continuous, run_discretized, LearnConfig, Reference, Trajectory};

pub use config::{load_config, parse_config};
pub use point::{analyze_point, PointAnalysis};
pub use presets::{builtin_game, preset, PRESET_NAMES};

/// A sample counts as converged when its last [`SUSTAIN_RECORDS`] records
/// all have KL below [`CONVERGED_KL`].
pub const CONVERGED_KL: f64 = 1e-4;
pub const SUSTAIN_RECORDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialProfile {
    /// Each row drawn uniformly from the simplex.
    Random,
    Explicit { x: Vec<Vec<f64>>, y: Vec<Vec<f64>> },
}

/// One (game, memory, algorithm) combination of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    /// Subdirectory name of this case's outputs.
    pub label: String,
    /// Built-in game name, or `custom`.
    pub game_name: String,
    pub game: GameSpec,
    pub memory: MemoryConfig,
    pub algorithm: Algorithm,
    pub learn: LearnConfig,
    pub reference: Reference,
    pub init: InitialProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub cases: Vec<CaseConfig>,
    /// Samples per case.
    pub samples: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::Config("experiment has no cases".into()));
        }
        for (i, c) in self.cases.iter().enumerate() {
            if c.label.is_empty() || c.label.contains(['/', '\\']) || c.label.starts_with('.') {
                return Err(Error::Config(format!("invalid case label '{}'", c.label)));
            }
            if self.cases[..i].iter().any(|o| o.label == c.label) {
                return Err(Error::Config(format!("duplicate case label '{}'", c.label)));
            }
            c.learn.validate()?;
            let setup = GameSetup::new(c.game.clone(), c.memory)?;
            let m = c.game.actions();
            if c.reference.x.len() != m || c.reference.y.len() != m {
                return Err(Error::Config(format!("reference of case '{}' needs {m} actions", c.label)));
            }
            if let InitialProfile::Explicit { x, y } = &c.init {
                let (x, y) = (Strategy::from_rows(x)?, Strategy::from_rows(y)?);
                setup.check_strategies(&x, &y)?;
            }
        }
        Ok(())
    }
}

/// RNG of one sample: ChaCha8 keyed by the master seed, on the stream given
/// by the sample index. Independent of the case, so every case of a sweep
/// starts its `i`-th sample from the same random stream.
pub fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

/// Runs one sample of a case.
pub fn run_sample(case: &CaseConfig, seed: u64, sample: usize) -> Result<Trajectory> {
    let setup = GameSetup::new(case.game.clone(), case.memory)?;
    let (x0, y0) = match &case.init {
        InitialProfile::Random => setup.sample_profile(&mut sample_rng(seed, sample)),
        InitialProfile::Explicit { x, y } => (Strategy::from_rows(x)?, Strategy::from_rows(y)?),
    };
    match case.algorithm {
        Algorithm::Discrete => run_discretized(&x0, &y0, &setup, &case.learn, &case.reference),
        Algorithm::Continuous => run_continuous(&x0, &y0, &setup, &case.learn, &case.reference),
    }
}

/// Runs samples `0..samples` of a case in parallel; results are in sample order.
pub fn run_case(case: &CaseConfig, seed: u64, samples: usize) -> Vec<Result<Trajectory>> {
    (0..samples)
        .into_par_iter()
        .map(|i| run_sample(case, seed, i))
        .collect()
}

/// Are the last [`SUSTAIN_RECORDS`] records all below [`CONVERGED_KL`]?
pub fn is_converged(traj: &Trajectory) -> bool {
    let kl = traj.kl_series();
    let tail = &kl[kl.len().saturating_sub(SUSTAIN_RECORDS)..];
    tail.iter().all(|&k| k < CONVERGED_KL)
}

/// Cross-sample KL statistics on a shared time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub time: Vec<f64>,
    pub kl_mean: Vec<f64>,
    /// Population standard deviation (divisor `n`).
    pub kl_std: Vec<f64>,
    pub n_samples: usize,
}

/// Mean and population std of KL over samples, per recorded time.
pub fn aggregate_stats(trajectories: &[&Trajectory]) -> Result<SweepStats> {
    let Some(first) = trajectories.first() else {
        return Ok(SweepStats {
            time: Vec::new(),
            kl_mean: Vec::new(),
            kl_std: Vec::new(),
            n_samples: 0,
        });
    };
    let time: Vec<f64> = first.records.iter().map(|r| r.time).collect();
    for t in trajectories {
        if t.records.len() != time.len() || t.records.iter().zip(&time).any(|(r, &s)| r.time != s) {
            return Err(Error::InvalidInput("samples were recorded on different time grids".into()));
        }
    }
    let n = trajectories.len() as f64;
    let mut kl_mean = Vec::with_capacity(time.len());
    let mut kl_std = Vec::with_capacity(time.len());
    for k in 0..time.len() {
        let mean = trajectories.iter().map(|t| t.records[k].kl).sum::<f64>() / n;
        let var = trajectories
            .iter()
            .map(|t| (t.records[k].kl - mean).powi(2))
            .sum::<f64>()
            / n;
        kl_mean.push(mean);
        kl_std.push(var.sqrt());
    }
    Ok(SweepStats {
        time,
        kl_mean,
        kl_std,
        n_samples: trajectories.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub index: usize,
    /// Trajectory file, relative to the output root; absent on failure.
    pub file: Option<String>,
    pub converged: Option<bool>,
    pub final_kl: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseOutcome {
    pub label: String,
    pub samples: Vec<SampleSummary>,
    pub stats: SweepStats,
}

impl CaseOutcome {
    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| s.error.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub out_dir: PathBuf,
    pub cases: Vec<CaseOutcome>,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> usize {
        self.cases.iter().map(CaseOutcome::failures).sum()
    }
}

/// Runs every case, writing trajectories, per-case statistics, and the
/// manifest under `out_dir`. Failed samples are logged and recorded in the
/// manifest; the remaining samples still run.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut cases = Vec::with_capacity(config.cases.len());
    for case in &config.cases {
        log::info!("case {}: {} samples", case.label, config.samples);
        let case_dir = out_dir.join(&case.label);
        std::fs::create_dir_all(&case_dir)?;
        let written: Vec<(usize, Result<Trajectory>)> = (0..config.samples)
            .into_par_iter()
            .map(|i| {
                let res = run_sample(case, config.seed, i).and_then(|traj| {
                    output::write_trajectory_csv(&case_dir.join(sample_file_name(i)), &traj)?;
                    Ok(traj)
                });
                (i, res)
            })
            .collect();

        let mut summaries = Vec::with_capacity(written.len());
        let mut ok = Vec::new();
        for (i, res) in written {
            match res {
                Ok(traj) => {
                    summaries.push(SampleSummary {
                        index: i,
                        file: Some(format!("{}/{}", case.label, sample_file_name(i))),
                        converged: Some(is_converged(&traj)),
                        final_kl: Some(traj.last().kl),
                        error: None,
                    });
                    ok.push(traj);
                }
                Err(e @ Error::Io(_)) => return Err(e),
                Err(e) => {
                    log::warn!("case {} sample {i} failed: {e}", case.label);
                    summaries.push(SampleSummary {
                        index: i,
                        file: None,
                        converged: None,
                        final_kl: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
        let stats = aggregate_stats(&ok.iter().collect::<Vec<_>>())?;
        output::write_stats_csv(&case_dir.join("stats.csv"), &stats)?;
        cases.push(CaseOutcome {
            label: case.label.clone(),
            samples: summaries,
            stats,
        });
    }
    output::write_manifest(&out_dir.join("manifest.json"), config, &cases)?;
    Ok(ExperimentOutcome {
        out_dir: out_dir.to_path_buf(),
        cases,
    })
}

pub fn sample_file_name(index: usize) -> String {
    format!("sample_{index:03}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::{Mode, Record};

    fn traj(kls: &[f64]) -> Trajectory {
        let x = Strategy::uniform(1, 2);
        Trajectory {
            mode: Mode::Discrete,
            records: kls
                .iter()
                .enumerate()
                .map(|(i, &kl)| Record {
                    step: i as u64,
                    time: i as f64,
                    x: x.clone(),
                    y: x.clone(),
                    x_marg: vec![0.5, 0.5],
                    y_marg: vec![0.5, 0.5],
                    u_st: 0.0,
                    kl,
                    indicator: None,
                })
                .collect(),
        }
    }

    #[test]
    fn population_std() {
        let a = traj(&[1.0, 2.0]);
        let b = traj(&[3.0, 2.0]);
        let s = aggregate_stats(&[&a, &b]).unwrap();
        assert_eq!(s.kl_mean, vec![2.0, 2.0]);
        assert_eq!(s.kl_std, vec![1.0, 0.0]);
        assert_eq!(s.n_samples, 2);
        assert_eq!(s.time, vec![0.0, 1.0]);
    }

    #[test]
    fn empty_stats() {
        let s = aggregate_stats(&[]).unwrap();
        assert!(s.time.is_empty() && s.kl_mean.is_empty());
        assert_eq!(s.n_samples, 0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = traj(&[1.0, 2.0]);
        let b = traj(&[1.0]);
        assert!(aggregate_stats(&[&a, &b]).is_err());
    }

    #[test]
    fn convergence_needs_a_sustained_tail() {
        let mut kls = vec![1.0; 5];
        kls.extend([1e-5; 10]);
        assert!(is_converged(&traj(&kls)));
        kls[6] = 2e-4;
        assert!(!is_converged(&traj(&kls)));
        assert!(is_converged(&traj(&[5e-5, 1e-5])));
    }

    #[test]
    fn sample_streams_differ_but_repeat() {
        use rand::Rng;
        let a: u64 = sample_rng(7, 0).random();
        let b: u64 = sample_rng(7, 1).random();
        let c: u64 = sample_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = preset("fig4a").unwrap();
        cfg.cases[0].label = "../x".into();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = preset("fig4a").unwrap();
        cfg.cases[0].learn.eta = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = preset("fig4a").unwrap();
        cfg.cases.push(cfg.cases[0].clone());
        assert!(cfg.validate().is_err());
        let mut cfg = preset("fig4a").unwrap();
        cfg.cases[0].init = InitialProfile::Explicit {
            x: vec![vec![0.5, 0.5]],
            y: vec![vec![0.5, 0.5]],
        };
        assert!(matches!(cfg.validate(), Err(Error::Dimension(_))));
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
    }
}
