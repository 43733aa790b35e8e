//! CSV and manifest writers.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::game::MemoryConfig;
use crate::learning::{LearnConfig, Mode, Reference, Trajectory};

use super::{
    Algorithm, CaseOutcome, ExperimentConfig, InitialProfile, SampleSummary, SweepStats, CONVERGED_KL,
    SUSTAIN_RECORDS,
};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column names of a trajectory CSV.
pub fn trajectory_header(traj: &Trajectory) -> Vec<String> {
    let first = &traj.records[0];
    let m = first.x.actions();
    let mut cols = vec![
        match traj.mode {
            Mode::Discrete => "step",
            Mode::Continuous => "t",
        }
        .to_string(),
        "u_st".into(),
        "kl".into(),
    ];
    cols.extend((0..m).map(|a| format!("x_marg_{a}")));
    cols.extend((0..m).map(|b| format!("y_marg_{b}")));
    for s in 0..first.x.rows() {
        cols.extend((0..m).map(|a| format!("x_s{s}_a{a}")));
    }
    for s in 0..first.y.rows() {
        cols.extend((0..m).map(|b| format!("y_s{s}_b{b}")));
    }
    if traj.mode == Mode::Continuous && first.indicator.is_some() {
        cols.push("indicator".into());
    }
    cols
}

pub fn write_trajectory<W: Write>(w: &mut W, traj: &Trajectory) -> Result<()> {
    let header = trajectory_header(traj);
    writeln!(w, "{}", header.join(","))?;
    let with_indicator = header.last().is_some_and(|c| c == "indicator");
    for r in &traj.records {
        let mut fields = vec![match traj.mode {
            Mode::Discrete => r.step.to_string(),
            Mode::Continuous => fmt_f64(r.time),
        }];
        fields.push(fmt_f64(r.u_st));
        fields.push(fmt_f64(r.kl));
        fields.extend(r.x_marg.iter().chain(&r.y_marg).map(|&v| fmt_f64(v)));
        fields.extend(r.x.as_slice().iter().chain(r.y.as_slice()).map(|&v| fmt_f64(v)));
        if with_indicator {
            fields.push(fmt_f64(r.indicator.unwrap_or(f64::NAN)));
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trajectory(&mut w, traj)?;
    w.flush()?;
    Ok(())
}

pub const STATS_HEADER: &str = "time,kl_mean,kl_std,n_samples";

pub fn write_stats<W: Write>(w: &mut W, stats: &SweepStats) -> Result<()> {
    writeln!(w, "{STATS_HEADER}")?;
    for k in 0..stats.time.len() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(stats.time[k]),
            fmt_f64(stats.kl_mean[k]),
            fmt_f64(stats.kl_std[k]),
            stats.n_samples
        )?;
    }
    Ok(())
}

pub fn write_stats_csv(path: &Path, stats: &SweepStats) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_stats(&mut w, stats)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub name: &'a str,
    pub library_version: &'a str,
    pub seed: u64,
    pub samples: usize,
    pub rng: &'static str,
    pub std_convention: &'static str,
    pub converged_kl: f64,
    pub converged_sustain_records: usize,
    pub cases: Vec<ManifestCase<'a>>,
}

#[derive(Debug, Serialize)]
pub struct ManifestCase<'a> {
    pub label: &'a str,
    pub game_name: &'a str,
    pub payoff_x: Vec<Vec<f64>>,
    pub memory: MemoryConfig,
    pub algorithm: Algorithm,
    pub learn: LearnConfig,
    pub reference: &'a Reference,
    pub init: &'a InitialProfile,
    pub failures: usize,
    pub sample_results: &'a [SampleSummary],
}

pub fn manifest<'a>(config: &'a ExperimentConfig, cases: &'a [CaseOutcome]) -> Manifest<'a> {
    Manifest {
        name: &config.name,
        library_version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        samples: config.samples,
        rng: "ChaCha8 seeded from `seed`, stream = sample index; rows drawn uniformly from the simplex",
        std_convention: "population",
        converged_kl: CONVERGED_KL,
        converged_sustain_records: SUSTAIN_RECORDS,
        cases: config
            .cases
            .iter()
            .zip(cases)
            .map(|(c, o)| ManifestCase {
                label: &c.label,
                game_name: &c.game_name,
                payoff_x: c.game.matrix(),
                memory: c.memory,
                algorithm: c.algorithm,
                learn: c.learn,
                reference: &c.reference,
                init: &c.init,
                failures: o.failures(),
                sample_results: &o.samples,
            })
            .collect(),
    }
}

pub fn write_manifest(path: &Path, config: &ExperimentConfig, cases: &[CaseOutcome]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &manifest(config, cases))
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
