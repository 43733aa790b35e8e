//! Classification of a single one-memory vs memoryless two-action profile.
//!
//! ```toml
//! x = [0.8, 0.7, 0.3, 0.2]     # X's first-action probabilities per memory state
//! y = 0.5                      # Y's first-action probability
//! game = "matching-pennies"    # or payoff = [u1, u2, u3, u4]
//! tol = 1e-9                   # optional fixed-point tolerance
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{classify_fixed_point, original_nash, OriginalNash, Payoff4, StabilityReport, FIXED_POINT_TOL};
use crate::error::{Error, Result};

use super::presets::builtin_game;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointFile {
    x: Vec<f64>,
    y: f64,
    game: Option<String>,
    payoff: Option<Vec<f64>>,
    tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointAnalysis {
    pub payoff: [f64; 4],
    pub x: [f64; 4],
    pub y: f64,
    pub original_nash: OriginalNash,
    pub report: StabilityReport,
}

pub fn analyze_point_str(text: &str) -> Result<PointAnalysis> {
    let file: PointFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let u = match (file.game, file.payoff) {
        (None, None) => Payoff4::matching_pennies(),
        (Some(name), None) => {
            let game = builtin_game(&name)?;
            let u = game
                .as_payoff4()
                .ok_or_else(|| Error::Config(format!("game '{name}' does not have two actions")))?;
            Payoff4::new(u)?
        }
        (None, Some(p)) => {
            let u: [f64; 4] = p
                .try_into()
                .map_err(|p: Vec<f64>| Error::Config(format!("payoff needs 4 entries, got {}", p.len())))?;
            Payoff4::new(u)?
        }
        (Some(_), Some(_)) => return Err(Error::Config("give either `game` or `payoff`, not both".into())),
    };
    let x: [f64; 4] = file
        .x
        .try_into()
        .map_err(|x: Vec<f64>| Error::Config(format!("x needs 4 entries, got {}", x.len())))?;
    if x.iter().chain([&file.y]).any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidInput(format!("probabilities outside [0, 1]: x = {x:?}, y = {}", file.y)));
    }
    let report = classify_fixed_point(&x, file.y, &u, file.tol.unwrap_or(FIXED_POINT_TOL))?;
    Ok(PointAnalysis {
        payoff: u.values(),
        x,
        y: file.y,
        original_nash: original_nash(&u),
        report,
    })
}

pub fn analyze_point(path: &Path) -> Result<PointAnalysis> {
    analyze_point_str(&std::fs::read_to_string(path)?)
}
