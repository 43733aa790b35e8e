//! Built-in games and the experiment presets.

use crate::analytic::{original_nash, Payoff4};
use crate::error::{Error, Result};
use crate::game::{GameSpec, MemoryConfig};
use crate::learning::{LearnConfig, Reference};

use super::{Algorithm, CaseConfig, ExperimentConfig, InitialProfile};

pub const GAME_NAMES: [&str; 3] = ["matching-pennies", "rps", "erps"];

pub const PRESET_NAMES: [&str; 10] = [
    "fig1_left",
    "fig1_center",
    "fig1_right",
    "fig3",
    "fig4a",
    "fig4b",
    "fig4c",
    "fig5a",
    "fig5b",
    "figA1",
];

/// Default master seed of every preset.
pub const DEFAULT_SEED: u64 = 20230522;

/// Discrete iterations for two-action games with a memoryless Y.
pub const SHORT_RUN_STEPS: u64 = 200_000;
/// Discrete iterations when both players remember, or with more than two actions.
pub const LONG_RUN_STEPS: u64 = 1_000_000;

/// `matching-pennies`, `rps` (rock-paper-scissors) or `erps` (four-action
/// extended rock-paper-scissors).
///
/// In `erps` each action beats the one before it, loses to the one two
/// before it and ties the rest. The perhaps more obvious antisymmetric
/// variant `f = (0, 1, 0, -1)` has a singular payoff matrix: its equilibria
/// form the line `(a, b, a, b)` and learning stops wherever it meets that
/// line, not at the uniform profile.
pub fn builtin_game(name: &str) -> Result<GameSpec> {
    match name {
        "matching-pennies" | "mp" => GameSpec::new(2, vec![1.0, -1.0, -1.0, 1.0]),
        "rps" => cyclic_game(&[0.0, 1.0, -1.0]),
        "erps" => cyclic_game(&[0.0, 1.0, -1.0, 0.0]),
        other => Err(Error::Config(format!(
            "unknown game '{other}'; expected one of {GAME_NAMES:?}"
        ))),
    }
}

/// `u_ij = f((i - j) mod m)`: action `i` scores `f(k)` against the action `k`
/// places before it.
pub(crate) fn cyclic_game(f: &[f64]) -> Result<GameSpec> {
    let m = f.len();
    let payoff = (0..m)
        .flat_map(|i| (0..m).map(move |j| f[(i + m - j) % m]))
        .collect();
    GameSpec::new(m, payoff)
}

/// Equilibrium marginals used as the KL reference when none is given:
/// uniform for the built-in games, the closed form for other two-action games.
pub fn default_reference(game_name: &str, game: &GameSpec) -> Result<Reference> {
    if GAME_NAMES.contains(&game_name) || game_name == "mp" {
        return Ok(Reference::uniform(game.actions()));
    }
    match game.as_payoff4() {
        Some(u) => {
            let nash = original_nash(&Payoff4::new(u)?);
            Ok(Reference {
                x: vec![nash.x_o, 1.0 - nash.x_o],
                y: vec![nash.y_o, 1.0 - nash.y_o],
            })
        }
        None => Err(Error::Config(
            "games with more than two actions need an explicit reference equilibrium".into(),
        )),
    }
}

fn discrete(steps: u64) -> LearnConfig {
    LearnConfig {
        steps,
        record_every: steps / 200,
        ..LearnConfig::default()
    }
}

fn case(label: &str, game_name: &str, n_x: usize, n_y: usize, algorithm: Algorithm, learn: LearnConfig) -> Result<CaseConfig> {
    let game = builtin_game(game_name)?;
    Ok(CaseConfig {
        label: label.to_string(),
        game_name: game_name.to_string(),
        reference: default_reference(game_name, &game)?,
        game,
        memory: MemoryConfig::new(n_x, n_y)?,
        algorithm,
        learn,
        init: InitialProfile::Random,
    })
}

/// Unstable fixed point of matching pennies (`x^st = 1/2`, indicator `-0.15`)
/// with Y's strategy displaced by `1e-2`.
pub const FIG3_START_X: [f64; 4] = [0.2, 0.3, 0.7, 0.8];
pub const FIG3_START_Y: f64 = 0.51;

/// Memory pairs and games of the many-sample sweep.
pub fn sweep_cases() -> Result<Vec<CaseConfig>> {
    Ok(vec![
        case("m2_nx1_ny0", "matching-pennies", 1, 0, Algorithm::Discrete, discrete(SHORT_RUN_STEPS))?,
        case("m2_nx2_ny0", "matching-pennies", 2, 0, Algorithm::Discrete, discrete(SHORT_RUN_STEPS))?,
        case("m2_nx2_ny1", "matching-pennies", 2, 1, Algorithm::Discrete, discrete(LONG_RUN_STEPS))?,
        case("m3_nx1_ny0", "rps", 1, 0, Algorithm::Discrete, discrete(LONG_RUN_STEPS))?,
        case("m4_nx1_ny0", "erps", 1, 0, Algorithm::Discrete, discrete(LONG_RUN_STEPS))?,
    ])
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let single = |c: CaseConfig, samples: usize| ExperimentConfig {
        name: name.to_string(),
        cases: vec![c],
        samples,
        seed: DEFAULT_SEED,
    };
    let mp = "matching-pennies";
    let config = match name {
        "fig1_left" => {
            let learn = LearnConfig {
                t_end: 100.0,
                record_every: 25,
                ..LearnConfig::default()
            };
            single(case("no_memory", mp, 0, 0, Algorithm::Continuous, learn)?, 1)
        }
        "fig1_center" => single(
            case("symmetric_memory", mp, 1, 1, Algorithm::Discrete, discrete(SHORT_RUN_STEPS))?,
            1,
        ),
        "fig1_right" => single(
            case("asymmetric_memory", mp, 1, 0, Algorithm::Discrete, discrete(SHORT_RUN_STEPS))?,
            1,
        ),
        "fig3" => {
            let learn = LearnConfig {
                record_every: 25,
                ..LearnConfig::default()
            };
            let mut c = case("escape_then_converge", mp, 1, 0, Algorithm::Continuous, learn)?;
            c.init = InitialProfile::Explicit {
                x: FIG3_START_X.iter().map(|&p| vec![p, 1.0 - p]).collect(),
                y: vec![vec![FIG3_START_Y, 1.0 - FIG3_START_Y]],
            };
            single(c, 1)
        }
        "fig4a" => single(case("nx1_ny0", mp, 1, 0, Algorithm::Discrete, discrete(SHORT_RUN_STEPS))?, 10),
        "fig4b" => single(case("nx2_ny0", mp, 2, 0, Algorithm::Discrete, discrete(SHORT_RUN_STEPS))?, 10),
        "fig4c" => single(case("nx2_ny1", mp, 2, 1, Algorithm::Discrete, discrete(LONG_RUN_STEPS))?, 2),
        "fig5a" => single(case("rps", "rps", 1, 0, Algorithm::Discrete, discrete(LONG_RUN_STEPS))?, 4),
        "fig5b" => single(case("erps", "erps", 1, 0, Algorithm::Discrete, discrete(LONG_RUN_STEPS))?, 4),
        "figA1" => ExperimentConfig {
            name: name.to_string(),
            cases: sweep_cases()?,
            samples: 50,
            seed: DEFAULT_SEED,
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}'; expected one of {PRESET_NAMES:?}"
            )))
        }
    };
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn best_response_values(game: &GameSpec, y: &[f64]) -> Vec<f64> {
        let m = game.actions();
        (0..m)
            .map(|a| (0..m).map(|b| game.payoff_x(a, b) * y[b]).sum())
            .collect()
    }

    #[test]
    fn all_presets_resolve() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            assert!(!cfg.cases.is_empty(), "{name}");
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn preset_values() {
        assert_eq!(preset("figA1").unwrap().samples, 50);
        assert_eq!(preset("figA1").unwrap().cases.len(), 5);
        let fig4a = preset("fig4a").unwrap();
        assert_eq!(fig4a.cases[0].memory, MemoryConfig { n_x: 1, n_y: 0 });
        assert_eq!(fig4a.samples, 10);
        assert_eq!(preset("fig4b").unwrap().cases[0].memory, MemoryConfig { n_x: 2, n_y: 0 });
        let fig4c = preset("fig4c").unwrap();
        assert_eq!(fig4c.cases[0].memory, MemoryConfig { n_x: 2, n_y: 1 });
        assert_eq!(fig4c.samples, 2);
        let fig3 = preset("fig3").unwrap();
        assert_eq!(fig3.cases[0].learn.rk4_h, 0.02);
        assert_eq!(fig3.cases[0].learn.t_end, 180.0);
        assert_eq!(fig3.cases[0].algorithm, Algorithm::Continuous);
        assert_eq!(preset("fig5a").unwrap().cases[0].game.actions(), 3);
        assert_eq!(preset("fig5b").unwrap().cases[0].game.actions(), 4);
        assert_eq!(preset("fig5b").unwrap().samples, 4);
        assert_eq!(preset("fig1_left").unwrap().cases[0].memory, MemoryConfig { n_x: 0, n_y: 0 });
        assert_eq!(preset("fig1_center").unwrap().cases[0].memory, MemoryConfig { n_x: 1, n_y: 1 });
        assert_eq!(preset("fig1_right").unwrap().cases[0].memory, MemoryConfig { n_x: 1, n_y: 0 });
    }

    #[test]
    fn learning_hyperparameters() {
        let c = &preset("fig4b").unwrap().cases[0];
        assert_eq!((c.learn.eta, c.learn.gamma), (1e-3, 1e-6));
    }

    #[test]
    fn matching_pennies_equilibrium_is_half() {
        let g = builtin_game("matching-pennies").unwrap();
        assert_eq!(g.matrix(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let n = original_nash(&Payoff4::new(g.as_payoff4().unwrap()).unwrap());
        assert_eq!((n.x_o, n.y_o), (0.5, 0.5));
    }

    #[test]
    fn rps_matrix() {
        let g = builtin_game("rps").unwrap();
        // rows: X's action; each action beats the one before it cyclically
        for i in 0..3 {
            assert_eq!(g.payoff_x(i, i), 0.0);
            assert_eq!(g.payoff_x((i + 1) % 3, i), 1.0);
            assert_eq!(g.payoff_x(i, (i + 1) % 3), -1.0);
        }
    }

    #[test]
    fn uniform_is_an_equilibrium_of_the_cyclic_games() {
        for name in ["rps", "erps"] {
            let g = builtin_game(name).unwrap();
            let m = g.actions();
            let uniform = vec![1.0 / m as f64; m];
            // X is indifferent across its pure replies to uniform Y and vice versa
            for v in best_response_values(&g, &uniform) {
                assert!(v.abs() < 1e-15, "{name}");
            }
            for b in 0..m {
                let v: f64 = (0..m).map(|a| g.payoff_y(a, b) * uniform[a]).sum();
                assert!(v.abs() < 1e-15, "{name}");
            }
        }
    }

    #[test]
    fn rps_is_antisymmetric() {
        let g = builtin_game("rps").unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(g.payoff_x(a, b), -g.payoff_x(b, a));
            }
        }
    }

    fn null_space_dim(g: &GameSpec) -> usize {
        let m = g.actions();
        let u = nalgebra::DMatrix::from_fn(m, m, |a, b| g.payoff_x(a, b));
        u.singular_values().iter().filter(|&&s| s < 1e-12).count()
    }

    #[test]
    fn cyclic_games_have_a_unique_interior_equilibrium() {
        // rows and columns sum to zero, so uniform is an equilibrium; it is
        // the only one when the all-ones vector spans the null space
        for name in ["rps", "erps"] {
            assert_eq!(null_space_dim(&builtin_game(name).unwrap()), 1, "{name}");
        }
        let antisymmetric = cyclic_game(&[0.0, 1.0, 0.0, -1.0]).unwrap();
        assert_eq!(null_space_dim(&antisymmetric), 2);
        // (a, b, a, b) is then an equilibrium for every a + b = 1/2
        let x = [0.4, 0.1, 0.4, 0.1];
        for b in 0..4 {
            let v: f64 = (0..4).map(|a| antisymmetric.payoff_y(a, b) * x[a]).sum();
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn erps_matrix() {
        let g = builtin_game("erps").unwrap();
        assert_eq!(
            g.matrix(),
            vec![
                vec![0.0, 0.0, -1.0, 1.0],
                vec![1.0, 0.0, 0.0, -1.0],
                vec![-1.0, 1.0, 0.0, 0.0],
                vec![0.0, -1.0, 1.0, 0.0],
            ]
        );
    }

    #[test]
    fn default_references() {
        let mp = builtin_game("matching-pennies").unwrap();
        assert_eq!(default_reference("matching-pennies", &mp).unwrap(), Reference::uniform(2));
        let g = GameSpec::new(2, vec![2.0, -1.0, -1.0, 0.0]).unwrap();
        let r = default_reference("custom", &g).unwrap();
        assert_eq!(r.x, vec![0.25, 0.75]);
        let big = GameSpec::new(3, vec![0.0; 9]).unwrap();
        assert!(default_reference("custom", &big).is_err());
        assert!(builtin_game("chess").is_err());
    }
}
