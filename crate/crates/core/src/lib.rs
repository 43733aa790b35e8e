//! Learning dynamics of two players with memories of different lengths in
//! zero-sum games.
//!
//! - [`game`]: games, memory states and strategy tables.
//! - [`markov`]: the induced Markov chain and its stationary state.
//! - [`analytic`]: closed forms for the two-action, one-memory vs zero-memory game.
//! - [`learning`]: discretized and continuous-time multi-memory gradient ascent.
//! - [`experiments`]: presets, multi-sample sweeps and file output.

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod game;
pub mod learning;
pub mod markov;

pub use error::{Error, Result};
pub use game::{GameSetup, GameSpec, MemoryConfig, StateId, StateSpace, Strategy};
pub use learning::{LearnConfig, Reference, Trajectory};
