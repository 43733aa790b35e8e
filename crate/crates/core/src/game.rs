//! Games, memory configurations, memory-state spaces and strategy tables.
//!
//! A memory state is a string of joint actions `(a, b)`, newest pair first.
//! Pair `(a, b)` is the digit `a * m + b`; a state of length `n` is the
//! base-`m²` number whose most significant digit is the newest pair. With this
//! layout the successor of a state is a shift-and-add and projecting onto the
//! newest `k` pairs is an integer division.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower/upper clamp applied to every strategy entry after normalization.
pub const INTERIOR_EPS: f64 = 1e-12;

/// Default cap on the number of memory states.
pub const DEFAULT_MAX_STATES: usize = 65_536;

/// A two-player zero-sum normal-form game with `m` actions per player.
///
/// Only X's payoff is stored; Y's payoff is always the negation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    m: usize,
    payoff: Vec<f64>,
}

impl GameSpec {
    /// Builds a game from X's payoff matrix in row-major order (`u[a * m + b]`).
    pub fn new(m: usize, payoff: Vec<f64>) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!("action count must be >= 2, got {m}")));
        }
        if payoff.len() != m * m {
            return Err(Error::Dimension(format!(
                "payoff matrix has {} entries, expected {}",
                payoff.len(),
                m * m
            )));
        }
        if payoff.iter().any(|u| !u.is_finite()) {
            return Err(Error::Config("payoff matrix has non-finite entries".into()));
        }
        Ok(Self { m, payoff })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("payoff matrix must be square".into()));
        }
        Self::new(m, rows.concat())
    }

    pub fn actions(&self) -> usize {
        self.m
    }

    /// X's payoff `u_ab`.
    #[inline]
    pub fn payoff_x(&self, a: usize, b: usize) -> f64 {
        self.payoff[a * self.m + b]
    }

    /// Y's payoff `v_ab = -u_ab`.
    #[inline]
    pub fn payoff_y(&self, a: usize, b: usize) -> f64 {
        -self.payoff_x(a, b)
    }

    /// X's payoff indexed by pair digit `a * m + b`.
    #[inline]
    pub fn payoff_of_pair(&self, pair: usize) -> f64 {
        self.payoff[pair]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.payoff.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// `(u_11, u_12, u_21, u_22)` for two-action games.
    pub fn as_payoff4(&self) -> Option<[f64; 4]> {
        (self.m == 2).then(|| [self.payoff[0], self.payoff[1], self.payoff[2], self.payoff[3]])
    }

    /// Checks that a two-action game has its equilibrium in the interior:
    /// `u_11` and `u_22` both strictly exceed `u_12` and `u_21`.
    pub fn validate_interior_2x2(&self) -> Result<()> {
        let u = self
            .as_payoff4()
            .ok_or_else(|| Error::InvalidInput(format!("expected a 2-action game, got m = {}", self.m)))?;
        let ok = u[0] > u[1] && u[0] > u[2] && u[3] > u[1] && u[3] > u[2];
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "payoffs {u:?} do not have an interior equilibrium (need u1, u4 > u2, u3)"
            )))
        }
    }
}

/// Memory lengths of the two players. X is the longer-memory player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryConfig {
    pub n_x: usize,
    pub n_y: usize,
}

impl MemoryConfig {
    /// `n_x == n_y` is accepted for the symmetric-memory scenario.
    pub fn new(n_x: usize, n_y: usize) -> Result<Self> {
        if n_x < n_y {
            return Err(Error::Config(format!(
                "X must have the longer memory: n_x = {n_x} < n_y = {n_y}"
            )));
        }
        Ok(Self { n_x, n_y })
    }
}

/// Code of a memory state in a [`StateSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub usize);

impl StateId {
    /// The single state of an empty memory.
    pub const SENTINEL: StateId = StateId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

/// All joint-action strings of a fixed length `n` over `m` actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    m: usize,
    len_pairs: usize,
    size: usize,
}

impl StateSpace {
    pub fn new(m: usize, len_pairs: usize) -> Result<Self> {
        Self::with_cap(m, len_pairs, DEFAULT_MAX_STATES)
    }

    pub fn with_cap(m: usize, len_pairs: usize, cap: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!("action count must be >= 2, got {m}")));
        }
        let states = (m as u128)
            .checked_pow(2 * len_pairs as u32)
            .unwrap_or(u128::MAX);
        if states > cap as u128 {
            return Err(Error::StateSpaceTooLarge { states, cap });
        }
        Ok(Self {
            m,
            len_pairs,
            size: states as usize,
        })
    }

    pub fn actions(&self) -> usize {
        self.m
    }

    /// Number of remembered pairs.
    pub fn memory(&self) -> usize {
        self.len_pairs
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.size).map(StateId)
    }

    #[inline]
    fn base(&self) -> usize {
        self.m * self.m
    }

    /// Encodes a pair sequence, newest first.
    pub fn encode(&self, pairs: &[(usize, usize)]) -> Result<StateId> {
        if pairs.len() != self.len_pairs {
            return Err(Error::Dimension(format!(
                "state needs {} pairs, got {}",
                self.len_pairs,
                pairs.len()
            )));
        }
        let mut code = 0;
        for &(a, b) in pairs {
            if a >= self.m || b >= self.m {
                return Err(Error::InvalidInput(format!("action out of range in pair ({a}, {b})")));
            }
            code = code * self.base() + a * self.m + b;
        }
        Ok(StateId(code))
    }

    /// Decodes a state into its pair sequence, newest first.
    pub fn decode(&self, s: StateId) -> Vec<(usize, usize)> {
        let base = self.base();
        let mut digits = Vec::with_capacity(self.len_pairs);
        let mut code = s.0;
        for _ in 0..self.len_pairs {
            digits.push(code % base);
            code /= base;
        }
        digits
            .into_iter()
            .rev()
            .map(|d| (d / self.m, d % self.m))
            .collect()
    }

    /// State after playing `(a, b)`: the new pair is prepended and the oldest dropped.
    #[inline]
    pub fn successor(&self, s: StateId, a: usize, b: usize) -> StateId {
        if self.len_pairs == 0 {
            return StateId::SENTINEL;
        }
        let top = self.size / self.base();
        StateId((a * self.m + b) * top + s.0 / self.base())
    }

    /// The newest `n` pairs of `s`, as a code in the length-`n` space.
    #[inline]
    pub fn project(&self, s: StateId, n: usize) -> StateId {
        assert!(
            n <= self.len_pairs,
            "cannot project a {}-pair state onto {n} pairs",
            self.len_pairs
        );
        let dropped = self.base().pow((self.len_pairs - n) as u32);
        StateId(s.0 / dropped)
    }
}

/// The `m^(2 n_x)` memory states X conditions on, in ascending code order.
pub fn enumerate_states(mem: MemoryConfig, m: usize) -> Result<Vec<StateId>> {
    Ok(StateSpace::new(m, mem.n_x)?.states().collect())
}

/// A stack of probability simplices: one row of `m` action probabilities per
/// memory state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    m: usize,
    data: Vec<f64>,
}

impl Strategy {
    pub fn uniform(rows: usize, m: usize) -> Self {
        Self {
            m,
            data: vec![1.0 / m as f64; rows * m],
        }
    }

    /// Builds a strategy from rows that must already be probability vectors
    /// (within `1e-9`); rows are then normalized and clamped to the interior.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if m < 2 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("strategy rows must share a length >= 2".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            let sum: f64 = r.iter().sum();
            if r.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("row {i} is not a probability vector: {r:?}")));
            }
        }
        Ok(Self::from_weights(m, rows.concat()))
    }

    /// Two-action strategy from the probabilities of the first action.
    pub fn from_first_action(probs: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = probs.iter().map(|&p| vec![p, 1.0 - p]).collect();
        Self::from_rows(&rows)
    }

    /// Normalizes non-negative weights row by row, then clamps into the interior.
    pub fn from_weights(m: usize, mut data: Vec<f64>) -> Self {
        assert!(m >= 1 && data.len() % m == 0, "weights do not tile rows of {m}");
        for row in data.chunks_mut(m) {
            normalize_interior(row);
        }
        Self { m, data }
    }

    pub fn actions(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.m
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    #[inline]
    pub fn prob(&self, row: usize, action: usize) -> f64 {
        self.data[row * self.m + action]
    }

    /// Row-major flattened table.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// Probabilities of the first action per row (the usual two-action notation).
    pub fn first_action(&self) -> Vec<f64> {
        self.data.chunks(self.m).map(|r| r[0]).collect()
    }

    /// Each row drawn uniformly from the simplex (symmetric Dirichlet with unit
    /// concentration), then clamped and renormalized.
    pub fn sample_interior<R: Rng + ?Sized>(rng: &mut R, rows: usize, m: usize) -> Self {
        let data = (0..rows * m)
            .map(|_| {
                let e: f64 = Exp1.sample(rng);
                e
            })
            .collect();
        Self::from_weights(m, data)
    }
}

/// Normalizes a row to sum one and clamps it into `[eps, 1 - eps]`.
pub(crate) fn normalize_interior(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= sum;
    }
    if row.iter().any(|&p| p < INTERIOR_EPS || p > 1.0 - INTERIOR_EPS) {
        for p in row.iter_mut() {
            *p = p.clamp(INTERIOR_EPS, 1.0 - INTERIOR_EPS);
        }
        let sum: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= sum;
        }
    }
}

/// A game together with the memory configuration, and the state spaces the
/// Markov chain and both players work on.
///
/// The chain always remembers at least the last joint action, since the
/// per-round payoff is read off the newest pair. With `n_x = 0` X's single
/// strategy row is shared by every chain state.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSetup {
    game: GameSpec,
    mem: MemoryConfig,
    chain: StateSpace,
    x_space: StateSpace,
    y_space: StateSpace,
}

impl GameSetup {
    pub fn new(game: GameSpec, mem: MemoryConfig) -> Result<Self> {
        let m = game.actions();
        let chain = StateSpace::new(m, mem.n_x.max(1))?;
        let x_space = StateSpace::new(m, mem.n_x)?;
        let y_space = StateSpace::new(m, mem.n_y)?;
        Ok(Self {
            game,
            mem,
            chain,
            x_space,
            y_space,
        })
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn memory(&self) -> MemoryConfig {
        self.mem
    }

    pub fn actions(&self) -> usize {
        self.game.actions()
    }

    pub fn chain_space(&self) -> &StateSpace {
        &self.chain
    }

    pub fn x_space(&self) -> &StateSpace {
        &self.x_space
    }

    pub fn y_space(&self) -> &StateSpace {
        &self.y_space
    }

    /// Row of X's strategy used in chain state `s`.
    #[inline]
    pub fn x_row(&self, s: StateId) -> usize {
        self.chain.project(s, self.mem.n_x).0
    }

    /// Row of Y's strategy used in chain state `s`.
    #[inline]
    pub fn y_row(&self, s: StateId) -> usize {
        self.chain.project(s, self.mem.n_y).0
    }

    /// Is this the one-memory vs zero-memory two-action setting with an
    /// interior equilibrium, where closed forms exist?
    pub fn is_analytic_2x2(&self) -> bool {
        self.mem == MemoryConfig { n_x: 1, n_y: 0 } && self.game.validate_interior_2x2().is_ok()
    }

    pub fn check_strategies(&self, x: &Strategy, y: &Strategy) -> Result<()> {
        let m = self.actions();
        if x.actions() != m || x.rows() != self.x_space.len() {
            return Err(Error::Dimension(format!(
                "X strategy is {}x{}, expected {}x{m}",
                x.rows(),
                x.actions(),
                self.x_space.len()
            )));
        }
        if y.actions() != m || y.rows() != self.y_space.len() {
            return Err(Error::Dimension(format!(
                "Y strategy is {}x{}, expected {}x{m}",
                y.rows(),
                y.actions(),
                self.y_space.len()
            )));
        }
        Ok(())
    }

    /// Independent random interior strategies for both players.
    pub fn sample_profile<R: Rng + ?Sized>(&self, rng: &mut R) -> (Strategy, Strategy) {
        let m = self.actions();
        let x = Strategy::sample_interior(rng, self.x_space.len(), m);
        let y = Strategy::sample_interior(rng, self.y_space.len(), m);
        (x, y)
    }
}
