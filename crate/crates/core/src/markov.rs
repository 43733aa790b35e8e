//! The Markov chain over memory states induced by a strategy profile, its
//! stationary distribution, and the stationary payoffs and marginals.
//!
//! Matrices are column-stochastic: entry `(s', s)` is the probability of
//! moving from `s` to `s'`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSetup, StateId, Strategy};

/// Stationarity tolerance on `‖M p - p‖∞`.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Iteration cap of the power-iteration fallback.
pub const POWER_ITERATION_CAP: usize = 1_000_000;

/// Smallest stationary group mass accepted when conditioning on it.
const MIN_GROUP_MASS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    matrix: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "transition matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn get(&self, to: StateId, from: StateId) -> f64 {
        self.matrix[(to.0, from.0)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `‖M p - p‖∞`.
    pub fn residual(&self, p: &[f64]) -> f64 {
        let pv = DVector::from_column_slice(p);
        (&self.matrix * &pv - &pv).amax()
    }
}

/// Builds the chain: from state `s`, X plays `a` with `x_{a|s}` and Y plays
/// `b` with `y_{b|s_{n_y}}`, moving to `successor(s, a, b)`.
pub fn build_transition_matrix(x: &Strategy, y: &Strategy, setup: &GameSetup) -> Result<TransitionMatrix> {
    setup.check_strategies(x, y)?;
    let space = setup.chain_space();
    let m = setup.actions();
    let n = space.len();
    let mut matrix = DMatrix::zeros(n, n);
    for s in space.states() {
        let xr = x.row(setup.x_row(s));
        let yr = y.row(setup.y_row(s));
        for a in 0..m {
            for b in 0..m {
                let to = space.successor(s, a, b);
                matrix[(to.0, s.0)] += xr[a] * yr[b];
            }
        }
    }
    Ok(TransitionMatrix { matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationaryMethod {
    DenseSolve,
    PowerIteration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub p: Vec<f64>,
    pub residual: f64,
    pub method: StationaryMethod,
}

/// Stationary distribution of a column-stochastic matrix.
///
/// Solves `(M - I) p = 0` with the normalization replacing the first
/// equation; falls back to power iteration if the solve is singular or its
/// residual exceeds `tol`.
pub fn stationary_distribution(m: &TransitionMatrix, tol: f64) -> Result<Stationary> {
    if let Some(p) = dense_stationary(m) {
        let residual = m.residual(&p);
        if residual <= tol {
            return Ok(Stationary {
                p,
                residual,
                method: StationaryMethod::DenseSolve,
            });
        }
        log::debug!("dense stationary solve residual {residual:e} > {tol:e}, using power iteration");
    }
    power_iteration(m, tol, POWER_ITERATION_CAP)
}

fn normalization_system(m: &TransitionMatrix) -> DMatrix<f64> {
    let n = m.len();
    let mut a = DMatrix::identity(n, n) - &m.matrix;
    a.row_mut(0).fill(1.0);
    a
}

fn dense_stationary(m: &TransitionMatrix) -> Option<Vec<f64>> {
    let n = m.len();
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    let p = normalization_system(m).lu().solve(&rhs)?;
    clean_distribution(p.as_slice())
}

/// Zeroes round-off negatives and renormalizes; rejects genuinely negative or
/// non-finite vectors.
fn clean_distribution(p: &[f64]) -> Option<Vec<f64>> {
    if p.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return None;
    }
    let mut p: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    let sum: f64 = p.iter().sum();
    if sum <= 0.0 {
        return None;
    }
    p.iter_mut().for_each(|v| *v /= sum);
    Some(p)
}

/// Plain power iteration from the uniform distribution.
pub fn power_iteration(m: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<Stationary> {
    let n = m.len();
    let mut p = DVector::from_element(n, 1.0 / n as f64);
    let mut next = DVector::zeros(n);
    for _ in 0..max_iter {
        m.matrix.mul_to(&p, &mut next);
        let sum = next.sum();
        next /= sum;
        let residual = (&next - &p).amax();
        std::mem::swap(&mut p, &mut next);
        if residual <= tol {
            let p = p.as_slice().to_vec();
            let residual = m.residual(&p);
            return Ok(Stationary {
                p,
                residual,
                method: StationaryMethod::PowerIteration,
            });
        }
    }
    Err(Error::Numerical(format!(
        "power iteration did not reach tolerance {tol:e} in {max_iter} steps; \
         the chain is close to reducible"
    )))
}

/// X's per-state payoff vector `u_{s_1}` over chain states.
pub fn state_payoffs(setup: &GameSetup) -> Vec<f64> {
    let space = setup.chain_space();
    let game = setup.game();
    space
        .states()
        .map(|s| game.payoff_of_pair(space.project(s, 1).0))
        .collect()
}

/// `(u_st, v_st)` with `u_st = Σ_s p_s u_{s_1}` and `v_st = -u_st`.
pub fn stationary_payoffs(p: &[f64], setup: &GameSetup) -> (f64, f64) {
    let u: f64 = state_payoffs(setup).iter().zip(p).map(|(u, p)| u * p).sum();
    (u, -u)
}

/// `x_a = Σ_s x_{a|s} p_s` and `y_b = Σ_s y_{b|s_{n_y}} p_s`.
pub fn marginalized_strategies(x: &Strategy, y: &Strategy, p: &[f64], setup: &GameSetup) -> (Vec<f64>, Vec<f64>) {
    let m = setup.actions();
    let mut xm = vec![0.0; m];
    let mut ym = vec![0.0; m];
    for (s, &ps) in setup.chain_space().states().zip(p) {
        for (acc, v) in xm.iter_mut().zip(x.row(setup.x_row(s))) {
            *acc += ps * v;
        }
        for (acc, v) in ym.iter_mut().zip(y.row(setup.y_row(s))) {
            *acc += ps * v;
        }
    }
    if setup.memory().n_y == 0 {
        ym.copy_from_slice(y.row(0));
    }
    (xm, ym)
}

/// X's stationary strategy conditioned on the part of the history Y remembers:
/// row `σ` is `Σ_{s ↦ σ} p_s x_{·|s} / Σ_{s ↦ σ} p_s`.
pub fn conditional_marginalized_x(x: &Strategy, p: &[f64], setup: &GameSetup) -> Result<Vec<Vec<f64>>> {
    let m = setup.actions();
    let groups = setup.y_space().len();
    let mut mass = vec![0.0; groups];
    let mut rows = vec![vec![0.0; m]; groups];
    for (s, &ps) in setup.chain_space().states().zip(p) {
        let g = setup.y_row(s);
        mass[g] += ps;
        for (acc, v) in rows[g].iter_mut().zip(x.row(setup.x_row(s))) {
            *acc += ps * v;
        }
    }
    for (g, (row, &w)) in rows.iter_mut().zip(&mass).enumerate() {
        if w < MIN_GROUP_MASS {
            return Err(Error::InvalidInput(format!(
                "memory group {g} has stationary mass {w:e}; strategies are on the boundary"
            )));
        }
        row.iter_mut().for_each(|v| *v /= w);
    }
    Ok(rows)
}

/// Stationary distribution of the newest joint action, indexed `a * m + b`.
pub fn current_pair_marginal(p: &[f64], setup: &GameSetup) -> Vec<f64> {
    let space = setup.chain_space();
    let m = setup.actions();
    let mut out = vec![0.0; m * m];
    for (s, &ps) in space.states().zip(p) {
        out[space.project(s, 1).0] += ps;
    }
    out
}

/// Everything derived from the stationary state of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryResult {
    pub p_st: Vec<f64>,
    pub u_st: f64,
    pub v_st: f64,
    pub x_marg: Vec<f64>,
    pub y_marg: Vec<f64>,
    pub residual: f64,
}

pub fn solve_stationary(x: &Strategy, y: &Strategy, setup: &GameSetup) -> Result<StationaryResult> {
    let matrix = build_transition_matrix(x, y, setup)?;
    let st = stationary_distribution(&matrix, DEFAULT_TOL)?;
    Ok(assemble(x, y, setup, st.p, st.residual))
}

fn assemble(x: &Strategy, y: &Strategy, setup: &GameSetup, p: Vec<f64>, residual: f64) -> StationaryResult {
    let (u_st, v_st) = stationary_payoffs(&p, setup);
    let (x_marg, y_marg) = marginalized_strategies(x, y, &p, setup);
    StationaryResult {
        p_st: p,
        u_st,
        v_st,
        x_marg,
        y_marg,
        residual,
    }
}

/// Change of one column of the transition matrix: `(row, M'[row, col] - M[row, col])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnChange {
    pub col: usize,
    pub delta: Vec<(usize, f64)>,
}

/// Evaluates how X's stationary payoff shifts under low-rank changes of the
/// transition matrix, without re-solving the chain.
///
/// With `A` the normalized system (`I - M` with its first row replaced by
/// ones), a change of `k` columns is `A' = A - U Vᵀ`, and the Woodbury
/// identity gives `p' - p = A⁻¹U (I - VᵀA⁻¹U)⁻¹ Vᵀp`. The payoff shift is
/// returned directly, so it carries no cancellation error.
#[derive(Debug, Clone)]
pub struct PayoffSensitivity {
    inverse: DMatrix<f64>,
    p: Vec<f64>,
    /// `uᵀ A⁻¹`
    weights: Vec<f64>,
    u_st: f64,
    residual: f64,
}

impl PayoffSensitivity {
    pub fn new(matrix: &TransitionMatrix, setup: &GameSetup) -> Result<Self> {
        let inverse = normalization_system(matrix)
            .try_inverse()
            .ok_or_else(|| Error::Numerical("stationary system is singular".into()))?;
        let p = clean_distribution(inverse.column(0).as_slice())
            .ok_or_else(|| Error::Numerical("stationary solve produced a non-distribution".into()))?;
        let residual = matrix.residual(&p);
        if residual > DEFAULT_TOL {
            return Err(Error::Numerical(format!(
                "stationary residual {residual:e} exceeds {DEFAULT_TOL:e}"
            )));
        }
        let u = state_payoffs(setup);
        let weights = (0..inverse.ncols())
            .map(|k| inverse.column(k).iter().zip(&u).map(|(a, u)| a * u).sum())
            .collect();
        let u_st = u.iter().zip(&p).map(|(u, p)| u * p).sum();
        Ok(Self {
            inverse,
            p,
            weights,
            u_st,
            residual,
        })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn u_st(&self) -> f64 {
        self.u_st
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `u_st(M') - u_st(M)` for `M' = M + Σ changes`.
    pub fn payoff_shift(&self, changes: &[ColumnChange]) -> Result<f64> {
        let k = changes.len();
        if k == 0 {
            return Ok(0.0);
        }
        // Row 0 of A holds the normalization and does not move.
        let rows = |c: &ColumnChange| c.delta.iter().filter(|(row, _)| *row != 0).copied().collect::<Vec<_>>();
        let cols: Vec<Vec<(usize, f64)>> = changes.iter().map(rows).collect();
        let gain: Vec<f64> = cols
            .iter()
            .map(|d| d.iter().map(|&(row, v)| self.weights[row] * v).sum())
            .collect();
        if k == 1 {
            let s = changes[0].col;
            let w_s: f64 = cols[0].iter().map(|&(row, v)| self.inverse[(s, row)] * v).sum();
            let denom = 1.0 - w_s;
            if denom.abs() < 1e-14 {
                return Err(Error::Numerical("rank-one update makes the chain singular".into()));
            }
            return Ok(gain[0] * self.p[s] / denom);
        }
        let mut capacitance = DMatrix::identity(k, k);
        let mut rhs = DVector::zeros(k);
        for (i, ci) in changes.iter().enumerate() {
            rhs[i] = self.p[ci.col];
            for (j, d) in cols.iter().enumerate() {
                let w: f64 = d.iter().map(|&(row, v)| self.inverse[(ci.col, row)] * v).sum();
                capacitance[(i, j)] -= w;
            }
        }
        let z = capacitance
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("low-rank update makes the chain singular".into()))?;
        Ok(gain.iter().zip(z.iter()).map(|(g, z)| g * z).sum())
    }
}

/// Reference route for [`PayoffSensitivity::payoff_shift`]: forms the
/// perturbed system and solves `A' (p' - p) = (A - A') p` densely.
pub fn payoff_shift_direct(
    matrix: &TransitionMatrix,
    p: &[f64],
    changes: &[ColumnChange],
    setup: &GameSetup,
) -> Result<f64> {
    let n = matrix.len();
    let mut perturbed = matrix.matrix.clone();
    for c in changes {
        for &(row, v) in &c.delta {
            perturbed[(row, c.col)] += v;
        }
    }
    let perturbed = TransitionMatrix { matrix: perturbed };
    let mut rhs = DVector::zeros(n);
    for c in changes {
        for &(row, v) in &c.delta {
            if row != 0 {
                rhs[row] += v * p[c.col];
            }
        }
    }
    let delta = normalization_system(&perturbed)
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("perturbed stationary system is singular".into()))?;
    Ok(state_payoffs(setup).iter().zip(delta.iter()).map(|(u, d)| u * d).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameSpec, MemoryConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mp() -> GameSpec {
        GameSpec::new(2, vec![1.0, -1.0, -1.0, 1.0]).unwrap()
    }

    fn setup(n_x: usize, n_y: usize) -> GameSetup {
        GameSetup::new(mp(), MemoryConfig::new(n_x, n_y).unwrap()).unwrap()
    }

    fn profile(x: &[f64], y: &[f64]) -> (Strategy, Strategy) {
        (
            Strategy::from_first_action(x).unwrap(),
            Strategy::from_first_action(y).unwrap(),
        )
    }

    #[test]
    fn transition_entry_is_product_of_choices() {
        let g = setup(1, 0);
        let (x, y) = profile(&[0.9, 0.7, 0.4, 0.2], &[0.5]);
        let m = build_transition_matrix(&x, &y, &g).unwrap();
        let space = g.chain_space();
        let from = space.encode(&[(1, 1)]).unwrap();
        let to = space.encode(&[(0, 1)]).unwrap();
        assert!((m.get(to, from) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn columns_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (nx, ny) in [(0, 0), (1, 0), (1, 1), (2, 1)] {
            let g = setup(nx, ny);
            let (x, y) = g.sample_profile(&mut rng);
            let m = build_transition_matrix(&x, &y, &g).unwrap();
            for c in 0..m.len() {
                let col = m.matrix().column(c);
                assert!((col.sum() - 1.0).abs() <= 1e-12);
                assert!(col.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn transition_support_is_successors_only() {
        let g = setup(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (x, y) = g.sample_profile(&mut rng);
        let m = build_transition_matrix(&x, &y, &g).unwrap();
        let space = g.chain_space();
        for s in space.states() {
            let succ: Vec<_> = (0..2)
                .flat_map(|a| (0..2).map(move |b| (a, b)))
                .map(|(a, b)| space.successor(s, a, b))
                .collect();
            for t in space.states() {
                if !succ.contains(&t) {
                    assert_eq!(m.get(t, s), 0.0);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = setup(1, 0);
        let (x, y) = profile(&[0.5, 0.5], &[0.5]);
        assert!(matches!(build_transition_matrix(&x, &y, &g), Err(Error::Dimension(_))));
    }

    #[test]
    fn uniform_strategies_give_uniform_chain() {
        let g = setup(1, 0);
        let (x, y) = profile(&[0.5; 4], &[0.5]);
        let st = solve_stationary(&x, &y, &g).unwrap();
        for p in &st.p_st {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert_eq!(st.u_st, 0.0);
    }

    #[test]
    fn marginal_half_gives_uniform_chain() {
        let g = setup(1, 0);
        let (x, y) = profile(&[0.8, 0.6, 0.4, 0.2], &[0.5]);
        let st = solve_stationary(&x, &y, &g).unwrap();
        for p in &st.p_st {
            assert!((p - 0.25).abs() < 1e-14);
        }
        assert!((st.x_marg[0] - 0.5).abs() < 1e-14);
        assert!((st.x_marg[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn payoff_of_given_distribution() {
        let g = setup(1, 0);
        let (u, v) = stationary_payoffs(&[0.4, 0.1, 0.1, 0.4], &g);
        assert!((u - 0.6).abs() < 1e-15);
        assert_eq!(u + v, 0.0);
        let (u, _) = stationary_payoffs(&[0.25; 4], &g);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn dense_and_power_iteration_agree() {
        let g = setup(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (x, y) = g.sample_profile(&mut rng);
        let m = build_transition_matrix(&x, &y, &g).unwrap();
        let dense = stationary_distribution(&m, DEFAULT_TOL).unwrap();
        let power = power_iteration(&m, DEFAULT_TOL, POWER_ITERATION_CAP).unwrap();
        assert_eq!(dense.method, StationaryMethod::DenseSolve);
        assert!(dense.residual <= DEFAULT_TOL);
        for (a, b) in dense.p.iter().zip(&power.p) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        // slowly mixing two-state chain; ten steps are not enough
        let m = TransitionMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.999, 0.002, 0.001, 0.998]))
            .unwrap();
        assert!(matches!(power_iteration(&m, 1e-12, 10), Err(Error::Numerical(_))));
        let st = power_iteration(&m, 1e-14, POWER_ITERATION_CAP).unwrap();
        assert!((st.p[0] - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn memoryless_reduction() {
        let g = setup(2, 0);
        let x = Strategy::from_weights(2, [0.3, 0.7].repeat(16));
        let y = Strategy::from_first_action(&[0.8]).unwrap();
        let st = solve_stationary(&x, &y, &g).unwrap();
        assert!((st.x_marg[0] - 0.3).abs() < 1e-12);
        let bilinear = 0.3 * 0.8 * 1.0 - 0.3 * 0.2 - 0.7 * 0.8 + 0.7 * 0.2;
        assert!((st.u_st - bilinear).abs() < 1e-12);
    }

    #[test]
    fn no_memory_chain_tracks_last_pair() {
        let g = setup(0, 0);
        let (x, y) = profile(&[0.3], &[0.6]);
        let st = solve_stationary(&x, &y, &g).unwrap();
        let expected = [0.18, 0.12, 0.42, 0.28];
        for (p, e) in st.p_st.iter().zip(expected) {
            assert!((p - e).abs() < 1e-14);
        }
        assert_eq!(st.y_marg, y.row(0));
    }

    #[test]
    fn conditional_marginal_single_group_equals_marginal() {
        let g = setup(2, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y) = g.sample_profile(&mut rng);
        let st = solve_stationary(&x, &y, &g).unwrap();
        let rows = conditional_marginalized_x(&x, &st.p_st, &g).unwrap();
        assert_eq!(rows.len(), 1);
        for (a, b) in rows[0].iter().zip(&st.x_marg) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn conditional_marginal_of_constant_strategy() {
        let g = setup(2, 1);
        let x = Strategy::from_weights(2, [0.35, 0.65].repeat(16));
        let y = Strategy::from_first_action(&[0.2, 0.4, 0.6, 0.8]).unwrap();
        let st = solve_stationary(&x, &y, &g).unwrap();
        for row in conditional_marginalized_x(&x, &st.p_st, &g).unwrap() {
            assert!((row[0] - 0.35).abs() < 1e-14);
        }
    }

    #[test]
    fn conditional_marginal_rejects_empty_group() {
        let g = setup(2, 1);
        let x = Strategy::uniform(16, 2);
        let mut p = vec![0.0; 16];
        p[0] = 1.0;
        assert!(conditional_marginalized_x(&x, &p, &g).is_err());
    }

    #[test]
    fn pair_marginal_examples() {
        let g1 = setup(1, 0);
        let p = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(current_pair_marginal(&p, &g1), p.to_vec());
        let g2 = setup(2, 0);
        let pair = current_pair_marginal(&[1.0 / 16.0; 16], &g2);
        assert!(pair.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn memoryless_opponent_factorizes_pair_marginal() {
        let g = setup(2, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (x, y) = g.sample_profile(&mut rng);
        let m = build_transition_matrix(&x, &y, &g).unwrap();
        let st = power_iteration(&m, 1e-15, POWER_ITERATION_CAP).unwrap();
        let (xm, ym) = marginalized_strategies(&x, &y, &st.p, &g);
        let pair = current_pair_marginal(&st.p, &g);
        for a in 0..2 {
            for b in 0..2 {
                assert!((pair[a * 2 + b] - xm[a] * ym[b]).abs() < 1e-9);
            }
        }
    }

    fn x_change(x: &Strategy, y: &Strategy, g: &GameSetup, s: usize, a: usize, t: f64) -> Vec<ColumnChange> {
        let space = g.chain_space();
        let row = x.row(s);
        let yr = y.row(g.y_row(StateId(s)));
        let mut delta = Vec::new();
        for a2 in 0..2 {
            let dx = (if a2 == a { t } else { 0.0 } - t * row[a2]) / (1.0 + t);
            for b in 0..2 {
                delta.push((space.successor(StateId(s), a2, b).0, dx * yr[b]));
            }
        }
        vec![ColumnChange { col: s, delta }]
    }

    #[test]
    fn woodbury_shift_matches_direct_route() {
        let g = setup(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (x, y) = g.sample_profile(&mut rng);
        let m = build_transition_matrix(&x, &y, &g).unwrap();
        let sens = PayoffSensitivity::new(&m, &g).unwrap();
        for s in [0, 5, 15] {
            let ch = x_change(&x, &y, &g, s, 0, 0.05);
            let fast = sens.payoff_shift(&ch).unwrap();
            let slow = payoff_shift_direct(&m, sens.p(), &ch, &g).unwrap();
            assert!((fast - slow).abs() < 1e-13, "{fast} vs {slow}");
        }
        // multi-column change: all columns sharing Y's memory state 2
        let space = g.chain_space();
        let changes: Vec<ColumnChange> = space
            .states()
            .filter(|&s| g.y_row(s) == 2)
            .map(|s| {
                let xr = x.row(s.0);
                let delta = (0..2)
                    .flat_map(|a| (0..2).map(move |b| (a, b)))
                    .map(|(a, b)| {
                        let dy = if b == 0 { 0.01 } else { -0.01 };
                        (space.successor(s, a, b).0, xr[a] * dy)
                    })
                    .collect();
                ColumnChange { col: s.0, delta }
            })
            .collect();
        let fast = sens.payoff_shift(&changes).unwrap();
        let slow = payoff_shift_direct(&m, sens.p(), &changes, &g).unwrap();
        assert!((fast - slow).abs() < 1e-13, "{fast} vs {slow}");
    }

    #[test]
    fn shift_equals_difference_of_solves() {
        let g = setup(1, 0);
        let (x, y) = profile(&[0.7, 0.2, 0.6, 0.3], &[0.35]);
        let m = build_transition_matrix(&x, &y, &g).unwrap();
        let sens = PayoffSensitivity::new(&m, &g).unwrap();
        let t = 0.1;
        let shift = sens.payoff_shift(&x_change(&x, &y, &g, 2, 1, t)).unwrap();
        let mut rows = x.to_rows();
        rows[2][1] += t;
        let x2 = Strategy::from_weights(2, rows.concat());
        let u2 = solve_stationary(&x2, &y, &g).unwrap().u_st;
        assert!((shift - (u2 - sens.u_st())).abs() < 1e-14);
    }
}
