//! Multi-memory gradient ascent: the discretized algorithm driven by
//! forward-difference payoff gradients, its continuous-time limit integrated
//! with classical RK4, and the KL distance to a reference equilibrium.

use serde::{Deserialize, Serialize};

use crate::analytic::{self, Payoff4};
use crate::error::{Error, Result};
use crate::game::{GameSetup, Strategy, INTERIOR_EPS};
use crate::markov::{self, build_transition_matrix, ColumnChange, PayoffSensitivity, TransitionMatrix};

/// Probe used for the central differences of the continuous-time field.
pub const FIELD_PROBE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    /// Learning rate.
    pub eta: f64,
    /// Finite-difference probe of the payoff gradient.
    pub gamma: f64,
    /// Discrete iterations.
    pub steps: u64,
    /// Recording stride, in discrete iterations or RK4 steps.
    pub record_every: u64,
    /// RK4 step size.
    pub rk4_h: f64,
    /// RK4 horizon.
    pub t_end: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            gamma: 1e-6,
            steps: 200_000,
            record_every: 1_000,
            rk4_h: 2e-2,
            t_end: 180.0,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive(self.eta, "eta")?;
        positive(self.gamma, "gamma")?;
        positive(self.rk4_h, "rk4_h")?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of RK4 steps covering `[0, t_end]`.
    pub fn rk4_steps(&self) -> u64 {
        (self.t_end / self.rk4_h).round() as u64
    }
}

/// Marginal strategies of the equilibrium the KL distance is measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Reference {
    pub fn uniform(m: usize) -> Self {
        Self {
            x: vec![1.0 / m as f64; m],
            y: vec![1.0 / m as f64; m],
        }
    }
}

/// `Σ_a x°_a ln(x°_a / x_a) + Σ_b y°_b ln(y°_b / y_b)`.
pub fn kl_to_equilibrium(x_marg: &[f64], y_marg: &[f64], x_ref: &[f64], y_ref: &[f64]) -> Result<f64> {
    fn part(p: &[f64], q: &[f64]) -> Result<f64> {
        if p.len() != q.len() {
            return Err(Error::Dimension(format!(
                "reference has {} actions, marginal has {}",
                p.len(),
                q.len()
            )));
        }
        let mut acc = 0.0;
        for (&p, &q) in p.iter().zip(q) {
            if p == 0.0 {
                continue;
            }
            if q <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "marginal probability {q} where the reference is {p}"
                )));
            }
            acc += p * (p / q).ln();
        }
        Ok(acc)
    }
    Ok(part(x_ref, x_marg)? + part(y_ref, y_marg)?)
}

/// `Norm(row + t e_a) - row`.
fn probe_shift(row: &[f64], a: usize, t: f64) -> Vec<f64> {
    row.iter()
        .enumerate()
        .map(|(i, &p)| (if i == a { t } else { 0.0 } - t * p) / (1.0 + t))
        .collect()
}

/// Column changes of the chain when X's row `row` moves by `dx`.
fn x_row_changes(y: &Strategy, setup: &GameSetup, row: usize, dx: &[f64]) -> Vec<ColumnChange> {
    let space = setup.chain_space();
    let m = setup.actions();
    space
        .states()
        .filter(|&s| setup.x_row(s) == row)
        .map(|s| {
            let yr = y.row(setup.y_row(s));
            let delta = (0..m)
                .flat_map(|a| (0..m).map(move |b| (a, b)))
                .map(|(a, b)| (space.successor(s, a, b).0, dx[a] * yr[b]))
                .collect();
            ColumnChange { col: s.0, delta }
        })
        .collect()
}

/// Column changes of the chain when Y's row `row` moves by `dy`.
fn y_row_changes(x: &Strategy, setup: &GameSetup, row: usize, dy: &[f64]) -> Vec<ColumnChange> {
    let space = setup.chain_space();
    let m = setup.actions();
    space
        .states()
        .filter(|&s| setup.y_row(s) == row)
        .map(|s| {
            let xr = x.row(setup.x_row(s));
            let delta = (0..m)
                .flat_map(|a| (0..m).map(move |b| (a, b)))
                .map(|(a, b)| (space.successor(s, a, b).0, xr[a] * dy[b]))
                .collect();
            ColumnChange { col: s.0, delta }
        })
        .collect()
}

/// Evaluates `u_st` shifts of a fixed profile, through the low-rank update
/// when the base system is invertible and through dense re-solves otherwise.
struct ShiftEvaluator<'a> {
    setup: &'a GameSetup,
    matrix: TransitionMatrix,
    sensitivity: Option<PayoffSensitivity>,
    p: Vec<f64>,
}

impl<'a> ShiftEvaluator<'a> {
    fn new(x: &Strategy, y: &Strategy, setup: &'a GameSetup) -> Result<Self> {
        let matrix = build_transition_matrix(x, y, setup)?;
        match PayoffSensitivity::new(&matrix, setup) {
            Ok(sens) => Ok(Self {
                setup,
                p: sens.p().to_vec(),
                sensitivity: Some(sens),
                matrix,
            }),
            Err(err) => {
                log::debug!("falling back to dense payoff shifts: {err}");
                let st = markov::stationary_distribution(&matrix, markov::DEFAULT_TOL)?;
                Ok(Self {
                    setup,
                    matrix,
                    sensitivity: None,
                    p: st.p,
                })
            }
        }
    }

    fn shift(&self, changes: &[ColumnChange]) -> Result<f64> {
        // Past about half the columns the capacitance system costs more than
        // solving the perturbed chain outright.
        if 2 * changes.len() > self.matrix.len() {
            return markov::payoff_shift_direct(&self.matrix, &self.p, changes, self.setup);
        }
        if let Some(sens) = &self.sensitivity {
            if let Ok(v) = sens.payoff_shift(changes) {
                return Ok(v);
            }
        }
        markov::payoff_shift_direct(&self.matrix, &self.p, changes, self.setup)
    }
}

/// X's Δ table: `[u_st(Norm(x + γ e_{a|s}), y) - u_st(x, y)] / γ`, row-major.
pub fn payoff_gradient_x(x: &Strategy, y: &Strategy, setup: &GameSetup, gamma: f64) -> Result<Vec<f64>> {
    let eval = ShiftEvaluator::new(x, y, setup)?;
    gradient_x(&eval, x, y, setup, gamma)
}

/// Y's Δ table on its own memory states, using `v_st = -u_st`.
pub fn payoff_gradient_y(x: &Strategy, y: &Strategy, setup: &GameSetup, gamma: f64) -> Result<Vec<f64>> {
    let eval = ShiftEvaluator::new(x, y, setup)?;
    gradient_y(&eval, x, y, setup, gamma)
}

fn gradient_x(eval: &ShiftEvaluator, x: &Strategy, y: &Strategy, setup: &GameSetup, gamma: f64) -> Result<Vec<f64>> {
    let m = setup.actions();
    let mut out = Vec::with_capacity(x.rows() * m);
    for row in 0..x.rows() {
        for a in 0..m {
            let dx = probe_shift(x.row(row), a, gamma);
            out.push(eval.shift(&x_row_changes(y, setup, row, &dx))? / gamma);
        }
    }
    Ok(out)
}

fn gradient_y(eval: &ShiftEvaluator, x: &Strategy, y: &Strategy, setup: &GameSetup, gamma: f64) -> Result<Vec<f64>> {
    let m = setup.actions();
    let mut out = Vec::with_capacity(y.rows() * m);
    for row in 0..y.rows() {
        for b in 0..m {
            let dy = probe_shift(y.row(row), b, gamma);
            out.push(-eval.shift(&y_row_changes(x, setup, row, &dy))? / gamma);
        }
    }
    Ok(out)
}

/// Reference implementation of [`payoff_gradient_x`] that re-solves the
/// stationary state of every probed strategy and subtracts payoffs.
pub fn payoff_gradient_x_direct(x: &Strategy, y: &Strategy, setup: &GameSetup, gamma: f64) -> Result<Vec<f64>> {
    let base = markov::solve_stationary(x, y, setup)?.u_st;
    let m = setup.actions();
    let mut out = Vec::with_capacity(x.rows() * m);
    for row in 0..x.rows() {
        for a in 0..m {
            let mut data = x.as_slice().to_vec();
            data[row * m + a] += gamma;
            let probed = Strategy::from_weights(m, data);
            out.push((markov::solve_stationary(&probed, y, setup)?.u_st - base) / gamma);
        }
    }
    Ok(out)
}

fn multiplicative_update(s: &Strategy, delta: &[f64], eta: f64) -> Strategy {
    let mut clamped = 0usize;
    let data = s
        .as_slice()
        .iter()
        .zip(delta)
        .map(|(&p, &d)| {
            let mut factor = 1.0 + eta * d;
            if factor <= 0.0 {
                factor = INTERIOR_EPS;
                clamped += 1;
            }
            p * factor
        })
        .collect();
    if clamped > 0 {
        log::warn!("{clamped} update factors 1 + eta*Delta were non-positive and clamped; eta is too large for this payoff scale");
    }
    Strategy::from_weights(s.actions(), data)
}

fn ensure_finite(s: &Strategy, who: &str) -> Result<()> {
    if s.as_slice().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{who}'s strategy became non-finite")))
    }
}

/// One simultaneous update of both players from the same pre-step profile.
pub fn mmga_step(x: &Strategy, y: &Strategy, setup: &GameSetup, cfg: &LearnConfig) -> Result<(Strategy, Strategy)> {
    let eval = ShiftEvaluator::new(x, y, setup)?;
    let dx = gradient_x(&eval, x, y, setup, cfg.gamma)?;
    let dy = gradient_y(&eval, x, y, setup, cfg.gamma)?;
    let nx = multiplicative_update(x, &dx, cfg.eta);
    let ny = multiplicative_update(y, &dy, cfg.eta);
    ensure_finite(&nx, "X")?;
    ensure_finite(&ny, "Y")?;
    Ok((nx, ny))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    /// Iteration (discrete) or RK4 step index (continuous).
    pub step: u64,
    /// `step` for discrete runs, integration time for continuous ones.
    pub time: f64,
    pub x: Strategy,
    pub y: Strategy,
    pub x_marg: Vec<f64>,
    pub y_marg: Vec<f64>,
    pub u_st: f64,
    pub kl: f64,
    /// Concavity indicator, in the one-memory vs zero-memory two-action case.
    pub indicator: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mode: Mode,
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn kl_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.kl).collect()
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("a trajectory always holds its initial record")
    }
}

fn make_record(
    step: u64,
    time: f64,
    x: &Strategy,
    y: &Strategy,
    setup: &GameSetup,
    reference: &Reference,
) -> Result<Record> {
    let st = markov::solve_stationary(x, y, setup)?;
    let kl = kl_to_equilibrium(&st.x_marg, &st.y_marg, &reference.x, &reference.y)?;
    let indicator = setup.is_analytic_2x2().then(|| {
        let p = x.first_action();
        analytic::concavity_indicator(&[p[0], p[1], p[2], p[3]])
    });
    Ok(Record {
        step,
        time,
        x: x.clone(),
        y: y.clone(),
        x_marg: st.x_marg,
        y_marg: st.y_marg,
        u_st: st.u_st,
        kl,
        indicator,
    })
}

fn check_reference(setup: &GameSetup, reference: &Reference) -> Result<()> {
    let m = setup.actions();
    if reference.x.len() != m || reference.y.len() != m {
        return Err(Error::Dimension(format!("reference must have {m} actions per player")));
    }
    Ok(())
}

/// Iterates [`mmga_step`] `cfg.steps` times, recording every
/// `cfg.record_every` iterations and at the final one.
pub fn run_discretized(
    x0: &Strategy,
    y0: &Strategy,
    setup: &GameSetup,
    cfg: &LearnConfig,
    reference: &Reference,
) -> Result<Trajectory> {
    cfg.validate()?;
    setup.check_strategies(x0, y0)?;
    check_reference(setup, reference)?;
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut records = vec![make_record(0, 0.0, &x, &y, setup, reference)?];
    for t in 1..=cfg.steps {
        (x, y) = mmga_step(&x, &y, setup, cfg)
            .map_err(|e| Error::Numerical(format!("discrete step {t}: {e}")))?;
        if t % cfg.record_every == 0 || t == cfg.steps {
            records.push(make_record(t, t as f64, &x, &y, setup, reference)?);
        }
    }
    Ok(Trajectory {
        mode: Mode::Discrete,
        records,
    })
}

/// Continuous-time field `ẋ_{a|s} = x_{a|s} ∂u_st(Norm(x), y)/∂x_{a|s}` and
/// `ẏ_{b|σ} = y_{b|σ} ∂v_st(x, Norm(y))/∂y_{b|σ}`, row-major.
///
/// Uses the closed form in the one-memory vs zero-memory two-action case and
/// central differences with [`FIELD_PROBE`] otherwise.
pub fn continuous_field(x: &Strategy, y: &Strategy, setup: &GameSetup) -> Result<(Vec<f64>, Vec<f64>)> {
    if setup.is_analytic_2x2() {
        let u = Payoff4::new(setup.game().as_payoff4().expect("two-action game"))?;
        let xs = x.first_action();
        let (xd, yd) = analytic::vector_field(&[xs[0], xs[1], xs[2], xs[3]], y.prob(0, 0), &u);
        let xdot = xd.iter().flat_map(|&v| [v, -v]).collect();
        return Ok((xdot, vec![yd, -yd]));
    }
    numeric_field(x, y, setup, FIELD_PROBE)
}

/// Central-difference continuous field with an explicit probe.
pub fn numeric_field(x: &Strategy, y: &Strategy, setup: &GameSetup, probe: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let eval = ShiftEvaluator::new(x, y, setup)?;
    let m = setup.actions();
    let derivative = |row: &[f64], a: usize, shift: &dyn Fn(&[f64]) -> Result<f64>| -> Result<f64> {
        let up = shift(&probe_shift(row, a, probe))?;
        if row[a] > probe {
            let down = shift(&probe_shift(row, a, -probe))?;
            Ok((up - down) / (2.0 * probe))
        } else {
            Ok(up / probe)
        }
    };
    let mut xdot = Vec::with_capacity(x.rows() * m);
    for r in 0..x.rows() {
        let shift = |dx: &[f64]| eval.shift(&x_row_changes(y, setup, r, dx));
        for a in 0..m {
            xdot.push(x.prob(r, a) * derivative(x.row(r), a, &shift)?);
        }
    }
    let mut ydot = Vec::with_capacity(y.rows() * m);
    for r in 0..y.rows() {
        let shift = |dy: &[f64]| eval.shift(&y_row_changes(x, setup, r, dy)).map(|v| -v);
        for b in 0..m {
            ydot.push(y.prob(r, b) * derivative(y.row(r), b, &shift)?);
        }
    }
    Ok((xdot, ydot))
}

/// One classical fourth-order Runge–Kutta step of `ż = f(z)`.
pub fn rk4_step<F>(z: &[f64], h: f64, mut field: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let axpy = |k: &[f64], c: f64| -> Vec<f64> { z.iter().zip(k).map(|(z, k)| z + c * k).collect() };
    let k1 = field(z)?;
    let k2 = field(&axpy(&k1, h / 2.0))?;
    let k3 = field(&axpy(&k2, h / 2.0))?;
    let k4 = field(&axpy(&k3, h))?;
    let next: Vec<f64> = (0..z.len())
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::Numerical("RK4 step produced non-finite values".into()))
    }
}

fn split_profile(z: &[f64], x_len: usize, m: usize) -> (Strategy, Strategy) {
    (
        Strategy::from_weights(m, z[..x_len].to_vec()),
        Strategy::from_weights(m, z[x_len..].to_vec()),
    )
}

/// RK4 step of the continuous field on a strategy profile; the result is
/// clamped to the interior and renormalized per state.
pub fn profile_rk4_step(x: &Strategy, y: &Strategy, setup: &GameSetup, h: f64) -> Result<(Strategy, Strategy)> {
    let m = setup.actions();
    let x_len = x.as_slice().len();
    let z: Vec<f64> = x.as_slice().iter().chain(y.as_slice()).copied().collect();
    let next = rk4_step(&z, h, |z| {
        let (xs, ys) = split_profile(z, x_len, m);
        let (mut xd, yd) = continuous_field(&xs, &ys, setup)?;
        xd.extend(yd);
        Ok(xd)
    })?;
    Ok(split_profile(&next, x_len, m))
}

/// Integrates the continuous field to `cfg.t_end` with step `cfg.rk4_h`.
pub fn run_continuous(
    x0: &Strategy,
    y0: &Strategy,
    setup: &GameSetup,
    cfg: &LearnConfig,
    reference: &Reference,
) -> Result<Trajectory> {
    cfg.validate()?;
    setup.check_strategies(x0, y0)?;
    check_reference(setup, reference)?;
    let steps = cfg.rk4_steps();
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut records = vec![make_record(0, 0.0, &x, &y, setup, reference)?];
    for k in 1..=steps {
        (x, y) = profile_rk4_step(&x, &y, setup, cfg.rk4_h)
            .map_err(|e| Error::Numerical(format!("RK4 step {k}: {e}")))?;
        if k % cfg.record_every == 0 || k == steps {
            records.push(make_record(k, k as f64 * cfg.rk4_h, &x, &y, setup, reference)?);
        }
    }
    Ok(Trajectory {
        mode: Mode::Continuous,
        records,
    })
}

/// X's table in the two-action one-memory notation `(x_1, .., x_4)`.
pub fn x_vector_2x2(x: &Strategy) -> Option<[f64; 4]> {
    let p = x.first_action();
    (x.actions() == 2 && p.len() == 4).then(|| [p[0], p[1], p[2], p[3]])
}
