//! Closed forms for the two-action game between a one-memory X and a
//! zero-memory Y.
//!
//! X's strategy is `x = (x_1, .., x_4)`, the probability of playing the first
//! action after the last round was `a1b1, a1b2, a2b1, a2b2`; Y's strategy is
//! the probability `y` of its first action. A tilde denotes `1 - ·`.

use nalgebra::{Complex, SMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix5 = SMatrix<f64, 5, 5>;

/// Default tolerance for fixed-point classification.
pub const FIXED_POINT_TOL: f64 = 1e-9;

/// `(u_11, u_12, u_21, u_22)` of a game with an interior equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Payoff4([f64; 4]);

impl Payoff4 {
    pub fn new(u: [f64; 4]) -> Result<Self> {
        let [u1, u2, u3, u4] = u;
        if u1 > u2 && u1 > u3 && u4 > u2 && u4 > u3 {
            Ok(Self(u))
        } else {
            Err(Error::InvalidInput(format!(
                "payoffs {u:?} need u1 and u4 both above u2 and u3; \
                 the game has a boundary (dominant-strategy) equilibrium"
            )))
        }
    }

    pub fn matching_pennies() -> Self {
        Self([1.0, -1.0, -1.0, 1.0])
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }

    /// `u1 - u2 - u3 + u4`, positive by construction.
    pub fn denominator(&self) -> f64 {
        let [u1, u2, u3, u4] = self.0;
        u1 - u2 - u3 + u4
    }
}

/// Equilibrium of the memoryless game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginalNash {
    pub x_o: f64,
    pub y_o: f64,
    pub u_o: f64,
    pub v_o: f64,
}

pub fn original_nash(u: &Payoff4) -> OriginalNash {
    let [u1, u2, u3, u4] = u.0;
    let d = u.denominator();
    let u_o = (u1 * u4 - u2 * u3) / d;
    OriginalNash {
        x_o: (u4 - u3) / d,
        y_o: (u4 - u2) / d,
        u_o,
        v_o: -u_o,
    }
}

fn marginal_parts(x: &[f64; 4], y: f64) -> (f64, f64) {
    let yt = 1.0 - y;
    let num = x[2] * y + x[3] * yt;
    let den = (1.0 - x[0]) * y + (1.0 - x[1]) * yt + num;
    (num, den)
}

/// Stationary probability that X plays its first action.
pub fn marginal_formula(x: &[f64; 4], y: f64) -> Result<f64> {
    let (num, den) = marginal_parts(x, y);
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::InvalidInput(format!(
            "marginal strategy undefined at x = {x:?}, y = {y}"
        )));
    }
    Ok(num / den)
}

/// Partial derivatives of the marginal strategy: `(∂/∂x_i, ∂/∂y)`.
pub fn marginal_partials(x: &[f64; 4], y: f64) -> ([f64; 4], f64) {
    let yt = 1.0 - y;
    let (num, den) = marginal_parts(x, y);
    let den2 = den * den;
    let rest = (1.0 - x[0]) * y + (1.0 - x[1]) * yt;
    let dx = [
        num * y / den2,
        num * yt / den2,
        y * rest / den2,
        yt * rest / den2,
    ];
    (dx, concavity_indicator(x) / den2)
}

/// `-(1 - x_1) x_4 + (1 - x_2) x_3`: positive values make Y's stationary
/// payoff strictly concave in `y`.
pub fn concavity_indicator(x: &[f64; 4]) -> f64 {
    -(1.0 - x[0]) * x[3] + (1.0 - x[1]) * x[2]
}

/// Exact continuous-time learning field `(ẋ, ẏ)`.
pub fn vector_field(x: &[f64; 4], y: f64, u: &Payoff4) -> ([f64; 4], f64) {
    let nash = original_nash(u);
    let d = u.denominator();
    let (dx, dy) = marginal_partials(x, y);
    let (num, den) = marginal_parts(x, y);
    let xst = num / den;
    let mut xdot = [0.0; 4];
    for i in 0..4 {
        xdot[i] = x[i] * (1.0 - x[i]) * d * (y - nash.y_o) * dx[i];
    }
    let ydot = -y * (1.0 - y) * d * ((y - nash.y_o) * dy + (xst - nash.x_o));
    (xdot, ydot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    StableEquilibrium,
    UnstableFixedPoint,
    /// A fixed point with `|indicator| <= tol`; linear analysis is inconclusive.
    Degenerate,
    NotAFixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for Eigenvalue {
    fn from(c: Complex<f64>) -> Self {
        Self { re: c.re, im: c.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub indicator: f64,
    pub marginal: f64,
    /// Largest component of the vector field in absolute value.
    pub field_norm: f64,
    /// Three zeros followed by `λ+`, `λ-`; empty unless at a fixed point.
    pub eigenvalues: Vec<Eigenvalue>,
    pub classification: Classification,
}

/// Jacobian of the field at a fixed point, from the closed-form entries:
/// the `x`-`x` block vanishes, the last column is
/// `x_i x̃_i D ∂x^st/∂x_i`, the last row `-y ỹ D ∂x^st/∂x_i`, and the corner
/// `-2 y ỹ D ∂x^st/∂y`.
pub fn fixed_point_jacobian(x: &[f64; 4], y: f64, u: &Payoff4) -> Matrix5 {
    let d = u.denominator();
    let (dx, dy) = marginal_partials(x, y);
    let yy = y * (1.0 - y);
    let mut j = Matrix5::zeros();
    for i in 0..4 {
        j[(i, 4)] = x[i] * (1.0 - x[i]) * d * dx[i];
        j[(4, i)] = -yy * d * dx[i];
    }
    j[(4, 4)] = -2.0 * yy * d * dy;
    j
}

/// The non-zero eigenvalue pair `(J55 ± sqrt(J55² + 4 Σ J_i5 J_5i)) / 2`.
pub fn closed_form_eigenvalues(x: &[f64; 4], y: f64, u: &Payoff4) -> [Complex<f64>; 2] {
    let j = fixed_point_jacobian(x, y, u);
    let j55 = j[(4, 4)];
    let coupling: f64 = (0..4).map(|i| j[(i, 4)] * j[(4, i)]).sum();
    let disc = j55 * j55 + 4.0 * coupling;
    let root = if disc >= 0.0 {
        Complex::new(disc.sqrt(), 0.0)
    } else {
        Complex::new(0.0, (-disc).sqrt())
    };
    let half = Complex::new(j55 / 2.0, 0.0);
    [half + root / 2.0, half - root / 2.0]
}

pub fn classify_fixed_point(x: &[f64; 4], y: f64, u: &Payoff4, tol: f64) -> Result<StabilityReport> {
    let marginal = marginal_formula(x, y)?;
    let indicator = concavity_indicator(x);
    let (xdot, ydot) = vector_field(x, y, u);
    let field_norm = xdot.iter().fold(ydot.abs(), |acc, v| acc.max(v.abs()));
    if field_norm > tol {
        return Ok(StabilityReport {
            indicator,
            marginal,
            field_norm,
            eigenvalues: Vec::new(),
            classification: Classification::NotAFixedPoint,
        });
    }
    let zero = Eigenvalue { re: 0.0, im: 0.0 };
    let mut eigenvalues = vec![zero; 3];
    eigenvalues.extend(closed_form_eigenvalues(x, y, u).map(Eigenvalue::from));
    let classification = if indicator > tol {
        Classification::StableEquilibrium
    } else if indicator < -tol {
        Classification::UnstableFixedPoint
    } else {
        Classification::Degenerate
    };
    Ok(StabilityReport {
        indicator,
        marginal,
        field_norm,
        eigenvalues,
        classification,
    })
}

fn field_vec(z: &[f64; 5], u: &Payoff4) -> [f64; 5] {
    let (xd, yd) = vector_field(&[z[0], z[1], z[2], z[3]], z[4], u);
    [xd[0], xd[1], xd[2], xd[3], yd]
}

/// Central-difference Jacobian of [`vector_field`] in `(x_1, .., x_4, y)`.
pub fn numeric_jacobian(x: &[f64; 4], y: f64, u: &Payoff4, h: f64) -> Matrix5 {
    let z = [x[0], x[1], x[2], x[3], y];
    let mut j = Matrix5::zeros();
    for col in 0..5 {
        let mut plus = z;
        let mut minus = z;
        plus[col] += h;
        minus[col] -= h;
        let fp = field_vec(&plus, u);
        let fm = field_vec(&minus, u);
        for row in 0..5 {
            j[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    j
}

/// Draws a point of the fixed-point manifold: `x_1..x_3` uniform on `(0, 1)`,
/// `y = y_o`, and `x_4` solved from `x^st = x_o`; rejects draws where `x_4`
/// leaves the open unit interval.
pub fn sample_manifold_point<R: Rng + ?Sized>(rng: &mut R, u: &Payoff4) -> ([f64; 4], f64) {
    let nash = original_nash(u);
    let y = nash.y_o;
    let yt = 1.0 - y;
    loop {
        let x1: f64 = rng.random();
        let x2: f64 = rng.random();
        let x3: f64 = rng.random();
        let lhs = nash.x_o * ((1.0 - x1) * y + (1.0 - x2) * yt) / (1.0 - nash.x_o);
        let x4 = (lhs - x3 * y) / yt;
        if x4 > 0.0 && x4 < 1.0 && x1 > 0.0 && x2 > 0.0 && x3 > 0.0 {
            return ([x1, x2, x3, x4], y);
        }
    }
}
