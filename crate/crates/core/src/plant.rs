//! The inverted pendulum on a cart: a massless rod of length `L` carrying a
//! point mass `m`, mounted on a cart of mass `M`, driven by a horizontal force `u`.
//!
//! In nondimensional units (`m = L = g = 1`) the linearized equations are
//!
//! ```text
//! M x'' + (x'' + theta'') = u,     x'' + theta'' = theta
//! ```
//!
//! giving the position plant `G = (s^2 - 1) / (s^2 (M s^2 - (1 + M)))` and the
//! angle plant `F = 1 / (1 + M - M s^2)`, related by `d_G = -s^2 d_F`.

use nalgebra::{DMatrix, DVector, RowDVector, Scalar};
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::RationalTF;

/// Physical parameters. [`Default`] gives the nondimensional plant with `M = 0.3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub cart_mass: f64,
    pub length: f64,
    pub bob_mass: f64,
    pub gravity: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            cart_mass: 0.3,
            length: 1.0,
            bob_mass: 1.0,
            gravity: 1.0,
        }
    }
}

impl PendulumParams {
    pub fn nondimensional(cart_mass: f64) -> Self {
        PendulumParams {
            cart_mass,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.cart_mass, self.length, self.bob_mass, self.gravity];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "pendulum parameters must be strictly positive: {self:?}"
            )))
        }
    }
}

/// Multipliers `A0..A3` on the position plant coefficients:
/// `G = (A0 s^2 - A1) / (s^2 (M A2 s^2 - (1 + M) A3))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedPlantParams {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Default for PerturbedPlantParams {
    fn default() -> Self {
        PerturbedPlantParams {
            a0: 1.0,
            a1: 1.0,
            a2: 1.0,
            a3: 1.0,
        }
    }
}

impl PerturbedPlantParams {
    /// `A_i (1 + r_i)` applied to the nominal multipliers.
    pub fn perturbed(r: [f64; 4]) -> Self {
        PerturbedPlantParams {
            a0: 1.0 + r[0],
            a1: 1.0 + r[1],
            a2: 1.0 + r[2],
            a3: 1.0 + r[3],
        }
    }
}

fn check_mass(m: f64) -> Result<()> {
    if m.is_finite() && m > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("cart mass must be positive, got {m}")))
    }
}

/// Cart position response to the cart force.
pub fn position_plant(params: &PerturbedPlantParams, mass: f64) -> Result<RationalTF> {
    check_mass(mass)?;
    let num = Polynomial::from_slice(&[-params.a1, 0.0, params.a0]);
    let den = Polynomial::from_slice(&[0.0, 0.0, -(1.0 + mass) * params.a3, 0.0, mass * params.a2]);
    RationalTF::new(num, den)
}

/// Position plant in physical units: `(L s^2 - g) / (s^2 (M L s^2 - (M + m) g))`.
pub fn position_plant_physical(p: &PendulumParams) -> Result<RationalTF> {
    p.validate()?;
    let num = Polynomial::from_slice(&[-p.gravity, 0.0, p.length]);
    let den = Polynomial::from_slice(&[
        0.0,
        0.0,
        -(p.cart_mass + p.bob_mass) * p.gravity,
        0.0,
        p.cart_mass * p.length,
    ]);
    RationalTF::new(num, den)
}

/// Pendulum angle response to the cart force.
pub fn angle_plant(mass: f64) -> Result<RationalTF> {
    check_mass(mass)?;
    RationalTF::new(
        Polynomial::one(),
        Polynomial::from_slice(&[1.0 + mass, 0.0, -mass]),
    )
}

/// Single-input single-output state-space model, state `(x, theta, x', theta')`
/// for the pendulum.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace<T: Scalar = f64> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub c: RowDVector<T>,
    pub d: T,
}

impl<T: Scalar + Zero> StateSpace<T> {
    pub fn new(a: DMatrix<T>, b: DVector<T>, c: RowDVector<T>, d: T) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || c.len() != n {
            return Err(Error::Dimension(format!(
                "A is {}x{}, B has {} rows, C has {} columns",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}

fn pendulum_matrices<T>(inv_m: T, one_plus_inv_m: T) -> StateSpace<T>
where
    T: Scalar + Zero + One + std::ops::Neg<Output = T>,
{
    let z = T::zero;
    let o = T::one;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        z(), z(),                      o(), z(),
        z(), z(),                      z(), o(),
        z(), -inv_m.clone(),           z(), z(),
        z(), one_plus_inv_m,           z(), z(),
    ]);
    let b = DVector::from_column_slice(&[z(), z(), inv_m.clone(), -inv_m]);
    let c = RowDVector::from_row_slice(&[o(), z(), z(), z()]);
    StateSpace { a, b, c, d: z() }
}

/// Linearized pendulum in state-space form with cart position as output.
pub fn state_space(mass: f64) -> Result<StateSpace> {
    check_mass(mass)?;
    Ok(pendulum_matrices(1.0 / mass, 1.0 + 1.0 / mass))
}

/// Same model in exact rational arithmetic.
pub fn state_space_exact(mass: Rational64) -> Result<StateSpace<Rational64>> {
    if mass <= Rational64::zero() {
        return Err(Error::InvalidArgument("cart mass must be positive".into()));
    }
    let inv = mass.recip();
    Ok(pendulum_matrices(inv, Rational64::one() + inv))
}

/// Full nonlinear state of the cart-pendulum; `theta = 0` is upright.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NonlinearState {
    pub x: f64,
    pub theta: f64,
    pub x_dot: f64,
    pub theta_dot: f64,
}

impl NonlinearState {
    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.theta, self.x_dot, self.theta_dot]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        NonlinearState {
            x: a[0],
            theta: a[1],
            x_dot: a[2],
            theta_dot: a[3],
        }
    }
}

/// Time derivative of the state under force `u`, solving
///
/// ```text
/// (M + m) x'' + m L cos(th) th'' = u + m L th'^2 sin(th)
/// cos(th) x'' + L th''           = g sin(th)
/// ```
///
/// by Cramer's rule. The determinant `L (M + m sin^2 th)` is positive for `M > 0`.
pub fn nonlinear_derivatives(st: &NonlinearState, u: f64, p: &PendulumParams) -> NonlinearState {
    let (s, c) = st.theta.sin_cos();
    let (big_m, m, l, g) = (p.cart_mass, p.bob_mass, p.length, p.gravity);
    let det = l * (big_m + m) - m * l * c * c;
    let r1 = u + m * l * st.theta_dot * st.theta_dot * s;
    let r2 = g * s;
    let x_dd = (r1 * l - m * l * c * r2) / det;
    let th_dd = ((big_m + m) * r2 - c * r1) / det;
    NonlinearState {
        x: st.x_dot,
        theta: st.theta_dot,
        x_dot: x_dd,
        theta_dot: th_dd,
    }
}

/// Derivative of the linearized model (`sin th ~ th`, `cos th ~ 1`, no `th'^2` term).
pub fn linear_derivatives(st: &NonlinearState, u: f64, p: &PendulumParams) -> NonlinearState {
    let (big_m, m, l, g) = (p.cart_mass, p.bob_mass, p.length, p.gravity);
    // (M + m) x'' + m L th'' = u, x'' + L th'' = g th
    let x_dd = (u - m * g * st.theta) / big_m;
    let th_dd = (g * st.theta - x_dd) / l;
    NonlinearState {
        x: st.x_dot,
        theta: st.theta_dot,
        x_dot: x_dd,
        theta_dot: th_dd,
    }
}

/// Cart kinetic energy plus bob kinetic and potential energy (bob at `(x + L sin th, L cos th)`).
pub fn total_energy(st: &NonlinearState, p: &PendulumParams) -> f64 {
    let (s, c) = st.theta.sin_cos();
    let vx = st.x_dot + p.length * st.theta_dot * c;
    let vy = -p.length * st.theta_dot * s;
    0.5 * p.cart_mass * st.x_dot * st.x_dot
        + 0.5 * p.bob_mass * (vx * vx + vy * vy)
        + p.bob_mass * p.gravity * p.length * c
}

/// Nondimensional displacement, time and mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nondimensional {
    pub x: f64,
    pub t: f64,
    pub mass: f64,
}

/// `x / L`, `t sqrt(g / L)`, `M / m`.
pub fn nondimensionalize(x: f64, t: f64, cart_mass: f64, bob_mass: f64, length: f64, gravity: f64) -> Result<Nondimensional> {
    if !(bob_mass > 0.0 && length > 0.0 && gravity > 0.0) {
        return Err(Error::InvalidArgument("m, L and g must be positive".into()));
    }
    Ok(Nondimensional {
        x: x / length,
        t: t * (gravity / length).sqrt(),
        mass: cart_mass / bob_mass,
    })
}

/// Inverse of [`nondimensionalize`]; returns physical `(x, t, M)`.
pub fn dimensionalize(nd: &Nondimensional, bob_mass: f64, length: f64, gravity: f64) -> Result<(f64, f64, f64)> {
    if !(bob_mass > 0.0 && length > 0.0 && gravity > 0.0) {
        return Err(Error::InvalidArgument("m, L and g must be positive".into()));
    }
    Ok((nd.x * length, nd.t / (gravity / length).sqrt(), nd.mass * bob_mass))
}
