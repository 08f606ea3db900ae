//! Time-domain simulation: controllable canonical realizations, fixed-step
//! RK4 step responses, the closed loop around the nonlinear pendulum, and the
//! randomized multi-sine noise response.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{self, NonlinearState, PendulumParams};
use crate::tf::{self, NoiseChannelSet, RationalTF};

/// Upper bound on `h * |fastest pole|` for the RK4 inner step.
pub const STIFFNESS_BOUND: f64 = 0.1;
pub const DIVERGENCE_LIMIT: f64 = 1e6;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 60.0;

/// Controllable canonical form of a proper transfer function.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

impl Realization {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn transfer_function(&self) -> RationalTF {
        crate::modern::ss_to_tf(&self.a, &self.b, &self.c, self.d)
            .expect("realization matrices are square by construction")
    }
}

pub fn realize(tf: &RationalTF) -> Result<Realization> {
    if !tf.is_proper() {
        return Err(Error::Improper);
    }
    let den = tf.den();
    let n = den.degree().expect("nonzero den");
    let monic = den.scale(1.0 / den.leading());
    let num = tf.num().scale(1.0 / den.leading());
    let d = num.coeff(n);
    let rem = &num - &monic.scale(d);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    if n > 0 {
        for j in 0..n {
            a[(n - 1, j)] = -monic.coeff(j);
        }
    }
    let mut b = DVector::zeros(n);
    if n > 0 {
        b[n - 1] = 1.0;
    }
    let c = RowDVector::from_fn(n, |_, j| rem.coeff(j));
    Ok(Realization { a, b, c, d })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        Some((*self.t.last()?, *self.y.last()?))
    }

    pub fn sup_norm(&self) -> f64 {
        self.y.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute sample difference against `other`, on a shared time grid.
    pub fn sup_diff(&self, other: &TimeSeries) -> f64 {
        self.y
            .iter()
            .zip(&other.y)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Row-major copy of a realization for the integration loop.
#[derive(Clone, Debug)]
struct Dense {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl Dense {
    fn from_realization(r: &Realization) -> Self {
        let n = r.order();
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                a.push(r.a[(i, j)]);
            }
        }
        Dense {
            n,
            a,
            b: r.b.iter().copied().collect(),
            c: r.c.iter().copied().collect(),
            d: r.d,
        }
    }

    fn deriv(&self, x: &[f64], u: f64, out: &mut [f64]) {
        for ((o, row), b) in out.iter_mut().zip(self.a.chunks_exact(self.n)).zip(&self.b) {
            *o = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + b * u;
        }
    }

    /// Output without the feedthrough term.
    fn output_state(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

fn check_grid(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && t_end > 0.0 && dt < t_end) || !dt.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidTimeStep { dt, t_end });
    }
    Ok((t_end / dt).round() as usize)
}

fn substeps(dt: f64, fastest: f64) -> usize {
    ((dt * fastest / STIFFNESS_BOUND).ceil() as usize).max(1)
}

fn fastest_pole(den: &crate::poly::Polynomial) -> Result<f64> {
    if den.degree().unwrap_or(0) == 0 {
        return Ok(0.0);
    }
    Ok(den.roots()?.max_modulus().unwrap_or(0.0))
}

/// Response to a unit step from rest, sampled every `dt` up to `t_end`.
pub fn step_response(tf: &RationalTF, t_end: f64, dt: f64) -> Result<TimeSeries> {
    let steps = check_grid(t_end, dt)?;
    let real = realize(tf)?;
    let sys = Dense::from_realization(&real);
    let m = substeps(dt, fastest_pole(tf.den())?);
    let h = dt / m as f64;
    let n = sys.n;
    let mut x = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let u = 1.0;
    let mut out = TimeSeries {
        t: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
    };
    // y(0) = D * u for a step applied at t = 0
    out.t.push(0.0);
    out.y.push(sys.d * u);
    for k in 1..=steps {
        for _ in 0..m {
            sys.deriv(&x, u, &mut k1);
            axpy(&x, h / 2.0, &k1, &mut tmp);
            sys.deriv(&tmp, u, &mut k2);
            axpy(&x, h / 2.0, &k2, &mut tmp);
            sys.deriv(&tmp, u, &mut k3);
            axpy(&x, h, &k3, &mut tmp);
            sys.deriv(&tmp, u, &mut k4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        out.t.push(k as f64 * dt);
        out.y.push(sys.output_state(&x) + sys.d * u);
    }
    Ok(out)
}

fn axpy(x: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, x), k) in out.iter_mut().zip(x).zip(k) {
        *o = x + a * k;
    }
}

/// Step response of the pendulum angle under position feedback.
pub fn angle_step_response(
    f: &RationalTF,
    g: &RationalTF,
    c: &RationalTF,
    p: &RationalTF,
    t_end: f64,
    dt: f64,
) -> Result<TimeSeries> {
    step_response(&tf::angular_closed_loop(f, g, c, p)?, t_end, dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlantModel {
    Linear,
    Nonlinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopTrajectory {
    pub x: TimeSeries,
    pub theta: TimeSeries,
}

/// Simulate the pendulum in the loop with `C` (feedback) and `P` (parallel
/// feedforward), a step of height `u_step` on the reference and an initial
/// angle `theta0`. Both compensators are realized in controllable canonical
/// form; biproper compensators give an algebraic loop solved in closed form.
#[allow(clippy::too_many_arguments)]
pub fn closed_loop_sim(
    model: PlantModel,
    params: &PendulumParams,
    c: &RationalTF,
    p: &RationalTF,
    u_step: f64,
    theta0: f64,
    t_end: f64,
    dt: f64,
) -> Result<ClosedLoopTrajectory> {
    params.validate()?;
    let steps = check_grid(t_end, dt)?;
    let rc = Dense::from_realization(&realize(c)?);
    let rp = Dense::from_realization(&realize(p)?);
    let loop_gain = 1.0 + rc.d * rp.d;
    if loop_gain == 0.0 {
        return Err(Error::IllPosedLoop);
    }
    let g = plant::position_plant_physical(params)?;
    let fastest = [
        fastest_pole(c.den())?,
        fastest_pole(p.den())?,
        fastest_pole(&tf::closed_loop_denominator(&g, c, p))?,
        fastest_pole(g.den())?,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let m = substeps(dt, fastest);
    let h = dt / m as f64;

    let (nc, np) = (rc.n, rp.n);
    let dim = 4 + nc + np;
    let derivs = |state: &[f64], out: &mut [f64]| {
        let pl = NonlinearState::from_array([state[0], state[1], state[2], state[3]]);
        let xc = &state[4..4 + nc];
        let xp = &state[4 + nc..];
        let cx = rc.output_state(xc);
        let px = rp.output_state(xp);
        let w = (u_step - cx - rc.d * (pl.x + px)) / loop_gain;
        let z = pl.x + px + rp.d * w;
        let dpl = match model {
            PlantModel::Linear => plant::linear_derivatives(&pl, w, params),
            PlantModel::Nonlinear => plant::nonlinear_derivatives(&pl, w, params),
        };
        out[..4].copy_from_slice(&dpl.to_array());
        rc.deriv(xc, z, &mut out[4..4 + nc]);
        rp.deriv(xp, w, &mut out[4 + nc..]);
    };

    let mut s = vec![0.0; dim];
    s[1] = theta0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut traj = ClosedLoopTrajectory {
        x: TimeSeries::default(),
        theta: TimeSeries::default(),
    };
    let mut record = |t: f64, s: &[f64]| {
        traj.x.t.push(t);
        traj.x.y.push(s[0]);
        traj.theta.t.push(t);
        traj.theta.y.push(s[1]);
    };
    record(0.0, &s);
    for k in 1..=steps {
        for _ in 0..m {
            derivs(&s, &mut k1);
            axpy(&s, h / 2.0, &k1, &mut tmp);
            derivs(&tmp, &mut k2);
            axpy(&s, h / 2.0, &k2, &mut tmp);
            derivs(&tmp, &mut k3);
            axpy(&s, h, &k3, &mut tmp);
            derivs(&tmp, &mut k4);
            for i in 0..dim {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let t = k as f64 * dt;
        if s.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { t });
        }
        record(t, &s);
    }
    Ok(traj)
}

/// [`closed_loop_sim`] with the full nonlinear pendulum.
#[allow(clippy::too_many_arguments)]
pub fn nonlinear_closed_loop(
    params: &PendulumParams,
    c: &RationalTF,
    p: &RationalTF,
    u_step: f64,
    theta0: f64,
    t_end: f64,
    dt: f64,
) -> Result<ClosedLoopTrajectory> {
    closed_loop_sim(PlantModel::Nonlinear, params, c, p, u_step, theta0, t_end, dt)
}

/// Parameters of the multi-sine noise signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub count: usize,
    /// Euclidean norm of the amplitude vector.
    pub amp_norm: f64,
    pub freq_lo: f64,
    pub freq_hi: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            count: 4000,
            amp_norm: 0.01,
            freq_lo: 0.5,
            freq_hi: 1.5,
            seed: 0,
        }
    }
}

/// Amplitude distribution recorded alongside noise output.
pub const NOISE_AMPLITUDE_DISTRIBUTION: &str = "|N(0,1)| rescaled to amp_norm";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub omega: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Draw frequencies (uniform on the interval), amplitudes (half-normal,
/// rescaled to the requested norm) and phases (uniform on `[0, 2 pi)`), in that order.
pub fn draw_sinusoids(spec: &NoiseSpec) -> Result<Vec<Sinusoid>> {
    if spec.count == 0 || !(spec.amp_norm >= 0.0) || !(spec.freq_hi > spec.freq_lo) {
        return Err(Error::InvalidArgument(format!("invalid noise spec {spec:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let omegas: Vec<f64> = (0..spec.count)
        .map(|_| rng.random_range(spec.freq_lo..spec.freq_hi))
        .collect();
    let mut amps: Vec<f64> = (0..spec.count)
        .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
        .collect();
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    let k = if norm > 0.0 { spec.amp_norm / norm } else { 0.0 };
    amps.iter_mut().for_each(|a| *a *= k);
    let phases: Vec<f64> = (0..spec.count)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    Ok(omegas
        .into_iter()
        .zip(amps)
        .zip(phases)
        .map(|((omega, amplitude), phase)| Sinusoid {
            omega,
            amplitude,
            phase,
        })
        .collect())
}

/// Sinusoidal steady-state output of every channel to the same multi-sine input.
pub fn noise_time_response_with(
    channels: &NoiseChannelSet,
    sines: &[Sinusoid],
    t_grid: &[f64],
) -> Result<Vec<TimeSeries>> {
    if !channels.common_den.is_hurwitz()? {
        return Err(Error::UnstableChannel);
    }
    Ok(channels
        .channels
        .iter()
        .map(|ch| {
            let resp: Vec<(f64, f64, f64)> = sines
                .iter()
                .map(|s| {
                    let h: Complex64 = ch.freq_response(s.omega);
                    (s.omega, s.amplitude * h.norm(), h.arg() + s.phase)
                })
                .collect();
            let y = t_grid
                .iter()
                .map(|&t| resp.iter().map(|(w, a, ph)| a * (w * t + ph).sin()).sum())
                .collect();
            TimeSeries {
                t: t_grid.to_vec(),
                y,
            }
        })
        .collect())
}

pub fn noise_time_response(
    channels: &NoiseChannelSet,
    spec: &NoiseSpec,
    t_grid: &[f64],
) -> Result<Vec<TimeSeries>> {
    noise_time_response_with(channels, &draw_sinusoids(spec)?, t_grid)
}

/// The input signal `sum c_k sin(omega_k t)` itself.
pub fn noise_input(sines: &[Sinusoid], t_grid: &[f64]) -> TimeSeries {
    TimeSeries {
        t: t_grid.to_vec(),
        y: t_grid
            .iter()
            .map(|&t| sines.iter().map(|s| s.amplitude * (s.omega * t).sin()).sum())
            .collect(),
    }
}
