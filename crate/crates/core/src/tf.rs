//! Rational transfer functions and the feedback / parallel-feedforward loop.
//!
//! The loop has the plant `G` in the forward path, a feedforward compensator
//! `P` in parallel with the plant (both driven by the plant input `w`), and the
//! compensator `C` in the feedback path acting on `Z = Y + P w`:
//!
//! ```text
//! w = U - C Z,   Y = G w,   Z = Y + P w   =>   Y = G U / (1 + C (P + G))
//! ```
//!
//! No operation in this module ever cancels common poles and zeros. Cancellation
//! is only available explicitly through [`RationalTF::cancel_common`], which
//! reports every root it removes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, RootSet};

/// Tolerance for classifying a computed root as real.
const REAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfRepr", into = "TfRepr")]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Serialize, Deserialize)]
struct TfRepr {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TryFrom<TfRepr> for RationalTF {
    type Error = Error;
    fn try_from(r: TfRepr) -> Result<Self> {
        RationalTF::from_coeffs(&r.num, &r.den)
    }
}

impl From<RationalTF> for TfRepr {
    fn from(tf: RationalTF) -> Self {
        TfRepr {
            num: tf.num.into(),
            den: tf.den.into(),
        }
    }
}

impl RationalTF {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(RationalTF { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::from_slice(num), Polynomial::from_slice(den))
    }

    pub fn constant(k: f64) -> Self {
        RationalTF {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn into_parts(self) -> (Polynomial, Polynomial) {
        (self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// deg(den) - deg(num); `None` for the zero transfer function.
    pub fn relative_degree(&self) -> Option<isize> {
        let nd = self.num.degree()? as isize;
        Some(self.den.degree().expect("nonzero den") as isize - nd)
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r >= 0)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r > 0)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval(s) / self.den.eval(s)
    }

    /// Frequency response at `s = i omega`.
    pub fn freq_response(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn poles(&self) -> Result<RootSet> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<RootSet> {
        self.num.roots()
    }

    /// Denominator is Hurwitz.
    pub fn is_stable(&self) -> Result<bool> {
        self.den.is_hurwitz()
    }

    pub fn scale(&self, k: f64) -> Self {
        RationalTF {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn reciprocal(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    /// `self - other` over the product denominator.
    pub fn sub(&self, other: &RationalTF) -> RationalTF {
        RationalTF {
            num: &(&self.num * &other.den) - &(&other.num * &self.den),
            den: &self.den * &other.den,
        }
    }

    /// Scale numerator and denominator together so that the denominator's
    /// leading coefficient equals `lead`.
    pub fn normalized_to_leading(&self, lead: f64) -> Self {
        let k = lead / self.den.leading();
        RationalTF {
            num: self.num.scale(k),
            den: self.den.scale(k),
        }
    }

    /// Remove roots shared by numerator and denominator (matched within
    /// `tol * max(1, |r|)`), returning the reduced transfer function and the
    /// list of cancelled roots. The leading-coefficient ratio is preserved.
    pub fn cancel_common(&self, tol: f64) -> Result<Cancellation> {
        if self.num.is_zero() {
            return Ok(Cancellation {
                reduced: self.clone(),
                cancelled: Vec::new(),
            });
        }
        let zeros = self.num.roots()?.into_vec();
        let poles = self.den.roots()?.into_vec();
        let (cancelled, zeros_left, poles_left) = match_roots(&zeros, &poles, tol);
        if cancelled.is_empty() {
            return Ok(Cancellation {
                reduced: self.clone(),
                cancelled,
            });
        }
        let num = Polynomial::from_roots(&zeros_left).scale(self.num.leading());
        let den = Polynomial::from_roots(&poles_left).scale(self.den.leading());
        Ok(Cancellation {
            reduced: RationalTF::new(num, den)?,
            cancelled,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cancellation {
    pub reduced: RationalTF,
    pub cancelled: Vec<Complex64>,
}

/// Greedy nearest matching between two root lists. Returns
/// (matched roots, unmatched of `a`, unmatched of `b`).
pub fn match_roots(
    a: &[Complex64],
    b: &[Complex64],
    tol: f64,
) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let mut used = vec![false; b.len()];
    let mut matched = Vec::new();
    let mut a_left = Vec::new();
    for &za in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, zb)| (j, (za - zb).norm()))
            .filter(|&(_, d)| d <= tol * za.norm().max(1.0))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((j, _)) => {
                used[j] = true;
                matched.push((za + b[j]) * 0.5);
            }
            None => a_left.push(za),
        }
    }
    let b_left = b
        .iter()
        .zip(used)
        .filter(|(_, u)| !u)
        .map(|(z, _)| *z)
        .collect();
    (matched, a_left, b_left)
}

impl std::fmt::Display for RationalTF {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

pub fn series(a: &RationalTF, b: &RationalTF) -> RationalTF {
    RationalTF {
        num: &a.num * &b.num,
        den: &a.den * &b.den,
    }
}

pub fn parallel(a: &RationalTF, b: &RationalTF) -> RationalTF {
    RationalTF {
        num: &(&a.num * &b.den) + &(&b.num * &a.den),
        den: &a.den * &b.den,
    }
}

/// Negative feedback `fwd / (1 + fwd * fb)`.
pub fn feedback(fwd: &RationalTF, fb: &RationalTF) -> Result<RationalTF> {
    let num = &fwd.num * &fb.den;
    let den = &(&fwd.den * &fb.den) + &(&fwd.num * &fb.num);
    if den.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    Ok(RationalTF { num, den })
}

/// `d_C d_G d_P + n_C n_P d_G + n_C n_G d_P`
pub fn closed_loop_denominator(g: &RationalTF, c: &RationalTF, p: &RationalTF) -> Polynomial {
    let t1 = &(&c.den * &g.den) * &p.den;
    let t2 = &(&c.num * &p.num) * &g.den;
    let t3 = &(&c.num * &g.num) * &p.den;
    &(&t1 + &t2) + &t3
}

/// Closed-loop transfer function from `U` to `Y`:
/// `n_G d_C d_P / (d_C d_G d_P + n_C n_P d_G + n_C n_G d_P)`.
pub fn closed_loop(g: &RationalTF, c: &RationalTF, p: &RationalTF) -> Result<RationalTF> {
    let den = closed_loop_denominator(g, c, p);
    if den.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    let num = &(&g.num * &c.den) * &p.den;
    Ok(RationalTF { num, den })
}

/// How many degrees the closed-loop denominator lost to leading-coefficient
/// cancellation, relative to `deg d_C + deg d_G + deg d_P`.
pub fn closed_loop_degree_deficit(g: &RationalTF, c: &RationalTF, p: &RationalTF) -> usize {
    let expected = [&g.den, &c.den, &p.den]
        .iter()
        .map(|d| d.degree().unwrap_or(0))
        .sum::<usize>();
    match closed_loop_denominator(g, c, p).degree() {
        Some(d) => expected.saturating_sub(d),
        None => expected + 1,
    }
}

/// Angle response `H F / G = -n_F d_C d_P s^2 / den(H)`, valid when
/// `d_G = -s^2 d_F`.
pub fn angular_closed_loop(
    f: &RationalTF,
    g: &RationalTF,
    c: &RationalTF,
    p: &RationalTF,
) -> Result<RationalTF> {
    let expected = -&f.den.shift(2);
    let mismatch = g.den.max_abs_diff(&expected);
    if mismatch > 1e-12 * expected.max_abs_coeff().max(1.0) {
        return Err(Error::InconsistentPlantPair(mismatch));
    }
    let den = closed_loop_denominator(g, c, p);
    if den.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    let num = -&(&(&f.num * &c.den) * &p.den).shift(2);
    Ok(RationalTF { num, den })
}

/// A feedback compensator `C` and parallel feedforward compensator `P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompensatorPair {
    pub label: String,
    pub c: RationalTF,
    pub p: RationalTF,
}

impl CompensatorPair {
    /// No invariant checks; see [`CompensatorPair::validated`].
    pub fn new(label: impl Into<String>, c: RationalTF, p: RationalTF) -> Self {
        CompensatorPair {
            label: label.into(),
            c,
            p,
        }
    }

    /// Construct and require both compensators proper with Hurwitz denominators.
    pub fn validated(label: impl Into<String>, c: RationalTF, p: RationalTF) -> Result<Self> {
        let pair = Self::new(label, c, p);
        if !pair.c.is_proper() || !pair.p.is_proper() {
            return Err(Error::InvalidArgument("compensators must be proper".into()));
        }
        if !pair.c.den.is_hurwitz()? || !pair.p.den.is_hurwitz()? {
            return Err(Error::InvalidArgument("compensators must be stable".into()));
        }
        Ok(pair)
    }
}

/// One interval between consecutive real zeros in the closed right half plane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipInterval {
    pub from_zero: f64,
    /// `f64::INFINITY` for the zero at infinity of a strictly proper plant.
    pub to_zero: f64,
    pub poles: Vec<f64>,
}

impl PipInterval {
    pub fn pole_count(&self) -> usize {
        self.poles.len()
    }

    pub fn is_odd(&self) -> bool {
        self.poles.len() % 2 == 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilizabilityVerdict {
    pub strongly_stabilizable: bool,
    pub real_rhp_zeros: Vec<f64>,
    pub real_rhp_poles: Vec<f64>,
    pub intervals: Vec<PipInterval>,
}

impl StabilizabilityVerdict {
    pub fn offending(&self) -> impl Iterator<Item = &PipInterval> {
        self.intervals.iter().filter(|i| i.is_odd())
    }
}

/// Parity interlacing test for strong stabilizability (stabilization by a
/// stable compensator in a single loop).
///
/// Real zeros with `z >= 0` are collected, plus the zero at infinity when the
/// plant is strictly proper. The plant is strongly stabilizable iff every
/// interval between consecutive such zeros contains an even number of real
/// poles. The infinite zero only forms an interval when a finite real RHP zero
/// exists, so it never penalizes a plant on its own.
pub fn pip_check(g: &RationalTF) -> Result<StabilizabilityVerdict> {
    if g.is_zero() {
        return Err(Error::InvalidArgument("pip_check needs a nonzero plant".into()));
    }
    let mut zeros: Vec<f64> = if g.num.degree() == Some(0) {
        Vec::new()
    } else {
        g.zeros()?
            .real_roots(REAL_TOL)
            .into_iter()
            .filter(|&z| z >= 0.0)
            .collect()
    };
    zeros.sort_by(f64::total_cmp);
    let mut poles: Vec<f64> = if g.den.degree() == Some(0) {
        Vec::new()
    } else {
        g.poles()?
            .real_roots(REAL_TOL)
            .into_iter()
            .filter(|&p| p >= 0.0)
            .collect()
    };
    poles.sort_by(f64::total_cmp);

    let mut bounds = zeros.clone();
    if g.is_strictly_proper() && !zeros.is_empty() {
        bounds.push(f64::INFINITY);
    }
    let intervals: Vec<PipInterval> = bounds
        .windows(2)
        .map(|w| PipInterval {
            from_zero: w[0],
            to_zero: w[1],
            poles: poles
                .iter()
                .copied()
                .filter(|&p| p > w[0] && p < w[1])
                .collect(),
        })
        .collect();
    Ok(StabilizabilityVerdict {
        strongly_stabilizable: intervals.iter().all(|i| !i.is_odd()),
        real_rhp_zeros: zeros,
        real_rhp_poles: poles,
        intervals,
    })
}

/// Additive noise injection points of the loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseInput {
    /// Output of the reference summing junction.
    E1,
    /// Plant input only (actuator noise, not seen by `P`).
    E2,
    /// Plant output `Y` (position sensor noise).
    E3,
    /// Output of `P`.
    E4,
    /// The `Z` summing junction.
    E5,
    /// Output of `C`.
    E6,
}

impl NoiseInput {
    pub const ALL: [NoiseInput; 6] = [
        NoiseInput::E1,
        NoiseInput::E2,
        NoiseInput::E3,
        NoiseInput::E4,
        NoiseInput::E5,
        NoiseInput::E6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        ["e1", "e2", "e3", "e4", "e5", "e6"][self.index()]
    }
}

/// Transfer functions from each noise input to `Y`, all over the closed-loop denominator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseChannelSet {
    pub channels: [RationalTF; 6],
    pub common_den: Polynomial,
}

impl NoiseChannelSet {
    pub fn channel(&self, input: NoiseInput) -> &RationalTF {
        &self.channels[input.index()]
    }
}

pub fn noise_channels(g: &RationalTF, c: &RationalTF, p: &RationalTF) -> Result<NoiseChannelSet> {
    let den = closed_loop_denominator(g, c, p);
    if den.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    let ng_dc_dp = &(&g.num * &c.den) * &p.den;
    let one_plus_cp = &(&c.den * &p.den) + &(&c.num * &p.num);
    let ng_nc_dp = &(&g.num * &c.num) * &p.den;
    let nums = [
        ng_dc_dp.clone(),
        &g.num * &one_plus_cp,
        &g.den * &one_plus_cp,
        -&ng_nc_dp,
        -&ng_nc_dp,
        -&ng_dc_dp,
    ];
    let channels = nums.map(|num| RationalTF {
        num,
        den: den.clone(),
    });
    Ok(NoiseChannelSet {
        channels,
        common_den: den,
    })
}
