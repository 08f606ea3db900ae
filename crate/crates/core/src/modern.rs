//! Observer-based state feedback for the pendulum and its single-loop equivalents.
//!
//! The estimator runs in parallel with the plant, both driven by `u`:
//!
//! ```text
//! x'  = A x - B K xe + B u
//! xe' = A xe - B K xe + Gobs C (x - xe) + B u
//! ```
//!
//! The estimation error is uncontrollable from `u`, so the transfer function
//! `Q(s)` of the combined system carries the estimator poles as a common factor.

use nalgebra::{ClosedAddAssign, ClosedMulAssign, DMatrix, DVector, RowDVector, Scalar};
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::plant::StateSpace;
use crate::poly::Polynomial;
use crate::tf::{match_roots, RationalTF};

/// Singular values below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Root matching tolerance for common-factor analysis.
pub const FACTOR_TOL: f64 = 1e-6;

/// `[A^{n-1} B | ... | A B | B]`, highest power first.
pub fn controllability_matrix<T>(ss: &StateSpace<T>) -> DMatrix<T>
where
    T: Scalar + Zero + One + ClosedAddAssign + ClosedMulAssign,
{
    let n = ss.order();
    let mut cols: Vec<DVector<T>> = Vec::with_capacity(n);
    let mut v = ss.b.clone();
    for _ in 0..n {
        let next = &ss.a * &v;
        cols.push(v);
        v = next;
    }
    cols.reverse();
    DMatrix::from_columns(&cols)
}

/// `[C A^{n-1}; ...; C A; C]`, highest power first.
pub fn observability_matrix<T>(ss: &StateSpace<T>) -> DMatrix<T>
where
    T: Scalar + Zero + One + ClosedAddAssign + ClosedMulAssign,
{
    let n = ss.order();
    let mut rows: Vec<RowDVector<T>> = Vec::with_capacity(n);
    let mut v = ss.c.clone();
    for _ in 0..n {
        let next = &v * &ss.a;
        rows.push(v);
        v = next;
    }
    rows.reverse();
    DMatrix::from_rows(&rows)
}

/// Numerical rank by SVD with relative tolerance [`RANK_TOL`].
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Exact rank over the rationals by fraction-free Gaussian elimination.
pub fn exact_rank(m: &DMatrix<num_rational::Rational64>) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        a.swap_rows(r, piv);
        for i in r + 1..rows {
            let f = a[(i, c)] / a[(r, c)];
            for j in c..cols {
                let v = a[(r, j)];
                a[(i, j)] -= f * v;
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Monic characteristic polynomial of a conjugate-closed pole set.
pub fn desired_polynomial(desired: &[Complex64]) -> Result<Polynomial> {
    let conj: Vec<Complex64> = desired.iter().map(|z| z.conj()).collect();
    let (_, left, _) = match_roots(desired, &conj, FACTOR_TOL);
    if !left.is_empty() {
        return Err(Error::NotConjugateClosed);
    }
    Ok(Polynomial::from_roots(desired))
}

fn poly_of_matrix(p: &Polynomial, a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    p.coeffs()
        .iter()
        .rev()
        .fold(DMatrix::zeros(n, n), |acc, &c| &acc * a + DMatrix::identity(n, n) * c)
}

/// State-feedback gain placing `eig(A - B K)` at `desired`, by Ackermann's formula
/// `K = e_n^T W^{-1} phi(A)` with `W = [B, AB, ..., A^{n-1}B]`.
pub fn place_poles(a: &DMatrix<f64>, b: &DVector<f64>, desired: &[Complex64]) -> Result<RowDVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || desired.len() != n {
        return Err(Error::Dimension(format!(
            "A is {}x{}, B has {} rows, {} poles requested",
            a.nrows(),
            a.ncols(),
            b.len(),
            desired.len()
        )));
    }
    let phi = desired_polynomial(desired)?;
    let mut cols = Vec::with_capacity(n);
    let mut v = b.clone();
    for _ in 0..n {
        let next = a * &v;
        cols.push(v);
        v = next;
    }
    let w = DMatrix::from_columns(&cols);
    let r = rank(&w);
    if r < n {
        return Err(Error::Uncontrollable { rank: r, n });
    }
    // y^T = e_n^T W^{-1}  <=>  W^T y = e_n
    let mut e_n = DVector::zeros(n);
    e_n[n - 1] = 1.0;
    let y = w
        .transpose()
        .lu()
        .solve(&e_n)
        .ok_or(Error::Uncontrollable { rank: r, n })?;
    Ok(y.transpose() * poly_of_matrix(&phi, a))
}

/// Observer gain placing `eig(A - Gobs C)` at `desired`, by duality.
pub fn place_observer(a: &DMatrix<f64>, c: &RowDVector<f64>, desired: &[Complex64]) -> Result<DVector<f64>> {
    let k = place_poles(&a.transpose(), &c.transpose(), desired)?;
    Ok(k.transpose())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainMatrices {
    pub k: RowDVector<f64>,
    pub gobs: DVector<f64>,
}

pub fn design_gains(ss: &StateSpace, system_poles: &[Complex64], estimator_poles: &[Complex64]) -> Result<GainMatrices> {
    Ok(GainMatrices {
        k: place_poles(&ss.a, &ss.b, system_poles)?,
        gobs: place_observer(&ss.a, &ss.c, estimator_poles)?,
    })
}

/// Plant plus estimator, state `(x, xe)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinedSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
}

pub fn combined_system(ss: &StateSpace, gains: &GainMatrices) -> Result<CombinedSystem> {
    let n = ss.order();
    if gains.k.len() != n || gains.gobs.len() != n {
        return Err(Error::Dimension("gain dimensions do not match the plant".into()));
    }
    let bk = &ss.b * &gains.k;
    let gc = &gains.gobs * &ss.c;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (n, n)).copy_from(&ss.a);
    a.view_mut((0, n), (n, n)).copy_from(&(-&bk));
    a.view_mut((n, 0), (n, n)).copy_from(&gc);
    a.view_mut((n, n), (n, n)).copy_from(&(&ss.a - &bk - &gc));
    let mut b = DVector::zeros(2 * n);
    b.rows_mut(0, n).copy_from(&ss.b);
    b.rows_mut(n, n).copy_from(&ss.b);
    let mut c = RowDVector::zeros(2 * n);
    c.columns_mut(0, n).copy_from(&ss.c);
    Ok(CombinedSystem { a, b, c })
}

/// Eigenvalues via real Schur decomposition.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let schur = a
        .clone()
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(Error::RootFinding(a.nrows()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// `C (sI - A)^{-1} B + D` by the Leverrier-Faddeev recurrence, without any
/// cancellation: the denominator is the full characteristic polynomial.
pub fn ss_to_tf(a: &DMatrix<f64>, b: &DVector<f64>, c: &RowDVector<f64>, d: f64) -> Result<RationalTF> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || c.len() != n {
        return Err(Error::Dimension("ss_to_tf needs square A and matching B, C".into()));
    }
    // det(sI - A) = s^n + c_{n-1} s^{n-1} + ... + c_0
    // adj(sI - A) = sum_{k=1}^{n} M_k s^{n-k},  M_1 = I,  M_{k+1} = A M_k + c_{n-k} I
    let mut charpoly = vec![0.0; n + 1];
    charpoly[n] = 1.0;
    let mut num = vec![0.0; n + 1];
    let mut mk = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        num[n - k] = (c * &mk * b)[(0, 0)];
        let am = a * &mk;
        let ck = -am.trace() / k as f64;
        charpoly[n - k] = ck;
        mk = am + DMatrix::identity(n, n) * ck;
    }
    let den = Polynomial::new(charpoly);
    let num = &Polynomial::new(num) + &den.scale(d);
    RationalTF::new(num, den)
}

/// Common-factor report of an uncancelled transfer function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorReport {
    pub common_roots: Vec<Complex64>,
    /// Transfer function with the common roots removed.
    pub reduced: RationalTF,
}

pub fn common_factor_report(tf: &RationalTF) -> Result<FactorReport> {
    let c = tf.cancel_common(FACTOR_TOL)?;
    Ok(FactorReport {
        common_roots: c.cancelled,
        reduced: c.reduced,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalentVerdict {
    pub proper: bool,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalentCompensator {
    /// Uncancelled result of the rational arithmetic.
    pub raw: RationalTF,
    pub report: FactorReport,
    pub verdict: EquivalentVerdict,
    /// Roots shared between numerator and denominator of `K G` (reduced `K`).
    pub loop_cancellations: Vec<Complex64>,
}

fn verdict_of(reduced: &RationalTF) -> Result<EquivalentVerdict> {
    Ok(EquivalentVerdict {
        proper: reduced.is_proper(),
        stable: reduced.den().is_hurwitz()?,
    })
}

fn loop_cancellations(k: &RationalTF, g: &RationalTF) -> Result<Vec<Complex64>> {
    let num = k.num() * g.num();
    let den = k.den() * g.den();
    if num.is_zero() {
        return Ok(Vec::new());
    }
    let (matched, _, _) = match_roots(num.roots()?.as_slice(), den.roots()?.as_slice(), FACTOR_TOL);
    Ok(matched)
}

fn equivalent(raw: RationalTF, g: &RationalTF) -> Result<EquivalentCompensator> {
    let report = common_factor_report(&raw)?;
    let verdict = verdict_of(&report.reduced)?;
    let loop_cancellations = loop_cancellations(&report.reduced, g)?;
    Ok(EquivalentCompensator {
        raw,
        report,
        verdict,
        loop_cancellations,
    })
}

/// Feedback-only equivalent `K_b = 1/Q - 1/G` (with `K_f = 1`).
pub fn equivalent_kb(q: &RationalTF, g: &RationalTF) -> Result<EquivalentCompensator> {
    let raw = q.reciprocal()?.sub(&g.reciprocal()?);
    equivalent(raw, g)
}

/// Forward-only equivalent `K_f = (Q / G) / (1 - Q)` (with `K_b = 1`).
pub fn equivalent_kf(q: &RationalTF, g: &RationalTF) -> Result<EquivalentCompensator> {
    let num = &(q.num() * g.den()) * q.den();
    let den = &(q.den() * g.num()) * &(q.den() - q.num());
    equivalent(RationalTF::new(num, den)?, g)
}

/// Everything needed to reproduce the observer-based design on the pendulum.
#[derive(Clone, Debug)]
pub struct ObserverDesign {
    pub gains: GainMatrices,
    pub combined: CombinedSystem,
    /// `Q(s)` before cancellation (8th-order denominator).
    pub q_raw: RationalTF,
    /// Roots divided out of `q_raw`: the estimator poles, verified by exact remainders.
    pub q_cancelled: Vec<Complex64>,
    pub q: RationalTF,
    pub kb: EquivalentCompensator,
    pub kf: EquivalentCompensator,
}

pub const SYSTEM_POLES: [Complex64; 4] = [
    Complex64::new(-1.0, 1.0),
    Complex64::new(-1.0, -1.0),
    Complex64::new(-2.0, 1.0),
    Complex64::new(-2.0, -1.0),
];

pub const ESTIMATOR_POLES: [Complex64; 4] = [
    Complex64::new(-1.0, 0.0),
    Complex64::new(-2.0, 0.0),
    Complex64::new(-3.0, 1.0),
    Complex64::new(-3.0, -1.0),
];

/// Build `Q(s)` for the given plant and pole choices, remove the common
/// estimator factor (which must match `estimator_poles`), and derive `K_b`, `K_f`.
pub fn observer_design(
    ss: &StateSpace,
    g: &RationalTF,
    system_poles: &[Complex64],
    estimator_poles: &[Complex64],
) -> Result<ObserverDesign> {
    let gains = design_gains(ss, system_poles, estimator_poles)?;
    let combined = combined_system(ss, &gains)?;
    let q_raw = ss_to_tf(&combined.a, &combined.b, &combined.c, 0.0)?;
    // Divide out exactly the estimator factor and check the remainders vanish.
    let factor = Polynomial::from_roots(estimator_poles);
    let (num_q, num_r) = q_raw.num().div_rem(&factor)?;
    let (den_q, den_r) = q_raw.den().div_rem(&factor)?;
    let scale = q_raw.den().max_abs_coeff();
    if num_r.max_abs_coeff() > FACTOR_TOL * scale || den_r.max_abs_coeff() > FACTOR_TOL * scale {
        return Err(Error::InvalidArgument(
            "estimator factor is not common to numerator and denominator of Q".into(),
        ));
    }
    let q = RationalTF::new(num_q, den_q)?;
    let kb = equivalent_kb(&q, g)?;
    let kf = equivalent_kf(&q, g)?;
    Ok(ObserverDesign {
        gains,
        combined,
        q_raw,
        q_cancelled: estimator_poles.to_vec(),
        q,
        kb,
        kf,
    })
}
