use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Polynomial;
use crate::error::{Error, Result};

/// Roots closer than this (relative) to their partner's conjugate are snapped to an exact pair.
const CONJUGATE_TOL: f64 = 1e-6;

/// Complex roots of a real polynomial, multiplicity by repetition.
///
/// Sorted by descending real part, then descending imaginary part. Complex
/// roots come in exact conjugate pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSet(Vec<Complex64>);

impl RootSet {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn rightmost_real_part(&self) -> Option<f64> {
        self.0.iter().map(|r| r.re).reduce(f64::max)
    }

    pub fn max_modulus(&self) -> Option<f64> {
        self.0.iter().map(|r| r.norm()).reduce(f64::max)
    }

    /// Roots whose imaginary part is within `tol * max(1, |r|)` of zero.
    pub fn real_roots(&self, tol: f64) -> Vec<f64> {
        self.0
            .iter()
            .filter(|r| r.im.abs() <= tol * r.norm().max(1.0))
            .map(|r| r.re)
            .collect()
    }
}

impl<'a> IntoIterator for &'a RootSet {
    type Item = &'a Complex64;
    type IntoIter = std::slice::Iter<'a, Complex64>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

pub(super) fn find_roots(p: &Polynomial) -> Result<RootSet> {
    if p.is_zero() {
        return Err(Error::UndefinedRoots);
    }
    let coeffs = p.coeffs();
    let zeros_at_origin = coeffs.iter().take_while(|&&c| c == 0.0).count();
    let reduced = Polynomial::from_slice(&coeffs[zeros_at_origin..]);
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];

    let degree = reduced.degree().unwrap_or(0);
    match degree {
        0 => {}
        1 => roots.push(Complex64::new(-reduced.coeff(0) / reduced.coeff(1), 0.0)),
        _ => {
            let mut found = companion_eigenvalues(&reduced)?;
            let deriv = reduced.derivative();
            for r in found.iter_mut() {
                *r = newton_polish(&reduced, &deriv, *r);
            }
            roots.extend(found);
        }
    }
    symmetrize(&mut roots);
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(RootSet(roots))
}

fn companion_eigenvalues(p: &Polynomial) -> Result<Vec<Complex64>> {
    let n = p.degree().expect("nonzero");
    let lead = p.leading();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -p.coeff(n - 1 - j) / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    balance(&mut m);
    let schur = m
        .try_schur(f64::EPSILON, 100 * n.max(10))
        .ok_or(Error::RootFinding(n))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Parlett-Reinsch diagonal similarity balancing with radix 2 (exact scaling).
fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let n = m.nrows();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= inv;
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

fn newton_polish(p: &Polynomial, deriv: &Polynomial, r: Complex64) -> Complex64 {
    let val = p.eval(r);
    let d = deriv.eval(r);
    if d.norm() == 0.0 || !val.is_finite() {
        return r;
    }
    let mut candidate = r - val / d;
    if r.im == 0.0 {
        candidate.im = 0.0;
    }
    if candidate.is_finite() && p.eval(candidate).norm() < val.norm() {
        candidate
    } else {
        r
    }
}

/// Average each complex root with the conjugate of its nearest partner and
/// snap self-conjugate roots onto the real axis.
fn symmetrize(roots: &mut [Complex64]) {
    let n = roots.len();
    let mut paired = vec![false; n];
    for i in 0..n {
        if paired[i] || roots[i].im <= 0.0 {
            continue;
        }
        let target = roots[i].conj();
        let tol = CONJUGATE_TOL * roots[i].norm().max(1.0);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if j == i || paired[j] || roots[j].im > 0.0 {
                continue;
            }
            let d = (roots[j] - target).norm();
            if d <= tol && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            let avg = (roots[i] + roots[j].conj()) * 0.5;
            let avg = Complex64::new(avg.re, avg.im.abs());
            roots[i] = avg;
            roots[j] = avg.conj();
            paired[i] = true;
            paired[j] = true;
        }
    }
    for i in 0..n {
        if !paired[i] && roots[i].im.abs() <= CONJUGATE_TOL * roots[i].norm().max(1.0) {
            roots[i].im = 0.0;
        }
    }
}
