//! Routh array stability test, independent of root extraction.

use super::Polynomial;
use crate::error::{Error, Result};

/// First column of the Routh array, normalized so the leading entry is
/// positive. Returns `None` as soon as a zero pivot appears, in which case the
/// polynomial is not strictly Hurwitz.
pub fn routh_first_column(p: &Polynomial) -> Result<Option<Vec<f64>>> {
    let n = p.degree().ok_or(Error::UndefinedRoots)?;
    let sign = p.leading().signum();
    let desc: Vec<f64> = p.coeffs().iter().rev().map(|c| c * sign).collect();
    if n == 0 {
        return Ok(Some(vec![desc[0]]));
    }
    let width = n / 2 + 1;
    let row = |start: usize| -> Vec<f64> {
        (0..width)
            .map(|j| desc.get(start + 2 * j).copied().unwrap_or(0.0))
            .collect()
    };
    let mut prev = row(0);
    let mut cur = row(1);
    let mut column = vec![prev[0], cur[0]];
    for _ in 2..=n {
        let pivot = cur[0];
        if pivot == 0.0 {
            return Ok(None);
        }
        let next: Vec<f64> = (0..width)
            .map(|j| {
                let a = prev.get(j + 1).copied().unwrap_or(0.0);
                let b = cur.get(j + 1).copied().unwrap_or(0.0);
                (pivot * a - prev[0] * b) / pivot
            })
            .collect();
        column.push(next[0]);
        prev = cur;
        cur = next;
    }
    Ok(Some(column))
}

/// `true` iff every root lies strictly in the open left half plane.
pub fn routh_hurwitz(p: &Polynomial) -> Result<bool> {
    Ok(routh_first_column(p)?.is_some_and(|col| col.iter().all(|&x| x > 0.0)))
}
