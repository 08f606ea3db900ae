//! Built-in compensator designs for the nominal `M = 0.3` pendulum.

use crate::tf::{CompensatorPair, RationalTF};

fn tf(num_desc: &[f64], den_desc: &[f64]) -> RationalTF {
    let rev = |c: &[f64]| c.iter().rev().copied().collect::<Vec<_>>();
    RationalTF::from_coeffs(&rev(num_desc), &rev(den_desc)).expect("static design data")
}

/// Published stabilizing pair "a" (descending powers).
pub fn pair_a() -> CompensatorPair {
    CompensatorPair::new(
        "a",
        tf(&[-10.1, 2.0, 0.9, 0.09], &[0.002, 4.2, 10.2, 1.0]),
        tf(&[0.05, 7.0, -0.1, -1.9], &[11.0, 21.7, 5.4, 1.0]),
    )
}

/// Published stabilizing pair "b" (descending powers).
pub fn pair_b() -> CompensatorPair {
    CompensatorPair::new(
        "b",
        tf(&[-6.9, 1.6, 1.1, 0.3], &[0.08, 0.4, 9.3, 1.0]),
        tf(&[0.2, 1.4, -2.0, -0.8], &[4.1, 10.8, 5.3, 1.0]),
    )
}

/// `C2 = -(s + 3) / (s + 10)` for angle feedback.
pub fn angle_compensator() -> RationalTF {
    tf(&[-1.0, -3.0], &[1.0, 10.0])
}

/// Loop gain used with [`angle_compensator`] in the angle-feedback baseline.
pub const BASELINE_GAIN: f64 = 5.0;

/// Angle-feedback baseline as a pair: `C = K C2`, `P = 0`.
pub fn angle_baseline() -> CompensatorPair {
    CompensatorPair::new(
        "angle-baseline",
        angle_compensator().scale(BASELINE_GAIN),
        RationalTF::zero(),
    )
}

/// Look up a built-in pair by label.
pub fn builtin_pair(label: &str) -> Option<CompensatorPair> {
    match label {
        "a" => Some(pair_a()),
        "b" => Some(pair_b()),
        "angle-baseline" => Some(angle_baseline()),
        _ => None,
    }
}
