//! Bode magnitudes, peak gains and seeded Monte Carlo stability studies.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{position_plant, PerturbedPlantParams};
use crate::synth::CoeffVector;
use crate::tf::{closed_loop_denominator, noise_channels, CompensatorPair, NoiseInput, RationalTF};

pub const DEFAULT_W_MIN: f64 = 1e-2;
pub const DEFAULT_W_MAX: f64 = 1e2;
pub const DEFAULT_POINTS: usize = 1000;
pub const DEFAULT_SIGMA: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodeCurve {
    pub omega: Vec<f64>,
    pub mag_db: Vec<f64>,
    pub phase_deg: Vec<f64>,
    /// Set when a pole sits on the imaginary axis inside the grid, closer than grid spacing.
    pub flagged: bool,
}

pub fn log_grid(w_min: f64, w_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(w_min > 0.0 && w_max > w_min && w_max.is_finite()) || n < 2 {
        return Err(Error::InvalidArgument(
            "frequency grid needs 0 < w_min < w_max and at least 2 points".into(),
        ));
    }
    let (a, b) = (w_min.ln(), w_max.ln());
    Ok((0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

fn db(z: Complex64) -> f64 {
    20.0 * z.norm().log10()
}

pub fn bode(tf: &RationalTF, w_min: f64, w_max: f64, n_points: usize) -> Result<BodeCurve> {
    let omega = log_grid(w_min, w_max, n_points)?;
    let resp: Vec<Complex64> = omega.iter().map(|&w| tf.freq_response(w)).collect();
    let step = (w_max / w_min).ln() / (n_points - 1) as f64;
    let flagged = tf.poles()?.iter().any(|p| {
        let w = p.im.abs();
        (w_min..=w_max).contains(&w) && p.re.abs() <= step * w
    });
    Ok(BodeCurve {
        mag_db: resp.iter().map(|&z| db(z)).collect(),
        phase_deg: resp.iter().map(|z| z.arg().to_degrees()).collect(),
        omega,
        flagged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub db: f64,
}

/// Maximum of `|tf(i w)|` on the default band: log grid search then
/// golden-section refinement (in `ln w`) around the best grid point.
pub fn peak_gain(tf: &RationalTF) -> Result<Peak> {
    if !tf.is_stable()? {
        return Err(Error::Unstable);
    }
    let grid = log_grid(DEFAULT_W_MIN, DEFAULT_W_MAX, DEFAULT_POINTS)?;
    let mag = |lw: f64| tf.freq_response(lw.exp()).norm();
    let (i, _) = grid
        .iter()
        .map(|&w| mag(w.ln()))
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");
    let mut lo = grid[i.saturating_sub(1)].ln();
    let mut hi = grid[(i + 1).min(grid.len() - 1)].ln();
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (mag(x1), mag(x2));
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = mag(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = mag(x1);
        }
    }
    // Refinement never loses to the grid point it started from.
    let g = grid[i].ln();
    let (lw, m) = [(x1, f1), (x2, f2), (g, mag(g))]
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    Ok(Peak {
        omega: lw.exp(),
        db: 20.0 * m.log10(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelPeak {
    pub input: NoiseInput,
    pub peak: Peak,
}

/// Peak gain of each of the six noise channels.
pub fn noise_peaks(g: &RationalTF, c: &RationalTF, p: &RationalTF) -> Result<Vec<ChannelPeak>> {
    let set = noise_channels(g, c, p)?;
    NoiseInput::ALL
        .iter()
        .map(|&input| {
            let peak = peak_gain(set.channel(input)).map_err(|e| match e {
                Error::Unstable => Error::UnstableChannel,
                e => e,
            })?;
            Ok(ChannelPeak { input, peak })
        })
        .collect()
}

/// Largest peak over the six channels.
pub fn max_noise_peak(g: &RationalTF, c: &RationalTF, p: &RationalTF) -> Result<ChannelPeak> {
    noise_peaks(g, c, p)?
        .into_iter()
        .max_by(|a, b| a.peak.db.total_cmp(&b.peak.db))
        .ok_or(Error::NoRoots)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub trial: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub study: String,
    pub trials: usize,
    pub unstable_count: usize,
    pub pole_cloud: Vec<CloudPoint>,
    pub seed: u64,
    pub sigma: f64,
}

impl McReport {
    pub fn unstable_fraction(&self) -> f64 {
        self.unstable_count as f64 / self.trials as f64
    }
}

/// Independent generator for one trial; stream selection keeps trials
/// reproducible regardless of evaluation order.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

struct Trial {
    unstable: bool,
    poles: Vec<Complex64>,
}

fn run_trials<F>(trials: usize, f: F) -> Vec<Trial>
where
    F: Fn(usize) -> Trial + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(f).collect()
    }
}

fn trial_of(den: crate::poly::Polynomial) -> Trial {
    match den.roots() {
        Ok(r) => Trial {
            unstable: r.iter().any(|z| z.re > 0.0),
            poles: r.into_vec(),
        },
        // A vanished characteristic polynomial is not a stable loop.
        Err(_) => Trial {
            unstable: true,
            poles: Vec::new(),
        },
    }
}

fn report(study: &str, trials: Vec<Trial>, seed: u64, sigma: f64) -> McReport {
    let unstable_count = trials.iter().filter(|t| t.unstable).count();
    let pole_cloud = trials
        .iter()
        .enumerate()
        .flat_map(|(trial, t)| t.poles.iter().map(move |z| CloudPoint { trial, re: z.re, im: z.im }))
        .collect();
    McReport {
        study: study.into(),
        trials: trials.len(),
        unstable_count,
        pole_cloud,
        seed,
        sigma,
    }
}

fn check_mc(trials: usize, sigma: f64) -> Result<Normal<f64>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    Normal::new(0.0, sigma).map_err(|_| Error::InvalidArgument(format!("invalid sigma {sigma}")))
}

/// Perturb the plant parameters `A_i -> A_i (1 + r_i)`, `r_i ~ N(0, sigma)`.
pub fn robustness_mc(
    c: &RationalTF,
    p: &RationalTF,
    mass: f64,
    trials: usize,
    sigma: f64,
    seed: u64,
) -> Result<McReport> {
    let normal = check_mc(trials, sigma)?;
    position_plant(&PerturbedPlantParams::default(), mass)?;
    let results = run_trials(trials, |k| {
        let mut rng = trial_rng(seed, k);
        let r = [0; 4].map(|_| normal.sample(&mut rng));
        match position_plant(&PerturbedPlantParams::perturbed(r), mass) {
            Ok(g) => trial_of(closed_loop_denominator(&g, c, p)),
            Err(_) => Trial {
                unstable: true,
                poles: Vec::new(),
            },
        }
    });
    Ok(report("robustness", results, seed, sigma))
}

/// Order used to pack a pair: the largest polynomial degree present.
pub fn pair_order(pair: &CompensatorPair) -> usize {
    [pair.c.num(), pair.c.den(), pair.p.num(), pair.p.den()]
        .iter()
        .filter_map(|p| p.degree())
        .max()
        .unwrap_or(0)
        .max(1)
}

/// Perturb every packed compensator coefficient `q_i -> q_i (1 + s_i)`.
/// The unit constant terms of the denominators are structural and stay fixed.
pub fn fragility_mc(
    g: &RationalTF,
    pair: &CompensatorPair,
    trials: usize,
    sigma: f64,
    seed: u64,
) -> Result<McReport> {
    let normal = check_mc(trials, sigma)?;
    let base = CoeffVector::encode(pair, pair_order(pair))?;
    let results = run_trials(trials, |k| {
        let mut rng = trial_rng(seed, k);
        let q: Vec<f64> = base
            .q
            .iter()
            .map(|&v| v * (1.0 + normal.sample(&mut rng)))
            .collect();
        let cand = CoeffVector { n: base.n, q };
        match cand.decode() {
            Ok(pp) => trial_of(closed_loop_denominator(g, &pp.c, &pp.p)),
            Err(_) => Trial {
                unstable: true,
                poles: Vec::new(),
            },
        }
    });
    Ok(report("fragility", results, seed, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{designs, plant};

    fn g() -> RationalTF {
        plant::position_plant(&Default::default(), 0.3).unwrap()
    }

    #[test]
    fn bode_of_unity_and_first_order() {
        let one = bode(&RationalTF::constant(1.0), 0.01, 100.0, 50).unwrap();
        assert!(one.mag_db.iter().all(|&m| m.abs() < 1e-12));
        let lag = RationalTF::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let b = bode(&lag, 0.1, 10.0, 3).unwrap();
        assert!((b.omega[1] - 1.0).abs() < 1e-12);
        assert!((b.mag_db[1] + 3.010_299_956_639_812).abs() < 1e-9);
        assert!((b.phase_deg[1] + 45.0).abs() < 1e-9);
        assert!(!b.flagged);
    }

    #[test]
    fn bode_flags_axis_pole() {
        let osc = RationalTF::from_coeffs(&[1.0], &[1.0, 0.0, 1.0]).unwrap();
        assert!(bode(&osc, 0.1, 10.0, 100).unwrap().flagged);
    }

    #[test]
    fn bode_rejects_bad_grid() {
        let one = RationalTF::constant(1.0);
        assert!(bode(&one, 0.0, 1.0, 10).is_err());
        assert!(bode(&one, 1.0, 10.0, 1).is_err());
    }

    #[test]
    fn resonance_peak_matches_closed_form() {
        let tf = RationalTF::from_coeffs(&[1.0], &[1.0, 0.2, 1.0]).unwrap();
        let pk = peak_gain(&tf).unwrap();
        let zeta: f64 = 0.1;
        let w_r = (1.0 - 2.0 * zeta * zeta).sqrt();
        let m = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
        assert!((pk.omega - w_r).abs() < 1e-6, "{}", pk.omega);
        assert!((pk.db - 20.0 * m.log10()).abs() < 1e-9);
    }

    #[test]
    fn constant_peak() {
        let pk = peak_gain(&RationalTF::constant(3.0)).unwrap();
        assert!((pk.db - 9.542_425_094).abs() < 1e-8);
    }

    #[test]
    fn unstable_peak_is_error() {
        let tf = RationalTF::from_coeffs(&[1.0], &[-1.0, 1.0]).unwrap();
        assert_eq!(peak_gain(&tf), Err(Error::Unstable));
    }

    #[test]
    fn zero_sigma_never_unstable() {
        let b = designs::pair_b();
        let r = robustness_mc(&b.c, &b.p, 0.3, 20, 0.0, 1).unwrap();
        assert_eq!(r.unstable_count, 0);
        assert_eq!(r.pole_cloud.len(), 20 * 10);
        let f = fragility_mc(&g(), &b, 20, 0.0, 1).unwrap();
        assert_eq!(f.unstable_count, 0);
    }

    #[test]
    fn mc_is_deterministic_and_seed_sensitive() {
        let b = designs::pair_b();
        let r1 = robustness_mc(&b.c, &b.p, 0.3, 200, 0.02, 9).unwrap();
        let r2 = robustness_mc(&b.c, &b.p, 0.3, 200, 0.02, 9).unwrap();
        let r3 = robustness_mc(&b.c, &b.p, 0.3, 200, 0.02, 10).unwrap();
        assert_eq!(r1, r2);
        assert_ne!(r1.pole_cloud, r3.pole_cloud);
    }

    #[test]
    fn cloud_is_conjugate_symmetric_per_trial() {
        let a = designs::pair_a();
        let r = fragility_mc(&g(), &a, 30, 0.02, 4).unwrap();
        for t in 0..30 {
            let pts: Vec<_> = r.pole_cloud.iter().filter(|p| p.trial == t).collect();
            for p in &pts {
                assert!(pts
                    .iter()
                    .any(|q| (q.re - p.re).abs() < 1e-6 * p.re.abs().max(1.0) && (q.im + p.im).abs() < 1e-6 * p.im.abs().max(1.0)));
            }
        }
    }

    #[test]
    fn angle_baseline_peak_is_lower() {
        let f = plant::angle_plant(0.3).unwrap();
        let base = designs::angle_baseline();
        let pb = designs::pair_b();
        let low = max_noise_peak(&f, &base.c, &base.p).unwrap();
        let high = max_noise_peak(&g(), &pb.c, &pb.p).unwrap();
        assert!(high.peak.db - low.peak.db > 7.0);
    }
}
