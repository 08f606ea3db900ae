//! Coefficient-space objective for stable stabilizing pairs and a genetic search over it.
//!
//! A pair of order `n` is packed into `4n + 2` reals:
//!
//! ```text
//! q = (a0 .. an, a(n+1) .. a(2n), b0 .. bn, b(n+1) .. b(2n))
//! C = (a0 + a1 s + .. + an s^n) / (1 + a(n+1) s + .. + a(2n) s^n)
//! P = (b0 + b1 s + .. + bn s^n) / (1 + b(n+1) s + .. + b(2n) s^n)
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::{closed_loop_denominator, CompensatorPair, RationalTF};

/// Objective value assigned to candidates whose loop degenerates.
pub const DEGENERATE_SCORE: f64 = 1e9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffVector {
    pub n: usize,
    pub q: Vec<f64>,
}

impl CoeffVector {
    pub fn new(n: usize, q: Vec<f64>) -> Result<Self> {
        let expected = 4 * n + 2;
        if n == 0 || q.len() != expected {
            return Err(Error::WrongLength {
                expected,
                got: q.len(),
                n,
            });
        }
        Ok(CoeffVector { n, q })
    }

    pub fn len(n: usize) -> usize {
        4 * n + 2
    }

    pub fn norm(&self) -> f64 {
        self.q.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn half(&self, k: usize) -> Result<RationalTF> {
        let n = self.n;
        let h = &self.q[k * (2 * n + 1)..(k + 1) * (2 * n + 1)];
        let mut den = Vec::with_capacity(n + 1);
        den.push(1.0);
        den.extend_from_slice(&h[n + 1..]);
        RationalTF::from_coeffs(&h[..=n], &den)
    }

    /// Unchecked decode; the compensators may be unstable or degenerate.
    pub fn decode(&self) -> Result<CompensatorPair> {
        CoeffVector::new(self.n, self.q.clone())?;
        Ok(CompensatorPair::new("synthesized", self.half(0)?, self.half(1)?))
    }

    /// Pack a pair, rescaling each compensator so its denominator constant term is 1.
    pub fn encode(pair: &CompensatorPair, n: usize) -> Result<Self> {
        let mut q = Vec::with_capacity(4 * n + 2);
        for tf in [&pair.c, &pair.p] {
            let d0 = tf.den().coeff(0);
            if d0 == 0.0 {
                return Err(Error::InvalidArgument(
                    "denominator constant term is zero; cannot normalize".into(),
                ));
            }
            let too_big = |p: &Polynomial| p.degree().is_some_and(|d| d > n);
            if too_big(tf.num()) || too_big(tf.den()) {
                return Err(Error::InvalidArgument(format!(
                    "compensator exceeds order {n}"
                )));
            }
            q.extend((0..=n).map(|k| tf.num().coeff(k) / d0));
            q.extend((1..=n).map(|k| tf.den().coeff(k) / d0));
        }
        CoeffVector::new(n, q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub penalty: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub plant: RationalTF,
}

impl ObjectiveConfig {
    pub fn new(plant: RationalTF) -> Self {
        ObjectiveConfig {
            penalty: 6.0,
            eps1: 1e-5,
            eps2: 1e-4,
            plant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0) || !(self.eps1 >= 0.0) || !(self.eps2 >= 0.0) {
            return Err(Error::InvalidArgument(
                "objective needs penalty > 0 and eps >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Intermediate quantities of one objective evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectiveBreakdown {
    /// Rightmost real part among poles of `C` and `P`.
    pub p1: f64,
    /// Rightmost real part among closed-loop poles.
    pub p2: f64,
    pub f0: f64,
    pub q_norm: f64,
    pub max_pole_modulus: f64,
    pub value: f64,
}

fn full_degree(p: &Polynomial, expected: usize) -> bool {
    p.degree() == Some(expected) && p.coeffs().iter().all(|c| c.is_finite())
}

/// Full breakdown, or `None` for a degenerate candidate.
pub fn objective_breakdown(q: &CoeffVector, cfg: &ObjectiveConfig) -> Option<ObjectiveBreakdown> {
    if q.q.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let n = q.n;
    let pair = q.decode().ok()?;
    let (c, p) = (&pair.c, &pair.p);
    if !full_degree(c.den(), n) || !full_degree(p.den(), n) {
        return None;
    }
    let g = &cfg.plant;
    let den = closed_loop_denominator(g, c, p);
    let expected = 2 * n + g.den().degree().unwrap_or(0);
    if !full_degree(&den, expected) {
        return None;
    }
    let comp_poles = c.den().roots().ok()?;
    let p_poles = p.den().roots().ok()?;
    let cl_poles = den.roots().ok()?;
    let p1 = comp_poles
        .iter()
        .chain(p_poles.iter())
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let p2 = cl_poles.rightmost_real_part()?;
    let max_pole_modulus = cl_poles.max_modulus()?;
    let f0 = if p1 >= 0.0 { p2 + cfg.penalty * p1 } else { p2 };
    let q_norm = q.norm();
    let value = f0 + cfg.eps1 * q_norm + cfg.eps2 * max_pole_modulus;
    value.is_finite().then_some(ObjectiveBreakdown {
        p1,
        p2,
        f0,
        q_norm,
        max_pole_modulus,
        value,
    })
}

/// `F(q)`. Negative values certify a stable, proper, stabilizing pair.
pub fn objective(q: &CoeffVector, cfg: &ObjectiveConfig) -> f64 {
    objective_breakdown(q, cfg).map_or(DEGENERATE_SCORE, |b| b.value)
}

/// Objective as seen by the search: never negative while a compensator is unstable.
fn fitness(q: &CoeffVector, cfg: &ObjectiveConfig) -> f64 {
    match objective_breakdown(q, cfg) {
        None => DEGENERATE_SCORE,
        Some(b) if b.p1 >= 0.0 => b.value.max(b.p1),
        Some(b) => b.value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Relative standard deviation of a gene mutation.
    pub mutation_scale: f64,
    /// Added to `|gene|` when scaling mutations so zero genes can move.
    pub mutation_floor: f64,
    pub blend_alpha: f64,
    pub tournament: usize,
    pub elitism: usize,
    pub init_range: (f64, f64),
    /// Re-seed the whole population after this many generations without a
    /// certified (negative) candidate. The best-ever record survives restarts.
    pub restart_after: Option<usize>,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 200,
            generations: 500,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_scale: 0.2,
            mutation_floor: 0.05,
            blend_alpha: 0.5,
            tournament: 3,
            elitism: 2,
            init_range: (-12.0, 12.0),
            restart_after: Some(120),
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let rate = |r: f64| (0.0..=1.0).contains(&r);
        if self.population < 2
            || self.tournament < 1
            || self.elitism > self.population
            || !rate(self.crossover_rate)
            || !rate(self.mutation_rate)
            || !(self.mutation_scale >= 0.0)
            || !(self.mutation_floor >= 0.0)
            || !(self.blend_alpha >= 0.0)
            || !(self.init_range.0 < self.init_range.1)
        {
            return Err(Error::InvalidArgument("invalid GA configuration".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthesisResult {
    pub best_q: CoeffVector,
    pub best_f: f64,
    pub success: bool,
    pub pair: CompensatorPair,
    /// Best-ever objective after each generation, starting with the initial population.
    pub history: Vec<f64>,
    pub seed: u64,
    pub objective_config: ObjectiveConfig,
    pub ga_config: GaConfig,
}

fn evaluate(pop: &[Vec<f64>], n: usize, cfg: &ObjectiveConfig) -> Vec<f64> {
    let f = |q: &Vec<f64>| {
        fitness(
            &CoeffVector {
                n,
                q: q.clone(),
            },
            cfg,
        )
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pop.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        pop.iter().map(f).collect()
    }
}

fn tournament(rng: &mut ChaCha8Rng, fit: &[f64], size: usize) -> usize {
    let mut best = rng.random_range(0..fit.len());
    for _ in 1..size {
        let i = rng.random_range(0..fit.len());
        if fit[i] < fit[best] {
            best = i;
        }
    }
    best
}

fn blend(rng: &mut ChaCha8Rng, a: &[f64], b: &[f64], alpha: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (lo, hi) = (x.min(y), x.max(y));
            let d = hi - lo;
            let u: f64 = rng.random();
            lo - alpha * d + u * (1.0 + 2.0 * alpha) * d
        })
        .collect()
}

fn mutate(rng: &mut ChaCha8Rng, q: &mut [f64], cfg: &GaConfig) {
    for g in q.iter_mut() {
        if rng.random::<f64>() < cfg.mutation_rate {
            let z: f64 = rng.sample(StandardNormal);
            *g += cfg.mutation_scale * (g.abs() + cfg.mutation_floor) * z;
        }
    }
}

fn recorded_best(fit: &[f64], pop: &[Vec<f64>], best_fit: &mut f64, best_q: &mut Vec<f64>) {
    let i = (0..fit.len())
        .min_by(|&i, &j| fit[i].total_cmp(&fit[j]))
        .expect("non-empty population");
    if fit[i] < *best_fit || best_q.is_empty() {
        *best_fit = fit[i];
        *best_q = pop[i].clone();
    }
}

/// Seeded genetic search for `q` with `F(q) < 0`. All random draws happen on one
/// stream in a fixed order; only fitness evaluation runs in parallel.
pub fn ga_search(obj: &ObjectiveConfig, ga: &GaConfig, n: usize) -> Result<SynthesisResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("compensator order must be at least 1".into()));
    }
    obj.validate()?;
    ga.validate()?;
    let len = CoeffVector::len(n);
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let (lo, hi) = ga.init_range;
    let init = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..ga.population)
            .map(|_| (0..len).map(|_| rng.random_range(lo..hi)).collect())
            .collect()
    };
    let mut pop = init(&mut rng);
    let mut fit = evaluate(&pop, n, obj);
    let mut epoch = 0;

    let mut best_q = Vec::new();
    let mut best_fit = f64::INFINITY;
    recorded_best(&fit, &pop, &mut best_fit, &mut best_q);
    let mut history = Vec::with_capacity(ga.generations + 1);
    history.push(best_fit);

    for _ in 0..ga.generations {
        epoch += 1;
        if ga.restart_after.is_some_and(|r| epoch > r) && best_fit >= 0.0 {
            pop = init(&mut rng);
            fit = evaluate(&pop, n, obj);
            epoch = 0;
            recorded_best(&fit, &pop, &mut best_fit, &mut best_q);
            history.push(best_fit);
            continue;
        }
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&i, &j| fit[i].total_cmp(&fit[j]));
        let mut next: Vec<Vec<f64>> = order[..ga.elitism].iter().map(|&i| pop[i].clone()).collect();
        while next.len() < ga.population {
            let pa = tournament(&mut rng, &fit, ga.tournament);
            let pb = tournament(&mut rng, &fit, ga.tournament);
            let (mut c1, mut c2) = if rng.random::<f64>() < ga.crossover_rate {
                (
                    blend(&mut rng, &pop[pa], &pop[pb], ga.blend_alpha),
                    blend(&mut rng, &pop[pa], &pop[pb], ga.blend_alpha),
                )
            } else {
                (pop[pa].clone(), pop[pb].clone())
            };
            mutate(&mut rng, &mut c1, ga);
            mutate(&mut rng, &mut c2, ga);
            next.push(c1);
            if next.len() < ga.population {
                next.push(c2);
            }
        }
        pop = next;
        fit = evaluate(&pop, n, obj);
        recorded_best(&fit, &pop, &mut best_fit, &mut best_q);
        history.push(best_fit);
    }

    let best_q = CoeffVector::new(n, best_q)?;
    let best_f = objective(&best_q, obj);
    let mut pair = best_q.decode()?;
    pair.label = format!("ga-n{n}-seed{}", ga.seed);
    Ok(SynthesisResult {
        success: best_f < 0.0 && best_fit < 0.0,
        best_q,
        best_f,
        pair,
        history,
        seed: ga.seed,
        objective_config: obj.clone(),
        ga_config: ga.clone(),
    })
}

/// One named pass/fail check. `margin` is check-specific; negative real parts
/// for stability checks, relative degree for properness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub label: String,
    pub checks: Vec<Check>,
    pub closed_loop_poles: Vec<num_complex::Complex64>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn hurwitz_check(name: &str, p: &Polynomial) -> Check {
    match p.roots() {
        Ok(r) => {
            let margin = r.rightmost_real_part().unwrap_or(f64::NEG_INFINITY);
            Check {
                name: name.into(),
                passed: margin < 0.0,
                margin,
            }
        }
        Err(_) => Check {
            name: name.into(),
            passed: false,
            margin: f64::NAN,
        },
    }
}

fn proper_check(name: &str, tf: &RationalTF) -> Check {
    let rd = tf.relative_degree();
    Check {
        name: name.into(),
        passed: tf.is_proper(),
        margin: rd.map_or(f64::INFINITY, |d| d as f64),
    }
}

/// Properness and stability of both compensators, and closed-loop stability.
pub fn verify_pair(g: &RationalTF, pair: &CompensatorPair) -> VerificationReport {
    let den = closed_loop_denominator(g, &pair.c, &pair.p);
    let mut checks = vec![
        proper_check("C proper", &pair.c),
        proper_check("P proper", &pair.p),
        hurwitz_check("d_C Hurwitz", pair.c.den()),
        hurwitz_check("d_P Hurwitz", pair.p.den()),
    ];
    let poles = den.roots().map(|r| r.into_vec()).unwrap_or_default();
    let cl = if den.is_zero() {
        Check {
            name: "closed loop Hurwitz".into(),
            passed: false,
            margin: f64::NAN,
        }
    } else {
        hurwitz_check("closed loop Hurwitz", &den)
    };
    checks.push(cl);
    VerificationReport {
        label: pair.label.clone(),
        checks,
        closed_loop_poles: poles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{designs, plant};

    fn pendulum() -> ObjectiveConfig {
        ObjectiveConfig::new(plant::position_plant(&Default::default(), 0.3).unwrap())
    }

    #[test]
    fn decode_index_map() {
        let cv = CoeffVector::new(1, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let pair = cv.decode().unwrap();
        assert_eq!(pair.c.num().coeffs(), &[1.0]);
        assert_eq!(pair.c.den().coeffs(), &[1.0, 1.0]);
        assert!(pair.p.num().is_zero());
        assert_eq!(pair.p.den().coeffs(), &[1.0, 1.0]);
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(matches!(
            CoeffVector::new(3, vec![0.0; 13]),
            Err(Error::WrongLength { expected: 14, got: 13, n: 3 })
        ));
    }

    #[test]
    fn encode_pair_a_reads_coefficients() {
        let cv = CoeffVector::encode(&designs::pair_a(), 3).unwrap();
        assert_eq!(
            &cv.q[..7],
            &[0.09, 0.9, 2.0, -10.1, 10.2, 4.2, 0.002]
        );
        assert_eq!(cv.decode().unwrap().c, designs::pair_a().c);
    }

    #[test]
    fn encode_normalizes_constant_term() {
        let c = RationalTF::from_coeffs(&[2.0, 4.0], &[2.0, 1.0]).unwrap();
        let pair = CompensatorPair::new("x", c, RationalTF::zero());
        let cv = CoeffVector::encode(&pair, 1).unwrap();
        assert_eq!(cv.q, vec![1.0, 2.0, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn penalty_branch_arithmetic() {
        // C = 1/(1 - s/2) has a pole at +2.
        let cfg = ObjectiveConfig {
            eps1: 0.0,
            eps2: 0.0,
            ..ObjectiveConfig::new(RationalTF::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap())
        };
        let q = CoeffVector::new(1, vec![1.0, 0.0, -0.5, 0.0, 0.0, 1.0]).unwrap();
        let b = objective_breakdown(&q, &cfg).unwrap();
        assert!((b.p1 - 2.0).abs() < 1e-12);
        assert!((b.f0 - (b.p2 + 12.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_candidates_score_large() {
        let cfg = pendulum();
        // Leading denominator coefficient of C is zero.
        let mut q = CoeffVector::encode(&designs::pair_b(), 3).unwrap();
        q.q[6] = 0.0;
        assert_eq!(objective(&q, &cfg), DEGENERATE_SCORE);
        q.q[6] = f64::NAN;
        assert_eq!(objective(&q, &cfg), DEGENERATE_SCORE);
    }

    #[test]
    fn published_pairs_have_negative_objective() {
        let cfg = pendulum();
        let fa = objective(&CoeffVector::encode(&designs::pair_a(), 3).unwrap(), &cfg);
        let fb = objective(&CoeffVector::encode(&designs::pair_b(), 3).unwrap(), &cfg);
        assert!((fa - -0.14494).abs() < 1e-4, "{fa}");
        assert!((fb - -0.31925).abs() < 1e-4, "{fb}");
    }

    #[test]
    fn verify_published_and_baseline() {
        let g = plant::position_plant(&Default::default(), 0.3).unwrap();
        assert!(verify_pair(&g, &designs::pair_a()).all_passed());
        assert!(verify_pair(&g, &designs::pair_b()).all_passed());
        let f = plant::angle_plant(0.3).unwrap();
        assert!(verify_pair(&f, &designs::angle_baseline()).all_passed());
    }

    #[test]
    fn verify_flags_unstable_compensator() {
        let g = plant::position_plant(&Default::default(), 0.3).unwrap();
        let mut pair = designs::pair_b();
        pair.c = RationalTF::new(pair.c.num().clone(), Polynomial::from_slice(&[-1.0, 1.0])).unwrap();
        let r = verify_pair(&g, &pair);
        assert!(!r.all_passed());
        assert!(!r.checks[2].passed);
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let cfg = pendulum();
        let ga = GaConfig {
            generations: 0,
            population: 20,
            seed: 3,
            ..Default::default()
        };
        let r = ga_search(&cfg, &ga, 2).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.history[0], fitness(&r.best_q, &cfg));
    }

    #[test]
    fn easy_plant_is_solved_and_verifies() {
        let g = RationalTF::from_coeffs(&[1.0], &[-1.0, 1.0]).unwrap();
        let cfg = ObjectiveConfig::new(g.clone());
        let ga = GaConfig {
            generations: 100,
            population: 60,
            seed: 1,
            ..Default::default()
        };
        let r = ga_search(&cfg, &ga, 1).unwrap();
        assert!(r.success, "best F = {}", r.best_f);
        assert!(verify_pair(&g, &r.pair).all_passed());
    }

    #[test]
    fn ga_is_deterministic() {
        let cfg = pendulum();
        let ga = GaConfig {
            generations: 10,
            population: 30,
            seed: 11,
            ..Default::default()
        };
        let a = ga_search(&cfg, &ga, 3).unwrap();
        let b = ga_search(&cfg, &ga, 3).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.best_q, b.best_q);
    }

    #[test]
    fn order_zero_rejected() {
        assert!(ga_search(&pendulum(), &GaConfig::default(), 0).is_err());
    }
}
