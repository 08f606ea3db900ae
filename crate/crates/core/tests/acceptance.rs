//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fail. Tolerances are pinned below.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_rational::Rational64;
use pfc_core::tf::{closed_loop_denominator, pip_check};
use pfc_core::{analysis, designs, modern, plant, sim, synth, Polynomial, RationalTF};

const ROOT_TOL: f64 = 1e-9;
const CRITICAL_GAIN_TOL: f64 = 1e-6;
const Q_REL_TOL: f64 = 1e-6;
const SS_REL_TOL: f64 = 1e-9;
const EIG_TOL: f64 = 1e-6;
const SETTLE_REL: f64 = 0.01;
const ANGLE_DECAY: f64 = 1e-3;
const RK4_RATIO: (f64, f64) = (14.0, 18.0);
const PEAK_DB: (f64, f64) = (27.0, 33.0);
const PEAK_OMEGA: (f64, f64) = (0.5, 2.0);
const BASELINE_DROP_DB: (f64, f64) = (7.0, 13.0);
const ROBUST_A: (usize, usize) = (0, 5);
const ROBUST_B: (usize, usize) = (15, 90);
const FRAGILE_A: (usize, usize) = (0, 30);
const FRAGILE_B: (usize, usize) = (10, 70);
const MC_SEED: u64 = 1;
const MC_TRIALS: usize = 1000;
const GA_SEEDS: u64 = 10;
const NONLINEAR_REL: f64 = 0.02;

type Outcome = Result<String, String>;

fn g() -> RationalTF {
    plant::position_plant(&Default::default(), 0.3).unwrap()
}

fn f() -> RationalTF {
    plant::angle_plant(0.3).unwrap()
}

fn ensure(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn real_roots_match(p: &Polynomial, expected: &[f64]) -> Result<f64, String> {
    let roots = p.roots().map_err(|e| e.to_string())?;
    if roots.len() != expected.len() {
        return Err(format!("{} roots, expected {}", roots.len(), expected.len()));
    }
    let mut got: Vec<Complex64> = roots.into_vec();
    got.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut want = expected.to_vec();
    want.sort_by(f64::total_cmp);
    Ok(got
        .iter()
        .zip(&want)
        .map(|(z, w)| (z - w).norm())
        .fold(0.0, f64::max))
}

fn c1_plant_structure() -> Outcome {
    let g = g();
    let w = (13.0f64 / 3.0).sqrt();
    let en = real_roots_match(g.num(), &[-1.0, 1.0])?;
    let ed = real_roots_match(g.den(), &[0.0, 0.0, -w, w])?;
    let vg = pip_check(&g).map_err(|e| e.to_string())?;
    let vf = pip_check(&f()).map_err(|e| e.to_string())?;
    ensure(
        en < ROOT_TOL && ed < ROOT_TOL && !vg.strongly_stabilizable && vf.strongly_stabilizable,
        format!(
            "zero err {en:.1e}, pole err {ed:.1e}; G strongly stabilizable: {}, F: {}",
            vg.strongly_stabilizable, vf.strongly_stabilizable
        ),
    )
}

fn c2_published_pairs() -> Outcome {
    let g = g();
    let mut parts = Vec::new();
    let mut ok = true;
    for pair in [designs::pair_a(), designs::pair_b()] {
        let r = synth::verify_pair(&g, &pair);
        let cl = r.checks.last().unwrap().margin;
        ok &= r.all_passed() && cl < 0.0;
        parts.push(format!("pair {}: all checks {}, rightmost {cl:.4}", pair.label, r.all_passed()));
    }
    ensure(ok, parts.join("; "))
}

fn rightmost_for_gain(k: f64) -> f64 {
    let c = designs::angle_compensator().scale(k);
    closed_loop_denominator(&f(), &c, &RationalTF::zero())
        .rightmost_real_part()
        .unwrap()
}

fn c3_critical_gain() -> Outcome {
    let (mut lo, mut hi) = (4.0, 5.0);
    if rightmost_for_gain(lo) <= 0.0 || rightmost_for_gain(hi) >= 0.0 {
        return Err("bracket does not straddle the boundary".into());
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if rightmost_for_gain(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    // Routh oracle on 0.3 s^3 + 3 s^2 + (K - 1.3) s + (3K - 13).
    let routh = |k: f64| {
        pfc_core::poly::routh::routh_hurwitz(&Polynomial::from_slice(&[3.0 * k - 13.0, k - 1.3, 3.0, 0.3]))
            .unwrap()
    };
    let k_star = 13.0 / 3.0;
    ensure(
        (k - k_star).abs() < CRITICAL_GAIN_TOL && routh(k_star + 1e-6) && !routh(k_star - 1e-6),
        format!("boundary K = {k:.9} (13/3 = {k_star:.9})"),
    )
}

fn rel_err(got: &RationalTF, num: &[f64], den: &[f64]) -> f64 {
    let lead = *den.last().unwrap();
    let n = got.normalized_to_leading(lead);
    n.num()
        .rel_coeff_error(&Polynomial::from_slice(num))
        .max(n.den().rel_coeff_error(&Polynomial::from_slice(den)))
}

fn c4_observer_design() -> Outcome {
    let r = |n, d| Rational64::new(n, d);
    let ss = plant::state_space_exact(r(3, 10)).map_err(|e| e.to_string())?;
    let pc = modern::controllability_matrix(&ss);
    let po = modern::observability_matrix(&ss);
    let z = r(0, 1);
    let o = r(1, 1);
    #[rustfmt::skip]
    let pc_ok = pc.as_slice() == nalgebra::DMatrix::from_row_slice(4, 4, &[
        r(100, 9), z, r(10, 3), z,
        r(-130, 9), z, r(-10, 3), z,
        z, r(100, 9), z, r(10, 3),
        z, r(-130, 9), z, r(-10, 3),
    ]).as_slice();
    #[rustfmt::skip]
    let po_ok = po.as_slice() == nalgebra::DMatrix::from_row_slice(4, 4, &[
        z, z, z, r(-10, 3),
        z, r(-10, 3), z, z,
        z, z, o, z,
        o, z, z, z,
    ]).as_slice();
    let ranks = (modern::exact_rank(&pc), modern::exact_rank(&po));

    let d = modern::observer_design(
        &plant::state_space(0.3).unwrap(),
        &g(),
        &modern::SYSTEM_POLES,
        &modern::ESTIMATOR_POLES,
    )
    .map_err(|e| e.to_string())?;
    let eq = rel_err(&d.q, &[-10.0, 0.0, 10.0], &[30.0, 54.0, 45.0, 18.0, 3.0]);
    let ekb = rel_err(&d.kb.report.reduced, &[15.0, 27.0, 29.0, 9.0], &[-5.0, 0.0, 5.0]);
    let ekf = rel_err(
        &d.kf.report.reduced,
        &[0.0, 0.0, -13.0, 0.0, 3.0],
        &[40.0, 54.0, 35.0, 18.0, 3.0],
    );
    let kb_flags = !d.kb.verdict.proper && !d.kb.verdict.stable;
    let kf_flags = d.kf.verdict.stable && !d.kf.loop_cancellations.is_empty();
    let unstable_cancelled = d
        .kf
        .loop_cancellations
        .iter()
        .any(|z| (z.re - (13.0f64 / 3.0).sqrt()).abs() < 1e-6);
    ensure(
        pc_ok
            && po_ok
            && ranks == (4, 4)
            && eq < Q_REL_TOL
            && ekb < Q_REL_TOL
            && ekf < Q_REL_TOL
            && kb_flags
            && kf_flags
            && unstable_cancelled,
        format!(
            "Pc exact {pc_ok}, Po exact {po_ok}, ranks {ranks:?}; Q err {eq:.1e}, Kb err {ekb:.1e} \
             (improper+unstable {kb_flags}), Kf err {ekf:.1e} (stable+cancellation {kf_flags})"
        ),
    )
}

fn c5_state_space() -> Outcome {
    let ss = plant::state_space(0.3).unwrap();
    let tf = modern::ss_to_tf(&ss.a, &ss.b, &ss.c, ss.d).map_err(|e| e.to_string())?;
    let g = g();
    let lead = g.den().leading();
    let e = rel_err(&tf, g.num().coeffs(), g.den().coeffs()).max(
        tf.normalized_to_leading(lead)
            .num()
            .rel_coeff_error(g.num()),
    );
    let gains = modern::design_gains(&ss, &modern::SYSTEM_POLES, &modern::ESTIMATOR_POLES)
        .map_err(|e| e.to_string())?;
    let cs = modern::combined_system(&ss, &gains).map_err(|e| e.to_string())?;
    let eig = modern::eigenvalues(&cs.a).map_err(|e| e.to_string())?;
    let want: Vec<Complex64> = modern::SYSTEM_POLES
        .iter()
        .chain(modern::ESTIMATOR_POLES.iter())
        .copied()
        .collect();
    let (_, left, _) = pfc_core::tf::match_roots(&eig, &want, EIG_TOL);
    ensure(
        e < SS_REL_TOL && left.is_empty() && eig.len() == 8,
        format!("C(sI-A)^-1 B coefficient err {e:.1e}; {} of 8 eigenvalues matched", 8 - left.len()),
    )
}

fn c6_step_responses() -> Outcome {
    let g = g();
    let f = f();
    let mut parts = Vec::new();
    let mut ok = true;
    for (pair, dc) in [(designs::pair_a(), 1.0 / 0.09), (designs::pair_b(), 1.0 / 0.3)] {
        let h = pfc_core::tf::closed_loop(&g, &pair.c, &pair.p).unwrap();
        let ts = sim::step_response(&h, 60.0, sim::DEFAULT_DT).map_err(|e| e.to_string())?;
        let tail = ts.t.iter().zip(&ts.y).filter(|(t, _)| **t >= 55.0);
        let dev = tail.map(|(_, y)| ((y - dc) / dc).abs()).fold(0.0, f64::max);
        let th = sim::angle_step_response(&f, &g, &pair.c, &pair.p, 60.0, sim::DEFAULT_DT)
            .map_err(|e| e.to_string())?;
        let th_tail = th
            .t
            .iter()
            .zip(&th.y)
            .filter(|(t, _)| **t >= 55.0)
            .map(|(_, y)| y.abs())
            .fold(0.0, f64::max);
        ok &= dev < SETTLE_REL && th_tail < ANGLE_DECAY;
        parts.push(format!(
            "pair {}: y(60) = {:.4} (dc {dc:.4}, tail dev {:.2}%), |theta| tail {th_tail:.1e}",
            pair.label,
            ts.last().unwrap().1,
            dev * 100.0
        ));
    }
    let lag = RationalTF::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
    let err = |dt: f64| {
        let ts = sim::step_response(&lag, 5.0, dt).unwrap();
        ts.t.iter()
            .zip(&ts.y)
            .map(|(t, y)| (y - (1.0 - (-t).exp())).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(0.1) / err(0.05);
    ok &= (RK4_RATIO.0..=RK4_RATIO.1).contains(&ratio);
    parts.push(format!("RK4 halving ratio {ratio:.2}"));
    ensure(ok, parts.join("; "))
}

fn c7_noise() -> Outcome {
    let g = g();
    let pa = designs::pair_a();
    let pb = designs::pair_b();
    let base = designs::angle_baseline();
    let e = |r: pfc_core::Result<analysis::ChannelPeak>| r.map_err(|e| e.to_string());
    let a = e(analysis::max_noise_peak(&g, &pa.c, &pa.p))?;
    let b = e(analysis::max_noise_peak(&g, &pb.c, &pb.p))?;
    let l = e(analysis::max_noise_peak(&f(), &base.c, &base.p))?;
    let drop = b.peak.db - l.peak.db;
    ensure(
        (PEAK_DB.0..=PEAK_DB.1).contains(&b.peak.db)
            && (PEAK_OMEGA.0..=PEAK_OMEGA.1).contains(&b.peak.omega)
            && a.peak.db > b.peak.db
            && (BASELINE_DROP_DB.0..=BASELINE_DROP_DB.1).contains(&drop),
        format!(
            "pair b peak {:.2} dB at w = {:.3} ({}); pair a {:.2} dB; baseline {:.2} dB ({drop:.2} dB lower)",
            b.peak.db,
            b.peak.omega,
            b.input.label(),
            a.peak.db,
            l.peak.db
        ),
    )
}

fn c8_monte_carlo() -> Outcome {
    let g = g();
    let pa = designs::pair_a();
    let pb = designs::pair_b();
    let e = |r: pfc_core::Result<analysis::McReport>| r.map_err(|e| e.to_string());
    let ra = e(analysis::robustness_mc(&pa.c, &pa.p, 0.3, MC_TRIALS, 0.02, MC_SEED))?;
    let rb = e(analysis::robustness_mc(&pb.c, &pb.p, 0.3, MC_TRIALS, 0.02, MC_SEED))?;
    let fa = e(analysis::fragility_mc(&g, &pa, MC_TRIALS, 0.02, MC_SEED))?;
    let fb = e(analysis::fragility_mc(&g, &pb, MC_TRIALS, 0.02, MC_SEED))?;
    let rb2 = e(analysis::robustness_mc(&pb.c, &pb.p, 0.3, MC_TRIALS, 0.02, MC_SEED))?;
    let fb2 = e(analysis::fragility_mc(&g, &pb, MC_TRIALS, 0.02, MC_SEED))?;
    let within = |x: usize, (lo, hi): (usize, usize)| (lo..=hi).contains(&x);
    ensure(
        within(ra.unstable_count, ROBUST_A)
            && within(rb.unstable_count, ROBUST_B)
            && within(fa.unstable_count, FRAGILE_A)
            && within(fb.unstable_count, FRAGILE_B)
            && rb == rb2
            && fb == fb2,
        format!(
            "robustness a {} b {}, fragility a {} b {} (of {MC_TRIALS}, seed {MC_SEED}); deterministic {}",
            ra.unstable_count,
            rb.unstable_count,
            fa.unstable_count,
            fb.unstable_count,
            rb == rb2 && fb == fb2
        ),
    )
}

fn c9_synthesis() -> Outcome {
    let g = g();
    let cfg = synth::ObjectiveConfig::new(g.clone());
    let mut successes = 0;
    let mut verified = 0;
    let mut best = f64::INFINITY;
    for seed in 0..GA_SEEDS {
        let ga = synth::GaConfig {
            seed,
            ..Default::default()
        };
        let r = synth::ga_search(&cfg, &ga, 3).map_err(|e| e.to_string())?;
        best = best.min(r.best_f);
        if r.best_f < 0.0 {
            successes += 1;
            if synth::verify_pair(&g, &r.pair).all_passed() {
                verified += 1;
            }
        }
    }
    ensure(
        successes >= 1 && verified == successes,
        format!("{successes} of {GA_SEEDS} seeds reached F < 0 (best {best:.4}); {verified} verified"),
    )
}

fn c10_nonlinear() -> Outcome {
    let params = plant::PendulumParams::nondimensional(0.3);
    let pb = designs::pair_b();
    let run = |model, theta0| {
        sim::closed_loop_sim(model, &params, &pb.c, &pb.p, 0.0, theta0, 5.0, sim::DEFAULT_DT)
            .map_err(|e| e.to_string())
    };
    let lin = run(sim::PlantModel::Linear, 0.01)?;
    let nl = run(sim::PlantModel::Nonlinear, 0.01)?;
    let dx = nl.x.sup_diff(&lin.x) / lin.x.sup_norm();
    let dth = nl.theta.sup_diff(&lin.theta) / lin.theta.sup_norm();
    let rest = run(sim::PlantModel::Nonlinear, 0.0)?;
    let at_rest = rest.x.y.iter().chain(&rest.theta.y).all(|&v| v == 0.0);
    ensure(
        dx < NONLINEAR_REL && dth < NONLINEAR_REL && at_rest,
        format!(
            "relative sup-norm difference x {:.3}%, theta {:.3}%; upright equilibrium exactly at rest {at_rest}",
            dx * 100.0,
            dth * 100.0
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("plant structure", c1_plant_structure, Duration::from_secs(1)),
        ("published pairs", c2_published_pairs, Duration::from_secs(1)),
        ("critical gain", c3_critical_gain, Duration::from_secs(1)),
        ("observer design", c4_observer_design, Duration::from_secs(1)),
        ("state space", c5_state_space, Duration::from_secs(1)),
        ("step responses", c6_step_responses, Duration::from_secs(10)),
        ("noise analysis", c7_noise, Duration::from_secs(5)),
        ("monte carlo", c8_monte_carlo, Duration::from_secs(60)),
        ("synthesis", c9_synthesis, Duration::from_secs(15 * 60)),
        ("nonlinear validation", c10_nonlinear, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let dt = t.elapsed();
        let in_time = dt <= *limit;
        let (tag, msg) = match &outcome {
            Ok(m) if in_time => ("PASS", m.clone()),
            Ok(m) => ("FAIL", format!("{m}; over time limit")),
            Err(m) => ("FAIL", m.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!(
            "{tag} {:>2} {name}: {msg} [{:.2}s / {}s]",
            i + 1,
            dt.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
