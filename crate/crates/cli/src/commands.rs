use std::fs;
use std::path::Path;

use pfc_core::analysis::{self, BodeCurve};
use pfc_core::tf::{self, NoiseInput};
use pfc_core::{designs, io, modern, plant, sim, synth, CompensatorPair, RationalTF};
use serde::{Deserialize, Serialize};

use crate::args::{AngleArgs, BodeArgs, Command, Common, McArgs, Model, ModernArgs, NoiseArgs, StepArgs, SynthArgs};
use crate::output::{pass, presentable, OutDir};
use crate::Failure;

/// Returns whether the command's analysis passed.
pub fn run(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::Verify(a) => verify(&a),
        Command::Synthesize(a) => synthesize(&a),
        Command::Step(a) => step(&a),
        Command::Angle(a) => angle(&a),
        Command::Bode(a) => bode(&a),
        Command::Noise(a) => noise(&a),
        Command::Robustness(a) => robustness(&a),
        Command::Fragility(a) => fragility(&a),
        Command::Modern(a) => modern_cmd(&a),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PlantKind {
    Position,
    Angle,
    File,
}

struct Setup {
    kind: PlantKind,
    plant: RationalTF,
    pair: Option<CompensatorPair>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("malformed {what} file {}: {e}", path.display())))
}

#[derive(Deserialize)]
struct PairFile {
    #[serde(default)]
    label: Option<String>,
    c: RationalTF,
    p: RationalTF,
}

fn setup(c: &Common) -> Result<Setup, Failure> {
    if !(c.mass > 0.0) {
        return Err(Failure::Usage(format!("--mass must be positive, got {}", c.mass)));
    }
    let (kind, plant) = match c.plant.as_str() {
        "pendulum-position" => (PlantKind::Position, plant::position_plant(&Default::default(), c.mass)?),
        "pendulum-angle" => (PlantKind::Angle, plant::angle_plant(c.mass)?),
        other => match other.strip_prefix("file:") {
            Some(path) => (PlantKind::File, read_json(Path::new(path), "plant")?),
            None => {
                return Err(Failure::Usage(format!(
                    "unknown plant '{other}' (expected pendulum-position, pendulum-angle or file:<path>)"
                )))
            }
        },
    };
    let pair = if let Some(path) = &c.pair_file {
        let f: PairFile = read_json(path, "pair")?;
        let label = f.label.unwrap_or_else(|| path.display().to_string());
        Some(CompensatorPair::new(label, f.c, f.p))
    } else {
        let label = c.pair.clone().unwrap_or_else(|| {
            if kind == PlantKind::Angle { "angle-baseline" } else { "b" }.to_string()
        });
        match label.as_str() {
            "none" => None,
            l => Some(designs::builtin_pair(l).ok_or_else(|| {
                Failure::Usage(format!("unknown pair '{l}' (expected a, b, angle-baseline or none)"))
            })?),
        }
    };
    Ok(Setup { kind, plant, pair })
}

fn need_pair(s: &Setup) -> Result<&CompensatorPair, Failure> {
    s.pair
        .as_ref()
        .ok_or_else(|| Failure::Usage("this command needs a compensator pair".into()))
}

fn fmt_bound(x: f64) -> String {
    if x.is_infinite() {
        "+inf".into()
    } else {
        format!("{x:.6}")
    }
}

fn verify(a: &Common) -> Result<bool, Failure> {
    let s = setup(a)?;
    let out = OutDir::create(&a.out)?;
    println!("plant G(s) = {}", presentable(&s.plant));
    let pip = tf::pip_check(&s.plant)?;
    if pip.strongly_stabilizable {
        println!("strongly stabilizable: yes");
    } else {
        println!("strongly stabilizable: no (not strongly stabilizable)");
        for i in pip.offending() {
            println!(
                "  interval [{}, {}] between real RHP zeros holds {} real pole(s)",
                fmt_bound(i.from_zero),
                fmt_bound(i.to_zero),
                i.pole_count()
            );
        }
    }
    #[derive(Serialize)]
    struct VerifyOut<'a> {
        pip: &'a tf::StabilizabilityVerdict,
        report: Option<&'a synth::VerificationReport>,
        passed: bool,
    }
    let report = s.pair.as_ref().map(|p| synth::verify_pair(&s.plant, p));
    if let Some(r) = &report {
        println!("pair {}", r.label);
        for c in &r.checks {
            println!("  {:<22} {}  margin {:.6}", c.name, pass(c.passed), c.margin);
        }
    }
    let passed = report.as_ref().is_none_or(|r| r.all_passed());
    println!("{}", if passed { "all checks passed" } else { "verification failed" });
    out.json("verify.json", &VerifyOut { pip: &pip, report: report.as_ref(), passed })?;
    out.metadata("verify", None, a)?;
    Ok(passed)
}

fn synthesize(a: &SynthArgs) -> Result<bool, Failure> {
    let s = setup(&a.common)?;
    let out = OutDir::create(&a.common.out)?;
    let obj = synth::ObjectiveConfig::new(s.plant.clone());
    let ga = synth::GaConfig {
        seed: a.seed,
        generations: a.generations,
        population: a.population,
        ..Default::default()
    };
    let r = synth::ga_search(&obj, &ga, a.n as usize).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("best F = {:.6} ({})", r.best_f, if r.success { "stable stabilizing pair found" } else { "no certified pair" });
    println!("C(s) = {}", presentable(&r.pair.c));
    println!("P(s) = {}", presentable(&r.pair.p));
    out.json("synthesis.json", &r)?;
    out.write("history.csv", |w| io::write_history(w, &r.history))?;
    out.json("pair.json", &r.pair)?;
    out.metadata("synthesize", Some(a.seed), a)?;
    Ok(r.success)
}

fn step(a: &StepArgs) -> Result<bool, Failure> {
    let s = setup(&a.common)?;
    let pair = need_pair(&s)?;
    let out = OutDir::create(&a.common.out)?;
    let h = tf::closed_loop(&s.plant, &pair.c, &pair.p)?;
    let ts = sim::step_response(&h, a.t_end, a.dt)?;
    if let Some((t, y)) = ts.last() {
        println!("H(s) = {}", presentable(&h));
        println!("y({t}) = {y:.6}, H(0) = {:.6}", h.eval(0.0.into()).re);
    }
    out.write("step.csv", |w| io::write_time_series(w, &ts))?;
    out.metadata("step", None, a)?;
    Ok(true)
}

fn angle(a: &AngleArgs) -> Result<bool, Failure> {
    let s = setup(&a.common)?;
    if s.kind != PlantKind::Position {
        return Err(Failure::Usage("angle needs --plant pendulum-position".into()));
    }
    let pair = need_pair(&s)?;
    let out = OutDir::create(&a.common.out)?;
    let ts = match a.model {
        Model::Transfer => {
            let f = plant::angle_plant(a.common.mass)?;
            sim::angle_step_response(&f, &s.plant, &pair.c, &pair.p, a.t_end, a.dt)?
        }
        Model::Linear | Model::Nonlinear => {
            let m = if a.model == Model::Linear { sim::PlantModel::Linear } else { sim::PlantModel::Nonlinear };
            let params = plant::PendulumParams::nondimensional(a.common.mass);
            let traj = sim::closed_loop_sim(m, &params, &pair.c, &pair.p, a.u_step, a.theta0, a.t_end, a.dt)?;
            out.write("position.csv", |w| io::write_time_series(w, &traj.x))?;
            traj.theta
        }
    };
    println!("max |theta| = {:.6e}", ts.sup_norm());
    out.write("angle.csv", |w| io::write_time_series(w, &ts))?;
    out.metadata("angle", None, a)?;
    Ok(true)
}

fn bode(a: &BodeArgs) -> Result<bool, Failure> {
    let s = setup(&a.common)?;
    let pair = need_pair(&s)?;
    let out = OutDir::create(&a.common.out)?;
    let set = tf::noise_channels(&s.plant, &pair.c, &pair.p)?;
    let curves: Vec<BodeCurve> = NoiseInput::ALL
        .iter()
        .map(|&i| analysis::bode(set.channel(i), a.w_min, a.w_max, a.points))
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let peaks = analysis::noise_peaks(&s.plant, &pair.c, &pair.p)?;
    for p in &peaks {
        println!("{}: peak {:.2} dB at w = {:.4}", p.input.label(), p.peak.db, p.peak.omega);
    }
    for (i, c) in NoiseInput::ALL.iter().zip(&curves) {
        out.write(&format!("bode_{}.csv", i.label()), |w| io::write_bode(w, c))?;
    }
    let labels: Vec<&str> = NoiseInput::ALL.iter().map(|i| i.label()).collect();
    out.write("bode.csv", |w| io::write_bode_table(w, &labels, &curves))?;
    out.json("peaks.json", &peaks)?;
    out.metadata("bode", None, a)?;
    Ok(true)
}

fn noise(a: &NoiseArgs) -> Result<bool, Failure> {
    let s = setup(&a.common)?;
    let pair = need_pair(&s)?;
    let out = OutDir::create(&a.common.out)?;
    let set = tf::noise_channels(&s.plant, &pair.c, &pair.p)?;
    let spec = sim::NoiseSpec {
        count: a.count,
        amp_norm: a.amp_norm,
        freq_lo: a.freq_lo,
        freq_hi: a.freq_hi,
        seed: a.seed,
    };
    if !(a.dt > 0.0 && a.t_end > 0.0) {
        return Err(Failure::Usage("--dt and --t-end must be positive".into()));
    }
    let steps = (a.t_end / a.dt).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * a.dt).collect();
    let sines = sim::draw_sinusoids(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    let responses = sim::noise_time_response_with(&set, &sines, &grid)?;
    for (i, ts) in NoiseInput::ALL.iter().zip(&responses) {
        println!("{}: max |y| = {:.4e}", i.label(), ts.sup_norm());
        out.write(&format!("noise_{}.csv", i.label()), |w| io::write_time_series(w, ts))?;
    }
    let input = sim::noise_input(&sines, &grid);
    out.write("noise_input.csv", |w| io::write_time_series(w, &input))?;
    out.metadata("noise", Some(a.seed), &(a, sim::NOISE_AMPLITUDE_DISTRIBUTION))?;
    Ok(true)
}

fn report_mc(name: &str, a: &McArgs, r: &analysis::McReport, out: &OutDir) -> Result<bool, Failure> {
    println!(
        "{name}: {} of {} trials unstable (sigma {}, seed {})",
        r.unstable_count, r.trials, r.sigma, r.seed
    );
    out.json(&format!("{name}.json"), r)?;
    out.write(&format!("{name}_cloud.csv"), |w| io::write_pole_cloud(w, r))?;
    out.metadata(name, Some(a.seed), a)?;
    Ok(true)
}

fn robustness(a: &McArgs) -> Result<bool, Failure> {
    let s = setup(&a.common)?;
    if s.kind != PlantKind::Position {
        return Err(Failure::Usage("robustness perturbs the built-in pendulum-position plant".into()));
    }
    let pair = need_pair(&s)?;
    let out = OutDir::create(&a.common.out)?;
    let r = analysis::robustness_mc(&pair.c, &pair.p, a.common.mass, a.trials as usize, a.sigma, a.seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    report_mc("robustness", a, &r, &out)
}

fn fragility(a: &McArgs) -> Result<bool, Failure> {
    let s = setup(&a.common)?;
    let pair = need_pair(&s)?;
    let out = OutDir::create(&a.common.out)?;
    let r = analysis::fragility_mc(&s.plant, pair, a.trials as usize, a.sigma, a.seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    report_mc("fragility", a, &r, &out)
}

fn modern_cmd(a: &ModernArgs) -> Result<bool, Failure> {
    if !(a.mass > 0.0) {
        return Err(Failure::Usage(format!("--mass must be positive, got {}", a.mass)));
    }
    let out = OutDir::create(&a.out)?;
    let ss = plant::state_space(a.mass)?;
    let g = plant::position_plant(&Default::default(), a.mass)?;
    let pc = modern::controllability_matrix(&ss);
    let po = modern::observability_matrix(&ss);
    println!("rank controllability = {}, rank observability = {}", modern::rank(&pc), modern::rank(&po));
    let d = modern::observer_design(&ss, &g, &modern::SYSTEM_POLES, &modern::ESTIMATOR_POLES)?;
    println!("K = {:?}", d.gains.k.as_slice());
    println!("Gobs = {:?}", d.gains.gobs.as_slice());
    println!(
        "estimator factor removed from Q: roots {}",
        d.q_cancelled.iter().map(|z| format!("{z:.4}")).collect::<Vec<_>>().join(", ")
    );
    println!("Q = {}", presentable(&d.q));
    let verdict = |v: &modern::EquivalentVerdict| {
        format!(
            "{}, {}",
            if v.proper { "proper" } else { "improper" },
            if v.stable { "stable" } else { "unstable" }
        )
    };
    println!("K_b = {}  [{}]", presentable(&d.kb.report.reduced), verdict(&d.kb.verdict));
    println!("K_f = {}  [{}]", presentable(&d.kf.report.reduced), verdict(&d.kf.verdict));
    if !d.kf.loop_cancellations.is_empty() {
        println!(
            "K_f G has pole-zero cancellation at {}",
            d.kf.loop_cancellations.iter().map(|z| format!("{:.6}", z.re)).collect::<Vec<_>>().join(", ")
        );
    }
    let record = serde_json::json!({
        "mass": a.mass,
        "system_poles": modern::SYSTEM_POLES,
        "estimator_poles": modern::ESTIMATOR_POLES,
        "k": d.gains.k.as_slice(),
        "gobs": d.gains.gobs.as_slice(),
        "q_raw": d.q_raw,
        "q_cancelled": d.q_cancelled,
        "q": presentable(&d.q),
        "kb": d.kb,
        "kf": d.kf,
    });
    out.json("modern.json", &record)?;
    out.metadata("modern", None, a)?;
    Ok(true)
}
