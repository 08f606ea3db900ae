//! JSON-in, JSON-out operations behind the browser demo. Kept free of
//! wasm-bindgen types so they run and test natively.

use pfc_core::analysis;
use pfc_core::tf::{self, NoiseInput};
use pfc_core::{designs, plant, sim, synth, CompensatorPair, RationalTF};
use serde::Deserialize;
use serde_json::{json, Value};

/// Upper bound on samples returned per curve.
const MAX_POINTS: usize = 1200;
const MAX_TRIALS: usize = 5000;

#[derive(Deserialize)]
struct PairIn {
    #[serde(default)]
    label: Option<String>,
    c: RationalTF,
    p: RationalTF,
}

fn parse_pair(json: &str) -> Result<CompensatorPair, String> {
    let p: PairIn = serde_json::from_str(json).map_err(|e| format!("invalid pair: {e}"))?;
    Ok(CompensatorPair::new(p.label.unwrap_or_else(|| "custom".into()), p.c, p.p))
}

fn plant_for(mass: f64) -> Result<RationalTF, String> {
    plant::position_plant(&Default::default(), mass).map_err(|e| e.to_string())
}

fn to_string(v: Value) -> Result<String, String> {
    serde_json::to_string(&v).map_err(|e| e.to_string())
}

fn decimate(ts: &sim::TimeSeries) -> (Vec<f64>, Vec<f64>) {
    let stride = ts.len().div_ceil(MAX_POINTS).max(1);
    let pick = |v: &[f64]| v.iter().step_by(stride).copied().collect::<Vec<_>>();
    (pick(&ts.t), pick(&ts.y))
}

/// The two published pairs.
pub fn builtin_pairs() -> Result<String, String> {
    to_string(json!({ "a": designs::pair_a(), "b": designs::pair_b() }))
}

/// Verification, closed-loop poles, and the position and angle step responses.
pub fn simulate(pair_json: &str, mass: f64, t_end: f64) -> Result<String, String> {
    let pair = parse_pair(pair_json)?;
    let g = plant_for(mass)?;
    let f = plant::angle_plant(mass).map_err(|e| e.to_string())?;
    if !(t_end > 0.0 && t_end <= 200.0) {
        return Err("t_end must be in (0, 200]".into());
    }
    let report = synth::verify_pair(&g, &pair);
    let h = tf::closed_loop(&g, &pair.c, &pair.p).map_err(|e| e.to_string())?;
    let mut out = json!({
        "verify": report,
        "stable": report.all_passed(),
    });
    if report.checks.last().is_some_and(|c| c.passed) {
        let dt = sim::DEFAULT_DT;
        let y = sim::step_response(&h, t_end, dt).map_err(|e| e.to_string())?;
        let th = sim::angle_step_response(&f, &g, &pair.c, &pair.p, t_end, dt).map_err(|e| e.to_string())?;
        let (t, y) = decimate(&y);
        let (_, theta) = decimate(&th);
        out["t"] = json!(t);
        out["y"] = json!(y);
        out["theta"] = json!(theta);
        out["dc_gain"] = json!(h.eval(0.0.into()).re);
    }
    to_string(out)
}

/// Bode magnitudes and peak gains of the six noise channels.
pub fn noise_bode(pair_json: &str, mass: f64, points: usize) -> Result<String, String> {
    let pair = parse_pair(pair_json)?;
    let g = plant_for(mass)?;
    let set = tf::noise_channels(&g, &pair.c, &pair.p).map_err(|e| e.to_string())?;
    let peaks = analysis::noise_peaks(&g, &pair.c, &pair.p).map_err(|e| e.to_string())?;
    let points = points.clamp(2, MAX_POINTS);
    let mut omega = Vec::new();
    let mut channels = Vec::new();
    for (input, peak) in NoiseInput::ALL.iter().zip(&peaks) {
        let curve = analysis::bode(set.channel(*input), analysis::DEFAULT_W_MIN, analysis::DEFAULT_W_MAX, points)
            .map_err(|e| e.to_string())?;
        omega = curve.omega;
        channels.push(json!({ "label": input.label(), "mag_db": curve.mag_db, "peak": peak.peak }));
    }
    to_string(json!({ "omega": omega, "channels": channels }))
}

/// Monte Carlo pole cloud: `study` is "robustness" or "fragility".
pub fn pole_cloud(pair_json: &str, mass: f64, study: &str, trials: usize, sigma: f64, seed: u64) -> Result<String, String> {
    let pair = parse_pair(pair_json)?;
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    let r = match study {
        "robustness" => analysis::robustness_mc(&pair.c, &pair.p, mass, trials, sigma, seed),
        "fragility" => analysis::fragility_mc(&plant_for(mass)?, &pair, trials, sigma, seed),
        other => return Err(format!("unknown study '{other}'")),
    }
    .map_err(|e| e.to_string())?;
    let mut unstable = vec![false; r.trials];
    for p in &r.pole_cloud {
        unstable[p.trial] |= p.re > 0.0;
    }
    let points: Vec<[f64; 3]> = r
        .pole_cloud
        .iter()
        .map(|p| [p.re, p.im, f64::from(u8::from(unstable[p.trial]))])
        .collect();
    to_string(json!({
        "study": r.study,
        "trials": r.trials,
        "unstable_count": r.unstable_count,
        "seed": r.seed,
        "sigma": r.sigma,
        "points": points,
    }))
}
