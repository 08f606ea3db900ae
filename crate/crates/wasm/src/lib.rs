//! Browser bindings. Every function takes and returns JSON strings; errors
//! surface as thrown JavaScript strings.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = builtinPairs)]
pub fn builtin_pairs() -> Result<String, JsValue> {
    js(demo::builtin_pairs())
}

#[wasm_bindgen]
pub fn simulate(pair_json: &str, mass: f64, t_end: f64) -> Result<String, JsValue> {
    js(demo::simulate(pair_json, mass, t_end))
}

#[wasm_bindgen(js_name = noiseBode)]
pub fn noise_bode(pair_json: &str, mass: f64, points: usize) -> Result<String, JsValue> {
    js(demo::noise_bode(pair_json, mass, points))
}

#[wasm_bindgen(js_name = poleCloud)]
pub fn pole_cloud(pair_json: &str, mass: f64, study: &str, trials: usize, sigma: f64, seed: u64) -> Result<String, JsValue> {
    js(demo::pole_cloud(pair_json, mass, study, trials, sigma, seed))
}
