//! WebAssembly bindings for a small static demo page: GUE Tracy-Widom curves, the scaled
//! one-point distribution function and the large-h' prediction for the conditional law.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use kpz_core::conditional::expansion_prediction;
use kpz_core::tracy_widom::{self, TWEvaluator, TwMethod};
use kpz_core::ConditionalParams;
use std::cell::OnceCell;
use wasm_bindgen::prelude::*;

thread_local! {
    static TW: OnceCell<Result<TWEvaluator, String>> = const { OnceCell::new() };
}

fn with_tw<T>(f: impl FnOnce(&TWEvaluator) -> Result<T, String>) -> Result<T, String> {
    TW.with(|cell| {
        let tw = cell.get_or_init(|| TWEvaluator::new(TwMethod::FredholmOracle).map_err(|e| e.to_string()));
        match tw {
            Ok(tw) => f(tw),
            Err(e) => Err(e.clone()),
        }
    })
}

/// `n` samples of (s, F, F', F'') on [s_min, s_max], flattened row by row.
pub fn tw_curves(s_min: f64, s_max: f64, n: usize) -> Result<Vec<f64>, String> {
    if n < 2 || !(s_max > s_min) {
        return Err(format!("need n >= 2 and s_max > s_min, got n = {n}, [{s_min}, {s_max}]"));
    }
    with_tw(|tw| {
        let mut out = Vec::with_capacity(4 * n);
        for i in 0..n {
            let s = s_min + (s_max - s_min) * i as f64 / (n - 1) as f64;
            let (f, fp, fpp) = tw.all(s).map_err(|e| e.to_string())?;
            out.extend([s, f, fp, fpp]);
        }
        Ok(out)
    })
}

/// P(H(x, tau) <= h).
pub fn scaled_cdf(h: f64, x: f64, tau: f64) -> Result<f64, String> {
    with_tw(|tw| tracy_widom::scaled_cdf(tw, h, x, tau).map_err(|e| e.to_string()))
}

/// F(h; x, tau) - (3/2) sqrt(tau'/h') F' + (tau'/h') F''.
pub fn prediction(x: f64, xp: f64, tau: f64, taup: f64, h: f64, hp: f64) -> Result<f64, String> {
    let p = ConditionalParams::new(x, xp, tau, taup, h, hp).map_err(|e| e.to_string())?;
    with_tw(|tw| expansion_prediction(&p, tw).map_err(|e| e.to_string()))
}

#[wasm_bindgen(js_name = twCurves)]
pub fn tw_curves_js(s_min: f64, s_max: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    tw_curves(s_min, s_max, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = scaledCdf)]
pub fn scaled_cdf_js(h: f64, x: f64, tau: f64) -> Result<f64, JsValue> {
    scaled_cdf(h, x, tau).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = expansionPrediction)]
pub fn prediction_js(x: f64, xp: f64, tau: f64, taup: f64, h: f64, hp: f64) -> Result<f64, JsValue> {
    prediction(x, xp, tau, taup, h, hp).map_err(|e| JsValue::from_str(&e))
}
