//! Browser bindings for the demo page in `www/`. Each exported function
//! returns a flat `Float64Array`; the page knows the stride.

use std::collections::HashMap;

use powerurn::diagnostics::BetaPrimeLaw;
use powerurn::lineages::LineageWorld;
use powerurn::{IncrementLaw, RenewalMode, RenewalTable};
use wasm_bindgen::prelude::*;

/// Keeps the page responsive: the demo never asks for more than this.
const MAX_WINDOW: usize = 4096;

fn law(alpha: f64) -> Result<IncrementLaw, String> {
    IncrementLaw::pure(alpha).map_err(|e| e.to_string())
}

/// Ancestral edges of the window `{1..n}` as triples
/// `(child, parent, component)`; components are numbered left to right.
pub fn lineage_fan(alpha: f64, n: usize, depth_mult: u64, seed: u64) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_WINDOW {
        return Err(format!("window must lie in 1..={MAX_WINDOW}"));
    }
    let world = LineageWorld::new(law(alpha)?, seed, 0, n as u64 * depth_mult.max(1));
    let part = world.components_on_window(n);
    let mut component: HashMap<i64, u32> = (1..=n as i64).map(|s| (s, part.component_of(s as usize - 1))).collect();
    let mut out = Vec::new();
    for (child, parent) in world.ancestral_edges(n) {
        let c = component[&child];
        component.entry(parent).or_insert(c);
        out.extend([child as f64, parent as f64, c as f64]);
    }
    Ok(out)
}

/// Simulated `D / gap` for coalesced pairs followed by the Beta-prime
/// density on `points` log-spaced abscissae: `[k, d_1..d_k, x_1, f_1, ...]`.
pub fn mrca_depths(alpha: f64, gap: u64, reps: u64, seed: u64, points: usize) -> Result<Vec<f64>, String> {
    if gap == 0 || reps == 0 || reps > 200_000 {
        return Err("need gap >= 1 and 1 <= reps <= 200000".into());
    }
    let law = law(alpha)?;
    let cutoff = 200 * gap;
    let depths: Vec<f64> = (0..reps)
        .filter_map(|r| LineageWorld::new(law, seed, r, cutoff).mrca_pair(gap).depth)
        .map(|d| d as f64 / gap as f64)
        .collect();
    let bp = BetaPrimeLaw::new(alpha).map_err(|e| e.to_string())?;
    let mut out = vec![depths.len() as f64];
    out.extend(depths);
    for k in 0..points {
        let x = 1e-2 * 2e4f64.powf(k as f64 / (points.max(2) - 1) as f64);
        out.extend([x, bp.density(x)]);
    }
    Ok(out)
}

/// Pairs `(q_n, ratio to the renewal asymptote)` for `n = 1..=len`.
pub fn renewal_weights(alpha: f64, len: usize) -> Result<Vec<f64>, String> {
    if len == 0 || len > 1 << 16 {
        return Err("length must lie in 1..=65536".into());
    }
    let table = RenewalTable::compute(law(alpha)?, len, RenewalMode::Fast).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * len);
    for n in 1..=len {
        out.extend([table.weights()[n], table.srt_ratio(n).map_err(|e| e.to_string())?]);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = lineageFan)]
pub fn lineage_fan_js(alpha: f64, n: usize, depth_mult: u32, seed: u32) -> Result<Vec<f64>, JsValue> {
    lineage_fan(alpha, n, depth_mult as u64, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = mrcaDepths)]
pub fn mrca_depths_js(alpha: f64, gap: u32, reps: u32, seed: u32, points: usize) -> Result<Vec<f64>, JsValue> {
    mrca_depths(alpha, gap as u64, reps as u64, seed as u64, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = renewalWeights)]
pub fn renewal_weights_js(alpha: f64, len: usize) -> Result<Vec<f64>, JsValue> {
    renewal_weights(alpha, len).map_err(|e| JsValue::from_str(&e))
}
