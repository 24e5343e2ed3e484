//! Browser bindings: tail curves, simulated component-size histograms and
//! the convergence of the Wright asymptotics.

use critwin::bigmath::ln_biguint;
use critwin::sim::{empirical_pmf, PmfMode};
use critwin::tails::{prob_cv_tail, prob_l1_tail};
use critwin::wright::count_connected_asymptotic;
use critwin::{CriticalWindow, ExactCountStore, WrightTable};
use wasm_bindgen::prelude::*;

const MAX_REPLICAS: u64 = 200_000;

/// Asymptotic `P(L1 ≥ k)` and `P(|C(v)| ≥ k)` at `points` scaled sizes
/// evenly spaced over `[a_min, a_max]`, flattened as `a, l1, cv` triples.
/// Points outside the window give `NaN` probabilities.
pub fn tail_curve_values(
    n: u64,
    lambda: f64,
    a_min: f64,
    a_max: f64,
    points: u32,
) -> Result<Vec<f64>, String> {
    let w = CriticalWindow::new(n, lambda).map_err(|e| e.to_string())?;
    if points < 2 || !(a_min > 0.0 && a_min < a_max) {
        return Err("need points >= 2 and 0 < a_min < a_max".into());
    }
    let mut out = Vec::with_capacity(3 * points as usize);
    for i in 0..points {
        let a = a_min + (a_max - a_min) * i as f64 / (points - 1) as f64;
        let k = (a * w.scale()).round().max(1.0) as u64;
        out.push(w.scaled_size(k));
        out.push(prob_l1_tail(&w, k).map(|t| t.prob()).unwrap_or(f64::NAN));
        out.push(prob_cv_tail(&w, k).map(|t| t.prob()).unwrap_or(f64::NAN));
    }
    Ok(out)
}

/// Relative frequencies of sizes `1..=n` for `L1` (`largest = true`) or
/// `|C(v)|`.
pub fn simulate_pmf_values(
    n: u64,
    lambda: f64,
    largest: bool,
    replicas: u64,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if replicas > MAX_REPLICAS {
        return Err(format!("at most {MAX_REPLICAS} replicas in the browser"));
    }
    let w = CriticalWindow::new(n, lambda).map_err(|e| e.to_string())?;
    let mode = if largest { PmfMode::L1 } else { PmfMode::Cv };
    let s = empirical_pmf(&w, mode, replicas, seed).map_err(|e| e.to_string())?;
    let mut freq = vec![0.0; n as usize];
    for (size, count) in s.histogram.unwrap_or_default() {
        freq[size as usize - 1] = count as f64 / replicas as f64;
    }
    Ok(freq)
}

/// `γ_l k^{k+(3l−1)/2} / C(k, k+l)` for `k = 1..=k_max`, `NaN` where no
/// graph exists.
pub fn wright_ratio_values(k_max: u64, l: i64) -> Result<Vec<f64>, String> {
    let store = ExactCountStore::default();
    if !(1..=store.k_max()).contains(&k_max) || !(-1..=20).contains(&l) {
        return Err(format!(
            "need 1 <= k_max <= {} and -1 <= l <= 20",
            store.k_max()
        ));
    }
    let table = WrightTable::new(20);
    (1..=k_max)
        .map(|k| {
            let exact = store.count_excess(k, l).map_err(|e| e.to_string())?;
            if exact == Default::default() {
                return Ok(f64::NAN);
            }
            let asym = count_connected_asymptotic(k, l, &table).map_err(|e| e.to_string())?;
            Ok((asym - ln_biguint(&exact)).exp())
        })
        .collect()
}

#[wasm_bindgen]
pub fn tail_curve(
    n: u32,
    lambda: f64,
    a_min: f64,
    a_max: f64,
    points: u32,
) -> Result<Vec<f64>, JsError> {
    tail_curve_values(n.into(), lambda, a_min, a_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate_pmf(
    n: u32,
    lambda: f64,
    largest: bool,
    replicas: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    simulate_pmf_values(n.into(), lambda, largest, replicas.into(), seed.into())
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn wright_ratio(k_max: u32, l: i32) -> Result<Vec<f64>, JsError> {
    wright_ratio_values(k_max.into(), l.into()).map_err(|e| JsError::new(&e))
}
