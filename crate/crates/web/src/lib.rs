//! Browser bindings for the static demo in `www/`.
//!
//! Every export returns a JSON string; errors surface as thrown JS errors.

use std::cell::RefCell;
use std::rc::Rc;

use serde_json::{json, Value};
use signseg::sim::{ari, draw_dgp, DgpCase, DgpSpec, Shift};
use signseg::{
    generate, segment, simulate_limit, sn_statistic, DataMatrix, RandomStream, SegmenterConfig, StatKind,
    TableCache, TableSource,
};
use wasm_bindgen::prelude::*;

const LEVELS: [f64; 4] = [0.90, 0.95, 0.99, 0.999];
const HIST_BINS: usize = 60;

thread_local! {
    static TABLES: RefCell<Option<Rc<TableCache>>> = const { RefCell::new(None) };
}

fn tables(replicates: usize, seed: u64) -> Rc<TableCache> {
    TABLES.with(|slot| {
        let mut slot = slot.borrow_mut();
        match slot.as_ref() {
            Some(t) if t.replicates() == replicates && t.seed() == seed => t.clone(),
            _ => {
                let t = Rc::new(TableCache::in_memory(replicates, seed));
                *slot = Some(t.clone());
                t
            }
        }
    })
}

fn row_means(d: &DataMatrix) -> Vec<f64> {
    (0..d.n()).map(|i| d.row(i).iter().sum::<f64>() / d.p() as f64).collect()
}

fn parse_kind(kind: &str) -> Result<StatKind, String> {
    kind.parse()
}

fn histogram(sorted: &[f64], upper: f64) -> Value {
    let width = upper / HIST_BINS as f64;
    let mut counts = vec![0usize; HIST_BINS];
    for &v in sorted.iter().take_while(|&&v| v < upper) {
        counts[((v / width) as usize).min(HIST_BINS - 1)] += 1;
    }
    json!({ "bin_width": width, "counts": counts, "total": sorted.len() })
}

/// Null quantiles and a histogram of the limit for window length `n`.
pub fn null_quantiles_value(n: usize, replicates: usize, seed: u64) -> Result<Value, String> {
    let stream = TableCache::in_memory(replicates, seed).stream_for(n);
    let t = simulate_limit(n, replicates, stream, None).map_err(|e| e.to_string())?;
    let quantiles: Vec<f64> = LEVELS.iter().map(|&g| t.quantile(g)).collect();
    Ok(json!({
        "n": n,
        "replicates": replicates,
        "seed": seed,
        "levels": LEVELS,
        "quantiles": quantiles,
        "histogram": histogram(&t.sorted_values, t.quantile(0.99)),
    }))
}

/// One synthetic panel with a dense midpoint shift of size `scale`, scanned
/// over its full range.
pub fn single_scan_value(
    case: &str,
    n: usize,
    p: usize,
    scale: f64,
    kind: &str,
    seed: u64,
    replicates: usize,
) -> Result<Value, String> {
    let case: DgpCase = case.parse().map_err(|e: signseg::Error| e.to_string())?;
    let kind = parse_kind(kind)?;
    let mut spec = DgpSpec::new(case, n, p);
    if scale != 0.0 {
        spec = spec.with_shift(Shift::dense(n, p, scale));
    }
    let d = draw_dgp(&spec, RandomStream::new(seed, 1)).map_err(|e| e.to_string())?;
    let res = sn_statistic(&d, 1, n, kind).map_err(|e| e.to_string())?;
    let table = tables(replicates, seed).table(n).map_err(|e| e.to_string())?;
    let p_value = table.p_value(res.stat).map_err(|e| e.to_string())?;
    Ok(json!({
        "n": n,
        "p": p,
        "kind": kind,
        "row_means": row_means(&d),
        "first_k": 4,
        "ratios": res.ratios,
        "statistic": res.stat,
        "argmax_k": res.argmax_k,
        "p_value": p_value,
        "true_change": spec.change_points(),
    }))
}

/// Segments a panel with alternating sparse changes at 30, 60 and 90.
#[allow(clippy::too_many_arguments)]
pub fn segment_demo_value(
    case: &str,
    h: f64,
    d: usize,
    alpha: f64,
    zeta_p: f64,
    kind: &str,
    seed: u64,
    replicates: usize,
) -> Result<Value, String> {
    let case: DgpCase = case.parse().map_err(|e: signseg::Error| e.to_string())?;
    let cfg = SegmenterConfig::new(zeta_p, alpha, parse_kind(kind)?).map_err(|e| e.to_string())?;
    let (n, p, breaks) = (120, 50, [30, 60, 90]);
    let spec = DgpSpec::new(case, n, p)
        .with_rho(0.3)
        .with_shift(Shift::alternating(&breaks, p, h, d));
    let data = draw_dgp(&spec, RandomStream::new(seed, 2)).map_err(|e| e.to_string())?;
    let tables = tables(replicates, seed);
    let res = segment(&data, &cfg, tables.as_ref()).map_err(|e| e.to_string())?;
    let intervals = generate(n, alpha).map_err(|e| e.to_string())?.len();
    let detections: Vec<Value> = res
        .detections
        .iter()
        .map(|det| json!({ "location": det.location, "a": det.interval.0, "b": det.interval.1, "p_value": det.p_value }))
        .collect();
    Ok(json!({
        "n": n,
        "p": p,
        "row_means": row_means(&data),
        "true_changes": breaks,
        "locations": res.locations,
        "detections": detections,
        "ari": ari(&res.locations, &breaks, n),
        "seeded_intervals": intervals,
    }))
}

fn into_js(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn null_quantiles(n: usize, replicates: usize, seed: u64) -> Result<String, JsError> {
    into_js(null_quantiles_value(n, replicates, seed))
}

#[wasm_bindgen]
pub fn single_scan(
    case: &str,
    n: usize,
    p: usize,
    scale: f64,
    kind: &str,
    seed: u64,
    replicates: usize,
) -> Result<String, JsError> {
    into_js(single_scan_value(case, n, p, scale, kind, seed, replicates))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn segment_demo(
    case: &str,
    h: f64,
    d: usize,
    alpha: f64,
    zeta_p: f64,
    kind: &str,
    seed: u64,
    replicates: usize,
) -> Result<String, JsError> {
    into_js(segment_demo_value(case, h, d, alpha, zeta_p, kind, seed, replicates))
}
