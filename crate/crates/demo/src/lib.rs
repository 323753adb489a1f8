//! Browser front end for `ideal-tri`. Each exported function takes plain
//! values and returns a JSON string that `www/index.html` draws on a canvas.

use ideal_tri::increasing_spectrum::{check_increasing_spectrum, radius_profile as profile_along, CheckMode};
use ideal_tri::operators::{densify, named};
use ideal_tri::triangularize::{increasing_spectrum_block_form, scc_triangularize, TriangularizationCertificate};
use ideal_tri::{nested_chain, Operator};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest matrix the demo checks exhaustively (3^p pairs).
pub const MAX_POINTS: usize = 10;

#[derive(Serialize)]
struct Block {
    /// Kernel values in certificate order, row-major, real parts.
    matrix: Vec<Vec<f64>>,
    /// Original point index of each row/column.
    order: Vec<usize>,
    certificate: TriangularizationCertificate,
}

fn in_block_order(k: &Operator, cert: TriangularizationCertificate) -> Block {
    let order = cert.order();
    let matrix = order.iter().map(|&i| order.iter().map(|&j| k.kernel_value(i, j).re).collect()).collect();
    Block { matrix, order, certificate: cert }
}

#[derive(Serialize)]
struct Analysis {
    points: usize,
    increasing_spectrum: bool,
    pairs_checked: u64,
    /// `[inner, outer]` point lists of the first failing pair.
    witness: Option<[Vec<usize>; 2]>,
    scc: Block,
    /// Only when the spectrum increases.
    increasing: Option<Block>,
}

#[derive(Serialize)]
struct Profile {
    name: String,
    cells: usize,
    /// `t = s / steps`.
    t: Vec<f64>,
    radius: Vec<f64>,
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Block form of the built-in `2n+1`-point example.
pub fn example_certificate(n: usize) -> Result<String, String> {
    if !(1..=5).contains(&n) {
        return Err(format!("n must be between 1 and 5, got {n}"));
    }
    let k = densify(&named::paper_example(n).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let cert = increasing_spectrum_block_form(&k, 1e-8).map_err(|e| e.to_string())?;
    json(&in_block_order(&k, cert))
}

/// Spectral radius along the initial intervals `[0, t]`.
pub fn radius_profile(name: &str, cells: usize, steps: usize) -> Result<String, String> {
    if !(1..=256).contains(&cells) {
        return Err(format!("cells must be between 1 and 256, got {cells}"));
    }
    let k = match name {
        "volterra_linear" => named::volterra_linear(cells),
        "ones_kernel" => named::ones_kernel(cells),
        other => return Err(format!("unknown kernel {other:?}")),
    }
    .map_err(|e| e.to_string())?;
    let chain = nested_chain(k.space(), steps).map_err(|e| e.to_string())?;
    let radius = profile_along(&k, &chain).map_err(|e| e.to_string())?;
    let t = (0..=steps).map(|s| s as f64 / steps as f64).collect();
    json(&Profile { name: name.to_string(), cells, t, radius })
}

/// Rows separated by newlines or `;`, entries by spaces or commas.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>, String> {
    let rows: Vec<Vec<f64>> = text
        .split(['\n', ';'])
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(|r| {
            r.split([' ', ',', '\t'])
                .filter(|v| !v.is_empty())
                .map(|v| v.parse::<f64>().map_err(|_| format!("not a number: {v:?}")))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err("empty matrix".into());
    }
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(format!("matrix must be square; got {} rows", rows.len()));
    }
    if rows.len() > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} points, got {}", rows.len()));
    }
    Ok(rows)
}

/// Increasing-spectrum check, Frobenius form and (when it applies) the
/// increasing-spectrum block form of a matrix on atoms.
pub fn analyze_matrix(text: &str) -> Result<String, String> {
    let rows = parse_matrix(text)?;
    let k = Operator::atomic(&rows).map_err(|e| e.to_string())?;
    let report = check_increasing_spectrum(&k, 1e-8, CheckMode::Exhaustive { max_points: MAX_POINTS })
        .map_err(|e| e.to_string())?;
    let increasing = if report.verdict {
        Some(in_block_order(&k, increasing_spectrum_block_form(&k, 1e-8).map_err(|e| e.to_string())?))
    } else {
        None
    };
    json(&Analysis {
        points: k.dim(),
        increasing_spectrum: report.verdict,
        pairs_checked: report.pairs_checked,
        witness: report.witness.map(|w| [w.inner, w.outer]),
        scc: in_block_order(&k, scc_triangularize(&k, 1e-10)),
        increasing,
    })
}

#[wasm_bindgen(js_name = exampleCertificate)]
pub fn example_certificate_js(n: usize) -> Result<String, JsValue> {
    example_certificate(n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = radiusProfile)]
pub fn radius_profile_js(name: &str, cells: usize, steps: usize) -> Result<String, JsValue> {
    radius_profile(name, cells, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = analyzeMatrix)]
pub fn analyze_matrix_js(text: &str) -> Result<String, JsValue> {
    analyze_matrix(text).map_err(|e| JsValue::from_str(&e))
}
