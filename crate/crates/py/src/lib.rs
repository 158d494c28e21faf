//! Python bindings. Boxes cross the boundary as tuples
//! `(cx, cy, w, h, theta)` / `(cx, cy, w, h)`; structured results as JSON
//! strings for `json.loads`.

use h2rbox_core::constraint_lab::{enumerate_feasible as enumerate, ConstraintProblem, ConstraintSet, EnumerateOptions};
use h2rbox_core::geometry::{self, HBox, RBox};
use h2rbox_core::losses;
use h2rbox_core::recovery::{run_recovery, RecoveryConfig};
use h2rbox_core::selfcheck::{run_all, CheckSizes};
use h2rbox_core::views_assign::{generate_scene, SceneGenConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

type RTuple = (f64, f64, f64, f64, f64);
type HTuple = (f64, f64, f64, f64);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rbox(t: RTuple) -> PyResult<RBox> {
    RBox::new(t.0, t.1, t.2, t.3, t.4).map_err(value_err)
}

fn rtuple(b: &RBox) -> RTuple {
    (b.cx, b.cy, b.w, b.h, b.theta)
}

fn htuple(b: &HBox) -> HTuple {
    (b.cx, b.cy, b.w, b.h)
}

fn from_json<T: serde::de::DeserializeOwned + Default>(s: Option<&str>) -> PyResult<T> {
    s.map_or_else(|| Ok(T::default()), |s| serde_json::from_str(s).map_err(value_err))
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(value_err)
}

/// Exact IoU of two rotated boxes.
#[pyfunction]
fn rbox_iou(a: RTuple, b: RTuple) -> PyResult<f64> {
    Ok(geometry::rbox_iou(&rbox(a)?, &rbox(b)?))
}

/// Smallest axis-aligned box containing a rotated box.
#[pyfunction]
fn circumscribed_hbox(b: RTuple) -> PyResult<HTuple> {
    Ok(htuple(&geometry::circumscribed_hbox(&rbox(b)?)))
}

#[pyfunction]
fn symmetric_rbox(b: RTuple) -> PyResult<RTuple> {
    Ok(rtuple(&geometry::symmetric_rbox(&rbox(b)?)))
}

/// Shape loss between two rotated boxes, invariant to equivalent parametrizations.
#[pyfunction]
fn l_wh_theta(a: RTuple, b: RTuple) -> PyResult<f64> {
    Ok(losses::l_wh_theta(&rbox(a)?, &rbox(b)?))
}

/// Classify the feasible set for a ground-truth box seen in two views
/// (angles in radians). Returns `(classification, [(w, h, theta), ...])`.
#[pyfunction]
#[pyo3(signature = (w, h, theta, delta_theta, constraint_set = "hcrc+sc+ac", grid_step = None))]
fn enumerate_feasible(
    w: f64,
    h: f64,
    theta: f64,
    delta_theta: f64,
    constraint_set: &str,
    grid_step: Option<f64>,
) -> PyResult<(String, Vec<(f64, f64, f64)>)> {
    let p = ConstraintProblem::from_gt(w, h, theta, delta_theta).map_err(value_err)?;
    let set: ConstraintSet = constraint_set.parse().map_err(value_err)?;
    let mut opts = EnumerateOptions::default();
    if let Some(g) = grid_step {
        opts.grid_step = g;
    }
    let r = enumerate(&p, set, &opts).map_err(value_err)?;
    Ok((r.classification.to_string(), r.solutions.iter().map(|s| (s.w, s.h, s.theta)).collect()))
}

/// Generate a scene and run recovery; returns the summary and evaluation as JSON.
#[pyfunction]
#[pyo3(signature = (seed = 0, scene = None, config = None))]
fn recover(py: Python<'_>, seed: u64, scene: Option<&str>, config: Option<&str>) -> PyResult<String> {
    let gen: SceneGenConfig = from_json(scene)?;
    let mut cfg: RecoveryConfig = from_json(config)?;
    cfg.seed = seed;
    let out = py.detach(|| -> Result<_, String> {
        let scene = generate_scene(&gen, seed).map_err(|e| e.to_string())?;
        let report = run_recovery(&scene, &cfg).map_err(|e| e.to_string())?;
        let eval = report.evaluate(&scene.objects);
        Ok(serde_json::json!({
            "summary": report.summary,
            "eval": eval,
            "diverged_at": report.diverged_at,
        }))
    });
    to_json(&out.map_err(value_err)?)
}

/// Run the oracle suites; returns a JSON list of outcomes.
#[pyfunction]
#[pyo3(signature = (seed = 0, quick = true))]
fn self_check(py: Python<'_>, seed: u64, quick: bool) -> PyResult<String> {
    let sizes = if quick { CheckSizes::quick() } else { CheckSizes::full() };
    let out = py.detach(|| run_all(&sizes, seed, false));
    to_json(&out)
}

#[pymodule]
fn h2rbox(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(rbox_iou, m)?)?;
    m.add_function(wrap_pyfunction!(circumscribed_hbox, m)?)?;
    m.add_function(wrap_pyfunction!(symmetric_rbox, m)?)?;
    m.add_function(wrap_pyfunction!(l_wh_theta, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    m.add_function(wrap_pyfunction!(self_check, m)?)?;
    Ok(())
}
