//! Python bindings: the per-frame pipeline, the visuomotor formulas and
//! scenario runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use alvs::params::PipelineConfig;
use alvs::sim::{library, run_trial, ScenarioConfig};
use alvs::{AlvsError, Frame, Pipeline, HEIGHT, WIDTH};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: AlvsError) -> PyErr {
    match e {
        AlvsError::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn config_from(overrides: Option<BTreeMap<String, String>>) -> PyResult<PipelineConfig> {
    let mut pc = PipelineConfig::default();
    for (k, v) in overrides.unwrap_or_default() {
        pc.set(&k, &v).map_err(py_err)?;
    }
    Ok(pc)
}

/// One field after the response stage.
#[pyclass(name = "Field", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyField {
    id: u64,
    cx: f64,
    cy: f64,
    quadrants: (f64, f64, f64, f64),
    response: f64,
    gated: bool,
}

#[pymethods]
impl PyField {
    fn __repr__(&self) -> String {
        format!(
            "Field(id={}, cx={:.2}, cy={:.2}, response={}, gated={})",
            self.id, self.cx, self.cy, self.response, self.gated
        )
    }
}

/// Outcome of one processed frame.
#[pyclass(name = "FrameResult", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFrameResult {
    state: String,
    linear: f64,
    angular: f64,
    raw_sum: f64,
    strength: f64,
    centroid_x: Option<f64>,
    fields: Vec<PyField>,
    warm: bool,
}

#[pymethods]
impl PyFrameResult {
    fn __repr__(&self) -> String {
        format!(
            "FrameResult(state={:?}, linear={}, angular={}, raw_sum={}, fields={})",
            self.state,
            self.linear,
            self.angular,
            self.raw_sum,
            self.fields.len()
        )
    }
}

/// Perception-action pipeline for 99x72 8-bit frames.
#[pyclass(name = "Pipeline")]
pub struct PyPipeline {
    inner: Pipeline,
}

#[pymethods]
impl PyPipeline {
    /// `overrides` maps parameter names to values, e.g. `{"t_a": "120"}`.
    #[new]
    #[pyo3(signature = (overrides = None))]
    fn new(overrides: Option<BTreeMap<String, String>>) -> PyResult<Self> {
        let inner = Pipeline::new(config_from(overrides)?).map_err(py_err)?;
        Ok(PyPipeline { inner })
    }

    /// `data` holds 72 rows of 99 bytes, top row first.
    #[pyo3(signature = (data, heading = 0.0))]
    fn process_frame(&mut self, data: Vec<u8>, heading: f64) -> PyResult<PyFrameResult> {
        let index = self.inner.frames_processed();
        let frame = Frame::new(WIDTH, HEIGHT, index, data).map_err(py_err)?;
        let out = self.inner.process_frame(&frame, heading).map_err(py_err)?;
        Ok(PyFrameResult {
            state: out.state.name().to_string(),
            linear: out.command.linear,
            angular: out.command.angular,
            raw_sum: out.summary.raw_sum,
            strength: out.summary.strength,
            centroid_x: out.summary.centroid_x,
            warm: out.warm,
            fields: out
                .fields
                .iter()
                .map(|f| PyField {
                    id: f.id,
                    cx: f.cx,
                    cy: f.cy,
                    quadrants: (f.quadrants.q1, f.quadrants.q2, f.quadrants.q3, f.quadrants.q4),
                    response: f.response.value,
                    gated: f.response.gated,
                })
                .collect(),
        })
    }

    #[getter]
    fn state(&self) -> String {
        self.inner.state().name().to_string()
    }

    #[getter]
    fn frames_processed(&self) -> u64 {
        self.inner.frames_processed()
    }

    /// `(items, total)` where items are `(name, layout, bytes)`.
    fn budget(&self) -> (Vec<(String, String, usize)>, usize) {
        let r = self.inner.budget_report(&[]);
        let total = r.total_bytes();
        (
            r.items.into_iter().map(|i| (i.name, i.detail, i.bytes)).collect(),
            total,
        )
    }
}

#[pyfunction]
#[pyo3(signature = (raw_sum, w_s = 4000.0))]
fn strength(raw_sum: f64, w_s: f64) -> f64 {
    alvs::visuomotor::strength(raw_sum, w_s)
}

#[pyfunction]
#[pyo3(signature = (centroid_x, alpha = 0.707))]
fn long_heading(centroid_x: f64, alpha: f64) -> f64 {
    alvs::visuomotor::long_heading(centroid_x, alpha)
}

#[pyfunction]
#[pyo3(signature = (centroid_x, alpha = 0.707))]
fn short_headings(centroid_x: f64, alpha: f64) -> (f64, f64) {
    alvs::visuomotor::short_headings(centroid_x, alpha)
}

#[pyfunction]
fn wrap_deg(a: f64) -> f64 {
    alvs::visuomotor::wrap_deg(a)
}

/// Runs a scenario file. Returns the summary as a dict of numbers; writes
/// the CSV outputs too when `out` is given.
#[pyfunction]
#[pyo3(signature = (path, out = None, seed = None, frames = None, overrides = None))]
fn run_scenario(
    path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    frames: Option<u64>,
    overrides: Option<BTreeMap<String, String>>,
) -> PyResult<BTreeMap<String, f64>> {
    let mut cfg = ScenarioConfig::load(&path).map_err(py_err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(f) = frames {
        cfg.frames = f;
    }
    for (k, v) in overrides.unwrap_or_default() {
        cfg.set_param(&k, &v).map_err(py_err)?;
    }
    let log = run_trial(&cfg).map_err(py_err)?;
    if let Some(dir) = out {
        log.write_outputs(&dir, false).map_err(py_err)?;
    }
    let s = log.summary();
    let mut d = BTreeMap::new();
    d.insert("frames".into(), s.frames as f64);
    d.insert("collision_episodes".into(), s.episodes as f64);
    d.insert("alvs_episodes".into(), s.alvs_episodes as f64);
    d.insert("avoidance_opportunities".into(), s.opportunities as f64);
    d.insert("success_rate".into(), s.success_rate().unwrap_or(f64::NAN));
    d.insert("gated_frames".into(), s.gated_frames as f64);
    d.insert("long_takeoff_entries".into(), s.long_takeoffs as f64);
    d.insert("short_takeoff_entries".into(), s.short_takeoffs as f64);
    for (k, v) in s.state_frames {
        d.insert(format!("state_frames.{k}"), v as f64);
    }
    Ok(d)
}

/// Paths of the scenario files shipped with the repository.
#[pyfunction]
fn bundled_scenarios() -> Vec<PathBuf> {
    library::bundled()
        .into_iter()
        .map(|c| library::bundled_dir().join(format!("{}.toml", c.name)))
        .collect()
}

#[pymodule]
pub fn pyalvs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("WIDTH", WIDTH)?;
    m.add("HEIGHT", HEIGHT)?;
    m.add_class::<PyPipeline>()?;
    m.add_class::<PyFrameResult>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(strength, m)?)?;
    m.add_function(wrap_pyfunction!(long_heading, m)?)?;
    m.add_function(wrap_pyfunction!(short_headings, m)?)?;
    m.add_function(wrap_pyfunction!(wrap_deg, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_scenarios, m)?)?;
    Ok(())
}
