//! Python bindings: programs, the static pipeline, case execution and campaigns.
//! Structured results cross the boundary as plain dicts and lists.

use std::path::PathBuf;
use std::sync::Arc;

use paramfuzz::case::{CaseLimits, TestCase};
use paramfuzz::descgen::{self, DescMeta, Descriptor};
use paramfuzz::dmir::{self, DmirProgram};
use paramfuzz::extractor::build_inventory;
use paramfuzz::fuzzer::{self, CampaignConfig, Mode};
use paramfuzz::relations::relate;
use paramfuzz::scenario;
use paramfuzz::vkernel::boot;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(paramfuzz_py, ParamfuzzError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    ParamfuzzError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_case(case_json: &str) -> PyResult<TestCase> {
    TestCase::from_json(case_json).map_err(err)
}

/// A parsed and resolved DMIR program.
#[pyclass(frozen)]
struct Program {
    inner: Arc<DmirProgram>,
}

#[pymethods]
impl Program {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let p = dmir::parse(text).map_err(err)?;
        Ok(Program { inner: Arc::new(p) })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    #[getter]
    fn hash(&self) -> String {
        self.inner.hash.clone()
    }

    /// Canonical text form.
    fn to_text(&self) -> String {
        dmir::print_program(&self.inner)
    }

    /// Inventory: attribute records, module params and impact counts.
    fn extract(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &build_inventory(&self.inner))
    }

    /// Relation tree and parameter-to-driver map.
    fn relate(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let st = boot(&self.inner).map_err(err)?;
        to_py(py, &relate(&st))
    }

    fn generate(&self) -> PyResult<Descriptors> {
        let st = boot(&self.inner).map_err(err)?;
        let g = descgen::generate(&self.inner, &build_inventory(&self.inner), &relate(&st)).map_err(err)?;
        Ok(Descriptors {
            descs: g.descriptors,
            meta: g.meta,
        })
    }

    /// Run a case (JSON text) under its schedule seed.
    fn run_case(&self, py: Python<'_>, case_json: &str) -> PyResult<Py<PyAny>> {
        let case = parse_case(case_json)?;
        let mut st = boot(&self.inner).map_err(err)?;
        to_py(py, &st.run_case(&case))
    }

    /// Enumerate every interleaving of a case.
    #[pyo3(signature = (case_json, max_runs = scenario::EXPLORE_LIMIT))]
    fn explore(&self, py: Python<'_>, case_json: &str, max_runs: u64) -> PyResult<Py<PyAny>> {
        let case = parse_case(case_json)?;
        let mut st = boot(&self.inner).map_err(err)?;
        to_py(py, &st.explore(&case, max_runs))
    }
}

/// Generated call descriptors with their annotations.
#[pyclass(frozen)]
struct Descriptors {
    descs: Vec<Descriptor>,
    meta: DescMeta,
}

#[pymethods]
impl Descriptors {
    /// From `.szp` text and `.meta.json` text.
    #[staticmethod]
    fn parse(text: &str, meta_json: &str) -> PyResult<Self> {
        Ok(Descriptors {
            descs: descgen::parse_descriptors(text).map_err(err)?,
            meta: serde_json::from_str(meta_json).map_err(err)?,
        })
    }

    fn text(&self) -> String {
        descgen::render(&self.descs)
    }

    fn meta(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.meta)
    }

    fn names(&self) -> Vec<String> {
        self.descs.iter().map(|d| d.name.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.descs.len()
    }
}

/// Result of a campaign.
#[pyclass(frozen)]
struct Campaign {
    inner: fuzzer::Campaign,
}

#[pymethods]
impl Campaign {
    fn report(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.report)
    }

    #[getter]
    fn titles(&self) -> Vec<String> {
        self.inner.report.titles.clone()
    }

    #[getter]
    fn edges(&self) -> usize {
        self.inner.report.edges
    }

    /// Reproducer of a crash title, as JSON text.
    fn reproducer(&self, title: &str) -> Option<String> {
        self.inner.crashes.crashes.get(title).map(|r| r.reproducer.to_json())
    }

    fn coverage_csv(&self) -> String {
        self.inner.report.coverage_csv()
    }

    /// Write corpus/, crashes/, report.json and coverage.csv under `dir`.
    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.save(&dir).map_err(err)
    }
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (program, descriptors, mode = "syzlang_mutation", budget_execs = fuzzer::DEFAULT_BUDGET, seed = 0, workers = 1, relation_prob = fuzzer::DEFAULT_RELATION_PROB))]
fn run_campaign(
    py: Python<'_>,
    program: &Program,
    descriptors: &Descriptors,
    mode: &str,
    budget_execs: u64,
    seed: u64,
    workers: usize,
    relation_prob: f64,
) -> PyResult<Campaign> {
    let mode = Mode::from_name(mode).ok_or_else(|| err(format!("unknown mode `{mode}`")))?;
    let cfg = CampaignConfig {
        mode,
        budget_execs,
        seed,
        workers,
        relation_prob,
        limits: CaseLimits::default(),
        ..CampaignConfig::default()
    };
    let p = program.inner.clone();
    let c = py
        .detach(|| fuzzer::run_campaign(p, &descriptors.descs, &descriptors.meta, &cfg))
        .map_err(err)?;
    Ok(Campaign { inner: c })
}

/// Run every scenario in `scenarios_dir`; program paths resolve against `corpus_dir`.
#[pyfunction]
fn check_scenarios(py: Python<'_>, scenarios_dir: PathBuf, corpus_dir: PathBuf) -> PyResult<Py<PyAny>> {
    let all = scenario::load_scenarios(&scenarios_dir).map_err(err)?;
    let outcomes = all
        .iter()
        .map(|s| scenario::check_scenario(s, &corpus_dir))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    to_py(py, &outcomes)
}

#[pymodule]
fn paramfuzz_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ParamfuzzError", m.py().get_type::<ParamfuzzError>())?;
    m.add_class::<Program>()?;
    m.add_class::<Descriptors>()?;
    m.add_class::<Campaign>()?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(check_scenarios, m)?)?;
    Ok(())
}
