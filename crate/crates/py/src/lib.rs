//! Python bindings: `import vortex_re`.

use std::collections::BTreeMap;

use nalgebra::{Rotation3, Unit};
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use vortex_core::criteria;
use vortex_core::dynamics::{self, GrowthOptions, Trajectory};
use vortex_core::families::{self, KappaSolution, RelativeEquilibrium};
use vortex_core::report::ReportDocument;
use vortex_core::scan::{self, extract_frontier, CellCode, ScanResult};
use vortex_core::stability::{self, StabilityReport, Tolerances};
use vortex_core::system::{hamiltonian, momentum_map, vector_field, Vec3, VortexState};
use vortex_core::verify::run_suite;
use vortex_core::VortexError;

create_exception!(vortex_re, CoincidenceError, PyValueError, "Two vortices coincide.");

fn err(e: VortexError) -> PyErr {
    let m = e.to_string();
    match e {
        VortexError::CoincidentVortices { .. } => CoincidenceError::new_err(m),
        VortexError::SingularPairing { .. } | VortexError::Numeric(_) => PyArithmeticError::new_err(m),
        _ => PyValueError::new_err(m),
    }
}

fn tolerances(tol_eig: Option<f64>) -> PyResult<Tolerances> {
    tol_eig.map_or(Ok(Tolerances::default()), |t| Tolerances::new(t).map_err(err))
}

fn triples(v: &[Vec3]) -> Vec<[f64; 3]> {
    v.iter().map(|p| [p.x, p.y, p.z]).collect()
}

#[pyclass(name = "VortexState", module = "vortex_re", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyVortexState(VortexState);

#[pymethods]
impl PyVortexState {
    /// Positions must be unit vectors unless `normalize` is set.
    #[new]
    #[pyo3(signature = (positions, vorticities, normalize = false))]
    fn new(positions: Vec<[f64; 3]>, vorticities: Vec<f64>, normalize: bool) -> PyResult<Self> {
        let p: Vec<Vec3> = positions.iter().map(|q| Vec3::new(q[0], q[1], q[2])).collect();
        let s = if normalize { VortexState::from_directions(p, vorticities) } else { VortexState::new(p, vorticities) };
        s.map(Self).map_err(err)
    }

    #[getter]
    fn positions(&self) -> Vec<[f64; 3]> {
        triples(self.0.positions())
    }

    #[getter]
    fn vorticities(&self) -> Vec<f64> {
        self.0.vorticities().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn hamiltonian(&self) -> PyResult<f64> {
        hamiltonian(&self.0).map_err(err)
    }

    fn momentum(&self) -> [f64; 3] {
        let m = momentum_map(&self.0).components();
        [m.x, m.y, m.z]
    }

    fn vector_field(&self) -> PyResult<Vec<[f64; 3]>> {
        vector_field(&self.0).map(|v| triples(&v)).map_err(err)
    }

    /// Rigid rotation of every position about `axis` by `angle` radians.
    fn rotated(&self, axis: [f64; 3], angle: f64) -> PyResult<Self> {
        let a = Vec3::new(axis[0], axis[1], axis[2]);
        if !(a.norm() > 0.0) {
            return Err(PyValueError::new_err("rotation axis must be nonzero"));
        }
        Ok(Self(self.0.rotated(&Rotation3::from_axis_angle(&Unit::new_normalize(a), angle))))
    }

    fn __repr__(&self) -> String {
        format!("VortexState(n={})", self.0.len())
    }
}

#[pyclass(name = "RelativeEquilibrium", module = "vortex_re", frozen)]
struct PyEquilibrium(RelativeEquilibrium);

#[pymethods]
impl PyEquilibrium {
    #[getter]
    fn family(&self) -> &'static str {
        self.0.spec().kind.name()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.0.xi()
    }

    #[getter]
    fn mu_z(&self) -> f64 {
        self.0.mu().z()
    }

    #[getter]
    fn kappa(&self) -> Option<f64> {
        self.0.kappa()
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.0.degenerate()
    }

    #[getter]
    fn state(&self) -> PyVortexState {
        PyVortexState(self.0.state().clone())
    }

    #[pyo3(signature = (tol_eig = None))]
    fn classify(&self, tol_eig: Option<f64>) -> PyResult<PyReport> {
        stability::classify_with(&self.0, &tolerances(tol_eig)?).map(PyReport).map_err(err)
    }

    /// Largest chordal deviation from rotation by xi*t about z.
    #[pyo3(signature = (t_end = 5.0, dt = 1e-3))]
    fn verify_rigid_rotation(&self, t_end: f64, dt: f64) -> PyResult<f64> {
        dynamics::verify_rigid_rotation(&self.0, t_end, dt).map_err(err)
    }

    #[pyo3(signature = (amplitude, seed = 1))]
    fn perturbed_state(&self, amplitude: f64, seed: u64) -> PyResult<PyVortexState> {
        dynamics::perturbed_state(&self.0, amplitude, seed).map(PyVortexState).map_err(err)
    }

    /// Returns (exponent, positive): the fitted growth rate and whether it clears the noise floor.
    #[pyo3(signature = (amplitude = 1e-6, t_max = 60.0, dt = 1e-3, seed = 1))]
    fn perturbation_growth(&self, amplitude: f64, t_max: f64, dt: f64, seed: u64) -> PyResult<(f64, bool)> {
        let opts = GrowthOptions { amplitude, t_max, dt, seed, ..Default::default() };
        let floor = dynamics::calibrate_noise_floor(&opts).map_err(err)?;
        let g = dynamics::perturbation_growth(&self.0, &opts).map_err(err)?;
        Ok((g.exponent, dynamics::growth_is_positive(g.exponent, floor)))
    }

    fn __repr__(&self) -> String {
        format!("RelativeEquilibrium({}, n={}, xi={})", self.family(), self.0.n(), self.0.xi())
    }
}

#[pyclass(name = "Block", module = "vortex_re", frozen, get_all)]
struct PyBlock {
    label: String,
    mode: usize,
    hessian_eigenvalues: Vec<f64>,
    linearization_re: Vec<f64>,
    linearization_im: Vec<f64>,
}

#[pyclass(name = "StabilityReport", module = "vortex_re", frozen)]
struct PyReport(StabilityReport);

#[pymethods]
impl PyReport {
    /// "LyapunovStable", "Elliptic", "LinearlyUnstable" or "Degenerate".
    #[getter]
    fn verdict(&self) -> String {
        self.0.verdict.to_string()
    }

    #[getter]
    fn verdict_code(&self) -> String {
        self.0.verdict.code().to_string()
    }

    #[getter]
    fn margin(&self) -> f64 {
        self.0.margin
    }

    #[getter]
    fn kappa(&self) -> Option<f64> {
        self.0.kappa
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.0.xi
    }

    #[getter]
    fn mu_z(&self) -> f64 {
        self.0.mu_z
    }

    #[getter]
    fn analytic_verdict(&self) -> Option<String> {
        self.0.analytic_verdict.map(|v| v.to_string())
    }

    #[getter]
    fn agreement(&self) -> Option<bool> {
        self.0.agreement
    }

    #[getter]
    fn blocks(&self) -> Vec<PyBlock> {
        self.0
            .blocks
            .iter()
            .map(|b| PyBlock {
                label: b.label.clone(),
                mode: b.mode,
                hessian_eigenvalues: b.hessian_eigenvalues.clone(),
                linearization_re: b.linearization_eigenvalues.iter().map(|z| z.re).collect(),
                linearization_im: b.linearization_eigenvalues.iter().map(|z| z.im).collect(),
            })
            .collect()
    }

    fn to_json(&self) -> String {
        ReportDocument::from_report(&self.0).to_json()
    }

    fn __repr__(&self) -> String {
        format!("StabilityReport({}, margin={:.3e})", self.0.verdict, self.0.margin)
    }
}

#[pyclass(name = "ScanResult", module = "vortex_re", frozen)]
struct PyScan(ScanResult);

#[pymethods]
impl PyScan {
    #[getter]
    fn resolution(&self) -> (usize, usize) {
        (self.0.axes[0].resolution, self.0.axes[1].resolution)
    }

    /// (param1, param2, code, margin, kappa) per cell, param1 outer.
    #[getter]
    fn cells(&self) -> Vec<(f64, f64, String, Option<f64>, Option<f64>)> {
        self.0.cells.iter().map(|c| (c.param1, c.param2, c.verdict.as_char().to_string(), c.margin, c.kappa)).collect()
    }

    fn counts(&self) -> BTreeMap<String, usize> {
        [CellCode::S, CellCode::E, CellCode::U, CellCode::D, CellCode::X].iter().map(|c| (c.as_char().to_string(), self.0.count(*c))).collect()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv(&[])
    }

    fn to_svg(&self) -> String {
        self.0.to_svg(&extract_frontier(&self.0))
    }
}

#[pyclass(name = "Trajectory", module = "vortex_re", frozen)]
struct PyTrajectory(Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn states(&self) -> Vec<PyVortexState> {
        self.0.states.iter().cloned().map(PyVortexState).collect()
    }

    /// Largest relative H drift, absolute momentum drift and sphere-constraint drift.
    fn summary(&self) -> BTreeMap<&'static str, f64> {
        let s = self.0.summary();
        BTreeMap::from([("max_h_drift", s.max_h_drift), ("max_phi_drift", s.max_phi_drift), ("max_sphere_drift", s.max_sphere_drift)])
    }

    fn to_csv(&self) -> PyResult<String> {
        self.0.to_csv().map_err(err)
    }
}

#[pyfunction]
fn build_ring(n: usize, theta0: f64) -> PyResult<PyEquilibrium> {
    families::build_ring(n, theta0).map(PyEquilibrium).map_err(err)
}

#[pyfunction]
fn build_ring_pole(n: usize, theta0: f64, kappa: f64) -> PyResult<PyEquilibrium> {
    families::build_ring_pole(n, theta0, kappa).map(PyEquilibrium).map_err(err)
}

#[pyfunction]
fn build_ring_two_poles(n: usize, theta0: f64, kappa_n: f64, kappa_s: f64) -> PyResult<PyEquilibrium> {
    families::build_ring_two_poles(n, theta0, kappa_n, kappa_s).map(PyEquilibrium).map_err(err)
}

/// kappa is solved from the equilibrium condition unless given (required at degenerate points).
#[pyfunction]
#[pyo3(signature = (n, theta0, theta1, staggered, kappa = None))]
fn build_two_rings(n: usize, theta0: f64, theta1: f64, staggered: bool, kappa: Option<f64>) -> PyResult<PyEquilibrium> {
    match kappa {
        Some(k) => families::build_two_rings_with_kappa(n, theta0, theta1, staggered, k),
        None => families::build_two_rings(n, theta0, theta1, staggered),
    }
    .map(PyEquilibrium)
    .map_err(err)
}

/// ("unique", kappa, xi), ("degenerate", None, None) or ("none", None, None).
#[pyfunction]
fn solve_two_ring_kappa(n: usize, theta0: f64, theta1: f64, staggered: bool) -> PyResult<(&'static str, Option<f64>, Option<f64>)> {
    Ok(match families::solve_two_ring_kappa(n, theta0, theta1, staggered).map_err(err)? {
        KappaSolution::Unique { kappa, xi } => ("unique", Some(kappa), Some(xi)),
        KappaSolution::Degenerate(_) => ("degenerate", None, None),
        KappaSolution::None => ("none", None, None),
    })
}

#[pyfunction]
fn criterion_ring(n: usize, theta0: f64) -> String {
    criteria::criterion_ring(n, theta0).to_string()
}

#[pyfunction]
fn criterion_ring_pole(n: usize, theta0: f64, kappa: f64) -> String {
    criteria::criterion_ring_pole(n, theta0, kappa).to_string()
}

#[pyfunction]
#[pyo3(signature = (re, tol_eig = None))]
fn classify(re: &PyEquilibrium, tol_eig: Option<f64>) -> PyResult<PyReport> {
    re.classify(tol_eig)
}

#[pyfunction]
#[pyo3(signature = (state, t_end, dt = 1e-3, stride = 1))]
fn integrate(state: &PyVortexState, t_end: f64, dt: f64, stride: usize) -> PyResult<PyTrajectory> {
    dynamics::integrate_sampled(&state.0, t_end, dt, stride.max(1)).map(PyTrajectory).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, theta0, kappa, resolution, tol_eig = None))]
fn scan_ring_pole(n: usize, theta0: (f64, f64), kappa: (f64, f64), resolution: usize, tol_eig: Option<f64>) -> PyResult<PyScan> {
    scan::scan_ring_pole(n, theta0, kappa, resolution, &tolerances(tol_eig)?).map(PyScan).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, theta0, kappa_n, kappa_s, resolution, tol_eig = None))]
fn scan_ring_two_poles(n: usize, theta0: (f64, f64), kappa_n: (f64, f64), kappa_s: f64, resolution: usize, tol_eig: Option<f64>) -> PyResult<PyScan> {
    scan::scan_ring_two_poles(n, theta0, kappa_n, kappa_s, resolution, &tolerances(tol_eig)?).map(PyScan).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, theta0, theta1, staggered, resolution, tol_eig = None))]
fn scan_two_rings(n: usize, theta0: (f64, f64), theta1: (f64, f64), staggered: bool, resolution: usize, tol_eig: Option<f64>) -> PyResult<PyScan> {
    scan::scan_two_rings(n, theta0, theta1, staggered, resolution, &tolerances(tol_eig)?).map(PyScan).map_err(err)
}

/// Invariant suite: list of (name, passed, detail).
#[pyfunction]
#[pyo3(signature = (seed = 42))]
fn verify(seed: u64) -> Vec<(String, bool, String)> {
    run_suite(seed).into_iter().map(|c| (c.name, c.passed, c.detail)).collect()
}

#[pymodule]
fn vortex_re(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CoincidenceError", m.py().get_type::<CoincidenceError>())?;
    m.add_class::<PyVortexState>()?;
    m.add_class::<PyEquilibrium>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyBlock>()?;
    m.add_class::<PyScan>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(build_ring, m)?)?;
    m.add_function(wrap_pyfunction!(build_ring_pole, m)?)?;
    m.add_function(wrap_pyfunction!(build_ring_two_poles, m)?)?;
    m.add_function(wrap_pyfunction!(build_two_rings, m)?)?;
    m.add_function(wrap_pyfunction!(solve_two_ring_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(criterion_ring, m)?)?;
    m.add_function(wrap_pyfunction!(criterion_ring_pole, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(scan_ring_pole, m)?)?;
    m.add_function(wrap_pyfunction!(scan_ring_two_poles, m)?)?;
    m.add_function(wrap_pyfunction!(scan_two_rings, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
