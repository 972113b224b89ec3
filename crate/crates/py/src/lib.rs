//! Python bindings: `import ptq_sim`.

use std::f64::consts::FRAC_PI_2;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ptq_core::dynamics::{detect_revivals, detect_steady_state, propagate_strided};
use ptq_core::ep::{ep_residual, locate_ep_with_gamma, EP_TOL};
use ptq_core::sensing::{qfi as core_qfi, sensing_sweep_with_gamma, DEFAULT_STEP};
use ptq_core::spectrum::{classify_phase_default, spectrum as core_spectrum};
use ptq_core::{
    build_hamiltonian, initial_state, EpPoint, EpSlice, Eigenstate, Error, InitialStateSpec, Kappa, Phase,
    StateVector4, C64,
};

create_exception!(ptq_sim, NumericalError, PyRuntimeError, "A numerical routine failed to produce a trustworthy result.");

fn to_py(err: Error) -> PyErr {
    let msg = format!("{} ({})", err, err.kind());
    if err.is_numerical() {
        NumericalError::new_err(msg)
    } else {
        PyValueError::new_err(msg)
    }
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::PtSymmetric => "pts",
        Phase::PtBroken => "ptb",
        Phase::NearEp => "near_ep",
    }
}

fn kappa(name: &str) -> PyResult<Kappa> {
    match name {
        "j" | "J" => Ok(Kappa::J),
        "omega" | "Omega" => Ok(Kappa::Omega),
        _ => Err(PyValueError::new_err(format!("kappa must be 'j' or 'omega', got {name:?}"))),
    }
}

/// Model parameters `(omega, j, gamma)`.
#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
struct SystemParams {
    inner: ptq_core::SystemParams,
}

#[pymethods]
impl SystemParams {
    #[new]
    #[pyo3(signature = (omega, j, gamma = 1.0))]
    fn new(omega: f64, j: f64, gamma: f64) -> PyResult<Self> {
        let inner = ptq_core::SystemParams::with_gamma(omega, j, gamma);
        inner.validate().map_err(to_py)?;
        Ok(SystemParams { inner })
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn j(&self) -> f64 {
        self.inner.j
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    /// The 4x4 Hamiltonian as nested lists of complex numbers.
    fn hamiltonian(&self) -> Vec<Vec<C64>> {
        build_hamiltonian(&self.inner).0.iter().map(|r| r.to_vec()).collect()
    }

    /// "pts", "ptb" or "near_ep".
    fn phase(&self) -> &'static str {
        phase_name(classify_phase_default(&self.inner).phase)
    }

    fn __repr__(&self) -> String {
        format!("SystemParams(omega={}, j={}, gamma={})", self.inner.omega, self.inner.j, self.inner.gamma)
    }
}

/// Eigenvalues `[E1, E2, E3, E4]`.
#[pyfunction]
fn eigenvalues(params: SystemParams) -> PyResult<Vec<C64>> {
    Ok(core_spectrum(&params.inner).map_err(to_py)?.eigenvalues.to_vec())
}

/// `(eigenvalues, eigenvectors, source)`; eigenvectors are 4-lists in the
/// basis |00>, |01>, |10>, |11>.
#[pyfunction]
fn spectrum(params: SystemParams) -> PyResult<(Vec<C64>, Vec<Vec<C64>>, String)> {
    let s = core_spectrum(&params.inner).map_err(to_py)?;
    let vecs = s.eigenvectors.iter().map(|v| v.0.to_vec()).collect();
    Ok((s.eigenvalues.to_vec(), vecs, format!("{:?}", s.source)))
}

/// `(theta_y, X - r^2)`; both vanish at an exceptional point.
#[pyfunction]
fn residual(params: SystemParams) -> (f64, f64) {
    ep_residual(&params.inner)
}

fn ep_dict<'py>(py: Python<'py>, ep: &EpPoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("omega_c", ep.omega_c)?;
    d.set_item("j_c", ep.j_c)?;
    d.set_item("gamma", ep.gamma)?;
    d.set_item("energy", ep.e_degenerate)?;
    d.set_item("gap", ep.gap)?;
    d.set_item("residual_theta", ep.residual_theta)?;
    d.set_item("residual_x", ep.residual_x)?;
    d.set_item("higher_order", ep.higher_order)?;
    Ok(d)
}

/// Exceptional point on a slice: `solve_for="j"` holds omega at `fixed`,
/// `solve_for="omega"` holds J.
#[pyfunction]
#[pyo3(signature = (solve_for, fixed, bracket, tol = EP_TOL, gamma = 1.0))]
fn locate_ep<'py>(
    py: Python<'py>,
    solve_for: &str,
    fixed: f64,
    bracket: (f64, f64),
    tol: f64,
    gamma: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let slice = match kappa(solve_for)? {
        Kappa::J => EpSlice::FixOmega(fixed),
        Kappa::Omega => EpSlice::FixJ(fixed),
    };
    let ep = locate_ep_with_gamma(slice, bracket, tol, gamma).map_err(to_py)?;
    ep_dict(py, &ep)
}

/// Wootters concurrence of a (not necessarily normalised) pure state.
#[pyfunction]
fn concurrence(state: [C64; 4]) -> PyResult<f64> {
    let psi = StateVector4(state).normalized().map_err(to_py)?;
    ptq_core::concurrence_pure(&psi).map_err(to_py)
}

/// Concurrence of the eigenstate `Psi_s`, `s` in {3, 4}.
#[pyfunction]
fn eigenstate_concurrence(params: SystemParams, s: u8) -> PyResult<f64> {
    let state = Eigenstate::from_label(s).map_err(to_py)?;
    ptq_core::entanglement::eigenstate_concurrence(&params.inner, state).map_err(to_py)
}

/// RK4 evolution from `(sin theta|0> + cos theta|1>)|0>`. Returns a dict of
/// equal-length lists `t`, `concurrence`, `sigma_x1`, `norm_log`.
#[pyfunction]
#[pyo3(signature = (params, theta = FRAC_PI_2, t_max = 40.0, dt = 1e-3, stride = 1))]
fn evolve<'py>(
    py: Python<'py>,
    params: SystemParams,
    theta: f64,
    t_max: f64,
    dt: f64,
    stride: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let psi0 = initial_state(InitialStateSpec { theta_init: theta });
    let traj = py.detach(|| propagate_strided(&params.inner, &psi0, t_max, dt, stride)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("steady_state", detect_steady_state(&traj, 5.0, 1e-3))?;
    d.set_item("t", traj.times)?;
    d.set_item("concurrence", traj.concurrence)?;
    d.set_item("sigma_x1", traj.coherence_x)?;
    d.set_item("norm_log", traj.norm_log)?;
    Ok(d)
}

/// Collapse-revival times of the concurrence, starting from |00>.
#[pyfunction]
#[pyo3(signature = (params, t_max = 2000.0, dt = 1e-3, stride = 100))]
fn revivals(py: Python<'_>, params: SystemParams, t_max: f64, dt: f64, stride: usize) -> PyResult<Vec<f64>> {
    let psi0 = StateVector4::basis(0);
    let traj = py.detach(|| propagate_strided(&params.inner, &psi0, t_max, dt, stride)).map_err(to_py)?;
    Ok(detect_revivals(&traj, 5.0))
}

/// Quantum Fisher information of `Psi3` with respect to `kappa` ("j" or "omega").
#[pyfunction]
#[pyo3(signature = (params, kappa_name, h = DEFAULT_STEP))]
fn qfi(params: SystemParams, kappa_name: &str, h: f64) -> PyResult<f64> {
    core_qfi(&params.inner, kappa(kappa_name)?, h).map_err(to_py)
}

/// Sensing sweep; one dict per grid point (`None` where undefined).
#[pyfunction]
#[pyo3(signature = (kappa_name, fixed, range, n, gamma = 1.0))]
fn sensing_sweep<'py>(
    py: Python<'py>,
    kappa_name: &str,
    fixed: f64,
    range: (f64, f64),
    n: usize,
    gamma: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let k = kappa(kappa_name)?;
    let points = py.detach(|| sensing_sweep_with_gamma(k, fixed, range, n, gamma)).map_err(to_py)?;
    points
        .iter()
        .map(|p| {
            let d = PyDict::new(py);
            d.set_item("value", p.value)?;
            d.set_item("phase", phase_name(p.phase))?;
            d.set_item("qfi", p.qfi)?;
            d.set_item("inverse_variance", p.inverse_variance())?;
            d.set_item("coherence", p.coherence)?;
            d.set_item("flag", p.flag.clone())?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn ptq_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SystemParams>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(residual, m)?)?;
    m.add_function(wrap_pyfunction!(locate_ep, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(eigenstate_concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(revivals, m)?)?;
    m.add_function(wrap_pyfunction!(qfi, m)?)?;
    m.add_function(wrap_pyfunction!(sensing_sweep, m)?)?;
    Ok(())
}
