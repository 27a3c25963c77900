//! Python bindings: pulse sets, the PSWF solver, channel profiles, the
//! twisted convolution and JSON-driven sweeps.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use zak_otfs::channel::eva_profile as eva;
use zak_otfs::lattice::{DdGrid, LatticeParams};
use zak_otfs::pulse::{build_family, orthogonality_defect, PulseDesign, PulseFamily, PulseMatrix};
use zak_otfs::sim::psd::{bandwidth_99, compute_psd};
use zak_otfs::sim::{run_sweep as sweep, SimConfig};
use zak_otfs::transceiver::{twisted_convolution_io, DdResponse};
use zak_otfs::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Numeric(_) | Error::Conditioning { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Pulse matrix of one window family on an `M × N` lattice.
#[pyclass(name = "PulseSet", frozen)]
struct PyPulseSet {
    family: PulseFamily,
    params: LatticeParams,
    pulses: PulseMatrix,
}

#[pymethods]
impl PyPulseSet {
    #[new]
    #[pyo3(signature = (window, m=32, n=16, delta_f=15e3, l=10))]
    fn new(window: &str, m: usize, n: usize, delta_f: f64, l: usize) -> PyResult<Self> {
        let family = PulseFamily::parse(window).map_err(py_err)?;
        let params = LatticeParams::from_delta_f(m, n, delta_f, l).map_err(py_err)?;
        let pulses = build_family(family, &params, &PulseDesign::default()).map_err(py_err)?;
        Ok(PyPulseSet {
            family,
            params,
            pulses,
        })
    }

    #[getter]
    fn window(&self) -> &'static str {
        self.family.name()
    }

    /// `(samples, cells)`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.pulses.rows(), self.pulses.cols())
    }

    #[getter]
    fn sample_rate(&self) -> f64 {
        self.params.sample_rate()
    }

    /// Pulsone of cell `(l, k)`.
    fn pulsone(&self, l: usize, k: usize) -> PyResult<Vec<Complex64>> {
        if l >= self.params.m || k >= self.params.n {
            return Err(PyValueError::new_err(format!("cell ({l}, {k}) outside the lattice")));
        }
        Ok(self.pulses.column(self.params.index(l, k)))
    }

    fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.pulses)
    }

    /// 99%-power bandwidth in units of Δf.
    fn bandwidth_99(&self) -> PyResult<f64> {
        let psd = compute_psd(&self.pulses, 4 * self.params.samples(), self.params.sample_rate())
            .map_err(py_err)?;
        Ok(bandwidth_99(&psd) / self.params.delta_f)
    }

    fn __repr__(&self) -> String {
        format!(
            "PulseSet(window='{}', m={}, n={}, l={})",
            self.family, self.params.m, self.params.n, self.params.l
        )
    }
}

/// Dominant prolate eigenpair: `(lambda0, lambda1, grid, psi0)`.
#[pyfunction]
#[pyo3(signature = (t_prime, b_prime, grid_size=512))]
fn solve_pswf(
    t_prime: f64,
    b_prime: f64,
    grid_size: usize,
) -> PyResult<(f64, f64, Vec<f64>, Vec<f64>)> {
    let s = zak_otfs::window::solve_pswf(t_prime, b_prime, grid_size).map_err(py_err)?;
    Ok((s.lambda0, s.lambda1, s.grid, s.psi0))
}

/// Taps of the vehicular profile as `(delay_us, power_db)`.
#[pyfunction]
fn eva_profile() -> Vec<(f64, f64)> {
    eva().taps.iter().map(|t| (t.delay_us, t.power_db)).collect()
}

/// Twisted convolution of an `M × N` grid (rows are delay) with a sparse
/// response given as `(l, k, value)` taps on the centered domain.
#[pyfunction]
fn twisted_convolution(
    x: Vec<Vec<Complex64>>,
    taps: Vec<(i64, i64, Complex64)>,
) -> PyResult<Vec<Vec<Complex64>>> {
    let m = x.len();
    let n = x.first().map_or(0, |r| r.len());
    if m == 0 || n == 0 || x.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("x must be a non-empty rectangular grid"));
    }
    let grid = DdGrid::from_fn(m, n, |l, k| x[l][k]);
    let mut h = DdResponse::centered(m, n);
    for (l, k, v) in taps {
        h.set(l, k, v).map_err(py_err)?;
    }
    let y = twisted_convolution_io(&grid, &h).map_err(py_err)?;
    Ok((0..m).map(|l| (0..n).map(|k| y.get(l, k)).collect()).collect())
}

/// Runs a sweep described by a JSON scenario and returns the JSON report.
#[pyfunction]
fn run_sweep(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = SimConfig::from_json(config_json).map_err(py_err)?;
    let report = py.detach(|| sweep(&cfg)).map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn zakotfs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPulseSet>()?;
    m.add_function(wrap_pyfunction!(solve_pswf, m)?)?;
    m.add_function(wrap_pyfunction!(eva_profile, m)?)?;
    m.add_function(wrap_pyfunction!(twisted_convolution, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
