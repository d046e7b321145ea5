use lambda_core::protocols as proto;
use lambda_core::pulses::SignalShape;
use lambda_core::quantum::Qubit;
use lambda_core::{system, units, Error};
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyComplex;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::NoMatch(_) => PyValueError::new_err(e.to_string()),
        Error::Divergence { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Singular(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Device parameters in rad/ns and ns; defaults are the reference device.
#[pyclass(name = "SystemParams")]
#[derive(Clone)]
pub struct PySystemParams {
    inner: system::SystemParams,
}

macro_rules! param_accessors {
    ($($field:ident : $setter:ident),* ; $($rest:tt)*) => {
        #[pymethods]
        impl PySystemParams {
            $(
                #[getter]
                fn $field(&self) -> f64 {
                    self.inner.$field
                }

                #[setter]
                fn $setter(&mut self, value: f64) {
                    self.inner.$field = value;
                }
            )*

            $($rest)*
        }
    };
}

param_accessors!(
    omega_q: set_omega_q,
    omega_r: set_omega_r,
    chi: set_chi,
    kappa: set_kappa,
    kappa_prime: set_kappa_prime,
    gamma: set_gamma,
    gamma_prime: set_gamma_prime,
    omega_d: set_omega_d,
    dt: set_dt;
    #[new]
    fn new() -> Self {
        Self { inner: system::SystemParams::reference_device() }
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max
    }

    #[setter]
    fn set_n_max(&mut self, value: usize) {
        self.inner.n_max = value;
    }

    /// Copy with total qubit decay `gamma`, radiative part capped at it.
    fn with_gamma(&self, gamma: f64) -> Self {
        Self { inner: self.inner.with_gamma(gamma) }
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
);

#[pyclass(name = "DressedSpectrum", frozen)]
pub struct PyDressedSpectrum {
    inner: system::DressedSpectrum,
}

#[pymethods]
impl PyDressedSpectrum {
    #[getter]
    fn drive_amplitude(&self) -> f64 {
        self.inner.drive_amplitude
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies.to_vec()
    }

    #[getter]
    fn angles(&self) -> Vec<f64> {
        self.inner.angles.to_vec()
    }

    /// κ̃_ij for i in {3, 4}, j in {1, 2}.
    fn kappa(&self, i: usize, j: usize) -> PyResult<f64> {
        if !(3..=4).contains(&i) || !(1..=2).contains(&j) {
            return Err(PyValueError::new_err("kappa(i, j) needs i in {3, 4} and j in {1, 2}"));
        }
        Ok(self.inner.kappa(i, j))
    }

    /// ω̃_i − ω̃_j with levels numbered from 1.
    fn omega(&self, i: usize, j: usize) -> PyResult<f64> {
        if !(1..=4).contains(&i) || !(1..=4).contains(&j) {
            return Err(PyValueError::new_err("levels are numbered 1 to 4"));
        }
        Ok(self.inner.omega(i, j))
    }
}

#[pyclass(name = "CaptureConfig")]
#[derive(Clone)]
pub struct PyCaptureConfig {
    inner: proto::CaptureConfig,
}

#[pymethods]
impl PyCaptureConfig {
    /// Defaults: Gaussian l = 100 ns, w = 30 ns, impedance-matched drive,
    /// ω_s/2π = 10.007 GHz, one photon.
    #[new]
    #[pyo3(signature = (params=None, shape="gaussian", length=100.0, beta=None, width=30.0, omega_drive=None, omega_s=None, photons=1))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        params: Option<PyRef<'_, PySystemParams>>,
        shape: &str,
        length: f64,
        beta: Option<f64>,
        width: f64,
        omega_drive: Option<f64>,
        omega_s: Option<f64>,
        photons: usize,
    ) -> PyResult<Self> {
        let params = params.map(|p| p.inner).unwrap_or_else(system::SystemParams::reference_device);
        let shape: SignalShape = shape.parse().map_err(to_py)?;
        let mut c = proto::CaptureConfig::new(params).map_err(to_py)?.with_shape(shape);
        if let Some(b) = beta {
            c.beta = b;
        }
        c.length = length;
        c.width = width;
        if let Some(d) = omega_drive {
            c.omega_drive = d;
        }
        if let Some(s) = omega_s {
            c.omega_s = s;
        }
        if photons > 2 {
            return Err(PyValueError::new_err("photons must be 0, 1 or 2"));
        }
        c.photons = photons;
        Ok(Self { inner: c })
    }

    #[getter]
    fn omega_drive(&self) -> f64 {
        self.inner.omega_drive
    }

    #[getter]
    fn omega_s(&self) -> f64 {
        self.inner.omega_s
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }

    #[getter]
    fn window(&self) -> (f64, f64) {
        self.inner.window()
    }
}

#[pyclass(name = "ResetConfig")]
#[derive(Clone)]
pub struct PyResetConfig {
    inner: proto::ResetConfig,
}

#[pymethods]
impl PyResetConfig {
    /// Defaults: Ω_d/2π = 44 MHz, ω_reset/2π = 9.860 GHz, ⟨n⟩ = 10 from |e,0⟩,
    /// four-photon cutoff.
    #[new]
    #[pyo3(signature = (params=None, omega_drive=None, omega_reset=None, n_mean=10.0, initial="excited"))]
    fn new(
        params: Option<PyRef<'_, PySystemParams>>,
        omega_drive: Option<f64>,
        omega_reset: Option<f64>,
        n_mean: f64,
        initial: &str,
    ) -> PyResult<Self> {
        let params = params
            .map(|p| p.inner)
            .unwrap_or_else(|| system::SystemParams::reference_device().with_n_max(proto::RESET_N_MAX));
        let mut c = proto::ResetConfig::new(params);
        if let Some(d) = omega_drive {
            c.omega_drive = d;
        }
        if let Some(r) = omega_reset {
            c.omega_reset = r;
        }
        c.n_mean = n_mean;
        c.initial = match initial {
            "excited" => Qubit::Excited,
            "ground" => Qubit::Ground,
            other => return Err(PyValueError::new_err(format!("initial must be 'excited' or 'ground', got '{other}'"))),
        };
        Ok(Self { inner: c })
    }

    #[getter]
    fn window(&self) -> (f64, f64) {
        self.inner.window()
    }
}

#[pyclass(name = "StageResult", frozen)]
pub struct PyStageResult {
    inner: proto::StageResult,
}

#[pymethods]
impl PyStageResult {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn curves(&self) -> Vec<Vec<f64>> {
        self.inner.curves.clone()
    }

    #[getter]
    fn reference(&self) -> Vec<f64> {
        self.inner.reference.clone()
    }

    #[getter]
    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities.clone()
    }

    fn probability(&self, k: usize) -> PyResult<f64> {
        self.inner
            .probabilities
            .get(k)
            .copied()
            .ok_or_else(|| PyValueError::new_err(format!("no response for {k} photons")))
    }
}

#[pyfunction]
fn ghz(f: f64) -> f64 {
    units::ghz(f)
}

#[pyfunction]
fn mhz(f: f64) -> f64 {
    units::mhz(f)
}

#[pyfunction]
fn khz(f: f64) -> f64 {
    units::khz(f)
}

#[pyfunction]
fn to_ghz(omega: f64) -> f64 {
    units::to_ghz(omega)
}

#[pyfunction]
fn to_mhz(omega: f64) -> f64 {
    units::to_mhz(omega)
}

#[pyfunction]
fn find_impedance_match(params: PyRef<'_, PySystemParams>) -> PyResult<f64> {
    system::find_impedance_match(&params.inner).map_err(to_py)
}

#[pyfunction]
fn dressed_spectrum(params: PyRef<'_, PySystemParams>, omega_drive: f64) -> PyResult<PyDressedSpectrum> {
    Ok(PyDressedSpectrum { inner: system::dressed_spectrum(&params.inner, omega_drive).map_err(to_py)? })
}

/// Weak-tone reflection coefficient under a continuous drive.
#[pyfunction]
fn steady_reflection<'py>(
    py: Python<'py>,
    params: PyRef<'_, PySystemParams>,
    omega_drive: f64,
    omega_s: f64,
) -> PyResult<Bound<'py, PyComplex>> {
    let r = lambda_core::reflection::steady_reflection(&params.inner, omega_drive, omega_s).map_err(to_py)?;
    Ok(PyComplex::from_doubles(py, r.re, r.im))
}

/// Rows `(drive, κ̃31, κ̃32, κ̃41, κ̃42, ω̃31, ω̃41, ω̃32)`.
#[pyfunction]
fn rate_sweep(params: PyRef<'_, PySystemParams>, drives: Vec<f64>) -> PyResult<Vec<[f64; 8]>> {
    let rows = proto::rate_sweep(&params.inner, &drives).map_err(to_py)?;
    Ok(rows
        .iter()
        .map(|r| [r.omega_drive, r.rates[0], r.rates[1], r.rates[2], r.rates[3], r.omega_31, r.omega_41, r.omega_32])
        .collect())
}

#[pyfunction]
fn run_capture(py: Python<'_>, config: PyRef<'_, PyCaptureConfig>) -> PyResult<PyStageResult> {
    let c = config.inner.clone();
    let r = py.detach(|| proto::run_capture(&c)).map_err(to_py)?;
    Ok(PyStageResult { inner: r })
}

#[pyfunction]
fn run_reset(py: Python<'_>, config: PyRef<'_, PyResetConfig>) -> PyResult<PyStageResult> {
    let c = config.inner.clone();
    let r = py.detach(|| proto::run_reset(&c)).map_err(to_py)?;
    Ok(PyStageResult { inner: r })
}

/// P_1 indexed `[gamma][length]`.
#[pyfunction]
fn sweep_pulse_length(
    py: Python<'_>,
    config: PyRef<'_, PyCaptureConfig>,
    lengths: Vec<f64>,
    gammas: Vec<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let c = config.inner.clone();
    let s = py.detach(|| proto::sweep_pulse_length(&c, &lengths, &gammas)).map_err(to_py)?;
    Ok(s.p1)
}

#[pymodule]
fn lambda_detector(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyDressedSpectrum>()?;
    m.add_class::<PyCaptureConfig>()?;
    m.add_class::<PyResetConfig>()?;
    m.add_class::<PyStageResult>()?;
    m.add_function(wrap_pyfunction!(ghz, m)?)?;
    m.add_function(wrap_pyfunction!(mhz, m)?)?;
    m.add_function(wrap_pyfunction!(khz, m)?)?;
    m.add_function(wrap_pyfunction!(to_ghz, m)?)?;
    m.add_function(wrap_pyfunction!(to_mhz, m)?)?;
    m.add_function(wrap_pyfunction!(find_impedance_match, m)?)?;
    m.add_function(wrap_pyfunction!(dressed_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(steady_reflection, m)?)?;
    m.add_function(wrap_pyfunction!(rate_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_capture, m)?)?;
    m.add_function(wrap_pyfunction!(run_reset, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_pulse_length, m)?)?;
    Ok(())
}
