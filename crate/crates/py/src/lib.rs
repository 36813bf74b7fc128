use ::mb_lab as core;
use core::dispersion::{self, FreqQuad, FreqTriple};
use core::oscillatory::{ratio_scan, Lemma};
use core::picard::{self, Construction, ConstructionId};
use core::resonance::{self, Eta2Band, RegionSpec};
use core::solver::{self, GridSpec, SolverParams, SpectralState};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Precondition(m) => PyValueError::new_err(m),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Phase polynomial `alpha xi^3 - beta xi` and its resonance functions.
#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PhaseParams {
    inner: dispersion::PhaseParams,
}

#[pymethods]
impl PhaseParams {
    #[new]
    fn new(alpha: f64, beta: f64) -> PyResult<Self> {
        Ok(PhaseParams { inner: dispersion::PhaseParams::new(alpha, beta).map_err(err)? })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    fn phase(&self, xi: f64) -> f64 {
        self.inner.phase(xi)
    }

    fn g0(&self, eta1: f64, eta2: f64) -> f64 {
        dispersion::g0(&self.inner, FreqTriple::new(eta1, eta2))
    }

    fn g1(&self, eta1: f64, eta2: f64) -> f64 {
        dispersion::g1(&self.inner, FreqTriple::new(eta1, eta2))
    }

    fn g2(&self, eta1: f64, eta2: f64, eta3: f64) -> f64 {
        dispersion::g2(&self.inner, FreqQuad::new(eta1, eta2, eta3))
    }

    /// Real roots `(C1, C2)` of `f`, or `None` when they are complex.
    fn roots(&self) -> PyResult<Option<(f64, f64)>> {
        let r = dispersion::roots_of_f(self.inner.alpha).map_err(err)?;
        Ok(r.c1.zip(r.c2))
    }

    fn __repr__(&self) -> String {
        format!("PhaseParams(alpha={}, beta={})", self.inner.alpha, self.inner.beta)
    }
}

/// `(e^{iGt} - 1) / G`.
#[pyfunction]
fn kernel(g: f64, t: f64) -> Complex64 {
    picard::kernel(g, t)
}

#[pyfunction]
fn lambda_shift(alpha: f64, beta: f64) -> PyResult<f64> {
    dispersion::lambda_shift(alpha, beta).map_err(err)
}

#[pyfunction]
fn predicted_exponent(construction: &str, s: f64) -> PyResult<f64> {
    Ok(picard::predicted_exponent(parse_construction(construction)?, s))
}

fn parse_construction(name: &str) -> PyResult<Construction> {
    Construction::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown construction '{name}'")))
}

fn construction(name: &str, alpha: Option<f64>, beta: Option<f64>, s: f64, n: f64) -> PyResult<ConstructionId> {
    let kind = parse_construction(name)?;
    let (a0, b0) = match kind {
        Construction::BetaPositive => (4.0, 3.0),
        Construction::BetaNegative => (4.0, -3.0),
        Construction::BetaZero => (4.0, 0.0),
        Construction::GeneralAlpha => (2.0, 1.0),
    };
    ConstructionId::new(kind, alpha.unwrap_or(a0), beta.unwrap_or(b0), s, n).map_err(err)
}

#[pyclass(frozen, get_all, skip_from_py_object)]
struct GrowthFit {
    construction: String,
    s: f64,
    t: f64,
    ns: Vec<f64>,
    norms: Vec<f64>,
    slope: f64,
    intercept: f64,
    predicted: f64,
    passed: bool,
}

#[pymethods]
impl GrowthFit {
    fn __repr__(&self) -> String {
        format!(
            "GrowthFit({}, s={}, slope={:.4}, predicted={:.4}, passed={})",
            self.construction, self.s, self.slope, self.predicted, self.passed
        )
    }
}

/// Windowed iterate norm at one `N`.
#[pyfunction]
#[pyo3(signature = (construction_name, s, n, t=0.05, nodes_per_bump=64, alpha=None, beta=None))]
#[allow(clippy::too_many_arguments)]
fn window_norm(
    py: Python<'_>,
    construction_name: &str,
    s: f64,
    n: f64,
    t: f64,
    nodes_per_bump: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> PyResult<f64> {
    let c = construction(construction_name, alpha, beta, s, n)?;
    py.detach(|| picard::window_norm(&c, t, nodes_per_bump)).map(|p| p.norm).map_err(err)
}

/// Log-log slope of windowed iterate norms over a dyadic ladder.
#[pyfunction]
#[pyo3(signature = (construction_name, s, t=0.05, ladder=None, nodes_per_bump=64, alpha=None, beta=None))]
#[allow(clippy::too_many_arguments)]
fn growth_fit(
    py: Python<'_>,
    construction_name: &str,
    s: f64,
    t: f64,
    ladder: Option<Vec<f64>>,
    nodes_per_bump: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> PyResult<GrowthFit> {
    let ladder = ladder.unwrap_or_else(core::constants::default_ladder);
    let c = construction(construction_name, alpha, beta, s, ladder[0])?;
    let f = py.detach(|| picard::growth_fit(&c, t, &ladder, nodes_per_bump)).map_err(err)?;
    Ok(GrowthFit {
        construction: c.kind.name().to_string(),
        s,
        t,
        ns: f.ladder.iter().map(|p| p.n).collect(),
        norms: f.ladder.iter().map(|p| p.norm).collect(),
        slope: f.slope,
        intercept: f.intercept,
        predicted: f.predicted,
        passed: f.pass,
    })
}

/// Per exponent: largest raw ratio, refined ratio and frozen constant.
#[pyfunction]
#[pyo3(signature = (lemma, rho=None, samples=200, seed=42))]
fn lemma_scan<'py>(
    py: Python<'py>,
    lemma: &str,
    rho: Option<Vec<f64>>,
    samples: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let l = Lemma::parse(lemma).ok_or_else(|| PyValueError::new_err(format!("unknown lemma '{lemma}'")))?;
    let grid = rho.unwrap_or_else(|| l.default_rho_grid().to_vec());
    let scans = py.detach(|| ratio_scan(l, &grid, samples, seed)).map_err(err)?;
    scans
        .iter()
        .map(|sc| {
            let d = PyDict::new(py);
            d.set_item("rho", sc.rho)?;
            d.set_item("max_ratio", sc.max.report.ratio)?;
            d.set_item("refined_ratio", sc.refined.report.ratio)?;
            d.set_item("c_emp", core::constants::c_emp(l, sc.rho))?;
            d.set_item("ratios", sc.rows.iter().map(|r| r.report.ratio).collect::<Vec<_>>())?;
            Ok(d)
        })
        .collect()
}

/// Sublevel scan of `<G0>` at `alpha = 4`.
#[pyfunction]
#[pyo3(signature = (beta, n, eta1_band=(1.0, 2.0), eta2_band=(-4.0, 4.0), strip=true, samples=(256, 1025), thresholds=vec![10.0]))]
#[allow(clippy::too_many_arguments)]
fn trichotomy_scan<'py>(
    py: Python<'py>,
    beta: f64,
    n: f64,
    eta1_band: (f64, f64),
    eta2_band: (f64, f64),
    strip: bool,
    samples: (usize, usize),
    thresholds: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = dispersion::PhaseParams::new(4.0, beta).map_err(err)?;
    let (lo, hi) = eta2_band;
    let region = RegionSpec {
        n,
        eta1_band,
        eta2_band: if strip { Eta2Band::StripOffset { lo, hi } } else { Eta2Band::Absolute { lo, hi } },
        samples,
    };
    let r = py.detach(|| resonance::trichotomy_scan(&p, &region, &thresholds)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("min_bracket_g", r.min_bracket_g)?;
    d.set_item("argmin", r.argmin)?;
    d.set_item("measure_below", r.measure_below)?;
    d.set_item("both_factors_small", r.both_factors_small)?;
    d.set_item("cells", r.cells)?;
    Ok(d)
}

#[pyfunction]
fn beta_zero_strip_measure(n: f64, k: f64) -> f64 {
    resonance::beta_zero_strip_measure(n, k)
}

/// Periodic pseudospectral solver for the coupled system.
#[pyclass(skip_from_py_object)]
struct Simulation {
    grid: GridSpec,
    params: SolverParams,
    state: SpectralState,
}

fn diag_dict<'py>(py: Python<'py>, d: &solver::Diagnostics) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("time", d.time)?;
    out.set_item("mass_u", d.mass_u)?;
    out.set_item("mass_v", d.mass_v)?;
    out.set_item("l2_energy", d.l2_energy)?;
    out.set_item("hamiltonian", d.hamiltonian)?;
    Ok(out)
}

#[pymethods]
impl Simulation {
    #[new]
    #[pyo3(signature = (length, m, alpha, beta, beta1=0.0, dt=1e-3))]
    fn new(length: f64, m: usize, alpha: f64, beta: f64, beta1: f64, dt: f64) -> PyResult<Self> {
        let grid = GridSpec::new(length, m).map_err(err)?;
        let params = SolverParams::new(beta1, alpha, beta, dt, 0.0).map_err(err)?;
        params.check(&grid).map_err(err)?;
        Ok(Simulation { grid, params, state: SpectralState::zeros(&grid) })
    }

    /// Grid abscissae, centred on 0.
    fn x(&self) -> Vec<f64> {
        self.grid.x()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.time
    }

    fn set_fields(&mut self, u: Vec<f64>, v: Vec<f64>) -> PyResult<()> {
        let mut s = SpectralState::from_fields(&self.grid, &u, &v).map_err(err)?;
        s.project(&self.grid);
        self.state = s;
        Ok(())
    }

    fn fields(&self) -> (Vec<f64>, Vec<f64>) {
        self.state.to_fields(&self.grid)
    }

    /// Advances by `duration`, a whole number of steps.
    fn advance(&mut self, py: Python<'_>, duration: f64) -> PyResult<()> {
        let p = SolverParams { t_final: duration, ..self.params };
        let (grid, state) = (self.grid, self.state.clone());
        self.state = py.detach(|| solver::evolve(&grid, &state, &p)).map_err(err)?;
        Ok(())
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        diag_dict(py, &solver::diagnostics(&self.grid, &self.state, &self.params))
    }

    /// Second-order Duhamel residual slopes along `deltas`, for the current
    /// fields as data.
    fn crosscheck<'py>(&self, py: Python<'py>, deltas: Vec<f64>, t: f64) -> PyResult<Bound<'py, PyDict>> {
        let (grid, state, params) = (self.grid, self.state.clone(), self.params);
        let r = py.detach(|| solver::picard_crosscheck(&grid, &state, &params, &deltas, t)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("residual_u", r.residual_u)?;
        d.set_item("residual_v", r.residual_v)?;
        d.set_item("slope_u", r.slope_u)?;
        d.set_item("slope_v", r.slope_v)?;
        d.set_item("psi2_max", r.psi2_max)?;
        d.set_item("passed", r.pass)?;
        Ok(d)
    }
}

#[pymodule]
fn mblab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("REGISTRY_VERSION", core::constants::REGISTRY_VERSION)?;
    m.add_class::<PhaseParams>()?;
    m.add_class::<GrowthFit>()?;
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_shift, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(window_norm, m)?)?;
    m.add_function(wrap_pyfunction!(growth_fit, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_scan, m)?)?;
    m.add_function(wrap_pyfunction!(trichotomy_scan, m)?)?;
    m.add_function(wrap_pyfunction!(beta_zero_strip_measure, m)?)?;
    Ok(())
}
