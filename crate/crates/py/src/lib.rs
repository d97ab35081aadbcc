//! Python bindings for `eigenbound`.
//!
//! ```python
//! import eigenbound_py as eb
//! sq = eb.Domain.box([0, 0], [1, 1])
//! reps = eb.sweep_bounds(sq, "dirichlet", [0.6, 1.0], h=0.05)
//! lam = eb.smallest_eigenvalue(sq, "dirichlet", 1 / 64).value
//! ```

use pyo3::exceptions::{PyNotImplementedError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use eigenbound::bounds::{self as bd, BoundId, Problem};
use eigenbound::eigensolver::{self as es, OperatorKind, SolverOptions};
use eigenbound::geometry::{self as geo, Budget, FractionMode, SupConfig};
use eigenbound::heisenberg::{self as hb, HPoint};
use eigenbound::lemma::{self, LemmaParams};
use eigenbound::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Unsupported(_) => PyNotImplementedError::new_err(e.to_string()),
        Error::Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for eigenbound::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn sup_config(h: f64, mode: &str, samples: usize, cell: Option<f64>, seed: u64) -> PyResult<SupConfig> {
    let mut sup = match mode {
        "certify" | "enclosure" => SupConfig::enclosure(h),
        "estimate" => SupConfig::estimate(h),
        other => return Err(PyValueError::new_err(format!("mode must be 'certify' or 'estimate', got {other:?}"))),
    };
    sup.samples = samples;
    sup.seed = seed;
    if let Some(c) = cell {
        sup.cell = c;
    }
    Ok(sup)
}

/// A Euclidean domain.
#[pyclass(frozen, skip_from_py_object, name = "Domain")]
#[derive(Clone)]
struct PyDomain {
    inner: geo::Domain,
    convex: bool,
    mean_convex: bool,
    n: Option<usize>,
}

impl PyDomain {
    fn plain(inner: geo::Domain) -> Self {
        Self { inner, convex: false, mean_convex: false, n: None }
    }
}

#[pymethods]
impl PyDomain {
    /// Parse a JSON domain spec.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = geo::DomainSpec::from_json(text).py()?;
        Ok(Self { inner: spec.build().py()?, convex: spec.convex, mean_convex: spec.mean_convex, n: spec.heisenberg_n })
    }

    /// Open axis-aligned box `(lo, hi)`.
    #[staticmethod]
    #[pyo3(name = "box")]
    fn open_box(lo: Vec<f64>, hi: Vec<f64>) -> PyResult<Self> {
        let mut d = Self::plain(geo::Domain::open_box(lo, hi).py()?);
        d.convex = true;
        Ok(d)
    }

    #[staticmethod]
    fn ball(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        let mut d = Self::plain(geo::Domain::ball(center, radius).py()?);
        d.convex = true;
        Ok(d)
    }

    /// Polygon from its outer boundary and optional holes.
    #[staticmethod]
    #[pyo3(signature = (vertices, holes=Vec::new()))]
    fn polygon(vertices: Vec<[f64; 2]>, holes: Vec<Vec<[f64; 2]>>) -> PyResult<Self> {
        Ok(Self::plain(geo::Domain::polygon(vertices, holes).py()?))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Convexity as asserted in the domain file (boxes and balls are convex).
    #[getter]
    fn convex(&self) -> bool {
        self.convex
    }

    #[getter]
    fn volume(&self) -> Option<f64> {
        self.inner.volume()
    }

    fn contains(&self, x: Vec<f64>) -> bool {
        x.len() == self.inner.dim() && self.inner.contains(&x)
    }

    /// `δ_ω(x)`, the distance from `x` to the boundary along `w`.
    fn ray_distance(&self, x: Vec<f64>, w: Vec<f64>) -> PyResult<f64> {
        self.inner.ray_distance(&x, &w).py()
    }

    /// `(value, upper)` of the inradius on a grid of spacing `h`.
    fn inradius(&self, h: f64) -> PyResult<(f64, Option<f64>)> {
        let r = geo::inradius(&self.inner, h).py()?;
        Ok((r.value, r.upper))
    }

    /// `ψ_r(x)`: Monte Carlo with `samples`, or a cell enclosure with `spacing`.
    #[pyo3(signature = (x, r, samples=None, spacing=None, seed=geo::DEFAULT_SEED))]
    fn ball_fraction(
        &self,
        x: Vec<f64>,
        r: f64,
        samples: Option<usize>,
        spacing: Option<f64>,
        seed: u64,
    ) -> PyResult<Fraction> {
        let budget = match (samples, spacing) {
            (Some(count), None) => Budget::Samples { count, seed, stream: 0 },
            (None, Some(spacing)) => Budget::Cells { spacing },
            (None, None) => Budget::Samples { count: 4000, seed, stream: 0 },
            _ => return Err(PyValueError::new_err("give either samples or spacing, not both")),
        };
        geo::ball_fraction(&self.inner, &x, r, budget).py().map(Fraction::from)
    }

    /// `Ψ_r = sup_x ψ_r(x)` over a node grid of spacing `h`.
    #[pyo3(signature = (r, h, mode="certify", samples=4000, cell=None, seed=geo::DEFAULT_SEED))]
    fn sup_ball_fraction(
        &self,
        r: f64,
        h: f64,
        mode: &str,
        samples: usize,
        cell: Option<f64>,
        seed: u64,
    ) -> PyResult<Fraction> {
        let sup = sup_config(h, mode, samples, cell, seed)?;
        geo::sup_ball_fraction(&self.inner, r, &sup).py().map(Fraction::from)
    }

    fn __repr__(&self) -> String {
        format!("Domain(dim={}, volume={:?})", self.inner.dim(), self.inner.volume())
    }
}

/// An estimate or upper enclosure of a ball fraction.
#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct Fraction {
    value: f64,
    certified: bool,
    error_radius: f64,
}

impl From<geo::FractionEstimate> for Fraction {
    fn from(f: geo::FractionEstimate) -> Self {
        Self { value: f.value, certified: f.mode == FractionMode::UpperEnclosure, error_radius: f.error_radius }
    }
}

#[pymethods]
impl Fraction {
    fn __repr__(&self) -> String {
        format!("Fraction(value={}, certified={}, error_radius={})", self.value, self.certified, self.error_radius)
    }
}

/// A domain in the Heisenberg group `H^N`, in coordinates `(z, t)`.
#[pyclass(frozen, name = "HDomain")]
struct PyHDomain {
    inner: hb::HDomain,
}

#[pymethods]
impl PyHDomain {
    /// `n` defaults to the `N` field of a domain loaded from JSON.
    #[new]
    #[pyo3(signature = (domain, n=None))]
    fn new(domain: &PyDomain, n: Option<usize>) -> PyResult<Self> {
        let n = n.or(domain.n).ok_or_else(|| PyValueError::new_err("N is required"))?;
        Ok(Self { inner: hb::HDomain::new(domain.inner.clone(), n).py()? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn contains(&self, p: Vec<f64>) -> PyResult<bool> {
        Ok(self.inner.contains(&HPoint::from_coords(&p).py()?))
    }

    /// Distance from `p` to the boundary along the horizontal direction `w`.
    fn horizontal_ray_distance(&self, p: Vec<f64>, w: Vec<f64>) -> PyResult<f64> {
        hb::horizontal_ray_distance(&self.inner, &HPoint::from_coords(&p).py()?, &w).py()
    }

    #[pyo3(signature = (p, r, samples=20000, seed=geo::DEFAULT_SEED))]
    fn hyperplane_ball_fraction(&self, p: Vec<f64>, r: f64, samples: usize, seed: u64) -> PyResult<Fraction> {
        let p = HPoint::from_coords(&p).py()?;
        hb::hyperplane_ball_fraction(&self.inner, &p, r, Budget::Samples { count: samples, seed, stream: 0 })
            .py()
            .map(Fraction::from)
    }

    #[pyo3(signature = (r, h, mode="certify", samples=4000, cell=None, seed=geo::DEFAULT_SEED))]
    fn sup_hyperplane_fraction(
        &self,
        r: f64,
        h: f64,
        mode: &str,
        samples: usize,
        cell: Option<f64>,
        seed: u64,
    ) -> PyResult<Fraction> {
        let sup = sup_config(h, mode, samples, cell, seed)?;
        hb::sup_hyperplane_fraction(&self.inner, r, &sup).py().map(Fraction::from)
    }
}

/// One evaluated lower bound.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct BoundReport {
    inner: bd::BoundReport,
}

impl From<&bd::BoundReport> for BoundReport {
    fn from(b: &bd::BoundReport) -> Self {
        Self { inner: b.clone() }
    }
}

#[pymethods]
impl BoundReport {
    #[getter]
    fn bound_id(&self) -> String {
        self.inner.bound_id.to_string()
    }

    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn valid(&self) -> bool {
        self.inner.valid
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.inner.degenerate
    }

    #[getter]
    fn r(&self) -> Option<f64> {
        self.inner.inputs.r
    }

    #[getter]
    fn fraction(&self) -> Option<Fraction> {
        self.inner.fraction.map(Fraction::from)
    }

    #[getter]
    fn notes(&self) -> Vec<String> {
        self.inner.notes.clone()
    }

    fn __repr__(&self) -> String {
        let b = &self.inner;
        format!("BoundReport({}, r={:?}, value={}, valid={})", b.bound_id, b.inputs.r, b.value, b.valid)
    }
}

fn problem(kind: &str, sigma: Option<f64>, m: usize) -> PyResult<Problem> {
    match kind {
        "dirichlet" => Ok(Problem::Dirichlet),
        "robin" => Ok(Problem::Robin { sigma: sigma.ok_or_else(|| PyValueError::new_err("robin needs sigma"))? }),
        "poly" if m == 1 => Ok(Problem::Dirichlet),
        "poly" => Ok(Problem::Polyharmonic { m }),
        other => Err(PyValueError::new_err(format!("unknown kind {other:?}"))),
    }
}

/// Every `r`-dependent bound for `kind` ("dirichlet", "robin", "poly") at each radius.
#[pyfunction]
#[pyo3(signature = (domain, kind, radii, h, sigma=None, m=1, mode="certify", samples=4000, cell=None, seed=geo::DEFAULT_SEED))]
#[allow(clippy::too_many_arguments)]
fn sweep_bounds(
    domain: &PyDomain,
    kind: &str,
    radii: Vec<f64>,
    h: f64,
    sigma: Option<f64>,
    m: usize,
    mode: &str,
    samples: usize,
    cell: Option<f64>,
    seed: u64,
) -> PyResult<Vec<BoundReport>> {
    let sup = sup_config(h, mode, samples, cell, seed)?;
    let reps = bd::sweep_bounds(&domain.inner, problem(kind, sigma, m)?, &radii, &sup).py()?;
    Ok(reps.iter().map(BoundReport::from).collect())
}

#[pyfunction]
#[pyo3(signature = (hdomain, radii, h, mode="certify", samples=4000, cell=None, seed=geo::DEFAULT_SEED))]
fn sweep_heisenberg(
    hdomain: &PyHDomain,
    radii: Vec<f64>,
    h: f64,
    mode: &str,
    samples: usize,
    cell: Option<f64>,
    seed: u64,
) -> PyResult<Vec<BoundReport>> {
    let sup = sup_config(h, mode, samples, cell, seed)?;
    let reps = bd::sweep_heisenberg(&hdomain.inner, &radii, &sup).py()?;
    Ok(reps.iter().map(BoundReport::from).collect())
}

/// Volume, Hersch and (with `sigma`) the Robin inradius bounds. Convexity
/// flags default to what the domain asserts.
#[pyfunction]
#[pyo3(signature = (domain, h, sigma=None, convex=None, mean_convex=None))]
fn baseline_bounds(
    domain: &PyDomain,
    h: f64,
    sigma: Option<f64>,
    convex: Option<bool>,
    mean_convex: Option<bool>,
) -> PyResult<Vec<BoundReport>> {
    let inr = geo::inradius(&domain.inner, h).py()?;
    let inp = bd::BaselineInputs::from_domain(
        &domain.inner,
        inr,
        convex.unwrap_or(domain.convex),
        mean_convex.unwrap_or(domain.mean_convex),
        sigma,
    );
    Ok(bd::baseline_bounds(&inp).py()?.iter().map(BoundReport::from).collect())
}

/// Robin bound for a given fraction value (treated as certified).
#[pyfunction]
fn robin_bound(d: usize, sigma: f64, r: f64, psi: f64) -> PyResult<f64> {
    let f = geo::FractionEstimate::exact(psi).py()?;
    Ok(bd::robin_bound(d, sigma, r, &f).py()?.value)
}

/// `{bound_id: value}` of the polyharmonic bounds at a given fraction.
#[pyfunction]
fn polyharmonic_bounds(d: usize, m: usize, r: f64, psi: f64) -> PyResult<Vec<(String, f64)>> {
    let f = geo::FractionEstimate::exact(psi).py()?;
    Ok(bd::polyharmonic_bounds(d, m, r, &f).py()?.iter().map(|b| (b.bound_id.to_string(), b.value)).collect())
}

#[pyfunction]
fn heisenberg_bounds(n: usize, r: f64, psi: f64) -> PyResult<Vec<(String, f64)>> {
    let f = geo::FractionEstimate::exact(psi).py()?;
    Ok(bd::heisenberg_bounds(n, r, &f).py()?.iter().map(|b| (b.bound_id.to_string(), b.value)).collect())
}

/// Largest report with the given id, ties to the smaller radius.
#[pyfunction]
fn best_bound(reports: Vec<BoundReport>, bound_id: &str) -> PyResult<BoundReport> {
    let id: BoundId = bound_id.parse().map_err(|_| PyValueError::new_err(format!("unknown bound id {bound_id:?}")))?;
    let all: Vec<bd::BoundReport> = reports.into_iter().map(|r| r.inner).collect();
    Ok(BoundReport { inner: bd::best_bound(&all, id).py()? })
}

#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct EigenResult {
    value: f64,
    residual: f64,
    h: f64,
    iterations: usize,
    unknowns: usize,
    extrapolated: Option<f64>,
}

impl From<es::EigenResult> for EigenResult {
    fn from(e: es::EigenResult) -> Self {
        Self {
            value: e.value,
            residual: e.residual,
            h: e.h,
            iterations: e.iterations,
            unknowns: e.unknowns,
            extrapolated: e.extrapolated,
        }
    }
}

#[pymethods]
impl EigenResult {
    fn __repr__(&self) -> String {
        format!("EigenResult(value={}, h={}, extrapolated={:?})", self.value, self.h, self.extrapolated)
    }
}

/// Finite-difference smallest eigenvalue. `kind` is "dirichlet", "robin"
/// (needs `sigma`) or "bilaplace". With `richardson`, also solves at `2h`.
#[pyfunction]
#[pyo3(signature = (domain, kind, h, sigma=None, richardson=false, tol=1e-9))]
fn smallest_eigenvalue(
    domain: &PyDomain,
    kind: &str,
    h: f64,
    sigma: Option<f64>,
    richardson: bool,
    tol: f64,
) -> PyResult<EigenResult> {
    let kind = match kind {
        "dirichlet" => OperatorKind::DirichletLaplace,
        "robin" => OperatorKind::RobinLaplace { sigma: sigma.ok_or_else(|| PyValueError::new_err("robin needs sigma"))? },
        "bilaplace" => OperatorKind::BilaplaceClamped,
        other => return Err(PyValueError::new_err(format!("unknown operator {other:?}"))),
    };
    let opts = SolverOptions { tol, ..Default::default() };
    let res = if richardson {
        es::extrapolated_eigenvalue(&domain.inner, kind, 2.0 * h, &opts)
    } else {
        es::GridOperator::assemble(&domain.inner, kind, h).and_then(|op| es::smallest_eigenvalue(&op, &opts))
    };
    res.py().map(EigenResult::from)
}

/// Sub-Laplacian smallest eigenvalue on a box-shaped Heisenberg domain.
#[pyfunction]
#[pyo3(signature = (hdomain, h, tol=1e-9))]
fn heisenberg_eigenvalue(hdomain: &PyHDomain, h: f64, tol: f64) -> PyResult<EigenResult> {
    let opts = SolverOptions { tol, ..Default::default() };
    let op = es::GridOperator::heisenberg(&hdomain.inner, h).py()?;
    es::smallest_eigenvalue(&op, &opts).py().map(EigenResult::from)
}

#[pyfunction]
fn robin_reference_box(sides: Vec<f64>, sigma: f64) -> PyResult<f64> {
    es::robin_reference_box(&sides, sigma).py()
}

#[pyfunction]
fn unit_ball_dirichlet(d: usize) -> PyResult<f64> {
    bd::unit_ball_dirichlet(d).py()
}

#[pyfunction]
fn bessel_first_zero(nu: f64) -> PyResult<f64> {
    bd::bessel_first_zero(nu).py()
}

#[pyfunction]
#[pyo3(signature = (alpha, d, r, psi, ell=0.0))]
fn lemma_rhs(alpha: f64, d: usize, r: f64, psi: f64, ell: f64) -> PyResult<(f64, f64, f64)> {
    let p = LemmaParams::new(alpha, d, r, ell).py()?;
    Ok((lemma::lemma_rhs1(&p, psi).py()?, lemma::lemma_rhs2(&p, psi).py()?, lemma::lemma_rhs3(&p, psi).py()?))
}

/// `((1 - x)_+, β^β/(β+1)^{β+1} x^{-β})`.
#[pyfunction]
fn elementary_bound(x: f64, beta: f64) -> PyResult<(f64, f64)> {
    lemma::elementary_bound(x, beta).py()
}

/// `C_{m,d}` as an exact fraction `(numerator, denominator)`.
#[pyfunction]
fn owen_constant(m: usize, d: usize) -> PyResult<(u128, u128)> {
    lemma::owen_constant_exact(m, d).py()
}

#[pyfunction]
fn polyharmonic_constant(m: usize, d: usize) -> PyResult<f64> {
    lemma::polyharmonic_constant(m, d).py()
}

/// Randomized checks; returns `(name, trials, failures, worst_margin)` rows.
#[pyfunction]
#[pyo3(signature = (trials=10_000, seed=geo::DEFAULT_SEED))]
fn oracle_suite(trials: usize, seed: u64) -> PyResult<Vec<(String, usize, usize, f64)>> {
    let out = lemma::oracle_suite(&lemma::OracleConfig::new(trials, seed)).py()?;
    Ok(out.into_iter().map(|o| (o.name, o.trials, o.failures, o.worst_margin)).collect())
}

#[pymodule]
fn eigenbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyHDomain>()?;
    m.add_class::<Fraction>()?;
    m.add_class::<BoundReport>()?;
    m.add_class::<EigenResult>()?;
    m.add_function(wrap_pyfunction!(sweep_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_heisenberg, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(robin_bound, m)?)?;
    m.add_function(wrap_pyfunction!(polyharmonic_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(heisenberg_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(best_bound, m)?)?;
    m.add_function(wrap_pyfunction!(smallest_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(heisenberg_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(robin_reference_box, m)?)?;
    m.add_function(wrap_pyfunction!(unit_ball_dirichlet, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_first_zero, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(elementary_bound, m)?)?;
    m.add_function(wrap_pyfunction!(owen_constant, m)?)?;
    m.add_function(wrap_pyfunction!(polyharmonic_constant, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_suite, m)?)?;
    m.add("DEFAULT_SEED", geo::DEFAULT_SEED)?;
    Ok(())
}
