//! Python bindings. Rationals cross the boundary as strings (`"3/7"`,
//! `"0.25"`, or anything whose `str()` is such, e.g. `Fraction`); reports
//! come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use dioexp::error::Error;
use dioexp::exponents::{self, SearchOptions};
use dioexp::exterior::{IndexSet, Multivector as CoreMultivector};
use dioexp::flows::{self, ScaleParam};
use dioexp::lattices::{self, RealLattice};
use dioexp::nondiv;
use dioexp::rational::{format_rational, parse_rational, Q};
use dioexp::records::Budget;
use dioexp::subspaces::{self, AffineSubspaceParam};

fn err(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded(_) | Error::TimeBudgetExhausted | Error::Overflow(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_q(x: &Bound<'_, PyAny>) -> PyResult<Q> {
    let s: String = x.str()?.extract()?;
    parse_rational(s.trim()).map_err(PyValueError::new_err)
}

fn to_q_vec(xs: &Bound<'_, PyAny>) -> PyResult<Vec<Q>> {
    xs.try_iter()?.map(|x| to_q(&x?)).collect()
}

fn to_q_mat(rows: &Bound<'_, PyAny>) -> PyResult<Vec<Vec<Q>>> {
    rows.try_iter()?.map(|r| to_q_vec(&r?)).collect()
}

/// Serializable value as a Python object (through JSON).
fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn opts(budget_nodes: Option<u64>) -> SearchOptions {
    SearchOptions { start_height: 1, budget: Budget { max_nodes: budget_nodes, deadline: None } }
}

/// Element of `Λ^degree(ℝ^dim)` with exact coefficients.
#[pyclass(name = "Multivector", eq, frozen, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyMultivector {
    inner: CoreMultivector,
}

#[pymethods]
impl PyMultivector {
    /// `terms` maps index tuples to coefficients.
    #[new]
    fn new(dim: usize, degree: usize, terms: Vec<(Vec<usize>, Bound<'_, PyAny>)>) -> PyResult<Self> {
        let mut m = CoreMultivector::zero(dim, degree);
        for (idx, c) in terms {
            if idx.len() != degree || idx.iter().any(|&i| i >= dim) {
                return Err(PyValueError::new_err(format!("bad index set {idx:?}")));
            }
            let (set, sign) = IndexSet::sorted_with_sign(&idx)
                .ok_or_else(|| PyValueError::new_err(format!("repeated index in {idx:?}")))?;
            let c = to_q(&c)?;
            m.add_term(set, if sign < 0 { -c } else { c });
        }
        Ok(PyMultivector { inner: m })
    }

    /// Parses the `0,1:3` line format.
    #[staticmethod]
    fn parse(dim: usize, degree: usize, text: &str) -> PyResult<Self> {
        Ok(PyMultivector { inner: CoreMultivector::parse_text(dim, degree, text).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    /// `{index tuple: "p/q"}`.
    fn terms(&self) -> Vec<(Vec<usize>, String)> {
        self.inner.terms().map(|(s, c)| (s.indices().collect(), format_rational(c))).collect()
    }

    fn wedge(&self, other: &PyMultivector) -> PyResult<Self> {
        Ok(PyMultivector { inner: self.inner.wedge(&other.inner).map_err(err)? })
    }

    fn __add__(&self, other: &PyMultivector) -> PyResult<Self> {
        Ok(PyMultivector { inner: self.inner.add(&other.inner).map_err(err)? })
    }

    fn __sub__(&self, other: &PyMultivector) -> PyResult<Self> {
        Ok(PyMultivector { inner: self.inner.sub(&other.inner).map_err(err)? })
    }

    fn scale(&self, x: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyMultivector { inner: self.inner.scale(&to_q(x)?) })
    }

    /// Components `c(w)_i`, one per basis vector.
    fn contract(&self) -> PyResult<Vec<PyMultivector>> {
        Ok(self.inner.contract().map_err(err)?.components.into_iter().map(|inner| PyMultivector { inner }).collect())
    }

    /// Part with no index 0.
    fn project_v0(&self) -> Self {
        PyMultivector { inner: self.inner.project_v0() }
    }

    fn sup_norm(&self) -> String {
        format_rational(&self.inner.sup_norm())
    }

    fn is_decomposable(&self) -> bool {
        self.inner.is_decomposable()
    }

    /// HNF basis of the primitive subgroup with this Plücker vector, up to
    /// the content of `w`.
    fn subgroup(&self) -> PyResult<Vec<Vec<String>>> {
        let b = lattices::subgroup_from_plucker(&self.inner).map_err(err)?;
        Ok(b.rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect())
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Multivector({}, {}, {:?})", self.inner.dim(), self.inner.degree(), self.terms())
    }
}

/// Affine subspace `{(x, x̃A)}` given by its `(s+1) × (n−s)` matrix.
#[pyclass(name = "AffineSubspace", frozen)]
struct PyAffineSubspace {
    inner: AffineSubspaceParam,
}

#[pymethods]
impl PyAffineSubspace {
    #[new]
    fn new(a: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyAffineSubspace { inner: AffineSubspaceParam::new(to_q_mat(a)?).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn s(&self) -> usize {
        self.inner.s()
    }

    fn alpha(&self) -> String {
        format_rational(&self.inner.alpha())
    }

    /// `R_A c(w)` values and their sup.
    fn r_values<'py>(&self, py: Python<'py>, w: &PyMultivector) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &subspaces::r_contract(&self.inner, &w.inner).map_err(err)?)
    }

    fn extended_norm(&self, w: &PyMultivector) -> PyResult<String> {
        Ok(format_rational(&subspaces::extended_norm(&self.inner, &w.inner).map_err(err)?))
    }

    #[pyo3(signature = (j, height, budget_nodes=None))]
    fn omega_j<'py>(&self, py: Python<'py>, j: usize, height: u64, budget_nodes: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &subspaces::omega_j_records(&self.inner, j, height, &opts(budget_nodes)).map_err(err)?)
    }

    #[pyo3(signature = (height, orders=None, budget_nodes=None))]
    fn exponent<'py>(
        &self,
        py: Python<'py>,
        height: u64,
        orders: Option<Vec<usize>>,
        budget_nodes: Option<u64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let rep = subspaces::subspace_exponent(&self.inner, height, orders.as_deref(), false, &opts(budget_nodes))
            .map_err(err)?;
        to_py(py, &rep)
    }

    /// Order-two records from the 2×2 closed form (six-value criterion).
    fn omega2_closed_form<'py>(&self, py: Python<'py>, height: u64) -> PyResult<Bound<'py, PyAny>> {
        let c = subspaces::omega2_closed_form_records(self.inner.a(), height, subspaces::TwoByTwoCriterion::Six, &opts(None))
            .map_err(err)?;
        to_py(py, &c)
    }

    fn equality_flags<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &subspaces::equality_flags(&self.inner))
    }
}

/// Records of `−log‖Aq + p‖ / log‖q‖` up to `height`.
#[pyfunction]
#[pyo3(signature = (a, height, budget_nodes=None))]
fn omega_records<'py>(py: Python<'py>, a: &Bound<'py, PyAny>, height: u64, budget_nodes: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &exponents::omega_records(&to_q_mat(a)?, height, &opts(budget_nodes)).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (m=1, n=1, target=None, depth=4))]
fn build_liouville<'py>(
    py: Python<'py>,
    m: usize,
    n: usize,
    target: Option<Bound<'py, PyAny>>,
    depth: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let target = target.map(|t| to_q(&t)).transpose()?;
    to_py(py, &exponents::build_liouville(m, n, target, depth).map_err(err)?)
}

/// `(coefficients, norm²)` of a shortest nonzero vector of the lattice
/// spanned by the rows.
#[pyfunction]
#[pyo3(signature = (basis, budget_nodes=1_000_000))]
fn shortest_vector(basis: &Bound<'_, PyAny>, budget_nodes: u64) -> PyResult<(Vec<String>, String)> {
    let sv = RealLattice::new(to_q_mat(basis)?).map_err(err)?.shortest_vector(budget_nodes).map_err(err)?;
    Ok((sv.coeffs.iter().map(|x| x.to_string()).collect(), format_rational(&sv.norm_sq)))
}

/// Rows of `g_t u_y ℤ^{n+1}` at scale `λ`.
#[pyfunction]
fn flowed_lattice(lam: &Bound<'_, PyAny>, y: &Bound<'_, PyAny>) -> PyResult<Vec<Vec<String>>> {
    let y = to_q_vec(y)?;
    let p = ScaleParam::new(to_q(lam)?, y.len()).map_err(err)?;
    let l = flows::flowed_lattice(&p, &y).map_err(err)?;
    Ok(l.basis().iter().map(|r| r.iter().map(format_rational).collect()).collect())
}

/// Excursion trace on a geometric λ grid plus the γ estimate.
#[pyfunction]
#[pyo3(signature = (y, lambda_max, lambda_start="2", ratio="2"))]
fn excursion<'py>(
    py: Python<'py>,
    y: &Bound<'py, PyAny>,
    lambda_max: &Bound<'py, PyAny>,
    lambda_start: &str,
    ratio: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let y = to_q_vec(y)?;
    let parse = |s: &str| parse_rational(s).map_err(PyValueError::new_err);
    let grid = flows::geometric_grid(&parse(lambda_start)?, &parse(ratio)?, &to_q(lambda_max)?).map_err(err)?;
    let trace = flows::excursion_trace(&y, &grid, None, lattices::DEFAULT_NODE_BUDGET).map_err(err)?;
    let gamma = flows::gamma_estimate(&trace);
    to_py(py, &serde_json::json!({ "trace": trace, "gamma": gamma }))
}

/// ε-marking of a weighted poset given by weights and `(a, b)` pairs `a < b`.
#[pyfunction]
fn is_marked(eta: Vec<f64>, relations: Vec<(usize, usize)>, psi: Vec<f64>, eps: f64) -> PyResult<(bool, Vec<usize>)> {
    let poset = nondiv::WeightedPoset::new(eta, &relations).map_err(err)?;
    let r = nondiv::is_marked(&poset, &psi, eps).map_err(err)?;
    Ok((r.marked, r.flag))
}

#[pyfunction]
#[pyo3(signature = (k, grid, rho, eps, lam="4", budget_nodes=1_000_000))]
fn marking_check<'py>(
    py: Python<'py>,
    k: usize,
    grid: usize,
    rho: &Bound<'py, PyAny>,
    eps: &Bound<'py, PyAny>,
    lam: &str,
    budget_nodes: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = nondiv::MarkingConfig {
        k,
        lambda: parse_rational(lam).map_err(PyValueError::new_err)?,
        grid_per_axis: grid,
        rho: to_q(rho)?,
        eps: to_q_vec(eps)?,
        budget: budget_nodes,
    };
    to_py(py, &nondiv::marking_inclusion_check(&cfg).map_err(err)?)
}

/// Monte-Carlo escape fractions of `g_t u_{(x, x², …, x^n)}` over `[0, 1]`
/// against the nondivergence bound.
#[pyfunction]
#[pyo3(signature = (n, t, eps, samples=100_000, seed=0, c=2.0 * std::f64::consts::SQRT_2, alpha=1.0))]
fn theorem22_verify<'py>(
    py: Python<'py>,
    n: usize,
    t: f64,
    eps: Vec<f64>,
    samples: u64,
    seed: u64,
    c: f64,
    alpha: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = nondiv::Theorem22Config {
        map: nondiv::PolyMap::moment_curve(n),
        center: vec![0.5],
        radius: 0.5,
        measure: nondiv::BaseMeasure::Lebesgue,
        t,
        eps,
        samples,
        seed,
        goodness: nondiv::GoodnessParams::new(c, alpha).map_err(err)?,
        space: nondiv::SpaceParams::lebesgue(1, None).map_err(err)?,
        rho_height: 8,
        rho_grid: 64,
    };
    to_py(py, &nondiv::theorem22_verify(&cfg).map_err(err)?)
}

#[pymodule]
fn dioexp_native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMultivector>()?;
    m.add_class::<PyAffineSubspace>()?;
    m.add_function(wrap_pyfunction!(omega_records, m)?)?;
    m.add_function(wrap_pyfunction!(build_liouville, m)?)?;
    m.add_function(wrap_pyfunction!(shortest_vector, m)?)?;
    m.add_function(wrap_pyfunction!(flowed_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(excursion, m)?)?;
    m.add_function(wrap_pyfunction!(is_marked, m)?)?;
    m.add_function(wrap_pyfunction!(marking_check, m)?)?;
    m.add_function(wrap_pyfunction!(theorem22_verify, m)?)?;
    Ok(())
}
