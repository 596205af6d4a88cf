//! Python bindings. Rationals cross the boundary as exact decimal
//! strings like "3/4"; feed them to fractions.Fraction on the Python
//! side when arithmetic is needed.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use std::collections::BTreeMap;

use relgw::cycleclasses::c_g;
use relgw::givental::{anomaly, bracket_matches, build_l, check_symplectic};
use relgw::graphs::{enumerate, virtual_dim, TopType};
use relgw::insertions::{self, InsClass};
use relgw::json::{graph_from_json, graph_to_json, operator_to_json, poly_to_json, table_to_json};
use relgw::quantum::{
    quantum_product_small, solve_structure_constants, three_point_small, verify_against_oracle,
    EntryStatus,
};
use relgw::rat::rat_str;

fn err(e: relgw::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Ambient dimension and contact-order window shared by a computation.
#[pyclass(frozen)]
struct PairContext {
    inner: insertions::PairContext,
}

#[pymethods]
impl PairContext {
    #[new]
    fn new(n: usize, window: i64) -> PyResult<Self> {
        Ok(PairContext { inner: insertions::PairContext::new(n, window).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn window(&self) -> i64 {
        self.inner.window
    }

    fn basis_indices(&self) -> Vec<(i64, usize)> {
        self.inner.basis_indices()
    }

    fn basis(&self, i: i64, k: usize) -> PyResult<Insertion> {
        Ok(Insertion { inner: InsClass::basis_class(self.inner, i, k).map_err(err)? })
    }

    fn parse(&self, text: &str) -> PyResult<Insertion> {
        Ok(Insertion { inner: insertions::parse(self.inner, text).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("PairContext(n={}, window={})", self.inner.n, self.inner.window)
    }
}

/// Element of the windowed ring of insertions.
#[pyclass(frozen)]
struct Insertion {
    inner: InsClass,
}

#[pymethods]
impl Insertion {
    fn render(&self) -> String {
        self.inner.render()
    }

    fn __repr__(&self) -> String {
        self.inner.render()
    }

    fn __eq__(&self, other: &Insertion) -> bool {
        self.inner == other.inner
    }

    fn __mul__(&self, other: &Insertion) -> PyResult<Insertion> {
        Ok(Insertion { inner: self.inner.product(&other.inner).map_err(err)? })
    }

    fn __add__(&self, other: &Insertion) -> PyResult<Insertion> {
        Ok(Insertion { inner: self.inner.add(&other.inner).map_err(err)? })
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn pairing(&self, other: &Insertion) -> PyResult<String> {
        Ok(rat_str(&self.inner.pairing(&other.inner).map_err(err)?))
    }

    fn bidegree(&self) -> PyResult<(i64, String)> {
        let (d1, d2) = self.inner.bidegree().map_err(err)?;
        Ok((d1, rat_str(&d2)))
    }

    #[staticmethod]
    fn trilinear(a: &Insertion, b: &Insertion, c: &Insertion) -> PyResult<String> {
        Ok(rat_str(&InsClass::trilinear_a(&a.inner, &b.inner, &c.inner).map_err(err)?))
    }
}

/// Product expansion in powers of q with insertion coefficients.
#[pyclass(frozen)]
struct ProductSeries {
    inner: relgw::quantum::QSeriesClass,
}

#[pymethods]
impl ProductSeries {
    fn render(&self) -> String {
        self.inner.render()
    }

    fn __repr__(&self) -> String {
        self.inner.render()
    }

    fn coefficient(&self, m: u32) -> Insertion {
        Insertion { inner: self.inner.coefficient(m) }
    }
}

/// Structure constants of the windowed quantum product, coefficient
/// by coefficient in q.
#[pyclass(frozen)]
struct StructureTable {
    inner: relgw::quantum::StructureTable,
}

#[pymethods]
impl StructureTable {
    /// Status and coefficients at q^m of the product of two basis
    /// labels, or None when the pair is not tabulated. Status is
    /// "determined" or "undetermined".
    fn entry(
        &self,
        a: (i64, usize),
        b: (i64, usize),
        m: u32,
    ) -> Option<(String, BTreeMap<(i64, usize), String>)> {
        self.inner.entry(a, b, m).map(|e| {
            let status = match e.status {
                EntryStatus::Determined => "determined",
                EntryStatus::Undetermined => "undetermined",
            };
            let coeffs = e.coeffs.iter().map(|(k, v)| (*k, rat_str(v))).collect();
            (status.to_string(), coeffs)
        })
    }

    /// Mismatch descriptions against the independent oracle; empty
    /// means every determined entry agrees.
    fn verify(&self) -> PyResult<Vec<String>> {
        verify_against_oracle(&self.inner).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        let v = table_to_json(&self.inner).map_err(err)?;
        Ok(v.to_string())
    }
}

/// Bipartite localization graph.
#[pyclass(frozen)]
struct Graph {
    inner: relgw::graphs::BipartiteGraph,
}

#[pymethods]
impl Graph {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Graph> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Graph { inner: graph_from_json(&v).map_err(err)? })
    }

    fn to_json(&self) -> String {
        graph_to_json(&self.inner).to_string()
    }

    fn automorphisms(&self) -> u64 {
        self.inner.automorphism_order()
    }

    /// (degree, legs, contact orders in label order).
    fn topological_type(&self) -> PyResult<(i64, usize, Vec<i64>)> {
        let t = self.inner.topological_type().map_err(err)?;
        Ok((t.degree, t.n_legs, t.mu))
    }

    fn obstruction_class(&self) -> PyResult<String> {
        Ok(c_g(&self.inner).map_err(err)?.render())
    }

    fn obstruction_class_json(&self) -> PyResult<String> {
        Ok(poly_to_json(&c_g(&self.inner).map_err(err)?).to_string())
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(zero={}, inf={}, edges={})",
            self.inner.zero.len(),
            self.inner.inf.len(),
            self.inner.edges.len()
        )
    }
}

#[pyfunction]
fn quantum_product(a: &Insertion, b: &Insertion, qmax: u32) -> PyResult<ProductSeries> {
    Ok(ProductSeries { inner: quantum_product_small(&a.inner, &b.inner, qmax).map_err(err)? })
}

#[pyfunction]
fn three_point(degree: u32, a: &Insertion, b: &Insertion, c: &Insertion) -> PyResult<String> {
    Ok(rat_str(&three_point_small(degree, &a.inner, &b.inner, &c.inner).map_err(err)?))
}

#[pyfunction]
fn solve_table(n: usize, window: i64, qmax: u32) -> PyResult<StructureTable> {
    Ok(StructureTable { inner: solve_structure_constants(n, window, qmax).map_err(err)? })
}

#[pyfunction]
fn enumerate_graphs(
    degree: i64,
    legs: usize,
    mu: Vec<i64>,
    n_amb: usize,
) -> PyResult<Vec<Graph>> {
    let top = TopType::new(0, legs, degree, mu).map_err(err)?;
    let graphs = enumerate(&top, n_amb).map_err(err)?;
    Ok(graphs.into_iter().map(|g| Graph { inner: g }).collect())
}

#[pyfunction]
fn virtual_dimension(n_amb: usize, degree: i64, legs: usize, mu: Vec<i64>) -> PyResult<i64> {
    let top = TopType::new(0, legs, degree, mu).map_err(err)?;
    Ok(virtual_dim(&top, n_amb))
}

#[pyfunction]
fn bracket_exact(m: i64, k: i64, ctx: &PairContext, zmin: i64, zmax: i64) -> PyResult<(bool, usize)> {
    bracket_matches(m, k, ctx.inner, zmin, zmax).map_err(err)
}

#[pyfunction]
fn symplectic_residual(m: i64, ctx: &PairContext, zmin: i64, zmax: i64) -> PyResult<String> {
    Ok(rat_str(&check_symplectic(m, ctx.inner, zmin, zmax).map_err(err)?))
}

#[pyfunction]
fn quantized_operator_json(m: i64, ctx: &PairContext, level_max: u32) -> PyResult<String> {
    let op = build_l(m, ctx.inner, level_max).map_err(err)?;
    Ok(operator_to_json(&op).to_string())
}

#[pyfunction]
fn central_anomaly(n: usize, cutoff: i64) -> PyResult<String> {
    Ok(rat_str(&anomaly(n, cutoff).map_err(err)?))
}

#[pymodule]
fn relgw_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PairContext>()?;
    m.add_class::<Insertion>()?;
    m.add_class::<ProductSeries>()?;
    m.add_class::<StructureTable>()?;
    m.add_class::<Graph>()?;
    m.add_function(wrap_pyfunction!(quantum_product, m)?)?;
    m.add_function(wrap_pyfunction!(three_point, m)?)?;
    m.add_function(wrap_pyfunction!(solve_table, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_graphs, m)?)?;
    m.add_function(wrap_pyfunction!(virtual_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(bracket_exact, m)?)?;
    m.add_function(wrap_pyfunction!(symplectic_residual, m)?)?;
    m.add_function(wrap_pyfunction!(quantized_operator_json, m)?)?;
    m.add_function(wrap_pyfunction!(central_anomaly, m)?)?;
    Ok(())
}
