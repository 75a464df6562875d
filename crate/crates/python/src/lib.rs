//! Python bindings. Exact scalars cross the boundary as strings in the
//! `a/b+c/d*i` form so nothing is rounded.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use hecke3::cache::Cache;
use hecke3::heckeops::{self, HeckeElement, HeckeOptions};
use hecke3::matrix::parse_rat;
use hecke3::projspace::enumerate;
use hecke3::relspace::{build_relations, solve_model, ModelBasis};
use hecke3::repaudit::{self, PsiConvention};
use hecke3::symreduce::{pair_rational, ModularSymbol};
use hecke3::{dyadic, GaussRat, Level, PointTable};

fn err(e: hecke3::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn level(n: u64) -> PyResult<Level> {
    Level::new(n).map_err(err)
}

/// The finite relation model at one level: its point table and an exact basis.
#[pyclass(frozen)]
struct Model {
    table: PointTable,
    basis: ModelBasis,
}

#[pymethods]
impl Model {
    /// Builds (or loads from `$HECKE3_CACHE`) the model at level `n`.
    #[new]
    fn new(n: u64) -> PyResult<Self> {
        let (table, basis, _) = Cache::from_env().basis(level(n)?).map_err(err)?;
        Ok(Model { table, basis })
    }

    #[getter]
    fn level(&self) -> u64 {
        self.basis.level.modulus()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.basis.dim
    }

    #[getter]
    fn points(&self) -> Vec<(u64, u64, u64)> {
        self.table.points().iter().map(|p| (p.x, p.y, p.z)).collect()
    }

    fn content_hash(&self) -> String {
        self.basis.content_hash()
    }

    /// Basis vector `k` as exact rational strings.
    fn vector(&self, k: usize) -> PyResult<Vec<String>> {
        let v = self.basis.vectors.get(k).ok_or_else(|| PyValueError::new_err(format!("no basis vector {k}")))?;
        Ok(v.iter().map(|x| x.to_string()).collect())
    }

    /// Pairing of basis vector `k` with the symbol whose rows are `rows`.
    fn pair(&self, k: usize, rows: [[i64; 3]; 3]) -> PyResult<String> {
        let v = self.basis.vectors.get(k).ok_or_else(|| PyValueError::new_err(format!("no basis vector {k}")))?;
        Ok(pair_rational(v, &ModularSymbol::from_rows(rows), &self.table).map_err(err)?.to_string())
    }

    /// Matrix of the Hecke operator of `alpha` (`"a,b,c;d,e,f;g,h,i"`) on the basis.
    #[pyo3(signature = (alpha, workers=1))]
    fn hecke_matrix(&self, py: Python<'_>, alpha: &str, workers: usize) -> PyResult<Vec<Vec<String>>> {
        let alpha = HeckeElement::parse(alpha).map_err(err)?;
        let opts = HeckeOptions {
            workers: workers.max(1),
            ..HeckeOptions::default()
        };
        let m = py
            .detach(|| Cache::from_env().hecke_matrix(&self.basis, &self.table, &alpha, &opts))
            .map_err(err)?
            .0;
        Ok(m.to_rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect())
    }

    /// Eigenvalues of the reported operators on the anchor eigenvector, as
    /// `(label, alpha, cosets, eigenvalue)` tuples.
    fn eigenreport(&self, py: Python<'_>) -> PyResult<Vec<(String, String, usize, String)>> {
        let r = py
            .detach(|| heckeops::eigenreport(&self.basis, &self.table, &HeckeOptions::default()))
            .map_err(err)?;
        Ok(r.to_lines().into_iter().map(|l| (l.label, l.alpha, l.cosets, l.eigenvalue)).collect())
    }

    fn __repr__(&self) -> String {
        format!("Model(level={}, dim={})", self.basis.level.modulus(), self.basis.dim)
    }
}

/// `|P²(Z/n)|`.
#[pyfunction]
fn point_count(n: u64) -> PyResult<usize> {
    Ok(enumerate(level(n)?).len())
}

/// Model dimension at level `n`, computed without the cache.
#[pyfunction]
fn model_dimension(py: Python<'_>, n: u64) -> PyResult<usize> {
    let table = enumerate(level(n)?);
    py.detach(|| Ok(solve_model(&build_relations(&table)?).dim)).map_err(err)
}

/// Double-coset representatives of `Γ₀(n) α Γ₀(n)`.
#[pyfunction]
fn cosets(py: Python<'_>, n: u64, alpha: &str) -> PyResult<Vec<String>> {
    let alpha = HeckeElement::parse(alpha).map_err(err)?;
    let lv = level(n)?;
    let d = py.detach(|| Cache::from_env().decomposition(&alpha, lv)).map_err(err)?.0;
    Ok(d.reps.iter().map(|r| r.canonical_string()).collect())
}

/// `ψ(x)` as `(numerator, denominator)` of its angle over `2π`.
#[pyfunction]
fn psi(x: &str) -> PyResult<(u128, u128)> {
    Ok(dyadic::psi_rat(&parse_rat(x).map_err(err)?).map_err(err)?.exponent())
}

/// Normal form `g ≡ left·rep·right (mod 2^7)`; returns `(rep, left, right)`.
#[pyfunction]
fn normal_form(g: [[i64; 3]; 3]) -> PyResult<(String, [[i64; 3]; 3], [[i64; 3]; 3])> {
    let w = repaudit::pqk_normal_form(&g).map_err(err)?;
    Ok((w.rep.to_string(), w.left, w.right))
}

/// The character chain from the seven reported eigenvalues.
#[pyfunction]
#[pyo3(signature = (eigenvalues, conjugate=false))]
fn lambda_chain(eigenvalues: Vec<String>, conjugate: bool) -> PyResult<Vec<(String, String)>> {
    let inputs = eigenvalues
        .iter()
        .map(|s| s.parse::<GaussRat>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let conv = if conjugate { PsiConvention::Conjugate } else { PsiConvention::Standard };
    let c = repaudit::lambda_chain_from(&inputs, conv).map_err(err)?;
    Ok(vec![
        ("chi2".into(), c.chi2.to_string()),
        ("D".into(), c.d.to_string()),
        ("lambda_u".into(), c.lambda_u.to_string()),
        ("lambda_w".into(), c.lambda_w.to_string()),
    ])
}

/// Runs the normal-form and character audits; `(name, passed, count)` per check.
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn verify_rep(py: Python<'_>, seed: u64) -> PyResult<Vec<(String, bool, usize)>> {
    let mut checks = py.detach(|| repaudit::run_rep_suite(seed)).map_err(err)?;
    checks.extend(repaudit::run_dyadic_suite(seed).map_err(err)?);
    Ok(checks.into_iter().map(|c| (c.name, c.passed, c.count)).collect())
}

#[pymodule]
#[pyo3(name = "hecke3")]
fn hecke3_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(point_count, m)?)?;
    m.add_function(wrap_pyfunction!(model_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(cosets, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_chain, m)?)?;
    m.add_function(wrap_pyfunction!(verify_rep, m)?)?;
    m.add("FORMAT_VERSION", hecke3::FORMAT_VERSION)?;
    Ok(())
}
