//! Python module `welfare_lab`. Markets cross the boundary as JSON text; bundles as lists of item indices.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use welfare_lab::algorithms::{additive_approx, brute_force_opt, kelso_crawford, welfare_greedy, OrderingPolicy};
use welfare_lab::lp::solve_config_lp;
use welfare_lab::oracle::{exact_demand, utility};
use welfare_lab::properties::{alpha_of, fit_linear_closeness, is_gross_substitutes, is_monotone, is_submodular};
use welfare_lab::repro::{run_repro, ReproConfig};
use welfare_lab::{parse_market, serialize_market, welfare, Allocation, ItemSet, PriceVector};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn items(m: usize, list: &[usize]) -> PyResult<ItemSet> {
    match list.iter().find(|&&j| j >= m) {
        Some(j) => Err(err(format!("item {j} out of range for {m} items"))),
        None => Ok(ItemSet::from_items(list.iter().copied())),
    }
}

fn lists(a: &Allocation) -> Vec<Vec<usize>> {
    a.bundles.iter().map(|b| b.to_vec()).collect()
}

#[pyclass(name = "Market", frozen)]
struct PyMarket {
    inner: welfare_lab::Market,
}

impl PyMarket {
    fn player_index(&self, player: usize) -> PyResult<usize> {
        if player < self.inner.n() {
            Ok(player)
        } else {
            Err(err(format!("player {player} out of range; the market has {}", self.inner.n())))
        }
    }
}

#[pymethods]
impl PyMarket {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<PyMarket> {
        Ok(PyMarket { inner: parse_market(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        serialize_market(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    fn value(&self, player: usize, bundle: Vec<usize>) -> PyResult<f64> {
        let i = self.player_index(player)?;
        Ok(self.inner.value(i, items(self.inner.m, &bundle)?))
    }

    fn welfare(&self, bundles: Vec<Vec<usize>>) -> PyResult<f64> {
        let alloc = Allocation::new(bundles.iter().map(|b| items(self.inner.m, b)).collect::<PyResult<_>>()?);
        welfare(&self.inner, &alloc).map_err(err)
    }

    /// Returns `(bundle, utility)` for a utility-maximizing bundle outside `held`.
    #[pyo3(signature = (player, prices, held = Vec::new()))]
    fn demand(&self, player: usize, prices: Vec<f64>, held: Vec<usize>) -> PyResult<(Vec<usize>, f64)> {
        let i = self.player_index(player)?;
        let p = PriceVector::new(prices).map_err(err)?;
        p.check(self.inner.m).map_err(err)?;
        let held = items(self.inner.m, &held)?;
        let v = self.inner.player(i);
        let d = exact_demand(&v, &p, held);
        Ok((d.to_vec(), utility(&v, &p, d, held)))
    }

    /// Per-player class flags and closeness measures, as JSON.
    fn check(&self) -> PyResult<String> {
        let mut out = Vec::new();
        for i in 0..self.inner.n() {
            let v = self.inner.player(i);
            let fit = if self.inner.m <= 12 { Some(fit_linear_closeness(&v).map_err(err)?.epsilon) } else { None };
            out.push(serde_json::json!({
                "monotone": is_monotone(&v).holds,
                "submodular": is_submodular(&v).holds,
                "gross_substitutes": (self.inner.m <= 16).then(|| is_gross_substitutes(&v).holds),
                "alpha": alpha_of(&v),
                "linear_closeness": fit,
            }));
        }
        Ok(serde_json::Value::Array(out).to_string())
    }

    fn __repr__(&self) -> String {
        format!("Market(n={}, m={})", self.inner.n(), self.inner.m)
    }
}

/// Runs `algo` (`greedy`, `kc`, `additive`, `brute` or `lp`) and returns `(welfare, bundles)`.
/// For `lp` the bundles are empty and the welfare is the fractional optimum.
#[pyfunction]
#[pyo3(signature = (market, algo, delta = 1e-3))]
fn solve(py: Python<'_>, market: &PyMarket, algo: &str, delta: f64) -> PyResult<(f64, Vec<Vec<usize>>)> {
    let mk = &market.inner;
    py.detach(|| {
        let alloc = match algo {
            "greedy" => welfare_greedy(mk),
            "kc" => kelso_crawford(mk, delta, OrderingPolicy::RoundRobin).map_err(err)?.allocation,
            "additive" => additive_approx(mk),
            "brute" => brute_force_opt(mk).map_err(err)?.0,
            "lp" => return Ok((solve_config_lp(mk, 1e-9).map_err(err)?.value, Vec::new())),
            other => return Err(err(format!("unknown algorithm {other:?}"))),
        };
        Ok((welfare(mk, &alloc).map_err(err)?, lists(&alloc)))
    })
}

/// Runs one named reproduction with the default seeds and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (name, deterministic = true))]
fn repro(py: Python<'_>, name: &str, deterministic: bool) -> PyResult<String> {
    let report = py.detach(|| run_repro(name, &ReproConfig::default())).map_err(err)?;
    if deterministic {
        Ok(report.deterministic_json())
    } else {
        serde_json::to_string_pretty(&report).map_err(err)
    }
}

#[pymodule]
#[pyo3(name = "welfare_lab")]
fn welfare_lab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarket>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(repro, m)?)?;
    m.add("REPRO_IDS", welfare_lab::repro::REPRO_IDS.to_vec())?;
    Ok(())
}
