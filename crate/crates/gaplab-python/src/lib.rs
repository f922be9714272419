//! Python bindings for gaplab: run collections in memory, read checkpoints,
//! and evaluate every gap model from Python.
//!
//! Build with `cargo build --release -p gaplab-python`; the smoke test under
//! `python/` shows how to load the resulting shared library.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use gaplab::analysis::{self, Weighting};
use gaplab::collector::Checkpoint;
use gaplab::constants;
use gaplab::models::{
    self, BrunVariant, GmaxVariant, PfVariant, SumSqVariant, TauVariant, TwinVariant,
};
use gaplab::pipeline::{self, RunConfig};
use gaplab::sieve;
use gaplab::store::CheckpointGrid;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// One frozen statistics snapshot.
#[pyclass(name = "Checkpoint", frozen)]
struct PyCheckpoint {
    inner: Checkpoint,
}

#[pymethods]
impl PyCheckpoint {
    /// Threshold of the snapshot.
    #[getter]
    fn x(&self) -> u64 {
        self.inner.x
    }

    /// Number of primes up to x.
    #[getter]
    fn pi(&self) -> u64 {
        self.inner.pi
    }

    #[getter]
    fn last_prime(&self) -> u64 {
        self.inner.state.last_prime
    }

    /// Sum of squared gaps (exact integer).
    #[getter]
    fn sum_sq_gaps(&self) -> u128 {
        self.inner.state.sum_sq_gaps
    }

    /// Compensated sum of 1/p over primes up to x.
    #[getter]
    fn harmonic_sum(&self) -> f64 {
        self.inner.state.harmonic_sum.value()
    }

    /// Gap histogram as {d: tau_d}.
    fn histogram(&self) -> BTreeMap<u64, u64> {
        self.inner.state.histogram.iter().collect()
    }

    /// Count of consecutive pairs at gap d.
    fn tau(&self, d: u64) -> u64 {
        self.inner.tau(d)
    }

    /// Partial Brun sums as {d: sum of 1/p over pair endpoints}.
    fn brun_sums(&self) -> BTreeMap<u64, f64> {
        self.inner
            .state
            .brun
            .iter()
            .map(|(d, k)| (d, k.value()))
            .collect()
    }

    /// Pair counts {d: pi_d} if pair counting was enabled.
    fn pair_counts(&self) -> Option<BTreeMap<u64, u64>> {
        self.inner.state.pairs.as_ref().map(|p| p.iter().collect())
    }

    /// Maximal-gap records as (gap, lower, upper, pi_at_upper) tuples.
    fn max_gap_records(&self) -> Vec<(u64, u64, u64, u64)> {
        self.inner
            .state
            .max_gap_records
            .iter()
            .map(|r| (r.gap, r.lower_prime, r.upper_prime, r.pi_upper))
            .collect()
    }

    /// First occurrences as {d: p_f(d)}.
    fn first_occurrences(&self) -> BTreeMap<u64, u64> {
        self.inner.state.first_occurrences.clone()
    }

    /// Largest gap with both endpoints <= x, or None.
    fn largest_gap(&self, x: u64) -> Option<u64> {
        self.inner.state.largest_gap(x)
    }

    /// p_f(d), or None while unseen.
    fn first_occurrence(&self, d: u64) -> Option<u64> {
        self.inner.state.first_occurrence(d)
    }

    /// Scaling collapse [(D, T), ...] for gaps with tau_d > tau_min.
    #[pyo3(signature = (tau_min = 1000))]
    fn scaling_collapse(&self, tau_min: u64) -> Vec<(f64, f64)> {
        analysis::scaling_collapse(&self.inner, tau_min)
            .into_iter()
            .map(|p| (p.d_scaled, p.tau_scaled))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Checkpoint(x={}, pi={}, last_prime={})",
            self.inner.x, self.inner.pi, self.inner.state.last_prime
        )
    }
}

/// An in-memory collection run over all primes up to `limit`.
#[pyclass(name = "Run", frozen)]
struct PyRun {
    checkpoints: Vec<Checkpoint>,
}

#[pymethods]
impl PyRun {
    /// Sieve to `limit` and keep a checkpoint per grid threshold (powers of
    /// two from 2^15, or a geometric grid) plus the limit itself.
    #[new]
    #[pyo3(signature = (limit, pair_dmax = 512, workers = 1, grid = "pow2"))]
    fn new(limit: u64, pair_dmax: u64, workers: usize, grid: &str) -> PyResult<Self> {
        let mut cfg = RunConfig::new(limit);
        cfg.pair_window = pair_dmax;
        cfg.workers = workers.max(1);
        cfg.grid = parse_grid(grid)?;
        let checkpoints = pipeline::collect_in_memory(&cfg).map_err(runtime_err)?;
        Ok(PyRun { checkpoints })
    }

    /// Thresholds of the stored checkpoints.
    fn thresholds(&self) -> Vec<u64> {
        self.checkpoints.iter().map(|c| c.x).collect()
    }

    /// All checkpoints, ascending.
    fn checkpoints(&self) -> Vec<PyCheckpoint> {
        self.checkpoints
            .iter()
            .map(|c| PyCheckpoint { inner: c.clone() })
            .collect()
    }

    /// The checkpoint at threshold x.
    fn checkpoint(&self, x: u64) -> PyResult<PyCheckpoint> {
        self.checkpoints
            .iter()
            .find(|c| c.x == x)
            .map(|c| PyCheckpoint { inner: c.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("no checkpoint at {x}")))
    }

    fn __repr__(&self) -> String {
        format!("Run({} checkpoints)", self.checkpoints.len())
    }
}

fn parse_grid(s: &str) -> PyResult<CheckpointGrid> {
    if s == "pow2" {
        return Ok(CheckpointGrid::PowersOfTwo);
    }
    if let Some(rest) = s.strip_prefix("geom:") {
        if let Some((base, ratio)) = rest.split_once(':') {
            let base: f64 = base.parse().map_err(value_err)?;
            let ratio: f64 = ratio.parse().map_err(value_err)?;
            return Ok(CheckpointGrid::Geometric { base, ratio });
        }
    }
    Err(PyValueError::new_err(format!(
        "unknown grid {s:?} (pow2 or geom:BASE:RATIO)"
    )))
}

/// Number of primes p <= x.
#[pyfunction]
fn prime_count(x: u64) -> u64 {
    sieve::prime_count(x)
}

/// All primes in [lo, hi).
#[pyfunction]
fn primes_between(lo: u64, hi: u64) -> PyResult<Vec<u64>> {
    let mut out = Vec::new();
    sieve::stream_primes(lo, hi, |p| out.push(p)).map_err(value_err)?;
    Ok(out)
}

/// The singular series over the odd prime divisors of an even gap.
#[pyfunction]
fn singular_series(d: u64) -> PyResult<f64> {
    constants::singular_series(d).map_err(value_err)
}

/// Distinct odd primes dividing d.
#[pyfunction]
fn odd_prime_divisors(d: u64) -> Vec<u64> {
    constants::odd_prime_divisors(d)
}

/// Offset logarithmic integral of order 2 from 2 to x.
#[pyfunction]
fn li2(x: f64) -> PyResult<f64> {
    constants::li2(x).map_err(value_err)
}

/// Finite twin-constant product over primes up to the cutoff, doubled.
#[pyfunction]
fn twin_constant_product(cutoff: u64) -> PyResult<f64> {
    constants::twin_constant_product(cutoff).map_err(value_err)
}

/// The stored constant table as a dict.
#[pyfunction]
fn constants_table() -> BTreeMap<&'static str, f64> {
    let t = constants::table();
    BTreeMap::from([
        ("c2", t.c2),
        ("c2_half", t.c2_half),
        ("mertens_m", t.mertens_m),
        ("euler_gamma", t.euler_gamma),
        ("log_c2", t.log_c2),
    ])
}

/// Consecutive-pair count estimate; variant is "c1", "c1p", or "c1pp".
#[pyfunction]
fn tau_model(variant: &str, x: f64, pi_x: f64, d: u64) -> PyResult<f64> {
    let v = match variant {
        "c1" => TauVariant::C1,
        "c1p" => TauVariant::C1P,
        "c1pp" => TauVariant::C1PP,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown tau variant {other:?}"
            )))
        }
    };
    models::tau_model(v, x, pi_x, d).map_err(value_err)
}

/// Hardy-Littlewood pair estimate for distance d at threshold x.
#[pyfunction]
fn hl_pair_model(x: f64, d: u64) -> PyResult<f64> {
    models::hl_pair_model(x, d).map_err(value_err)
}

/// Twin estimate; variant is "c2", "hl", or "li2".
#[pyfunction]
#[pyo3(signature = (variant, x, pi_x = 0.0))]
fn twin_model(variant: &str, x: f64, pi_x: f64) -> PyResult<f64> {
    let v = match variant {
        "c2" => TwinVariant::C2,
        "hl" => TwinVariant::Hl,
        "li2" => TwinVariant::Li2,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown twin variant {other:?}"
            )))
        }
    };
    models::twin_model(v, x, pi_x).map_err(value_err)
}

/// Maximal-gap estimate; variant is "c4", "pnt", "cramer", or "granville".
#[pyfunction]
#[pyo3(signature = (variant, x, pi_x = 0.0))]
fn gmax_model(variant: &str, x: f64, pi_x: f64) -> PyResult<f64> {
    let v = match variant {
        "c4" => GmaxVariant::C4,
        "pnt" => GmaxVariant::Pnt,
        "cramer" => GmaxVariant::Cramer,
        "granville" => GmaxVariant::Granville,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown gmax variant {other:?}"
            )))
        }
    };
    models::gmax_model(v, x, pi_x).map_err(value_err)
}

/// Squared-gap sum estimate; variant is "c5", "simple", or "hb".
#[pyfunction]
#[pyo3(signature = (variant, x, pi_x = 0.0))]
fn sumsq_model(variant: &str, x: f64, pi_x: f64) -> PyResult<f64> {
    let v = match variant {
        "c5" => SumSqVariant::C5,
        "simple" => SumSqVariant::Simple,
        "hb" => SumSqVariant::HeathBrown,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown sumsq variant {other:?}"
            )))
        }
    };
    models::sumsq_model(v, x, pi_x).map_err(value_err)
}

/// Tail sum over gaps of at least h.
#[pyfunction]
fn large_gap_sum_model(x: f64, pi_x: f64, h: u64) -> PyResult<f64> {
    models::large_gap_sum_model(x, pi_x, h).map_err(value_err)
}

/// Generalized Brun sum estimate; variant is "c6", "partial",
/// "extrapolated", or "b2law".
#[pyfunction]
#[pyo3(signature = (variant, d, x = None, partial = None))]
fn brun_model(variant: &str, d: u64, x: Option<f64>, partial: Option<f64>) -> PyResult<f64> {
    let v = match variant {
        "c6" => BrunVariant::C6,
        "partial" => BrunVariant::Partial,
        "extrapolated" => BrunVariant::Extrapolated,
        "b2law" => BrunVariant::B2Law,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown brun variant {other:?}"
            )))
        }
    };
    models::brun_model(v, d, x, partial).map_err(value_err)
}

/// ln ln x + M.
#[pyfunction]
fn mertens_model(x: f64) -> PyResult<f64> {
    models::mertens_model(x).map_err(value_err)
}

/// First-occurrence estimate; variant is "c7", "shanks", or "asymptotic".
#[pyfunction]
fn pf_model(variant: &str, d: f64) -> PyResult<f64> {
    let v = match variant {
        "c7" => PfVariant::C7,
        "shanks" => PfVariant::Shanks,
        "asymptotic" => PfVariant::Asymptotic,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown pf variant {other:?}"
            )))
        }
    };
    models::pf_model(v, d).map_err(value_err)
}

/// Extreme Andrica-difference estimate; variant "c8" takes (x, pi_x),
/// "cramer" takes x, "shanks2" takes the gap d in the x slot.
#[pyfunction]
#[pyo3(signature = (variant, x, pi_x = 0.0))]
fn andrica_model(variant: &str, x: f64, pi_x: f64) -> PyResult<f64> {
    match variant {
        "c8" => models::andrica_c8(x, pi_x).map_err(value_err),
        "cramer" => models::andrica_r_cramer(x).map_err(value_err),
        "shanks2" => Ok(models::andrica_shanks2(x)),
        other => Err(PyValueError::new_err(format!(
            "unknown andrica variant {other:?}"
        ))),
    }
}

/// Fit y = a*exp(-b*t) through (t, y) points; returns (a, b, rms, points).
/// weighting: "none" or "log".
#[pyfunction]
#[pyo3(signature = (points, weighting = "none"))]
fn fit_exponential(points: Vec<(f64, f64)>, weighting: &str) -> PyResult<(f64, f64, f64, usize)> {
    let w = match weighting {
        "none" => Weighting::None,
        "log" => Weighting::Log,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown weighting {other:?}"
            )))
        }
    };
    let fit = analysis::fit_exponential(&points, w).map_err(value_err)?;
    Ok((fit.a, fit.b, fit.residual_rms, fit.points_used))
}

/// (n, p, p_next, gap, sqrt difference) row of the ranked Andrica table.
type AndricaTuple = (u64, u64, u64, u64, f64);

/// Top-k Andrica differences below the limit, sorted descending, as
/// (n, p, p_next, gap, a) tuples.
#[pyfunction]
#[pyo3(signature = (limit, top_k = 10))]
fn andrica_table(limit: u64, top_k: usize) -> PyResult<Vec<AndricaTuple>> {
    let rows = analysis::andrica_table(limit, top_k).map_err(runtime_err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.n, r.p, r.p_next, r.gap, r.a))
        .collect())
}

#[pymodule]
fn gaplab_python(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRun>()?;
    m.add_class::<PyCheckpoint>()?;
    m.add_function(wrap_pyfunction!(prime_count, m)?)?;
    m.add_function(wrap_pyfunction!(primes_between, m)?)?;
    m.add_function(wrap_pyfunction!(singular_series, m)?)?;
    m.add_function(wrap_pyfunction!(odd_prime_divisors, m)?)?;
    m.add_function(wrap_pyfunction!(li2, m)?)?;
    m.add_function(wrap_pyfunction!(twin_constant_product, m)?)?;
    m.add_function(wrap_pyfunction!(constants_table, m)?)?;
    m.add_function(wrap_pyfunction!(tau_model, m)?)?;
    m.add_function(wrap_pyfunction!(hl_pair_model, m)?)?;
    m.add_function(wrap_pyfunction!(twin_model, m)?)?;
    m.add_function(wrap_pyfunction!(gmax_model, m)?)?;
    m.add_function(wrap_pyfunction!(sumsq_model, m)?)?;
    m.add_function(wrap_pyfunction!(large_gap_sum_model, m)?)?;
    m.add_function(wrap_pyfunction!(brun_model, m)?)?;
    m.add_function(wrap_pyfunction!(mertens_model, m)?)?;
    m.add_function(wrap_pyfunction!(pf_model, m)?)?;
    m.add_function(wrap_pyfunction!(andrica_model, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(andrica_table, m)?)?;
    Ok(())
}
