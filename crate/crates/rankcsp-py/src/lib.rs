//! Python bindings for the ranking constraint solver. The module mirrors
//! the command line surface: generate or load instances, price rankings,
//! run the approximation pipeline, and query the exact oracle.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use rankcsp::{
    exact_opt, gen_planted, kendall_tau_mod_reversal, kendall_tau_rankings, order::format_pos,
    parse_ratio, AdditiveBackend, Caps, ConstantsMode, Family, FastStrategy, FragilityMode,
    GuessMode, InstanceFile, PtasConfig, Ranking,
};

fn adapt(e: rankcsp::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ranking_from(order: Vec<usize>) -> PyResult<Ranking> {
    Ranking::from_order(order).map_err(adapt)
}

fn default_arity(family: Family) -> usize {
    match family {
        Family::Betweenness3 => 3,
        Family::KFast => 2,
        Family::KBetweenness => 4,
        Family::ExplicitTable => 3,
    }
}

/// One constraint system plus optional plant metadata, as stored in the
/// JSON interchange format.
#[pyclass(frozen)]
struct Instance {
    file: InstanceFile,
}

/// Outcome of the approximation pipeline.
#[pyclass(frozen, get_all)]
struct SolveResult {
    best: Vec<usize>,
    best_cost: u64,
    best_guess: Option<usize>,
    took_additive_branch: bool,
    additive_cost: u64,
    additive_guaranteed: bool,
    guesses: usize,
}

#[pymethods]
impl SolveResult {
    fn __repr__(&self) -> String {
        format!(
            "SolveResult(best_cost={}, guesses={}, took_additive_branch={})",
            self.best_cost, self.guesses, self.took_additive_branch
        )
    }
}

/// Outcome of the exact oracle.
#[pyclass(frozen, get_all)]
struct ExactResult {
    opt_cost: u64,
    witness: Vec<usize>,
    explored: u64,
}

#[pymethods]
impl ExactResult {
    fn __repr__(&self) -> String {
        format!(
            "ExactResult(opt_cost={}, explored={})",
            self.opt_cost, self.explored
        )
    }
}

fn parse_guess(s: &str, file: &InstanceFile, oracle_cap: usize) -> PyResult<GuessMode> {
    let oracle = || -> PyResult<Ranking> {
        if let Some(p) = &file.planted {
            return Ok(p.clone());
        }
        if file.system.n() <= oracle_cap {
            return Ok(exact_opt(&file.system, oracle_cap).map_err(adapt)?.witness);
        }
        Err(PyValueError::new_err(format!(
            "oracle guess needs an embedded planted ranking or n <= {oracle_cap}"
        )))
    };
    match s {
        "auto" => {
            if file.planted.is_some() || file.system.n() <= oracle_cap {
                Ok(GuessMode::Oracle(oracle()?))
            } else {
                Ok(GuessMode::Restarts(32))
            }
        }
        "oracle" => Ok(GuessMode::Oracle(oracle()?)),
        "exhaustive" => Ok(GuessMode::Exhaustive),
        other => match other.strip_prefix("restarts:") {
            Some(r) => Ok(GuessMode::Restarts(r.parse().map_err(|_| {
                PyValueError::new_err(format!("bad restart count in {other:?}"))
            })?)),
            None => Err(PyValueError::new_err(format!(
                "unknown guess mode {other:?} (auto|exhaustive|oracle|restarts:R)"
            ))),
        },
    }
}

fn parse_fast(s: &str) -> PyResult<FastStrategy> {
    match s {
        "auto" => Ok(FastStrategy::Auto),
        "exact" => Ok(FastStrategy::Exact),
        "local" => Ok(FastStrategy::Local),
        "pivot-local" => Ok(FastStrategy::PivotLocal),
        _ => Err(PyValueError::new_err(format!(
            "unknown fast strategy {s:?} (auto|exact|local|pivot-local)"
        ))),
    }
}

fn parse_additive(s: &str) -> PyResult<AdditiveBackend> {
    match s {
        "auto" => Ok(AdditiveBackend::Auto),
        "exact" => Ok(AdditiveBackend::Exact),
        "heuristic" => Ok(AdditiveBackend::Heuristic),
        _ => Err(PyValueError::new_err(format!(
            "unknown additive backend {s:?} (auto|exact|heuristic)"
        ))),
    }
}

fn parse_constants(s: &str) -> PyResult<ConstantsMode> {
    if s == "paper" {
        return Ok(ConstantsMode::Paper);
    }
    if let Some(g) = s.strip_prefix("scaled:") {
        return Ok(ConstantsMode::Scaled(parse_ratio(g).map_err(adapt)?));
    }
    Err(PyValueError::new_err(format!(
        "unknown constants mode {s:?} (paper|scaled:G)"
    )))
}

#[pymethods]
impl Instance {
    /// Plant a random ranking and flip a `noise` fraction of constraints.
    #[staticmethod]
    #[pyo3(signature = (family, n, k=None, noise="0", seed=0))]
    fn generate(family: &str, n: usize, k: Option<usize>, noise: &str, seed: u64) -> PyResult<Self> {
        let family = Family::parse(family).map_err(adapt)?;
        let k = k.unwrap_or_else(|| default_arity(family));
        let rho = parse_ratio(noise).map_err(adapt)?;
        let planted = gen_planted(family, n, k, rho, seed).map_err(adapt)?;
        Ok(Instance { file: InstanceFile::from(planted) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Instance { file: InstanceFile::from_json(text).map_err(adapt)? })
    }

    /// Canonical JSON; byte-stable across round trips.
    fn to_json(&self) -> String {
        self.file.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.file.system.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.file.system.k()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.file.system.family().as_str()
    }

    #[getter]
    fn constraint_count(&self) -> u64 {
        self.file.system.constraint_count()
    }

    #[getter]
    fn planted(&self) -> Option<Vec<usize>> {
        self.file.planted.as_ref().map(|p| p.order().to_vec())
    }

    #[getter]
    fn noise(&self) -> Option<String> {
        self.file.noise.as_ref().map(format_pos)
    }

    #[getter]
    fn noised_count(&self) -> Option<u64> {
        self.file.noised_count
    }

    #[getter]
    fn seed(&self) -> Option<u64> {
        self.file.seed
    }

    /// Number of violated constraints under the given ranking.
    fn cost(&self, order: Vec<usize>) -> PyResult<u64> {
        self.file
            .system
            .cost_ranking(&ranking_from(order)?)
            .map_err(adapt)
    }

    /// "fragile", "weakly_fragile", or "neither".
    fn fragility(&self) -> &'static str {
        let c = &self.file.system;
        if c.fragility_counterexample(FragilityMode::Fragile).is_none() {
            "fragile"
        } else if c.fragility_counterexample(FragilityMode::Weak).is_none() {
            "weakly_fragile"
        } else {
            "neither"
        }
    }

    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (eps="1/5", seed=0, guess="auto", fast="auto", additive="auto", constants="paper", oracle_cap=10))]
    fn solve(
        &self,
        eps: &str,
        seed: u64,
        guess: &str,
        fast: &str,
        additive: &str,
        constants: &str,
        oracle_cap: usize,
    ) -> PyResult<SolveResult> {
        let config = PtasConfig {
            eps: parse_ratio(eps).map_err(adapt)?,
            seed,
            guess: parse_guess(guess, &self.file, oracle_cap)?,
            fast: parse_fast(fast)?,
            additive: parse_additive(additive)?,
            constants: parse_constants(constants)?,
            caps: Caps { oracle_cap, ..Caps::default() },
        };
        let out = rankcsp::run_ptas(&self.file.system, &config).map_err(adapt)?;
        Ok(SolveResult {
            best: out.best.order().to_vec(),
            best_cost: out.best_cost,
            best_guess: out.best_guess,
            took_additive_branch: out.took_additive_branch,
            additive_cost: out.additive.cost,
            additive_guaranteed: out.additive.guaranteed,
            guesses: out.candidates.len(),
        })
    }

    #[pyo3(signature = (cap=10))]
    fn exact(&self, cap: usize) -> PyResult<ExactResult> {
        let out = exact_opt(&self.file.system, cap).map_err(adapt)?;
        Ok(ExactResult {
            opt_cost: out.opt_cost,
            witness: out.witness.order().to_vec(),
            explored: out.explored,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(family={:?}, n={}, k={}, constraints={})",
            self.family(),
            self.n(),
            self.k(),
            self.constraint_count()
        )
    }
}

/// Pairwise disagreements between two rankings of the same length.
#[pyfunction]
fn kendall_tau(a: Vec<usize>, b: Vec<usize>) -> PyResult<u64> {
    kendall_tau_rankings(&ranking_from(a)?, &ranking_from(b)?).map_err(adapt)
}

/// Kendall distance to the closer of `b` and its reversal.
#[pyfunction]
#[pyo3(name = "kendall_tau_mod_reversal")]
fn kendall_tau_mod_reversal_py(a: Vec<usize>, b: Vec<usize>) -> PyResult<u64> {
    kendall_tau_mod_reversal(&ranking_from(a)?, &ranking_from(b)?).map_err(adapt)
}

#[pymodule]
fn rankcsp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<SolveResult>()?;
    m.add_class::<ExactResult>()?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau_mod_reversal_py, m)?)?;
    Ok(())
}
