//! Optimizers over the relaxed selection variables and the integral
//! baselines they are compared against.
//!
//! Every method produces an [`OptimizerReport`] whose integral assignment
//! has been verified against the capacity cap and the deadlines.

mod fw;
mod heuristics;
mod metrics;
mod nelder_mead;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::ProblemInstance;
use crate::objective::CompiledObjective;

pub use fw::{frank_wolfe, frank_wolfe_momentum, lmo, FwOptions};
pub use heuristics::{
    random_search, round_and_repair, shortest_path_hops, shortest_path_mindelay, RoundOutcome,
};
pub use metrics::{metrics, rel_gap, MethodMetrics, MetricsError, METRICS_BASELINE};
pub use nelder_mead::{nelder_mead, NelderMeadOptions};

/// Tolerance on block sums and bounds of a relaxed assignment.
pub const POLYTOPE_TOLERANCE: f64 = 1e-12;

/// Default evaluation budget of the heuristics and iteration cap of
/// Frank-Wolfe.
pub const DEFAULT_BUDGET: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("objective cannot be evaluated at the start point or the witness")]
    UnstableStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FrankWolfe,
    FrankWolfeMomentum,
    Random,
    SpHops,
    SpMindelay,
    NelderMead,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::FrankWolfe,
        Method::FrankWolfeMomentum,
        Method::Random,
        Method::SpHops,
        Method::SpMindelay,
        Method::NelderMead,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::FrankWolfe => "frank-wolfe",
            Method::FrankWolfeMomentum => "frank-wolfe-momentum",
            Method::Random => "random",
            Method::SpHops => "sp-hops",
            Method::SpMindelay => "sp-mindelay",
            Method::NelderMead => "nelder-mead",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Method::FrankWolfe | Method::FrankWolfeMomentum | Method::Random | Method::NelderMead
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method '{0}'")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// Selection weights indexed by variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub p: Vec<f64>,
}

impl Assignment {
    pub fn one_hot(instance: &ProblemInstance, chosen: &[usize]) -> Self {
        Assignment {
            p: instance.one_hot(chosen),
        }
    }

    /// Largest deviation of a block sum from 1 or of a weight from `[0, 1]`.
    pub fn polytope_violation(&self, instance: &ProblemInstance) -> f64 {
        let mut worst = 0.0f64;
        for b in instance.blocks() {
            let s: f64 = self.p[b.clone()].iter().sum();
            worst = worst.max((s - 1.0).abs());
        }
        for &v in &self.p {
            worst = worst.max(-v).max(v - 1.0);
        }
        worst
    }

    pub fn in_polytope(&self, instance: &ProblemInstance) -> bool {
        self.polytope_violation(instance) <= POLYTOPE_TOLERANCE
    }

    /// Per-flow argmax, ties to the lowest variable.
    pub fn argmax(&self, instance: &ProblemInstance) -> Vec<usize> {
        instance
            .blocks()
            .iter()
            .map(|b| {
                b.clone()
                    .fold(b.start, |best, v| if self.p[v] > self.p[best] { v } else { best })
            })
            .collect()
    }
}

/// Uniform point on every flow's simplex (normalized unit exponentials).
pub fn random_start(instance: &ProblemInstance, seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![0.0; instance.var_count()];
    for b in instance.blocks() {
        if b.len() == 1 {
            p[b.start] = 1.0;
            continue;
        }
        let draws: Vec<f64> = b.clone().map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = draws.iter().sum();
        for (v, d) in b.clone().zip(draws) {
            p[v] = d / total;
        }
    }
    Assignment { p }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Frank-Wolfe gap under tolerance.
    Converged,
    IterationLimit,
    BudgetExhausted,
    /// No step size kept the objective finite.
    StepFailure,
    /// Direct construction; no iterations.
    Constructive,
    /// Nothing to optimize: every flow has a single alternative.
    Trivial,
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    pub method: Method,
    /// Best relaxed assignment, for methods that have one.
    pub relaxed: Option<Assignment>,
    /// Selected variable per flow after rounding and repair.
    pub chosen: Vec<usize>,
    /// Objective at `chosen`; `None` if it cannot be evaluated.
    pub objective: Option<f64>,
    pub feasible: bool,
    pub flow_values: Vec<f64>,
    /// Penalized objective per iteration, and its running minimum.
    pub trace: Vec<f64>,
    pub best_trace: Vec<f64>,
    pub termination: Termination,
    /// Iterates found outside the polytope.
    pub polytope_violations: usize,
    pub evaluations: usize,
    pub elapsed: Duration,
}

/// Objective and verdict of an integral assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralEvaluation {
    pub objective: Option<f64>,
    pub flow_values: Vec<f64>,
    pub feasible: bool,
}

pub fn evaluate_integral(
    instance: &ProblemInstance,
    objective: &CompiledObjective,
    chosen: &[usize],
) -> IntegralEvaluation {
    let x = instance.one_hot(chosen);
    match objective.evaluate(&x) {
        Ok(e) => IntegralEvaluation {
            objective: Some(e.objective),
            feasible: e.feasible(instance, &x),
            flow_values: e.flow_values,
        },
        Err(_) => IntegralEvaluation {
            objective: None,
            flow_values: vec![f64::NAN; instance.flows().len()],
            feasible: false,
        },
    }
}

/// Feasible beats infeasible, then the lower objective.
pub(crate) fn better(a: &IntegralEvaluation, b: &IntegralEvaluation) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        _ => a.objective.unwrap_or(f64::INFINITY) < b.objective.unwrap_or(f64::INFINITY),
    }
}

/// Dispatches to one method with its default options.
pub fn run_method(
    method: Method,
    instance: &ProblemInstance,
    objective: &mut CompiledObjective,
    seed: u64,
    budget: usize,
) -> Result<OptimizerReport, OptimError> {
    let fw_opts = FwOptions {
        max_iterations: budget,
        ..FwOptions::default()
    };
    match method {
        Method::FrankWolfe => {
            frank_wolfe(instance, objective, &random_start(instance, seed), &fw_opts)
        }
        Method::FrankWolfeMomentum => {
            frank_wolfe_momentum(instance, objective, &random_start(instance, seed), &fw_opts)
        }
        Method::Random => Ok(random_search(instance, objective, budget, seed)),
        Method::SpHops => Ok(integral_report(
            Method::SpHops,
            instance,
            objective,
            shortest_path_hops(instance),
        )),
        Method::SpMindelay => Ok(integral_report(
            Method::SpMindelay,
            instance,
            objective,
            shortest_path_mindelay(instance),
        )),
        Method::NelderMead => nelder_mead(
            instance,
            objective,
            &NelderMeadOptions {
                budget,
                seed,
                ..NelderMeadOptions::default()
            },
        ),
    }
}

fn integral_report(
    method: Method,
    instance: &ProblemInstance,
    objective: &CompiledObjective,
    chosen: Vec<usize>,
) -> OptimizerReport {
    let start = std::time::Instant::now();
    let ev = evaluate_integral(instance, objective, &chosen);
    OptimizerReport {
        method,
        relaxed: None,
        chosen,
        objective: ev.objective,
        feasible: ev.feasible,
        flow_values: ev.flow_values,
        trace: Vec::new(),
        best_trace: Vec::new(),
        termination: Termination::Constructive,
        polytope_violations: 0,
        evaluations: 1,
        elapsed: start.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{FlowEntry, InstanceFile};

    pub(crate) fn blocks_instance(sizes: &[usize]) -> ProblemInstance {
        let mut f = InstanceFile::new()
            .server("in", "pi", 0, 1000.0, 0.0)
            .server("out", "po", 0, 1000.0, 0.0);
        let width = sizes.iter().copied().max().unwrap_or(1);
        for j in 0..width {
            f = f
                .server(&format!("m{j}"), &format!("pm{j}"), 0, 100.0, 1.0 + j as f64)
                .edge("in", &format!("m{j}"))
                .edge(&format!("m{j}"), "out");
        }
        for (i, &n) in sizes.iter().enumerate() {
            let names: Vec<String> = (0..n).map(|j| format!("m{j}")).collect();
            let paths = names
                .iter()
                .map(|m| vec!["in", m.as_str(), "out"])
                .collect();
            f = f.flow(FlowEntry::unicast(&format!("f{i}"), 1.0, 1.0, paths));
        }
        ProblemInstance::from_file(&f).unwrap()
    }

    #[test]
    fn random_start_is_on_the_simplices() {
        let inst = blocks_instance(&[1, 3, 4]);
        for seed in 0..20 {
            let a = random_start(&inst, seed);
            assert_eq!(a.p[0], 1.0);
            assert!(a.polytope_violation(&inst) <= 1e-12);
        }
        assert_eq!(random_start(&inst, 7), random_start(&inst, 7));
        assert_ne!(random_start(&inst, 7), random_start(&inst, 8));
    }

    #[test]
    fn argmax_ties_to_lowest() {
        let inst = blocks_instance(&[2, 3]);
        let a = Assignment {
            p: vec![0.7, 0.3, 0.4, 0.4, 0.2],
        };
        assert_eq!(a.argmax(&inst), vec![0, 2]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>(), Ok(m));
        }
        assert!("simplex".parse::<Method>().is_err());
    }
}
