//! Objective and constraint expressions over the delay terms.
//!
//! A flow's weighted bound is `Σ_j delay(f_j)·p_j`, where for multicast
//! flows `delay(f_j)` is the mean over the destinations of choice `j`. The
//! objectives combine these per-flow values; capacity and deadline
//! constraints enter as ramp penalties so the optimizer only has to handle
//! the per-flow simplices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adgraph::{self, CompiledGraph, ParallelEvaluator};
use crate::error::EvalError;
use crate::minplus::{ExprArena, ExprId};
use crate::netmodel::ProblemInstance;
use crate::sfa::{self, AnalysisOptions, DelayTerm};

/// Penalty weight relative to the objective at the starting point.
pub const AUTO_PENALTY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("unknown utility family '{0}' (expected linear:LO:HI or logistic:STEEPNESS[:MIDPOINT])")]
    UnknownUtility(String),
    #[error("flow '{0}' has no deadline to centre its logistic utility on")]
    MissingMidpoint(String),
    #[error("utility parameters invalid: {0}")]
    InvalidUtility(String),
    #[error("expected {expected} utilities, got {got}")]
    UtilityCount { expected: usize, got: usize },
    #[error("analysis failed: {0}")]
    Analysis(String),
    #[error("compilation failed: {0}")]
    Compile(#[from] adgraph::CompileError),
}

/// Differentiable map from a flow's delay bound to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Utility {
    /// `clamp((d − lo)/(hi − lo), 0, 1)`.
    LinearClamp { lo: f64, hi: f64 },
    /// `1 / (1 + exp(−steepness·(d − midpoint)))`.
    Logistic { midpoint: f64, steepness: f64 },
}

impl Utility {
    pub fn eval(&self, d: f64) -> f64 {
        match *self {
            Utility::LinearClamp { lo, hi } => ((d - lo) / (hi - lo)).clamp(0.0, 1.0),
            Utility::Logistic {
                midpoint,
                steepness,
            } => 1.0 / (1.0 + (-steepness * (d - midpoint)).exp()),
        }
    }

    fn build(&self, arena: &mut ExprArena, d: ExprId) -> ExprId {
        match *self {
            Utility::LinearClamp { lo, hi } => {
                let lo_c = arena.constant(lo);
                let shifted = arena.sub(d, lo_c);
                let scale = arena.constant(1.0 / (hi - lo));
                let t = arena.mul(shifted, scale);
                let zero = arena.constant(0.0);
                let one = arena.constant(1.0);
                let up = arena.max(t, zero);
                arena.min(up, one)
            }
            Utility::Logistic {
                midpoint,
                steepness,
            } => {
                let m = arena.constant(midpoint);
                let shifted = arena.sub(d, m);
                let k = arena.constant(-steepness);
                let z = arena.mul(shifted, k);
                let e = arena.exp(z);
                let one = arena.constant(1.0);
                let den = arena.add(one, e);
                arena.div(one, den)
            }
        }
    }
}

/// Utility family as given on the command line; a logistic without midpoint
/// is centred on each flow's deadline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum UtilityTemplate {
    Linear { lo: f64, hi: f64 },
    Logistic {
        steepness: f64,
        midpoint: Option<f64>,
    },
}

impl FromStr for UtilityTemplate {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| ObjectiveError::InvalidUtility(format!("'{t}' is not a number")))
        };
        match parts.as_slice() {
            ["linear", lo, hi] => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if !(hi > lo) {
                    return Err(ObjectiveError::InvalidUtility(format!(
                        "linear needs lo < hi, got {lo}, {hi}"
                    )));
                }
                Ok(UtilityTemplate::Linear { lo, hi })
            }
            ["logistic", k] => Ok(UtilityTemplate::Logistic {
                steepness: num(k)?,
                midpoint: None,
            }),
            ["logistic", k, m] => Ok(UtilityTemplate::Logistic {
                steepness: num(k)?,
                midpoint: Some(num(m)?),
            }),
            _ => Err(ObjectiveError::UnknownUtility(s.to_string())),
        }
    }
}

impl fmt::Display for UtilityTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityTemplate::Linear { lo, hi } => write!(f, "linear:{lo}:{hi}"),
            UtilityTemplate::Logistic {
                steepness,
                midpoint: None,
            } => write!(f, "logistic:{steepness}"),
            UtilityTemplate::Logistic {
                steepness,
                midpoint: Some(m),
            } => write!(f, "logistic:{steepness}:{m}"),
        }
    }
}

impl UtilityTemplate {
    /// One utility per flow.
    pub fn resolve(&self, instance: &ProblemInstance) -> Result<Vec<Utility>, ObjectiveError> {
        instance
            .flows()
            .iter()
            .map(|f| match *self {
                UtilityTemplate::Linear { lo, hi } => Ok(Utility::LinearClamp { lo, hi }),
                UtilityTemplate::Logistic {
                    steepness,
                    midpoint,
                } => midpoint
                    .or(f.deadline)
                    .map(|m| Utility::Logistic {
                        midpoint: m,
                        steepness,
                    })
                    .ok_or_else(|| ObjectiveError::MissingMidpoint(f.name.clone())),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectiveKind {
    /// Mean over flows of the weighted delay bound.
    Average,
    /// Sum over flows of a utility of the weighted delay bound.
    Utility { utilities: Vec<Utility> },
    /// Largest weighted delay bound of any flow.
    MaxTail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// `None` selects `AUTO_PENALTY_FACTOR ×` the objective at the start.
    pub lambda_cap: Option<f64>,
    pub lambda_deadline: Option<f64>,
    /// See [`AnalysisOptions::sibling_interference`].
    #[serde(default = "yes")]
    pub sibling_interference: bool,
}

fn yes() -> bool {
    true
}

impl ObjectiveSpec {
    pub fn average() -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::Average,
            lambda_cap: None,
            lambda_deadline: None,
            sibling_interference: true,
        }
    }

    pub fn max_tail() -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::MaxTail,
            ..Self::average()
        }
    }

    pub fn utility(utilities: Vec<Utility>) -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::Utility { utilities },
            ..Self::average()
        }
    }
}

/// Weighted delay bound of each flow: `Σ_j p_j · mean_dest delay(f_j)`.
pub fn flow_values(
    arena: &mut ExprArena,
    instance: &ProblemInstance,
    terms: &[DelayTerm],
) -> Vec<ExprId> {
    let mut by_var: Vec<Vec<ExprId>> = vec![Vec::new(); instance.var_count()];
    for t in terms {
        by_var[instance.virtual_flows()[t.vf].var].push(t.expr);
    }
    instance
        .blocks()
        .iter()
        .map(|block| {
            let mut parts = Vec::with_capacity(block.len());
            for v in block.clone() {
                let exprs = &by_var[v];
                if exprs.is_empty() {
                    continue;
                }
                let s = arena.sum(exprs);
                let inv = arena.constant(1.0 / exprs.len() as f64);
                let mean = arena.mul(s, inv);
                let p = arena.var(v);
                parts.push(arena.mul(mean, p));
            }
            arena.sum(&parts)
        })
        .collect()
}

pub fn build_average(
    arena: &mut ExprArena,
    instance: &ProblemInstance,
    terms: &[DelayTerm],
) -> ExprId {
    let values = flow_values(arena, instance, terms);
    average_of(arena, &values)
}

fn average_of(arena: &mut ExprArena, values: &[ExprId]) -> ExprId {
    let s = arena.sum(values);
    let inv = arena.constant(1.0 / values.len().max(1) as f64);
    arena.mul(s, inv)
}

pub fn build_utility(
    arena: &mut ExprArena,
    instance: &ProblemInstance,
    terms: &[DelayTerm],
    utilities: &[Utility],
) -> Result<ExprId, ObjectiveError> {
    let values = flow_values(arena, instance, terms);
    utility_of(arena, &values, utilities)
}

fn utility_of(
    arena: &mut ExprArena,
    values: &[ExprId],
    utilities: &[Utility],
) -> Result<ExprId, ObjectiveError> {
    if utilities.len() != values.len() {
        return Err(ObjectiveError::UtilityCount {
            expected: values.len(),
            got: utilities.len(),
        });
    }
    for u in utilities {
        if let Utility::LinearClamp { lo, hi } = u {
            if !(hi > lo) {
                return Err(ObjectiveError::InvalidUtility(format!(
                    "linear needs lo < hi, got {lo}, {hi}"
                )));
            }
        }
    }
    let parts: Vec<ExprId> = values
        .iter()
        .zip(utilities)
        .map(|(&v, u)| u.build(arena, v))
        .collect();
    Ok(arena.sum(&parts))
}

pub fn build_maxtail(
    arena: &mut ExprArena,
    instance: &ProblemInstance,
    terms: &[DelayTerm],
) -> ExprId {
    let values = flow_values(arena, instance, terms);
    maxtail_of(arena, &values)
}

fn maxtail_of(arena: &mut ExprArena, values: &[ExprId]) -> ExprId {
    let mut it = values.iter().copied();
    let Some(first) = it.next() else {
        return arena.constant(0.0);
    };
    it.fold(first, |acc, v| arena.max(acc, v))
}

/// `Σ_resources [Σ r·p − ρ·R]⁺`.
pub fn capacity_violation(arena: &mut ExprArena, instance: &ProblemInstance) -> ExprId {
    let cap = instance.utilization_cap();
    let parts: Vec<ExprId> = instance
        .constraints()
        .iter()
        .map(|c| {
            let loads: Vec<ExprId> = c
                .members
                .iter()
                .map(|&(v, r)| {
                    let p = arena.var(v);
                    let rc = arena.constant(r);
                    arena.mul(rc, p)
                })
                .collect();
            let load = arena.sum(&loads);
            let limit = arena.constant(cap * c.capacity);
            let excess = arena.sub(load, limit);
            arena.ramp(excess)
        })
        .collect();
    arena.sum(&parts)
}

/// `Σ_flows [value − deadline]⁺` over flows that carry a deadline.
pub fn deadline_violation(
    arena: &mut ExprArena,
    instance: &ProblemInstance,
    values: &[ExprId],
) -> ExprId {
    let parts: Vec<ExprId> = instance
        .flows()
        .iter()
        .zip(values)
        .filter_map(|(f, &v)| {
            f.deadline.map(|d| {
                let dc = arena.constant(d);
                let excess = arena.sub(v, dc);
                arena.ramp(excess)
            })
        })
        .collect();
    arena.sum(&parts)
}

/// `λ_cap·capacity_violation + λ_deadline·deadline_violation`.
pub fn build_penalties(
    arena: &mut ExprArena,
    instance: &ProblemInstance,
    terms: &[DelayTerm],
    lambda_cap: f64,
    lambda_deadline: f64,
) -> ExprId {
    let values = flow_values(arena, instance, terms);
    let cap = capacity_violation(arena, instance);
    let dl = deadline_violation(arena, instance, &values);
    let lc = arena.constant(lambda_cap);
    let ld = arena.constant(lambda_deadline);
    let a = arena.mul(lc, cap);
    let b = arena.mul(ld, dl);
    arena.add(a, b)
}

/// Numbers produced by one evaluation of a [`CompiledObjective`].
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub capacity_violation: f64,
    pub deadline_violation: f64,
    pub flow_values: Vec<f64>,
    pub vf_delays: Vec<f64>,
}

impl Evaluation {
    /// Whether `x` satisfies the capacity cap and every deadline.
    pub fn feasible(&self, instance: &ProblemInstance, x: &[f64]) -> bool {
        instance.capacity_excess(x) == 0.0
            && instance
                .flows()
                .iter()
                .zip(&self.flow_values)
                .all(|(f, &v)| f.deadline.is_none_or(|d| v <= d))
    }
}

/// The objective, its penalties and every per-flow quantity compiled into a
/// single tape. Output layout: objective, capacity violation, deadline
/// violation, one value per flow, one delay per virtual flow.
pub struct CompiledObjective {
    graph: CompiledGraph,
    evaluator: ParallelEvaluator,
    flows: usize,
    vfs: usize,
    spec: ObjectiveSpec,
    lambda_cap: f64,
    lambda_deadline: f64,
    arena_nodes: usize,
}

const FIXED_OUTPUTS: usize = 3;

impl CompiledObjective {
    pub fn build(
        instance: &ProblemInstance,
        spec: &ObjectiveSpec,
        tasks: usize,
    ) -> Result<Self, ObjectiveError> {
        let mut arena = ExprArena::new();
        let opts = AnalysisOptions {
            sibling_interference: spec.sibling_interference,
            ..AnalysisOptions::default()
        };
        let terms = sfa::analyze_all(instance, &mut arena, opts).map_err(
            |errs| {
                ObjectiveError::Analysis(
                    errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "),
                )
            },
        )?;
        let values = flow_values(&mut arena, instance, &terms);
        let objective = match &spec.kind {
            ObjectiveKind::Average => average_of(&mut arena, &values),
            ObjectiveKind::Utility { utilities } => utility_of(&mut arena, &values, utilities)?,
            ObjectiveKind::MaxTail => maxtail_of(&mut arena, &values),
        };
        let cap = capacity_violation(&mut arena, instance);
        let dl = deadline_violation(&mut arena, instance, &values);
        let mut outputs = vec![objective, cap, dl];
        outputs.extend(&values);
        outputs.extend(terms.iter().map(|t| t.expr));
        let graph = adgraph::compile(&arena, &outputs, instance.var_count())?;
        Ok(CompiledObjective {
            graph,
            evaluator: ParallelEvaluator::new(tasks),
            flows: values.len(),
            vfs: terms.len(),
            spec: spec.clone(),
            lambda_cap: spec.lambda_cap.unwrap_or(0.0),
            lambda_deadline: spec.lambda_deadline.unwrap_or(0.0),
            arena_nodes: arena.len(),
        })
    }

    /// Wraps an arbitrary expression as an objective with no flows and no
    /// penalties.
    pub fn from_expression(
        mut arena: ExprArena,
        objective: ExprId,
        var_count: usize,
        tasks: usize,
    ) -> Result<Self, ObjectiveError> {
        let zero = arena.constant(0.0);
        let graph = adgraph::compile(&arena, &[objective, zero, zero], var_count)?;
        Ok(CompiledObjective {
            graph,
            evaluator: ParallelEvaluator::new(tasks),
            flows: 0,
            vfs: 0,
            spec: ObjectiveSpec::average(),
            lambda_cap: 0.0,
            lambda_deadline: 0.0,
            arena_nodes: arena.len(),
        })
    }

    pub fn graph(&self) -> &CompiledGraph {
        &self.graph
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    pub fn arena_nodes(&self) -> usize {
        self.arena_nodes
    }

    pub fn lambdas(&self) -> (f64, f64) {
        (self.lambda_cap, self.lambda_deadline)
    }

    /// Fixes the automatic penalty weights from the objective value at the
    /// starting point; explicit weights in the spec are kept.
    pub fn calibrate(&mut self, start_objective: f64) {
        let auto = AUTO_PENALTY_FACTOR * start_objective.abs().max(f64::MIN_POSITIVE);
        self.lambda_cap = self.spec.lambda_cap.unwrap_or(auto);
        self.lambda_deadline = self.spec.lambda_deadline.unwrap_or(auto);
    }

    fn unpack(&self, out: &[f64]) -> Evaluation {
        let f0 = FIXED_OUTPUTS;
        Evaluation {
            objective: out[0],
            capacity_violation: out[1],
            deadline_violation: out[2],
            flow_values: out[f0..f0 + self.flows].to_vec(),
            vf_delays: out[f0 + self.flows..f0 + self.flows + self.vfs].to_vec(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation, EvalError> {
        let pass = self.evaluator.forward(&self.graph, x)?;
        Ok(self.unpack(pass.outputs()))
    }

    /// Objective plus weighted penalties.
    pub fn total(&self, e: &Evaluation) -> f64 {
        e.objective + self.lambda_cap * e.capacity_violation + self.lambda_deadline * e.deadline_violation
    }

    /// Evaluation and gradient of [`total`](Self::total).
    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(Evaluation, Vec<f64>), EvalError> {
        let pass = self.evaluator.forward(&self.graph, x)?;
        let mut w = vec![0.0; self.graph.output_count()];
        w[0] = 1.0;
        w[1] = self.lambda_cap;
        w[2] = self.lambda_deadline;
        let grad = self.evaluator.backward(&self.graph, &pass, &w);
        Ok((self.unpack(pass.outputs()), grad))
    }

    /// Gradient of the bare objective, without penalties.
    pub fn objective_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
        let pass = self.evaluator.forward(&self.graph, x)?;
        let mut w = vec![0.0; self.graph.output_count()];
        w[0] = 1.0;
        let grad = self.evaluator.backward(&self.graph, &pass, &w);
        Ok((pass.outputs()[0], grad))
    }
}
