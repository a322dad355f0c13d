use std::collections::BTreeSet;
use std::time::Instant;

use super::{
    better, evaluate_integral, round_and_repair, Assignment, Method, OptimError, OptimizerReport,
    Termination, DEFAULT_BUDGET, POLYTOPE_TOLERANCE,
};
use crate::netmodel::ProblemInstance;
use crate::objective::{CompiledObjective, Evaluation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwOptions {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    /// Step halvings tried before a non-evaluable step aborts the run.
    pub max_halvings: u32,
}

impl Default for FwOptions {
    fn default() -> Self {
        FwOptions {
            max_iterations: DEFAULT_BUDGET,
            gap_tolerance: 1e-6,
            max_halvings: 20,
        }
    }
}

/// Vertex of the product of simplices minimizing `⟨g, s⟩`: one-hot at each
/// block's smallest coordinate, ties to the lowest variable.
pub fn lmo(gradient: &[f64], instance: &ProblemInstance) -> Assignment {
    let mut p = vec![0.0; gradient.len()];
    for b in instance.blocks() {
        let best = b
            .clone()
            .fold(b.start, |best, v| if gradient[v] < gradient[best] { v } else { best });
        p[best] = 1.0;
    }
    Assignment { p }
}

pub fn frank_wolfe(
    instance: &ProblemInstance,
    objective: &mut CompiledObjective,
    start: &Assignment,
    opts: &FwOptions,
) -> Result<OptimizerReport, OptimError> {
    run(instance, objective, start, opts, false)
}

/// Frank-Wolfe fed with the averaged gradient `m_k = (1 − γ_k)·m_{k−1} +
/// γ_k·∇f(x_k)`, `γ_k = 2/(k+2)`.
pub fn frank_wolfe_momentum(
    instance: &ProblemInstance,
    objective: &mut CompiledObjective,
    start: &Assignment,
    opts: &FwOptions,
) -> Result<OptimizerReport, OptimError> {
    run(instance, objective, start, opts, true)
}

/// Moves `start` toward the capacity witness until the objective can be
/// evaluated, then fixes the automatic penalty weights there.
pub(crate) fn stable_start(
    instance: &ProblemInstance,
    objective: &mut CompiledObjective,
    start: &Assignment,
) -> Result<(Assignment, usize), OptimError> {
    let witness = instance.one_hot(instance.witness());
    let mut evals = 0;
    let mut t = 0.0f64;
    for _ in 0..=20 {
        let p: Vec<f64> = if t == 0.0 {
            start.p.clone()
        } else if t == 1.0 {
            witness.clone()
        } else {
            start
                .p
                .iter()
                .zip(&witness)
                .map(|(&a, &w)| a + t * (w - a))
                .collect()
        };
        evals += 1;
        if let Ok(e) = objective.evaluate(&p) {
            objective.calibrate(e.objective);
            return Ok((Assignment { p }, evals));
        }
        t = if t >= 0.5 { 1.0 - (1.0 - t) / 2.0 } else { 0.5 };
        if 1.0 - t < 1e-6 {
            t = 1.0;
        }
    }
    Err(OptimError::UnstableStart)
}

fn run(
    instance: &ProblemInstance,
    objective: &mut CompiledObjective,
    start: &Assignment,
    opts: &FwOptions,
    momentum: bool,
) -> Result<OptimizerReport, OptimError> {
    let clock = Instant::now();
    let method = if momentum {
        Method::FrankWolfeMomentum
    } else {
        Method::FrankWolfe
    };
    let (start, mut evaluations) = stable_start(instance, objective, start)?;
    let trivial = instance.blocks().iter().all(|b| b.len() == 1);

    let mut x = start.p;
    let (mut eval, mut grad) = objective
        .value_and_gradient(&x)
        .map_err(|_| OptimError::UnstableStart)?;
    evaluations += 1;
    let mut best_x = x.clone();
    let mut best = objective.total(&eval);
    let mut momentum_dir = vec![0.0; x.len()];
    let mut vertices: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut trace = Vec::new();
    let mut best_trace = Vec::new();
    let mut violations = 0;
    let mut termination = if trivial {
        Termination::Trivial
    } else {
        Termination::IterationLimit
    };

    for k in 0..if trivial { 0 } else { opts.max_iterations } {
        // the gap is measured along the direction handed to the oracle
        let dir = if momentum {
            let gamma = 2.0 / (k as f64 + 2.0);
            for (m, g) in momentum_dir.iter_mut().zip(&grad) {
                *m = (1.0 - gamma) * *m + gamma * g;
            }
            &momentum_dir
        } else {
            &grad
        };
        let s = lmo(dir, instance);
        let gap: f64 = dir
            .iter()
            .zip(&x)
            .zip(&s.p)
            .map(|((g, xi), si)| g * (xi - si))
            .sum();
        if gap < opts.gap_tolerance {
            termination = Termination::Converged;
            break;
        }

        vertices.insert(s.argmax(instance));

        let mut delta = 1.0 / ((k + 1) as f64).sqrt();
        let mut accepted: Option<(Vec<f64>, Evaluation, Vec<f64>)> = None;
        for _ in 0..=opts.max_halvings {
            let next: Vec<f64> = x
                .iter()
                .zip(&s.p)
                .map(|(&xi, &si)| xi + delta * (si - xi))
                .collect();
            evaluations += 1;
            if let Ok((e, g)) = objective.value_and_gradient(&next) {
                accepted = Some((next, e, g));
                break;
            }
            delta /= 2.0;
        }
        let Some((next, e, g)) = accepted else {
            termination = Termination::StepFailure;
            break;
        };
        x = next;
        eval = e;
        grad = g;
        if (Assignment { p: x.clone() }).polytope_violation(instance) > POLYTOPE_TOLERANCE {
            violations += 1;
        }
        let total = objective.total(&eval);
        trace.push(total);
        if total < best {
            best = total;
            best_x.clone_from(&x);
        }
        best_trace.push(best);
    }

    let relaxed = Assignment { p: best_x };
    let rounded = round_and_repair(&relaxed, instance, objective);
    evaluations += rounded.evaluations;
    let mut chosen = rounded.chosen;
    let mut ev = evaluate_integral(instance, objective, &chosen);
    evaluations += 1;
    // integral vertices visited by the oracle compete with the rounded point
    for v in vertices {
        if v == chosen {
            continue;
        }
        let cand = evaluate_integral(instance, objective, &v);
        evaluations += 1;
        if better(&cand, &ev) {
            chosen = v;
            ev = cand;
        }
    }
    Ok(OptimizerReport {
        method,
        relaxed: Some(relaxed),
        chosen,
        objective: ev.objective,
        feasible: ev.feasible,
        flow_values: ev.flow_values,
        trace,
        best_trace,
        termination,
        polytope_violations: violations,
        evaluations,
        elapsed: clock.elapsed(),
    })
}
