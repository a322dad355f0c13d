use std::time::Instant;

use super::fw::stable_start;
use super::{
    evaluate_integral, random_start, round_and_repair, Assignment, Method, OptimError,
    OptimizerReport, Termination, DEFAULT_BUDGET, POLYTOPE_TOLERANCE,
};
use crate::netmodel::ProblemInstance;
use crate::objective::CompiledObjective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Objective evaluations, including the initial simplex.
    pub budget: usize,
    pub seed: u64,
    /// Fraction of the way toward each vertex used for the initial simplex.
    pub initial_step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            budget: DEFAULT_BUDGET,
            seed: 0,
            initial_step: 0.5,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

/// Clamps to `[0, 1]` and rescales every block to sum 1; an all-zero block
/// becomes uniform.
fn project(p: &mut [f64], instance: &ProblemInstance) {
    for b in instance.blocks() {
        let block = &mut p[b.clone()];
        for v in block.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let s: f64 = block.iter().sum();
        let n = block.len() as f64;
        for v in block.iter_mut() {
            *v = if s > 0.0 { *v / s } else { 1.0 / n };
        }
    }
}

struct Counted<'a> {
    objective: &'a CompiledObjective,
    instance: &'a ProblemInstance,
    evaluations: usize,
    violations: usize,
}

impl Counted<'_> {
    fn eval(&mut self, p: &[f64]) -> f64 {
        self.evaluations += 1;
        if (Assignment { p: p.to_vec() }).polytope_violation(self.instance) > POLYTOPE_TOLERANCE {
            self.violations += 1;
        }
        self.objective
            .evaluate(p)
            .map_or(f64::INFINITY, |e| self.objective.total(&e))
    }
}

fn towards(from: &[f64], to: &[f64], t: f64, instance: &ProblemInstance) -> Vec<f64> {
    let mut p: Vec<f64> = from
        .iter()
        .zip(to)
        .map(|(&a, &b)| a + t * (b - a))
        .collect();
    project(&mut p, instance);
    p
}

/// Nelder-Mead on the relaxed variables, projecting every trial point back
/// onto the simplices, followed by rounding and repair.
pub fn nelder_mead(
    instance: &ProblemInstance,
    objective: &mut CompiledObjective,
    opts: &NelderMeadOptions,
) -> Result<OptimizerReport, OptimError> {
    let clock = Instant::now();
    let (start, start_evals) = stable_start(instance, objective, &random_start(instance, opts.seed))?;
    let free: Vec<usize> = instance
        .blocks()
        .iter()
        .filter(|b| b.len() > 1)
        .flat_map(|b| b.clone())
        .collect();
    let mut f = Counted {
        objective,
        instance,
        evaluations: start_evals,
        violations: 0,
    };
    let mut trace = Vec::new();
    let mut best_trace = Vec::new();

    let mut termination = Termination::BudgetExhausted;
    let mut simplex: Vec<(f64, Vec<f64>)> = vec![(f.eval(&start.p), start.p.clone())];
    if free.is_empty() {
        termination = Termination::Trivial;
    } else if free.len() < opts.budget {
        for &v in &free {
            let mut vertex = start.p.clone();
            let block = instance.blocks()[instance.vars()[v].flow].clone();
            for u in block {
                let target = if u == v { 1.0 } else { 0.0 };
                vertex[u] += opts.initial_step * (target - vertex[u]);
            }
            project(&mut vertex, instance);
            simplex.push((f.eval(&vertex), vertex));
        }
    }

    let n = simplex.len().saturating_sub(1);
    while n > 0 && f.evaluations < opts.budget {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        trace.push(simplex[0].0);
        best_trace.push(simplex[0].0.min(*best_trace.last().unwrap_or(&f64::INFINITY)));
        let spread = simplex[n].0 - simplex[0].0;
        if spread.abs() < 1e-12 && simplex[0].0.is_finite() {
            termination = Termination::Converged;
            break;
        }
        let mut centroid = vec![0.0; simplex[0].1.len()];
        for (_, p) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = towards(&centroid, &worst.1, -opts.reflection, instance);
        let fr = f.eval(&reflected);
        if fr < simplex[0].0 {
            let expanded = towards(&centroid, &reflected, opts.expansion, instance);
            let fe = f.eval(&expanded);
            simplex[n] = if fe < fr {
                (fe, expanded)
            } else {
                (fr, reflected)
            };
            continue;
        }
        if fr < simplex[n - 1].0 {
            simplex[n] = (fr, reflected);
            continue;
        }
        let (contracted, accept_below) = if fr < worst.0 {
            (towards(&centroid, &reflected, opts.contraction, instance), fr)
        } else {
            (towards(&centroid, &worst.1, opts.contraction, instance), worst.0)
        };
        let fc = f.eval(&contracted);
        if fc < accept_below || (fc == accept_below && fr < worst.0) {
            simplex[n] = (fc, contracted);
            continue;
        }
        let best = simplex[0].1.clone();
        for entry in simplex.iter_mut().skip(1) {
            if f.evaluations >= opts.budget {
                break;
            }
            let p = towards(&best, &entry.1, opts.shrink, instance);
            *entry = (f.eval(&p), p);
        }
    }
    simplex.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (evaluations, violations) = (f.evaluations, f.violations);
    let relaxed = Assignment {
        p: simplex.swap_remove(0).1,
    };
    let rounded = round_and_repair(&relaxed, instance, objective);
    let ev = evaluate_integral(instance, objective, &rounded.chosen);
    Ok(OptimizerReport {
        method: Method::NelderMead,
        relaxed: Some(relaxed),
        chosen: rounded.chosen,
        objective: ev.objective,
        feasible: ev.feasible,
        flow_values: ev.flow_values,
        trace,
        best_trace,
        termination,
        polytope_violations: violations,
        evaluations: evaluations + rounded.evaluations + 1,
        elapsed: clock.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::blocks_instance;
    use super::*;
    use crate::objective::ObjectiveSpec;

    #[test]
    fn projection_restores_blocks() {
        let inst = blocks_instance(&[3, 1]);
        let mut p = vec![1.4, -0.2, 0.6, 0.3];
        project(&mut p, &inst);
        assert_eq!(p, vec![1.0 / 1.6, 0.0, 0.6 / 1.6, 1.0]);
        let mut z = vec![-1.0, -1.0, -1.0, 0.0];
        project(&mut z, &inst);
        assert_eq!(z[3], 1.0);
        assert!((z[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn forced_blocks_return_immediately() {
        let inst = blocks_instance(&[1, 1]);
        let mut obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1).unwrap();
        let r = nelder_mead(&inst, &mut obj, &NelderMeadOptions::default()).unwrap();
        assert_eq!(r.termination, Termination::Trivial);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn finds_lowest_latency_and_is_deterministic() {
        let inst = blocks_instance(&[3, 2]);
        let opts = NelderMeadOptions {
            seed: 5,
            ..NelderMeadOptions::default()
        };
        let mut obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1).unwrap();
        let a = nelder_mead(&inst, &mut obj, &opts).unwrap();
        assert_eq!(a.chosen, vec![0, 3]);
        assert!(a.evaluations <= opts.budget + a.chosen.len() * 3 + 2);
        assert_eq!(a.polytope_violations, 0);
        let mut obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1).unwrap();
        let b = nelder_mead(&inst, &mut obj, &opts).unwrap();
        assert_eq!((a.trace, a.chosen), (b.trace, b.chosen));
    }
}
