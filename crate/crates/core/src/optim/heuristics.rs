use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{evaluate_integral, Assignment, Method, OptimizerReport, Termination};
use crate::netmodel::{PriorityMode, ProblemInstance};
use crate::objective::CompiledObjective;

/// Result of rounding a relaxed assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub chosen: Vec<usize>,
    /// Capacity cap respected after repair.
    pub feasible: bool,
    pub moves: usize,
    pub evaluations: usize,
}

/// Constraint memberships of every variable: `(constraint, rate)`.
fn memberships(instance: &ProblemInstance) -> Vec<Vec<(usize, f64)>> {
    let mut touched = vec![Vec::new(); instance.var_count()];
    for (c, con) in instance.constraints().iter().enumerate() {
        for &(v, r) in &con.members {
            touched[v].push((c, r));
        }
    }
    touched
}

fn loads(instance: &ProblemInstance, touched: &[Vec<(usize, f64)>], chosen: &[usize]) -> Vec<f64> {
    let mut load = vec![0.0; instance.constraints().len()];
    for &v in chosen {
        for &(c, r) in &touched[v] {
            load[c] += r;
        }
    }
    load
}

fn rate_in(touched: &[Vec<(usize, f64)>], v: usize, c: usize) -> f64 {
    touched[v]
        .iter()
        .filter(|&&(cc, _)| cc == c)
        .map(|&(_, r)| r)
        .sum()
}

/// Per-flow argmax, then moves flows off overloaded resources: the flow with
/// the largest rate there goes to the alternative with the smallest delay
/// bound that lowers the load, preferring moves that overload nothing else.
pub fn round_and_repair(
    x: &Assignment,
    instance: &ProblemInstance,
    objective: &CompiledObjective,
) -> RoundOutcome {
    let mut chosen = x.argmax(instance);
    let touched = memberships(instance);
    let cons = instance.constraints();
    let limit: Vec<f64> = cons
        .iter()
        .map(|c| instance.utilization_cap() * c.capacity)
        .collect();
    let mut moves = 0;
    let mut evaluations = 0;

    for _ in 0..instance.flows().len().max(1) {
        let overloaded: Vec<usize> = loads(instance, &touched, &chosen)
            .iter()
            .enumerate()
            .filter(|&(c, &l)| l > limit[c])
            .map(|(c, _)| c)
            .collect();
        if overloaded.is_empty() {
            break;
        }
        let mut moved = false;
        for c in overloaded {
            let load = loads(instance, &touched, &chosen);
            if load[c] <= limit[c] {
                continue;
            }
            let mut users: Vec<(usize, f64)> = chosen
                .iter()
                .enumerate()
                .map(|(i, &v)| (i, rate_in(&touched, v, c)))
                .filter(|&(_, r)| r > 0.0)
                .collect();
            users.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

            'users: for (i, r) in users {
                let current = chosen[i];
                let mut best: Option<(bool, f64, usize)> = None;
                for v in instance.blocks()[i].clone() {
                    if v == current || rate_in(&touched, v, c) >= r {
                        continue;
                    }
                    chosen[i] = v;
                    let after = loads(instance, &touched, &chosen);
                    let spills = after
                        .iter()
                        .enumerate()
                        .any(|(cc, &l)| cc != c && l > limit[cc] && l > load[cc]);
                    evaluations += 1;
                    let delay = objective
                        .evaluate(&instance.one_hot(&chosen))
                        .map_or(f64::INFINITY, |e| e.flow_values[i]);
                    chosen[i] = current;
                    let key = (spills, delay, v);
                    if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                        best = Some(key);
                    }
                }
                if let Some((_, _, v)) = best {
                    chosen[i] = v;
                    moves += 1;
                    moved = true;
                    break 'users;
                }
            }
        }
        if !moved {
            break;
        }
    }
    let feasible = instance.capacity_excess(&instance.one_hot(&chosen)) == 0.0;
    RoundOutcome {
        chosen,
        feasible,
        moves,
        evaluations,
    }
}

/// Best feasible combination among `budget` uniform draws.
pub fn random_search(
    instance: &ProblemInstance,
    objective: &CompiledObjective,
    budget: usize,
    seed: u64,
) -> OptimizerReport {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut first: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut best_trace = Vec::new();
    let budget = budget.max(1);
    for _ in 0..budget {
        let chosen: Vec<usize> = instance
            .blocks()
            .iter()
            .map(|b| rng.random_range(b.clone()))
            .collect();
        let ev = evaluate_integral(instance, objective, &chosen);
        let value = match (ev.feasible, ev.objective) {
            (true, Some(v)) => v,
            _ => f64::INFINITY,
        };
        trace.push(value);
        if best.as_ref().is_none_or(|(b, _)| value < *b) && value.is_finite() {
            best = Some((value, chosen.clone()));
        }
        best_trace.push(best.as_ref().map_or(f64::INFINITY, |b| b.0));
        first.get_or_insert(chosen);
    }
    let chosen = best
        .map(|(_, c)| c)
        .or(first)
        .expect("budget is at least one");
    let ev = evaluate_integral(instance, objective, &chosen);
    OptimizerReport {
        method: Method::Random,
        relaxed: None,
        chosen,
        objective: ev.objective,
        feasible: ev.feasible,
        flow_values: ev.flow_values,
        trace,
        best_trace,
        termination: Termination::BudgetExhausted,
        polytope_violations: 0,
        evaluations: budget + 1,
        elapsed: clock.elapsed(),
    }
}

fn argmin_per_block(instance: &ProblemInstance, key: impl Fn(usize) -> f64) -> Vec<usize> {
    let keys: Vec<f64> = (0..instance.var_count()).map(key).collect();
    instance
        .blocks()
        .iter()
        .map(|b| {
            b.clone()
                .fold(b.start, |best, v| if keys[v] < keys[best] { v } else { best })
        })
        .collect()
}

fn vfs_by_var(instance: &ProblemInstance) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); instance.var_count()];
    for (i, vf) in instance.virtual_flows().iter().enumerate() {
        out[vf.var].push(i);
    }
    out
}

/// Fewest servers per flow (summed over destinations). Ties go to the lowest
/// alternative and, within it, to the highest priority.
pub fn shortest_path_hops(instance: &ProblemInstance) -> Vec<usize> {
    let by_var = vfs_by_var(instance);
    let vfs = instance.virtual_flows();
    argmin_per_block(instance, |v| {
        by_var[v].iter().map(|&i| vfs[i].path.len()).sum::<usize>() as f64
    })
}

/// Smallest cross-traffic-free bound `Σ L + B / min R` per flow, averaged
/// over destinations.
pub fn shortest_path_mindelay(instance: &ProblemInstance) -> Vec<usize> {
    let by_var = vfs_by_var(instance);
    let vfs = instance.virtual_flows();
    let graph = instance.graph();
    let curve = |s: usize| match instance.priority_mode() {
        PriorityMode::Configured => graph.server(s).service,
        PriorityMode::StrictLeftover => graph.port_service(graph.server(s).port),
    };
    argmin_per_block(instance, |v| {
        let burst = instance.flows()[instance.vars()[v].flow].arrival.burst;
        let total: f64 = by_var[v]
            .iter()
            .map(|&i| {
                let path = &vfs[i].path;
                let latency: f64 = path.iter().map(|&s| curve(s).latency).sum();
                let min_rate = path
                    .iter()
                    .map(|&s| curve(s).rate)
                    .fold(f64::INFINITY, f64::min);
                latency + burst / min_rate
            })
            .sum();
        total / by_var[v].len().max(1) as f64
    })
}
