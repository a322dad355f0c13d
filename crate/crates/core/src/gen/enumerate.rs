use rayon::prelude::*;

use super::GenError;
use crate::netmodel::ProblemInstance;
use crate::objective::CompiledObjective;

pub const DEFAULT_ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerateOptions {
    pub limit: u128,
    /// Worker threads; 0 uses the global pool.
    pub tasks: usize,
    /// Keep every feasible combination, sorted by objective.
    pub ranking: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            limit: DEFAULT_ENUMERATION_LIMIT,
            tasks: 0,
            ranking: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    /// Selected variable per flow of the optimum.
    pub chosen: Vec<usize>,
    pub objective: f64,
    pub evaluated: u64,
    pub feasible: u64,
    /// `(objective, chosen)` of every feasible combination, best first.
    pub ranking: Option<Vec<(f64, Vec<usize>)>>,
}

/// Combination `index` in mixed radix, the first flow varying slowest.
fn decode(instance: &ProblemInstance, mut index: u64) -> Vec<usize> {
    let blocks = instance.blocks();
    let mut chosen = vec![0; blocks.len()];
    for (i, b) in blocks.iter().enumerate().rev() {
        let n = b.len() as u64;
        chosen[i] = b.start + (index % n) as usize;
        index /= n;
    }
    chosen
}

fn value(instance: &ProblemInstance, objective: &CompiledObjective, chosen: &[usize]) -> Option<f64> {
    let x = instance.one_hot(chosen);
    if instance.capacity_excess(&x) > 0.0 {
        return None;
    }
    let e = objective.evaluate(&x).ok()?;
    e.feasible(instance, &x).then_some(e.objective)
}

/// Exhaustive minimum of the bare objective over every feasible integral
/// combination. Ties go to the lowest combination index, so the result does
/// not depend on the thread count.
pub fn enumerate(
    instance: &ProblemInstance,
    objective: &CompiledObjective,
    opts: &EnumerateOptions,
) -> Result<Enumeration, GenError> {
    let count = instance.combination_count();
    if count > opts.limit || count > u64::MAX as u128 {
        return Err(GenError::TooManyCombinations {
            count,
            limit: opts.limit,
        });
    }
    let count = count as u64;
    let work = || -> Vec<(f64, u64)> {
        (0..count)
            .into_par_iter()
            .filter_map(|i| value(instance, objective, &decode(instance, i)).map(|v| (v, i)))
            .collect()
    };
    let mut found = if opts.tasks > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.tasks)
            .build()
            .expect("failed to build enumeration pool")
            .install(work)
    } else {
        work()
    };
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let &(objective_value, best) = found.first().ok_or(GenError::NoFeasibleCombination)?;
    Ok(Enumeration {
        chosen: decode(instance, best),
        objective: objective_value,
        evaluated: count,
        feasible: found.len() as u64,
        ranking: opts.ranking.then(|| {
            found
                .iter()
                .map(|&(v, i)| (v, decode(instance, i)))
                .collect()
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{FlowEntry, InstanceFile};
    use crate::objective::ObjectiveSpec;

    fn two_routes(rate_a: f64, rate_b: f64) -> ProblemInstance {
        let paths = || vec![vec!["in", "fast", "out"], vec!["in", "slow", "out"]];
        let f = InstanceFile::new()
            .server("in", "pi", 0, 100.0, 0.0)
            .server("fast", "pf", 0, 10.0, 0.1)
            .server("slow", "ps", 0, 10.0, 2.0)
            .server("out", "po", 0, 100.0, 0.0)
            .edge("in", "fast")
            .edge("in", "slow")
            .edge("fast", "out")
            .edge("slow", "out")
            .flow(FlowEntry::unicast("a", rate_a, 1.0, paths()))
            .flow(FlowEntry::unicast("b", rate_b, 1.0, paths()));
        ProblemInstance::from_file(&f).unwrap()
    }

    #[test]
    fn single_flow_takes_the_minimum() {
        let f = InstanceFile::new()
            .server("in", "pi", 0, 100.0, 0.0)
            .server("fast", "pf", 0, 10.0, 0.1)
            .server("slow", "ps", 0, 10.0, 2.0)
            .server("out", "po", 0, 100.0, 0.0)
            .edge("in", "fast")
            .edge("in", "slow")
            .edge("fast", "out")
            .edge("slow", "out")
            .flow(FlowEntry::unicast(
                "a",
                1.0,
                1.0,
                vec![vec!["in", "slow", "out"], vec!["in", "fast", "out"]],
            ));
        let inst = ProblemInstance::from_file(&f).unwrap();
        let obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1).unwrap();
        let e = enumerate(&inst, &obj, &EnumerateOptions::default()).unwrap();
        assert_eq!(e.chosen, vec![1]);
        assert_eq!(e.evaluated, 2);
    }

    #[test]
    fn ranking_and_thread_independence() {
        let inst = two_routes(6.0, 5.0);
        let obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1).unwrap();
        let opts = EnumerateOptions {
            ranking: true,
            tasks: 1,
            ..EnumerateOptions::default()
        };
        let one = enumerate(&inst, &obj, &opts).unwrap();
        let four = enumerate(&inst, &obj, &EnumerateOptions { tasks: 4, ..opts }).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.feasible, 2);
        let ranking = one.ranking.unwrap();
        assert!(ranking[0].0 <= ranking[1].0);
    }

    #[test]
    fn unmeetable_deadline() {
        let f = InstanceFile::new()
            .server("a", "pa", 0, 10.0, 1.0)
            .flow(FlowEntry::unicast("f1", 4.0, 1.0, vec![vec!["a"]]))
            .flow(FlowEntry::unicast("f2", 4.0, 1.0, vec![vec!["a"]]));
        let mut inst_file = f;
        inst_file.flows[1].deadline = Some(1e-6);
        let inst = ProblemInstance::from_file(&inst_file).unwrap();
        let obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1).unwrap();
        assert_eq!(
            enumerate(&inst, &obj, &EnumerateOptions::default()),
            Err(GenError::NoFeasibleCombination)
        );
    }

    #[test]
    fn limit_is_enforced() {
        let inst = two_routes(1.0, 1.0);
        let obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1).unwrap();
        let opts = EnumerateOptions {
            limit: 3,
            ..EnumerateOptions::default()
        };
        assert!(matches!(
            enumerate(&inst, &obj, &opts),
            Err(GenError::TooManyCombinations { count: 4, limit: 3 })
        ));
    }
}
