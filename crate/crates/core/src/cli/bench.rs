use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{load_instance, optimize, ObjectiveArgs};
use crate::gen::{enumerate, EnumerateOptions};
use crate::netmodel::ProblemInstance;
use crate::optim::{metrics, Method, METRICS_BASELINE};

/// Relative slack within which a method counts as having found the optimum.
const OPTIMUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BenchOptions {
    /// The hop-count baseline is added when missing.
    pub methods: Vec<Method>,
    /// Deterministic methods run once and count for every seed.
    pub seeds: Vec<u64>,
    pub budget: usize,
    /// `tasks` sets how many instances run at once.
    pub objective: ObjectiveArgs,
    /// Enumerate instances with at most this many combinations.
    pub limit: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    pub objective: Option<f64>,
    pub feasible: bool,
    pub evaluations: usize,
    pub error: Option<String>,
    /// Whether the enumerated optimum was reached, when one is known.
    pub optimum_found: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub instance: String,
    /// Failure that stopped this instance before any method ran.
    pub error: Option<String>,
    pub optimum: Option<f64>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: Method,
    pub runs: usize,
    pub feasible: usize,
    pub mean_gap_shortest_path: Option<f64>,
    pub mean_gap_best: Option<f64>,
    pub best_count: usize,
    /// Share of enumerated runs that reached the optimum.
    pub optimum_found: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub instances: Vec<InstanceRecord>,
}

fn run_instance(path: &Path, methods: &[Method], opts: &BenchOptions) -> InstanceRecord {
    let mut record = InstanceRecord {
        instance: path.display().to_string(),
        error: None,
        optimum: None,
        runs: Vec::new(),
    };
    let objective = ObjectiveArgs {
        tasks: 1,
        ..opts.objective.clone()
    };
    let instance: ProblemInstance = match load_instance(path, objective.rho) {
        Ok(i) => i,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    if let Some(limit) = opts.limit.filter(|&l| instance.combination_count() <= l) {
        let optimum = objective.compile(&instance).ok().and_then(|obj| {
            enumerate(
                &instance,
                &obj,
                &EnumerateOptions {
                    limit,
                    tasks: 1,
                    ..EnumerateOptions::default()
                },
            )
            .ok()
        });
        record.optimum = optimum.map(|e| e.objective);
    }
    for &m in methods {
        let seeds: &[u64] = if m.is_stochastic() {
            &opts.seeds
        } else {
            &opts.seeds[..1]
        };
        for &seed in seeds {
            let run = match optimize(&instance, m, seed, opts.budget, &objective) {
                Ok((report, _)) => RunRecord {
                    method: m,
                    seed,
                    objective: report.objective,
                    feasible: report.feasible,
                    evaluations: report.evaluations,
                    error: None,
                    optimum_found: record.optimum.map(|opt| {
                        report.feasible
                            && report.objective.is_some_and(|v| {
                                v <= opt + OPTIMUM_TOLERANCE * opt.abs()
                            })
                    }),
                },
                Err(e) => RunRecord {
                    method: m,
                    seed,
                    objective: None,
                    feasible: false,
                    evaluations: 0,
                    error: Some(e.to_string()),
                    optimum_found: record.optimum.map(|_| false),
                },
            };
            record.runs.push(run);
        }
    }
    record
}

/// Runs every method over every instance file, instances in parallel.
/// The report does not depend on the degree of parallelism.
pub fn bench(files: &[PathBuf], opts: &BenchOptions) -> BenchReport {
    let mut methods = opts.methods.clone();
    if !methods.contains(&METRICS_BASELINE) {
        methods.push(METRICS_BASELINE);
    }
    methods.sort();
    methods.dedup();
    let mut opts = opts.clone();
    if opts.seeds.is_empty() {
        opts.seeds.push(0);
    }
    let work = || -> Vec<InstanceRecord> {
        files
            .par_iter()
            .map(|p| run_instance(p, &methods, &opts))
            .collect()
    };
    let instances = if opts.objective.tasks > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.objective.tasks)
            .build()
            .expect("failed to build bench pool")
            .install(work)
    } else {
        work()
    };

    // one metrics entry per (instance, seed); deterministic methods repeat
    let mut entries: Vec<BTreeMap<Method, Option<f64>>> = Vec::new();
    let mut optimum: BTreeMap<Method, (usize, usize)> = BTreeMap::new();
    let mut runs: BTreeMap<Method, usize> = BTreeMap::new();
    for rec in instances.iter().filter(|r| r.error.is_none()) {
        for &seed in &opts.seeds {
            let mut entry = BTreeMap::new();
            for &m in &methods {
                let run = rec
                    .runs
                    .iter()
                    .find(|r| r.method == m && (r.seed == seed || !m.is_stochastic()));
                if let Some(r) = run {
                    entry.insert(m, r.feasible.then_some(r.objective).flatten());
                    *runs.entry(m).or_default() += 1;
                    if let Some(found) = r.optimum_found {
                        let o = optimum.entry(m).or_default();
                        o.0 += usize::from(found);
                        o.1 += 1;
                    }
                }
            }
            entries.push(entry);
        }
    }
    let rows = metrics(&entries)
        .map(|ms| {
            ms.into_iter()
                .map(|m| BenchRow {
                    method: m.method,
                    runs: runs.get(&m.method).copied().unwrap_or(0),
                    feasible: m.feasible,
                    mean_gap_shortest_path: m.mean_gap_shortest_path,
                    mean_gap_best: m.mean_gap_best,
                    best_count: m.best_count,
                    optimum_found: optimum
                        .get(&m.method)
                        .map(|&(hit, n)| hit as f64 / n as f64),
                })
                .collect()
        })
        .unwrap_or_default();
    BenchReport { rows, instances }
}

impl BenchReport {
    /// Aligned text table of the summary rows, then any failures.
    pub fn table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{:.2}%", 100.0 * v));
        let with_optimum = self.rows.iter().any(|r| r.optimum_found.is_some());
        let mut s = format!(
            "{:<22}{:>6}{:>10}{:>16}{:>14}{:>8}",
            "method", "runs", "feasible", "RelGapShortest", "RelGapBest", "best"
        );
        if with_optimum {
            let _ = write!(s, "{:>11}", "optimum");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(
                s,
                "{:<22}{:>6}{:>10}{:>16}{:>14}{:>8}",
                r.method.name(),
                r.runs,
                r.feasible,
                pct(r.mean_gap_shortest_path),
                pct(r.mean_gap_best),
                r.best_count
            );
            if with_optimum {
                let _ = write!(s, "{:>11}", pct(r.optimum_found));
            }
            s.push('\n');
        }
        for rec in &self.instances {
            if let Some(e) = &rec.error {
                let _ = writeln!(s, "failed: {}: {e}", rec.instance);
            }
            for run in &rec.runs {
                if let Some(e) = &run.error {
                    let _ = writeln!(
                        s,
                        "failed: {} {} seed {}: {e}",
                        rec.instance, run.method, run.seed
                    );
                }
            }
        }
        s
    }
}
