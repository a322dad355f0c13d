//! Random instances on layered DAGs, dataset statistics and the exhaustive
//! enumeration oracle.

mod enumerate;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::paths::k_shortest_paths;
use crate::netmodel::{
    FlowEntry, InstanceFile, PriorityMode, ProblemInstance, ValidationError,
    DEFAULT_UTILIZATION_CAP,
};

pub use enumerate::{enumerate, EnumerateOptions, Enumeration, DEFAULT_ENUMERATION_LIMIT};

const MAX_DRAWS: usize = 100;
const MAX_RESCALES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("no feasible instance after {0} draws")]
    NoFeasibleInstance(usize),
    #[error("{count} combinations exceed the enumeration limit {limit}")]
    TooManyCombinations { count: u128, limit: u128 },
    #[error("no feasible combination")]
    NoFeasibleCombination,
}

/// Inclusive range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: PartialOrd + Copy> Span<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Span { lo, hi }
    }

    fn valid(&self) -> bool {
        self.lo <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    /// Number of ports (physical servers).
    pub servers: Span<usize>,
    pub flows: Span<usize>,
    pub layers: Span<usize>,
    /// Probability of each forward edge between two layers.
    pub edge_density: f64,
    pub server_rate: Span<f64>,
    pub server_latency: Span<f64>,
    pub flow_rate: Span<f64>,
    pub flow_burst: Span<f64>,
    /// Candidate paths per flow.
    pub alternatives: usize,
    /// Priority levels per port; every flow may use all of them.
    pub priorities: u32,
    pub priority_mode: PriorityMode,
    pub utilization_cap: f64,
    /// Deadline as a multiple of the flow's best cross-traffic-free bound.
    pub deadline_factor: Option<f64>,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            servers: Span::new(3, 18),
            flows: Span::new(3, 21),
            layers: Span::new(2, 4),
            edge_density: 0.5,
            server_rate: Span::new(50.0, 100.0),
            server_latency: Span::new(0.001, 0.01),
            flow_rate: Span::new(0.1, 1.0),
            flow_burst: Span::new(0.1, 1.0),
            alternatives: 3,
            priorities: 1,
            priority_mode: PriorityMode::Configured,
            utilization_cap: DEFAULT_UTILIZATION_CAP,
            deadline_factor: None,
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidSpec(m.to_string()));
        if !self.servers.valid() || self.servers.lo < 2 {
            return bad("server range must be non-empty with at least 2 servers");
        }
        if !self.flows.valid() || self.flows.lo == 0 {
            return bad("flow range must be non-empty with at least 1 flow");
        }
        if !self.layers.valid() || self.layers.lo < 2 {
            return bad("layer range must be non-empty with at least 2 layers");
        }
        if !(self.edge_density > 0.0 && self.edge_density <= 1.0) {
            return bad("edge density must lie in (0, 1]");
        }
        for (name, s) in [
            ("server rate", self.server_rate),
            ("server latency", self.server_latency),
            ("flow rate", self.flow_rate),
            ("flow burst", self.flow_burst),
        ] {
            if !s.valid() || s.lo < 0.0 || !s.hi.is_finite() {
                return bad(&format!("{name} range must be non-empty and non-negative"));
            }
        }
        if self.server_rate.lo <= 0.0 || self.flow_rate.lo <= 0.0 {
            return bad("rates must be positive");
        }
        if self.alternatives == 0 || self.priorities == 0 {
            return bad("need at least one alternative and one priority level");
        }
        if !(self.utilization_cap > 0.0 && self.utilization_cap <= 1.0) {
            return bad("utilization cap must lie in (0, 1]");
        }
        if self.deadline_factor.is_some_and(|d| !(d > 0.0)) {
            return bad("deadline factor must be positive");
        }
        Ok(())
    }
}

/// A generated instance with the document it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub file: InstanceFile,
    pub instance: ProblemInstance,
}

fn uniform(rng: &mut ChaCha8Rng, s: Span<f64>) -> f64 {
    if s.lo == s.hi {
        s.lo
    } else {
        rng.random_range(s.lo..s.hi)
    }
}

fn server_id(port: usize, level: u32, levels: u32) -> String {
    if levels == 1 {
        format!("s{port}")
    } else {
        format!("s{port}.{level}")
    }
}

/// Layered DAG: nodes spread over layers, forward edges with probability
/// `density`, then patched so every node but the last layer's has a
/// successor and every node but the first layer's a predecessor.
fn layered_dag(rng: &mut ChaCha8Rng, n: usize, layers: usize, density: f64) -> Vec<Vec<usize>> {
    let mut layer_of: Vec<usize> = (0..n).map(|i| if i < layers { i } else { 0 }).collect();
    for l in layer_of.iter_mut().skip(layers) {
        *l = rng.random_range(0..layers);
    }
    layer_of.sort_unstable();
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in 0..n {
            if layer_of[v] > layer_of[u] && rng.random_bool(density) {
                adj[u].push(v);
            }
        }
    }
    let last = layers - 1;
    for u in 0..n {
        if layer_of[u] < last && adj[u].is_empty() {
            let next: Vec<usize> = (0..n).filter(|&v| layer_of[v] == layer_of[u] + 1).collect();
            adj[u].push(next[rng.random_range(0..next.len())]);
        }
    }
    for v in 0..n {
        let has_pred = adj.iter().any(|s| s.contains(&v));
        if layer_of[v] > 0 && !has_pred {
            let prev: Vec<usize> = (0..n).filter(|&u| layer_of[u] + 1 == layer_of[v]).collect();
            let u = prev[rng.random_range(0..prev.len())];
            adj[u].push(v);
        }
    }
    for s in &mut adj {
        s.sort_unstable();
    }
    adj
}

fn reachable_from(adj: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![source];
    seen[source] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !std::mem::replace(&mut seen[v], true) {
                stack.push(v);
            }
        }
    }
    (0..adj.len()).filter(|&v| v != source && seen[v]).collect()
}

fn draw(spec: &GenSpec, rng: &mut ChaCha8Rng) -> InstanceFile {
    let n = rng.random_range(spec.servers.lo..=spec.servers.hi);
    let layers = rng.random_range(spec.layers.lo..=spec.layers.hi).min(n);
    let adj = layered_dag(rng, n, layers, spec.edge_density);
    let levels = spec.priorities;

    let mut file = InstanceFile::new()
        .utilization_cap(spec.utilization_cap)
        .priority_mode(spec.priority_mode);
    let mut curves = Vec::with_capacity(n);
    for p in 0..n {
        let rate = uniform(rng, spec.server_rate);
        let latency = uniform(rng, spec.server_latency);
        curves.push((rate, latency));
        let level_rate = match spec.priority_mode {
            PriorityMode::Configured => rate / levels as f64,
            PriorityMode::StrictLeftover => rate,
        };
        for k in 0..levels {
            file = file.server(&server_id(p, k, levels), &format!("p{p}"), k, level_rate, latency);
        }
    }
    for (u, succ) in adj.iter().enumerate() {
        for &v in succ {
            for k in 0..levels {
                file = file.edge(&server_id(u, k, levels), &server_id(v, k, levels));
            }
        }
    }

    let sources: Vec<usize> = (0..n).filter(|&u| !adj[u].is_empty()).collect();
    let m = rng.random_range(spec.flows.lo..=spec.flows.hi);
    for i in 0..m {
        let source = sources[rng.random_range(0..sources.len())];
        let targets = reachable_from(&adj, source);
        let target = targets[rng.random_range(0..targets.len())];
        let paths = k_shortest_paths(&adj, source, target, spec.alternatives);
        let rate = uniform(rng, spec.flow_rate);
        let burst = uniform(rng, spec.flow_burst);
        let names: Vec<Vec<String>> = paths
            .iter()
            .map(|p| p.iter().map(|&s| server_id(s, 0, levels)).collect())
            .collect();
        let mut flow = FlowEntry::unicast(
            &format!("f{i}"),
            rate,
            burst,
            names.iter().map(|p| p.iter().map(String::as_str).collect()).collect(),
        )
        .priorities(&(0..levels).collect::<Vec<_>>());
        if let Some(factor) = spec.deadline_factor {
            let best = paths
                .iter()
                .map(|p| {
                    let lat: f64 = p.iter().map(|&s| curves[s].1).sum();
                    let min_rate = p
                        .iter()
                        .map(|&s| curves[s].0 / levels as f64)
                        .fold(f64::INFINITY, f64::min);
                    lat + burst / min_rate
                })
                .fold(f64::INFINITY, f64::min);
            flow = flow.deadline(factor * best);
        }
        file = file.flow(flow);
    }
    file
}

/// Draws instances until one validates, halving the flow rates when only the
/// capacity witness fails. Pure function of `spec`.
pub fn generate(spec: &GenSpec) -> Result<Generated, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..MAX_DRAWS {
        let mut file = draw(spec, &mut rng);
        for _ in 0..=MAX_RESCALES {
            match ProblemInstance::from_file(&file) {
                Ok(instance) => return Ok(Generated { file, instance }),
                Err(errs)
                    if errs
                        .0
                        .iter()
                        .all(|e| matches!(e, ValidationError::NoFeasibleWitness(_))) =>
                {
                    for f in &mut file.flows {
                        f.rate *= 0.5;
                    }
                }
                Err(_) => break,
            }
        }
    }
    Err(GenError::NoFeasibleInstance(MAX_DRAWS))
}

/// Size figures of one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceStats {
    pub servers: usize,
    pub ports: usize,
    pub flows: usize,
    pub virtual_flows: usize,
    pub variables: usize,
    /// `log10 Π_i |paths_i|`.
    pub log10_path_combinations: f64,
    /// `log10 Π_i |paths_i × priorities_i|`.
    pub log10_combinations: f64,
}

pub fn stats(instance: &ProblemInstance) -> InstanceStats {
    InstanceStats {
        servers: instance.graph().servers().len(),
        ports: instance.graph().ports().len(),
        flows: instance.flows().len(),
        virtual_flows: instance.virtual_flows().len(),
        variables: instance.var_count(),
        log10_path_combinations: instance
            .flows()
            .iter()
            .map(|f| (f.alternatives() as f64).log10())
            .sum(),
        log10_combinations: instance
            .blocks()
            .iter()
            .map(|b| (b.len() as f64).log10())
            .sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub min: f64,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mid = v.len() / 2;
        let median = if v.len() % 2 == 1 {
            v[mid]
        } else {
            (v[mid - 1] + v[mid]) / 2.0
        };
        Some(Summary {
            min: v[0],
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median,
            max: v[v.len() - 1],
        })
    }
}

/// One summary row per statistic over a dataset.
pub fn dataset_stats(all: &[InstanceStats]) -> Vec<(&'static str, Summary)> {
    type Column = (&'static str, fn(&InstanceStats) -> f64);
    let rows: [Column; 5] = [
        ("servers", |s| s.servers as f64),
        ("flows", |s| s.flows as f64),
        ("virtual flows", |s| s.virtual_flows as f64),
        ("path combinations (log10)", |s| s.log10_path_combinations),
        ("combinations (log10)", |s| s.log10_combinations),
    ];
    rows.iter()
        .filter_map(|(name, get)| {
            Summary::of(&all.iter().map(get).collect::<Vec<_>>()).map(|s| (*name, s))
        })
        .collect()
}
