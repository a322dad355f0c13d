//! Domain model: servers, flows, candidate paths, priority classes and the
//! virtual-flow expansion that turns every (path, priority) alternative of a
//! flow into its own selection variable.
//!
//! A [`ProblemInstance`] is immutable once built. Building it validates the
//! input (feed-forwardness, curve positivity, path connectivity) and computes
//! a greedy capacity witness, so every downstream stage may assume that at
//! least one integral assignment respects the utilization cap.

mod file;
pub mod paths;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{RateLatency, TokenBucket};

pub use file::{FlowEntry, InstanceFile, OptionsEntry, ServerEntry, FILE_VERSION};

/// Default cap ρ on the selectable share of a server's rate.
pub const DEFAULT_UTILIZATION_CAP: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("duplicate server id '{0}'")]
    DuplicateServer(String),
    #[error("duplicate (port, priority level) pair ('{port}', {level})")]
    DuplicatePortLevel { port: String, level: u32 },
    #[error("unknown server id '{0}'")]
    UnknownServer(String),
    #[error("server '{server}': {reason}")]
    InvalidService { server: String, reason: String },
    #[error("flow '{flow}': {reason}")]
    InvalidFlow { flow: String, reason: String },
    #[error("flow '{flow}': path {path:?} is not connected ({from} -> {to} is not an edge)")]
    DisconnectedPath {
        flow: String,
        path: Vec<String>,
        from: String,
        to: String,
    },
    #[error("flow '{flow}': priority level {level} absent at port '{port}'")]
    MissingPriority { flow: String, port: String, level: u32 },
    #[error("cycle detected among {0:?}")]
    Cycle(Vec<String>),
    #[error("no feasible witness: greedy assignment cannot place flow '{0}' under the utilization cap")]
    NoFeasibleWitness(String),
    #[error("utilization cap {0} outside (0, 1]")]
    InvalidCap(f64),
}

/// All problems found while validating an instance.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// How the service of lower priority levels is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorityMode {
    /// Every (port, level) server carries its own configured curve.
    #[default]
    Configured,
    /// Level `k` receives the port curve left over by all strictly
    /// higher-priority traffic at the same port. The port curve is the one
    /// configured on the port's highest-priority server.
    StrictLeftover,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Server {
    pub name: String,
    pub port: usize,
    pub priority_level: u32,
    pub service: RateLatency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerGraph {
    servers: Vec<Server>,
    edges: Vec<(usize, usize)>,
    ports: Vec<String>,
    successors: Vec<Vec<usize>>,
    by_name: HashMap<String, usize>,
    by_port_level: HashMap<(usize, u32), usize>,
}

impl ServerGraph {
    /// `servers` are `(name, port, level, service)`; edges are index pairs.
    pub fn new(
        servers: Vec<(String, String, u32, RateLatency)>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, ValidationErrors> {
        let mut errors = Vec::new();
        let mut ports: Vec<String> = Vec::new();
        let mut port_index: HashMap<String, usize> = HashMap::new();
        let mut by_name = HashMap::new();
        let mut by_port_level = HashMap::new();
        let mut out = Vec::with_capacity(servers.len());
        for (i, (name, port, level, service)) in servers.into_iter().enumerate() {
            if by_name.insert(name.clone(), i).is_some() {
                errors.push(ValidationError::DuplicateServer(name.clone()));
            }
            if !(service.rate > 0.0 && service.rate.is_finite())
                || !(service.latency >= 0.0 && service.latency.is_finite())
            {
                errors.push(ValidationError::InvalidService {
                    server: name.clone(),
                    reason: format!(
                        "requires rate > 0 and latency >= 0, got ({}, {})",
                        service.rate, service.latency
                    ),
                });
            }
            let p = *port_index.entry(port.clone()).or_insert_with(|| {
                ports.push(port.clone());
                ports.len() - 1
            });
            if by_port_level.insert((p, level), i).is_some() {
                errors.push(ValidationError::DuplicatePortLevel { port, level });
            }
            out.push(Server {
                name,
                port: p,
                priority_level: level,
                service,
            });
        }
        let mut successors = vec![Vec::new(); out.len()];
        let mut dedup = BTreeSet::new();
        for &(a, b) in &edges {
            if a >= out.len() || b >= out.len() {
                errors.push(ValidationError::UnknownServer(format!("#{}", a.max(b))));
                continue;
            }
            if dedup.insert((a, b)) {
                successors[a].push(b);
            }
        }
        if !errors.is_empty() {
            return Err(ValidationErrors(errors));
        }
        Ok(ServerGraph {
            servers: out,
            edges,
            ports,
            successors,
            by_name,
            by_port_level,
        })
    }

    pub fn servers(&self) -> &[Server] {
        &self.servers
    }

    pub fn server(&self, idx: usize) -> &Server {
        &self.servers[idx]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn ports(&self) -> &[String] {
        &self.ports
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn at(&self, port: usize, level: u32) -> Option<usize> {
        self.by_port_level.get(&(port, level)).copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.successors[a].contains(&b)
    }

    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.successors[idx]
    }

    /// Port-level adjacency: an edge between any two servers of two ports.
    pub fn port_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.ports.len()];
        for &(a, b) in &self.edges {
            let (pa, pb) = (self.servers[a].port, self.servers[b].port);
            if pa != pb {
                adj[pa].insert(pb);
            }
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// The configured curve of the port's highest-priority server.
    pub fn port_service(&self, port: usize) -> RateLatency {
        self.servers
            .iter()
            .filter(|s| s.port == port)
            .min_by_key(|s| s.priority_level)
            .map(|s| s.service)
            .expect("every port has at least one server")
    }

    /// All priority levels present at a port, ascending.
    pub fn levels_at(&self, port: usize) -> Vec<u32> {
        let mut v: Vec<u32> = self
            .servers
            .iter()
            .filter(|s| s.port == port)
            .map(|s| s.priority_level)
            .collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub name: String,
    pub arrival: TokenBucket,
    pub source: usize,
    pub destinations: Vec<usize>,
    /// `candidate_paths[d][j]` is alternative `j` towards destination `d`.
    pub candidate_paths: Vec<Vec<Vec<usize>>>,
    /// Sorted ascending, no duplicates. Level 0 is the highest priority.
    pub allowed_priorities: Vec<u32>,
    pub deadline: Option<f64>,
}

impl Flow {
    pub fn alternatives(&self) -> usize {
        self.candidate_paths.first().map_or(0, Vec::len)
    }

    pub fn is_multicast(&self) -> bool {
        self.destinations.len() > 1
    }
}

/// A copy of a flow bound to one (path alternative, priority, destination).
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualFlow {
    pub flow: usize,
    pub alternative: usize,
    pub priority: u32,
    pub destination: usize,
    /// Server indices, all at `priority`.
    pub path: Vec<usize>,
    pub var: usize,
}

/// The (flow, alternative, priority) choice a selection variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarInfo {
    pub flow: usize,
    pub alternative: usize,
    pub priority: u32,
}

/// `Σ rate·p ≤ ρ·capacity` over the selection variables crossing one resource
/// (a server, or a whole port in strict-priority mode).
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityConstraint {
    pub name: String,
    pub capacity: f64,
    /// `(var, rate)`, one entry per variable.
    pub members: Vec<(usize, f64)>,
}

impl CapacityConstraint {
    pub fn load(&self, x: &[f64]) -> f64 {
        self.members.iter().map(|&(v, r)| r * x[v]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub utilization_cap: f64,
    pub priority_mode: PriorityMode,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            utilization_cap: DEFAULT_UTILIZATION_CAP,
            priority_mode: PriorityMode::Configured,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    graph: ServerGraph,
    flows: Vec<Flow>,
    virtual_flows: Vec<VirtualFlow>,
    vars: Vec<VarInfo>,
    blocks: Vec<Range<usize>>,
    constraints: Vec<CapacityConstraint>,
    options: ModelOptions,
    witness: Vec<usize>,
}

fn map_path(
    graph: &ServerGraph,
    flow: &Flow,
    path: &[usize],
    level: u32,
) -> Result<Vec<usize>, ValidationError> {
    path.iter()
        .map(|&s| {
            let port = graph.server(s).port;
            graph
                .at(port, level)
                .ok_or_else(|| ValidationError::MissingPriority {
                    flow: flow.name.clone(),
                    port: graph.ports()[port].clone(),
                    level,
                })
        })
        .collect()
}

/// Expands one flow into its virtual flows. Variables are numbered from
/// `first_var` in (alternative, priority) order; every destination of one
/// (alternative, priority) choice shares the same variable.
fn expand_flow(
    graph: &ServerGraph,
    flow_idx: usize,
    flow: &Flow,
    first_var: usize,
) -> Result<(Vec<VirtualFlow>, Vec<VarInfo>), ValidationError> {
    let mut vfs = Vec::new();
    let mut vars = Vec::new();
    for j in 0..flow.alternatives() {
        for &k in &flow.allowed_priorities {
            let var = first_var + vars.len();
            vars.push(VarInfo {
                flow: flow_idx,
                alternative: j,
                priority: k,
            });
            for (d, per_dest) in flow.candidate_paths.iter().enumerate() {
                let path = per_dest.get(j).ok_or_else(|| ValidationError::InvalidFlow {
                    flow: flow.name.clone(),
                    reason: format!("no path alternative {j} for destination {d}"),
                })?;
                vfs.push(VirtualFlow {
                    flow: flow_idx,
                    alternative: j,
                    priority: k,
                    destination: d,
                    path: map_path(graph, flow, path, k)?,
                    var,
                });
            }
        }
    }
    Ok((vfs, vars))
}

/// One virtual flow per (flow, alternative, allowed priority, destination).
pub fn expand_virtual_flows(
    flows: &[Flow],
    graph: &ServerGraph,
) -> Result<(Vec<VirtualFlow>, Vec<VarInfo>), ValidationError> {
    let mut vfs = Vec::new();
    let mut vars = Vec::new();
    for (i, f) in flows.iter().enumerate() {
        let (v, info) = expand_flow(graph, i, f, vars.len())?;
        vfs.extend(v);
        vars.extend(info);
    }
    Ok((vfs, vars))
}

/// Splits a multicast flow into partially overlapping unicast virtual flows.
/// `flow_idx` and `first_var` place the result inside a larger instance.
pub fn multicast_to_unicast(
    graph: &ServerGraph,
    flow_idx: usize,
    flow: &Flow,
    first_var: usize,
) -> Result<Vec<VirtualFlow>, ValidationError> {
    if flow.destinations.len() < 2 {
        return Err(ValidationError::InvalidFlow {
            flow: flow.name.clone(),
            reason: "multicast expansion needs at least two destinations".into(),
        });
    }
    expand_flow(graph, flow_idx, flow, first_var).map(|(v, _)| v)
}

fn check_flow(graph: &ServerGraph, flow: &Flow, errors: &mut Vec<ValidationError>) {
    let err = |reason: String| ValidationError::InvalidFlow {
        flow: flow.name.clone(),
        reason,
    };
    let tb = flow.arrival;
    if !(tb.rate >= 0.0 && tb.rate.is_finite()) || !(tb.burst >= 0.0 && tb.burst.is_finite()) {
        errors.push(err(format!(
            "arrival curve requires rate >= 0 and burst >= 0, got ({}, {})",
            tb.rate, tb.burst
        )));
    }
    if let Some(d) = flow.deadline {
        if !(d > 0.0) {
            errors.push(err(format!("deadline must be positive, got {d}")));
        }
    }
    if flow.destinations.is_empty() {
        errors.push(err("no destinations".into()));
        return;
    }
    if flow.allowed_priorities.is_empty() {
        errors.push(err("no allowed priorities".into()));
    }
    if flow.candidate_paths.len() != flow.destinations.len() {
        errors.push(err(format!(
            "{} destinations but candidate paths for {}",
            flow.destinations.len(),
            flow.candidate_paths.len()
        )));
        return;
    }
    let alts = flow.alternatives();
    if alts == 0 {
        errors.push(err("no candidate paths".into()));
    }
    let src_port = graph.server(flow.source).port;
    for (d, per_dest) in flow.candidate_paths.iter().enumerate() {
        if per_dest.len() != alts {
            errors.push(err(format!(
                "destination {d} has {} alternatives, expected {alts}",
                per_dest.len()
            )));
        }
        let dst_port = graph.server(flow.destinations[d]).port;
        let mut seen = BTreeSet::new();
        for path in per_dest {
            let names: Vec<String> = path.iter().map(|&s| graph.server(s).name.clone()).collect();
            if !seen.insert(path.clone()) {
                errors.push(err(format!("duplicate candidate path {names:?}")));
            }
            let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
                errors.push(err("empty candidate path".into()));
                continue;
            };
            if graph.server(first).port != src_port || graph.server(last).port != dst_port {
                errors.push(err(format!(
                    "path {names:?} does not run from the source to destination {d}"
                )));
            }
            for w in path.windows(2) {
                if !graph.has_edge(w[0], w[1]) {
                    errors.push(ValidationError::DisconnectedPath {
                        flow: flow.name.clone(),
                        path: names.clone(),
                        from: graph.server(w[0]).name.clone(),
                        to: graph.server(w[1]).name.clone(),
                    });
                    break;
                }
            }
        }
    }
}

/// Kahn's algorithm over the union of `paths` on `n` nodes. Returns the nodes
/// left on a cycle, if any.
fn find_cycle<'a>(n: usize, paths: impl Iterator<Item = &'a [usize]>) -> Option<Vec<usize>> {
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for p in paths {
        for w in p.windows(2) {
            succ[w[0]].insert(w[1]);
        }
    }
    let mut indeg = vec![0usize; n];
    for s in &succ {
        for &v in s {
            indeg[v] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut removed = 0;
    while let Some(u) = stack.pop() {
        removed += 1;
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                stack.push(v);
            }
        }
    }
    (removed < n).then(|| (0..n).filter(|&v| indeg[v] > 0).collect())
}

fn build_constraints(
    graph: &ServerGraph,
    flows: &[Flow],
    vfs: &[VirtualFlow],
    mode: PriorityMode,
) -> Vec<CapacityConstraint> {
    // resource -> var -> rate
    let mut members: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for vf in vfs {
        for &s in &vf.path {
            let key = match mode {
                PriorityMode::Configured => s,
                PriorityMode::StrictLeftover => graph.server(s).port,
            };
            members
                .entry(key)
                .or_default()
                .insert(vf.var, flows[vf.flow].arrival.rate);
        }
    }
    members
        .into_iter()
        .map(|(key, m)| {
            let (name, capacity) = match mode {
                PriorityMode::Configured => {
                    let s = graph.server(key);
                    (s.name.clone(), s.service.rate)
                }
                PriorityMode::StrictLeftover => {
                    (graph.ports()[key].clone(), graph.port_service(key).rate)
                }
            };
            CapacityConstraint {
                name,
                capacity,
                members: m.into_iter().collect(),
            }
        })
        .collect()
}

/// Greedy witness: flows by decreasing rate, each placed on the admissible
/// alternative with the smallest resulting peak utilization.
fn greedy_witness(
    flows: &[Flow],
    blocks: &[Range<usize>],
    constraints: &[CapacityConstraint],
    cap: f64,
) -> Result<Vec<usize>, ValidationError> {
    let mut touched: Vec<Vec<(usize, f64)>> = vec![Vec::new(); blocks.last().map_or(0, |b| b.end)];
    for (c, con) in constraints.iter().enumerate() {
        for &(v, r) in &con.members {
            touched[v].push((c, r));
        }
    }
    let mut load = vec![0.0; constraints.len()];
    let mut order: Vec<usize> = (0..flows.len()).collect();
    order.sort_by(|&a, &b| {
        flows[b]
            .arrival
            .rate
            .total_cmp(&flows[a].arrival.rate)
            .then(a.cmp(&b))
    });
    let mut choice = vec![usize::MAX; flows.len()];
    for i in order {
        let mut best: Option<(f64, usize)> = None;
        for v in blocks[i].clone() {
            let mut peak = 0.0f64;
            let mut ok = true;
            for &(c, r) in &touched[v] {
                let after = load[c] + r;
                if after > cap * constraints[c].capacity {
                    ok = false;
                    break;
                }
                peak = peak.max(after / constraints[c].capacity);
            }
            if ok && best.is_none_or(|(b, _)| peak < b) {
                best = Some((peak, v));
            }
        }
        let Some((_, v)) = best else {
            return Err(ValidationError::NoFeasibleWitness(flows[i].name.clone()));
        };
        for &(c, r) in &touched[v] {
            load[c] += r;
        }
        choice[i] = v;
    }
    Ok(choice)
}

/// Checks an instance without building it.
pub fn validate(
    graph: &ServerGraph,
    flows: &[Flow],
    options: &ModelOptions,
) -> Result<(), ValidationErrors> {
    ProblemInstance::new(graph.clone(), flows.to_vec(), *options).map(|_| ())
}

impl ProblemInstance {
    pub fn new(
        graph: ServerGraph,
        mut flows: Vec<Flow>,
        options: ModelOptions,
    ) -> Result<Self, ValidationErrors> {
        let mut errors = Vec::new();
        if !(options.utilization_cap > 0.0 && options.utilization_cap <= 1.0) {
            errors.push(ValidationError::InvalidCap(options.utilization_cap));
        }
        for f in &mut flows {
            f.allowed_priorities.sort_unstable();
            f.allowed_priorities.dedup();
            check_flow(&graph, f, &mut errors);
        }
        if !errors.is_empty() {
            return Err(ValidationErrors(errors));
        }
        let (virtual_flows, vars) =
            expand_virtual_flows(&flows, &graph).map_err(|e| ValidationErrors(vec![e]))?;

        let cycle = match options.priority_mode {
            PriorityMode::Configured => find_cycle(
                graph.servers().len(),
                virtual_flows.iter().map(|v| v.path.as_slice()),
            )
            .map(|c| c.into_iter().map(|s| graph.server(s).name.clone()).collect()),
            PriorityMode::StrictLeftover => {
                let port_paths: Vec<Vec<usize>> = virtual_flows
                    .iter()
                    .map(|v| v.path.iter().map(|&s| graph.server(s).port).collect())
                    .collect();
                find_cycle(graph.ports().len(), port_paths.iter().map(Vec::as_slice))
                    .map(|c| c.into_iter().map(|p| graph.ports()[p].clone()).collect())
            }
        };
        if let Some(c) = cycle {
            return Err(ValidationErrors(vec![ValidationError::Cycle(c)]));
        }

        let mut blocks = Vec::with_capacity(flows.len());
        let mut start = 0;
        for i in 0..flows.len() {
            let n = vars[start..].iter().take_while(|v| v.flow == i).count();
            blocks.push(start..start + n);
            start += n;
        }
        let constraints =
            build_constraints(&graph, &flows, &virtual_flows, options.priority_mode);
        let witness = greedy_witness(&flows, &blocks, &constraints, options.utilization_cap)
            .map_err(|e| ValidationErrors(vec![e]))?;

        Ok(ProblemInstance {
            graph,
            flows,
            virtual_flows,
            vars,
            blocks,
            constraints,
            options,
            witness,
        })
    }

    pub fn graph(&self) -> &ServerGraph {
        &self.graph
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn virtual_flows(&self) -> &[VirtualFlow] {
        &self.virtual_flows
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    /// Contiguous variable range of each flow; one simplex block per flow.
    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn constraints(&self) -> &[CapacityConstraint] {
        &self.constraints
    }

    pub fn options(&self) -> &ModelOptions {
        &self.options
    }

    pub fn utilization_cap(&self) -> f64 {
        self.options.utilization_cap
    }

    pub fn priority_mode(&self) -> PriorityMode {
        self.options.priority_mode
    }

    /// Selected variable per flow of the capacity witness found at load time.
    pub fn witness(&self) -> &[usize] {
        &self.witness
    }

    /// Virtual flows of variable `var`, one per destination.
    pub fn vfs_of_var(&self, var: usize) -> impl Iterator<Item = (usize, &VirtualFlow)> {
        self.virtual_flows
            .iter()
            .enumerate()
            .filter(move |(_, v)| v.var == var)
    }

    /// Number of integral combinations, saturating at `u128::MAX`.
    pub fn combination_count(&self) -> u128 {
        self.blocks
            .iter()
            .fold(1u128, |acc, b| acc.saturating_mul(b.len() as u128))
    }

    /// Worst relative violation of the capacity constraints at `x`, in units
    /// of rate; 0 when every constraint holds.
    pub fn capacity_excess(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.load(x) - self.options.utilization_cap * c.capacity).max(0.0))
            .fold(0.0, f64::max)
    }

    /// One-hot vector from one chosen variable per flow.
    pub fn one_hot(&self, chosen: &[usize]) -> Vec<f64> {
        let mut x = vec![0.0; self.var_count()];
        for &v in chosen {
            x[v] = 1.0;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_path_file(priorities: &[u32]) -> InstanceFile {
        let mut f = InstanceFile::new();
        for lvl in 0..2 {
            for (s, p) in [("a", "pa"), ("b", "pb"), ("c", "pc"), ("d", "pd")] {
                f = f.server(&format!("{s}{lvl}"), p, lvl, 10.0, 1.0);
            }
            f = f
                .edge(&format!("a{lvl}"), &format!("b{lvl}"))
                .edge(&format!("b{lvl}"), &format!("d{lvl}"))
                .edge(&format!("a{lvl}"), &format!("c{lvl}"))
                .edge(&format!("c{lvl}"), &format!("d{lvl}"));
        }
        f.flow(
            FlowEntry::unicast(
                "f",
                1.0,
                1.0,
                vec![vec!["a0", "b0", "d0"], vec!["a0", "c0", "d0"]],
            )
            .priorities(priorities),
        )
    }

    #[test]
    fn cartesian_expansion() {
        let inst = ProblemInstance::from_file(&two_path_file(&[0, 1])).unwrap();
        assert_eq!(inst.virtual_flows().len(), 4);
        assert_eq!(inst.var_count(), 4);
        assert_eq!(inst.blocks().len(), 1);
        assert_eq!(inst.blocks()[0], 0..4);
        for vf in inst.virtual_flows() {
            for &s in &vf.path {
                assert_eq!(inst.graph().server(s).priority_level, vf.priority);
            }
        }
    }

    #[test]
    fn degenerate_expansion() {
        let mut file = two_path_file(&[0]);
        file.flows[0].candidate_paths[0].truncate(1);
        let inst = ProblemInstance::from_file(&file).unwrap();
        assert_eq!(inst.virtual_flows().len(), 1);
        assert_eq!(inst.var_count(), 1);
    }

    #[test]
    fn missing_priority_is_rejected() {
        let err = ProblemInstance::from_file(&two_path_file(&[0, 5])).unwrap_err();
        assert!(err
            .0
            .iter()
            .any(|e| matches!(e, ValidationError::MissingPriority { level: 5, .. })));
    }

    fn multicast_file(priorities: &[u32]) -> InstanceFile {
        let mut f = InstanceFile::new();
        for lvl in 0..2 {
            for (s, p) in [("a", "pa"), ("b", "pb"), ("c", "pc")] {
                f = f.server(&format!("{s}{lvl}"), p, lvl, 10.0, 1.0);
            }
            f = f
                .edge(&format!("a{lvl}"), &format!("b{lvl}"))
                .edge(&format!("a{lvl}"), &format!("c{lvl}"));
        }
        f.flow(FlowEntry {
            id: "m".into(),
            rate: 1.0,
            burst: 1.0,
            source: "a0".into(),
            destinations: vec!["b0".into(), "c0".into()],
            candidate_paths: vec![
                vec![vec!["a0".into(), "b0".into()]],
                vec![vec!["a0".into(), "c0".into()]],
            ],
            allowed_priorities: priorities.to_vec(),
            deadline: None,
        })
    }

    #[test]
    fn multicast_shares_variables() {
        let inst = ProblemInstance::from_file(&multicast_file(&[0])).unwrap();
        assert_eq!(inst.virtual_flows().len(), 2);
        assert_eq!(inst.var_count(), 1);

        let inst = ProblemInstance::from_file(&multicast_file(&[0, 1])).unwrap();
        assert_eq!(inst.virtual_flows().len(), 4);
        assert_eq!(inst.var_count(), 2);
        let vfs = multicast_to_unicast(inst.graph(), 0, &inst.flows()[0], 0).unwrap();
        assert_eq!(vfs.len(), 4);
        assert_eq!(vfs[0].var, vfs[1].var);
        assert_ne!(vfs[1].var, vfs[2].var);
    }

    #[test]
    fn unicast_is_not_multicast() {
        let inst = ProblemInstance::from_file(&two_path_file(&[0])).unwrap();
        assert!(multicast_to_unicast(inst.graph(), 0, &inst.flows()[0], 0).is_err());
    }

    #[test]
    fn cycle_is_detected() {
        let f = InstanceFile::new()
            .server("a", "pa", 0, 10.0, 1.0)
            .server("b", "pb", 0, 10.0, 1.0)
            .edge("a", "b")
            .edge("b", "a")
            .flow(FlowEntry::unicast("f1", 1.0, 1.0, vec![vec!["a", "b"]]))
            .flow(FlowEntry::unicast("f2", 1.0, 1.0, vec![vec!["b", "a"]]));
        let err = ProblemInstance::from_file(&f).unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
    }

    #[test]
    fn valid_instance_is_accepted() {
        assert!(ProblemInstance::from_file(&two_path_file(&[0, 1])).is_ok());
    }

    #[test]
    fn overload_without_alternative_has_no_witness() {
        let f = InstanceFile::new()
            .server("a", "pa", 0, 10.0, 1.0)
            .flow(FlowEntry::unicast("f1", 6.0, 1.0, vec![vec!["a"]]))
            .flow(FlowEntry::unicast("f2", 6.0, 1.0, vec![vec!["a"]]));
        let err = ProblemInstance::from_file(&f).unwrap_err();
        assert!(err.to_string().contains("no feasible witness"), "{err}");
    }

    #[test]
    fn witness_spreads_load() {
        let mut file = two_path_file(&[0]);
        for s in &mut file.servers {
            if s.id == "a0" || s.id == "d0" {
                s.rate = 100.0;
            }
        }
        file.flows[0].rate = 6.0;
        let mut second = file.flows[0].clone();
        second.id = "g".into();
        file.flows.push(second);
        let inst = ProblemInstance::from_file(&file).unwrap();
        let w = inst.witness();
        assert_ne!(
            inst.vars()[w[0]].alternative,
            inst.vars()[w[1]].alternative
        );
        assert_eq!(inst.capacity_excess(&inst.one_hot(w)), 0.0);
    }

    #[test]
    fn disconnected_path_names_the_hop() {
        let mut f = two_path_file(&[0]);
        f.flows[0].candidate_paths[0][0] = vec!["a0".into(), "d0".into()];
        let err = ProblemInstance::from_file(&f).unwrap_err();
        assert!(matches!(&err.0[0], ValidationError::DisconnectedPath { from, to, .. } if from == "a0" && to == "d0"));
    }

    #[test]
    fn blocks_recover_flows() {
        let mut file = two_path_file(&[0, 1]);
        let mut second = file.flows[0].clone();
        second.id = "g".into();
        second.allowed_priorities = vec![1];
        file.flows.push(second);
        let inst = ProblemInstance::from_file(&file).unwrap();
        assert_eq!(inst.blocks().len(), inst.flows().len());
        for (i, b) in inst.blocks().iter().enumerate() {
            assert!(b.clone().all(|v| inst.vars()[v].flow == i));
        }
        assert_eq!(inst.combination_count(), 4 * 2);
    }
}
