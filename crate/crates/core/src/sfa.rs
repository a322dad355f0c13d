//! Separated flow analysis over the virtual-flow model.
//!
//! Every virtual flow gets a delay-bound expression in the selection
//! variables. Cross traffic at a server is the aggregate of every *other*
//! variable's arrival there, each gated by its own selection weight, so a
//! flow's sibling alternatives interfere only in proportion to their weight
//! and vanish at one-hot points. Branches of one multicast choice share a
//! variable and are counted once per server. With
//! [`AnalysisOptions::sibling_interference`] off, a flow's other
//! alternatives are left out of its cross traffic altogether.
//!
//! Arrival bounds and left-over curves are memoized per (variable, server);
//! together with the arena's structural sharing this makes the terms of all
//! virtual flows one DAG.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::minplus::{self, ExprArena, ExprId, Node, SymRateLatency, SymTokenBucket};
use crate::netmodel::{PriorityMode, ProblemInstance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SfaError {
    #[error("stability violated at server '{0}': residual rate is not positive")]
    Unstable(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub memoize: bool,
    /// Count a flow's other alternatives as cross traffic, weighted by their
    /// selection variables. One-hot values are the same either way; the
    /// gradients at vertices differ.
    pub sibling_interference: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            memoize: true,
            sibling_interference: true,
        }
    }
}

/// End-to-end delay bound of one virtual flow.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTerm {
    pub vf: usize,
    pub expr: ExprId,
    /// Selection variables the bound depends on, ascending.
    pub vars: Vec<usize>,
}

/// Builder that owns the memo tables for one instance.
pub struct Analysis<'a> {
    instance: &'a ProblemInstance,
    arena: &'a mut ExprArena,
    options: AnalysisOptions,
    /// Per server: `(var, representative vf, position on its path)`, by var.
    streams: Vec<Vec<(usize, usize, usize)>>,
    arrivals: HashMap<(usize, usize), SymTokenBucket>,
    leftovers: HashMap<(usize, usize), SymRateLatency>,
    /// Keyed by server and, without sibling interference, the flow whose
    /// traffic is left out.
    services: HashMap<(usize, Option<usize>), SymRateLatency>,
}

impl<'a> Analysis<'a> {
    pub fn new(
        instance: &'a ProblemInstance,
        arena: &'a mut ExprArena,
        options: AnalysisOptions,
    ) -> Self {
        let mut per_server: Vec<BTreeMap<usize, (usize, usize)>> =
            vec![BTreeMap::new(); instance.graph().servers().len()];
        for (i, vf) in instance.virtual_flows().iter().enumerate() {
            for (pos, &s) in vf.path.iter().enumerate() {
                per_server[s].entry(vf.var).or_insert((i, pos));
            }
        }
        let streams = per_server
            .into_iter()
            .map(|m| m.into_iter().map(|(v, (vf, pos))| (v, vf, pos)).collect())
            .collect();
        Analysis {
            instance,
            arena,
            options,
            streams,
            arrivals: HashMap::new(),
            leftovers: HashMap::new(),
            services: HashMap::new(),
        }
    }

    pub fn arena(&self) -> &ExprArena {
        self.arena
    }

    fn source_arrival(&mut self, var: usize) -> SymTokenBucket {
        let flow = &self.instance.flows()[self.instance.vars()[var].flow];
        let tb = SymTokenBucket::constant(self.arena, flow.arrival);
        let p = self.arena.var(var);
        minplus::scale(self.arena, tb, p)
    }

    /// Arrival bound of variable `var`'s traffic at server `s`.
    ///
    /// Panics if no virtual flow of `var` crosses `s`.
    pub fn arrival_at(&mut self, var: usize, s: usize) -> SymTokenBucket {
        if self.options.memoize {
            if let Some(&a) = self.arrivals.get(&(var, s)) {
                return a;
            }
        }
        let &(_, vf, pos) = self.streams[s]
            .iter()
            .find(|e| e.0 == var)
            .expect("variable does not cross this server");
        let result = if pos == 0 {
            self.source_arrival(var)
        } else {
            let prev = self.instance.virtual_flows()[vf].path[pos - 1];
            let upstream = self.arrival_at(var, prev);
            let service = self.leftover_for(var, prev);
            minplus::deconvolve(self.arena, upstream, service)
        };
        if self.options.memoize {
            self.arrivals.insert((var, s), result);
        }
        result
    }

    fn flow_of(&self, var: usize) -> usize {
        self.instance.vars()[var].flow
    }

    /// Service curve of server `s` before cross traffic of its own level,
    /// ignoring higher-level traffic of flow `skip`.
    fn service(&mut self, s: usize, skip: Option<usize>) -> SymRateLatency {
        if let Some(&c) = self.services.get(&(s, skip)) {
            return c;
        }
        let graph = self.instance.graph();
        let server = graph.server(s);
        let curve = match self.instance.priority_mode() {
            PriorityMode::Configured => SymRateLatency::constant(self.arena, server.service),
            PriorityMode::StrictLeftover => {
                let port_curve =
                    SymRateLatency::constant(self.arena, graph.port_service(server.port));
                let mut higher = Vec::new();
                for lvl in graph.levels_at(server.port) {
                    if lvl >= server.priority_level {
                        break;
                    }
                    let hs = graph.at(server.port, lvl).expect("level listed at port");
                    let vars: Vec<usize> = self.streams[hs]
                        .iter()
                        .map(|e| e.0)
                        .filter(|&v| skip.is_none_or(|f| self.flow_of(v) != f))
                        .collect();
                    for v in vars {
                        higher.push(self.arrival_at(v, hs));
                    }
                }
                let agg = minplus::aggregate_all(self.arena, &higher);
                minplus::leftover(self.arena, port_curve, agg)
            }
        };
        self.services.insert((s, skip), curve);
        curve
    }

    /// Residual service of `var` at `s`, against the aggregate of all other
    /// variables crossing `s` (other flows only, without sibling
    /// interference).
    pub fn leftover_for(&mut self, var: usize, s: usize) -> SymRateLatency {
        if let Some(&l) = self.leftovers.get(&(var, s)) {
            return l;
        }
        let siblings = self.options.sibling_interference;
        let vars: Vec<usize> = self.streams[s].iter().map(|e| e.0).collect();
        // interfering groups: single variables, or whole flows
        let group_of = |a: &Self, v: usize| if siblings { v } else { a.flow_of(v) };
        if !self.options.memoize {
            let own = group_of(self, var);
            let skip = (!siblings).then_some(own);
            let service = self.service(s, skip);
            let others: Vec<usize> = vars
                .iter()
                .copied()
                .filter(|&v| group_of(self, v) != own)
                .collect();
            let others: Vec<SymTokenBucket> =
                others.iter().map(|&v| self.arrival_at(v, s)).collect();
            let cross = minplus::aggregate_all(self.arena, &others);
            return minplus::leftover(self.arena, service, cross);
        }
        // every variable's left-over at once, from prefix and suffix sums
        // over groups; variables of one flow are contiguous
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for &v in &vars {
            let g = group_of(self, v);
            match groups.last_mut() {
                Some((last, members)) if *last == g => members.push(v),
                _ => groups.push((g, vec![v])),
            }
        }
        let zero = SymTokenBucket::zero(self.arena);
        let mut totals = Vec::with_capacity(groups.len());
        for (_, members) in &groups {
            let mut acc = zero;
            for (i, &v) in members.iter().enumerate() {
                let a = self.arrival_at(v, s);
                acc = if i == 0 { a } else { minplus::aggregate(self.arena, acc, a) };
            }
            totals.push(acc);
        }
        let n = totals.len();
        let mut prefix = vec![zero; n + 1];
        for i in 0..n {
            prefix[i + 1] = minplus::aggregate(self.arena, prefix[i], totals[i]);
        }
        let mut suffix = vec![zero; n + 1];
        for i in (0..n).rev() {
            suffix[i] = minplus::aggregate(self.arena, totals[i], suffix[i + 1]);
        }
        for (i, (g, members)) in groups.iter().enumerate() {
            let skip = (!siblings).then_some(*g);
            let service = self.service(s, skip);
            let cross = minplus::aggregate(self.arena, prefix[i], suffix[i + 1]);
            let lo = minplus::leftover(self.arena, service, cross);
            for &v in members {
                self.leftovers.insert((v, s), lo);
            }
        }
        self.leftovers[&(var, s)]
    }

    /// Delay bound of virtual flow `vf`. The flow's own arrival curve enters
    /// unscaled; its selection weight is applied by the objective.
    pub fn e2e_delay(&mut self, vf: usize) -> Result<DelayTerm, SfaError> {
        let v = self.instance.virtual_flows()[vf].clone();
        let mut e2e: Option<SymRateLatency> = None;
        for &s in &v.path {
            let lo = self.leftover_for(v.var, s);
            if let Some(r) = self.arena.as_const(lo.rate) {
                if !(r > 0.0) {
                    return Err(SfaError::Unstable(
                        self.instance.graph().server(s).name.clone(),
                    ));
                }
            }
            e2e = Some(match e2e {
                None => lo,
                Some(acc) => minplus::convolve(self.arena, acc, lo),
            });
        }
        let e2e = e2e.expect("validated paths are non-empty");
        let own = SymTokenBucket::constant(self.arena, self.instance.flows()[v.flow].arrival);
        let expr = minplus::delay_bound(self.arena, own, e2e);
        let vars = referenced_vars(self.arena, expr);
        Ok(DelayTerm { vf, expr, vars })
    }
}

/// Variables reachable from `root`, ascending.
pub fn referenced_vars(arena: &ExprArena, root: ExprId) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![root];
    let mut vars = Vec::new();
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        let node = arena.node(id);
        if let Node::Var(v) = node {
            vars.push(v as usize);
        }
        let (a, b) = node.children();
        stack.extend(a);
        stack.extend(b);
    }
    vars.sort_unstable();
    vars
}

/// One delay term per virtual flow, all in `arena`.
pub fn analyze_all(
    instance: &ProblemInstance,
    arena: &mut ExprArena,
    options: AnalysisOptions,
) -> Result<Vec<DelayTerm>, Vec<SfaError>> {
    let mut analysis = Analysis::new(instance, arena, options);
    let mut terms = Vec::with_capacity(instance.virtual_flows().len());
    let mut errors = Vec::new();
    for vf in 0..instance.virtual_flows().len() {
        match analysis.e2e_delay(vf) {
            Ok(t) => terms.push(t),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(terms)
    } else {
        Err(errors)
    }
}
