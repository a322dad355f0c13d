#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::HashMap;

use ncsynth::gen::{generate, GenSpec};
use ncsynth::netmodel::{PriorityMode, ProblemInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Curve = (f64, f64);

/// Plain numeric analysis of the network induced by one integral choice per
/// flow. Curves are `(rate, burst)` and `(rate, latency)` pairs.
pub struct NumericSfa<'a> {
    inst: &'a ProblemInstance,
    selected: Vec<bool>,
    arrivals: RefCell<HashMap<(usize, usize), Option<Curve>>>,
}

impl<'a> NumericSfa<'a> {
    pub fn new(inst: &'a ProblemInstance, chosen: &[usize]) -> Self {
        let mut selected = vec![false; inst.var_count()];
        for &v in chosen {
            selected[v] = true;
        }
        NumericSfa {
            inst,
            selected,
            arrivals: RefCell::new(HashMap::new()),
        }
    }

    fn path_through(&self, var: usize, s: usize) -> Option<(Vec<usize>, usize)> {
        self.inst
            .virtual_flows()
            .iter()
            .filter(|vf| vf.var == var)
            .find_map(|vf| vf.path.iter().position(|&x| x == s).map(|p| (vf.path.clone(), p)))
    }

    fn users(&self, s: usize) -> Vec<usize> {
        (0..self.inst.var_count())
            .filter(|&v| self.selected[v] && self.path_through(v, s).is_some())
            .collect()
    }

    fn arrival(&self, var: usize, s: usize) -> Option<(f64, f64)> {
        if let Some(&a) = self.arrivals.borrow().get(&(var, s)) {
            return a;
        }
        let (path, pos) = self.path_through(var, s).expect("var crosses server");
        let a = if pos == 0 {
            let f = &self.inst.flows()[self.inst.vars()[var].flow];
            Some((f.arrival.rate, f.arrival.burst))
        } else {
            let prev = path[pos - 1];
            let (r, b) = self.arrival(var, prev)?;
            let (_, l) = self.leftover(var, prev)?;
            Some((r, b + r * l))
        };
        self.arrivals.borrow_mut().insert((var, s), a);
        a
    }

    fn service(&self, s: usize) -> Option<(f64, f64)> {
        let g = self.inst.graph();
        let server = g.server(s);
        match self.inst.priority_mode() {
            PriorityMode::Configured => Some((server.service.rate, server.service.latency)),
            PriorityMode::StrictLeftover => {
                let port = g.port_service(server.port);
                let (mut rc, mut bc) = (0.0, 0.0);
                for other in 0..g.servers().len() {
                    let o = g.server(other);
                    if o.port == server.port && o.priority_level < server.priority_level {
                        for u in self.users(other) {
                            let (r, b) = self.arrival(u, other)?;
                            rc += r;
                            bc += b;
                        }
                    }
                }
                residual((port.rate, port.latency), rc, bc)
            }
        }
    }

    fn leftover(&self, var: usize, s: usize) -> Option<(f64, f64)> {
        let service = self.service(s)?;
        let (mut rc, mut bc) = (0.0, 0.0);
        for u in self.users(s) {
            if u != var {
                let (r, b) = self.arrival(u, s)?;
                rc += r;
                bc += b;
            }
        }
        residual(service, rc, bc)
    }

    /// Bound of virtual flow `vf`; `None` if some residual rate is not
    /// positive.
    pub fn delay(&self, vf: usize) -> Option<f64> {
        let v = &self.inst.virtual_flows()[vf];
        let (mut rate, mut latency) = (f64::INFINITY, 0.0);
        for &s in &v.path {
            let (r, l) = self.leftover(v.var, s)?;
            rate = rate.min(r);
            latency += l;
        }
        let f = &self.inst.flows()[v.flow];
        Some(f.arrival.burst / rate + latency)
    }
}

fn residual((rate, latency): (f64, f64), rc: f64, bc: f64) -> Option<(f64, f64)> {
    let left = rate - rc;
    (left > 0.0).then(|| (left, (bc + rate * latency) / left))
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Uniformly drawn one-hot assignment within the capacity cap.
pub fn random_feasible(inst: &ProblemInstance, rng: &mut ChaCha8Rng) -> Vec<usize> {
    for _ in 0..1000 {
        let chosen: Vec<usize> = inst
            .blocks()
            .iter()
            .map(|b| rng.random_range(b.clone()))
            .collect();
        if inst.capacity_excess(&inst.one_hot(&chosen)) == 0.0 {
            return chosen;
        }
    }
    inst.witness().to_vec()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn generated(seed: u64) -> ProblemInstance {
    generate(&GenSpec {
        seed,
        ..GenSpec::default()
    })
    .expect("default spec generates")
    .instance
}

/// Mixed bag of instances: some with several strict priority levels.
pub fn varied(seed: u64) -> ProblemInstance {
    let spec = match seed % 3 {
        0 => GenSpec {
            seed,
            ..GenSpec::default()
        },
        1 => GenSpec {
            seed,
            priorities: 2,
            ..GenSpec::default()
        },
        _ => GenSpec {
            seed,
            priorities: 3,
            priority_mode: PriorityMode::StrictLeftover,
            ..GenSpec::default()
        },
    };
    generate(&spec).expect("spec generates").instance
}
