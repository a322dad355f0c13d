use rayon::prelude::*;

use super::{CompiledGraph, Instr, OpCode};
use crate::error::EvalError;

/// Levels smaller than this are evaluated inline even when a pool is given.
const PARALLEL_LEVEL_MIN: usize = 512;

/// Slot values of one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    values: Vec<f64>,
    outputs: Vec<f64>,
}

impl ForwardPass {
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn slot_values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// One value per output.
    pub values: Vec<f64>,
    /// Gradient of `Σ w·outputs` with respect to every variable.
    pub gradient: Vec<f64>,
}

/// A compiled graph bound to a thread pool of fixed size.
pub struct ParallelEvaluator {
    pool: Option<rayon::ThreadPool>,
}

impl ParallelEvaluator {
    /// `tasks <= 1` evaluates on the calling thread.
    pub fn new(tasks: usize) -> Self {
        let pool = (tasks > 1).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(tasks)
                .build()
                .expect("failed to build evaluation pool")
        });
        ParallelEvaluator { pool }
    }

    pub fn forward(&self, g: &CompiledGraph, x: &[f64]) -> Result<ForwardPass, EvalError> {
        match &self.pool {
            Some(pool) => pool.install(|| g.forward_impl(x, true)),
            None => g.forward_impl(x, false),
        }
    }

    pub fn backward(&self, g: &CompiledGraph, pass: &ForwardPass, w: &[f64]) -> Vec<f64> {
        match &self.pool {
            Some(pool) => pool.install(|| g.backward_impl(pass, w, true)),
            None => g.backward_impl(pass, w, false),
        }
    }

    pub fn evaluate(
        &self,
        g: &CompiledGraph,
        x: &[f64],
        w: &[f64],
    ) -> Result<EvalResult, EvalError> {
        let pass = self.forward(g, x)?;
        let gradient = self.backward(g, &pass, w);
        Ok(EvalResult {
            values: pass.outputs,
            gradient,
        })
    }
}

/// Values and weighted gradient using `tasks` worker threads. The result is
/// bitwise identical for every task count.
pub fn eval_parallel(
    g: &CompiledGraph,
    x: &[f64],
    w: &[f64],
    tasks: usize,
) -> Result<EvalResult, EvalError> {
    ParallelEvaluator::new(tasks).evaluate(g, x, w)
}

#[inline]
fn apply(ins: &Instr, consts: &[f64], x: &[f64], v: &[f64]) -> f64 {
    let a = ins.a as usize;
    let b = ins.b as usize;
    match ins.op {
        OpCode::Const => consts[a],
        OpCode::LoadVar => x[a],
        OpCode::Add => v[a] + v[b],
        OpCode::Mul => v[a] * v[b],
        OpCode::Div => {
            if v[b] > 0.0 {
                v[a] / v[b]
            } else {
                f64::NAN
            }
        }
        OpCode::Min => {
            if v[a] <= v[b] {
                v[a]
            } else {
                v[b]
            }
        }
        OpCode::Max => {
            if v[a] >= v[b] {
                v[a]
            } else {
                v[b]
            }
        }
        OpCode::Ramp => v[a].max(0.0),
        OpCode::Exp => v[a].exp(),
    }
}

/// `∂ parent / ∂ operand k`. Min/max ties go to the first operand and the
/// ramp's step is 1 at 0.
#[inline]
fn partial(ins: &Instr, k: u8, v: &[f64], out: f64) -> f64 {
    let a = ins.a as usize;
    let b = ins.b as usize;
    match ins.op {
        OpCode::Const | OpCode::LoadVar => 0.0,
        OpCode::Add => 1.0,
        OpCode::Mul => {
            if k == 0 {
                v[b]
            } else {
                v[a]
            }
        }
        OpCode::Div => {
            if k == 0 {
                1.0 / v[b]
            } else {
                -v[a] / (v[b] * v[b])
            }
        }
        OpCode::Min => {
            let first = v[a] <= v[b];
            if (k == 0) == first {
                1.0
            } else {
                0.0
            }
        }
        OpCode::Max => {
            let first = v[a] >= v[b];
            if (k == 0) == first {
                1.0
            } else {
                0.0
            }
        }
        OpCode::Ramp => {
            if v[a] >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        OpCode::Exp => out,
    }
}

impl CompiledGraph {
    pub fn forward(&self, x: &[f64]) -> Result<ForwardPass, EvalError> {
        self.forward_impl(x, false)
    }

    /// Gradient of `Σ w[o]·output[o]`; `w` must have one weight per output.
    pub fn backward(&self, pass: &ForwardPass, w: &[f64]) -> Vec<f64> {
        self.backward_impl(pass, w, false)
    }

    pub fn evaluate(&self, x: &[f64], w: &[f64]) -> Result<EvalResult, EvalError> {
        let pass = self.forward(x)?;
        let gradient = self.backward(&pass, w);
        Ok(EvalResult {
            values: pass.outputs,
            gradient,
        })
    }

    fn forward_impl(&self, x: &[f64], parallel: bool) -> Result<ForwardPass, EvalError> {
        if x.len() != self.var_count {
            return Err(EvalError::Dimension {
                expected: self.var_count,
                got: x.len(),
            });
        }
        let mut values = vec![0.0; self.tape.len()];
        if parallel {
            let mut scratch = Vec::new();
            for level in &self.forward_levels {
                if level.len() < PARALLEL_LEVEL_MIN {
                    for &s in level {
                        values[s as usize] = apply(&self.tape[s as usize], &self.consts, x, &values);
                    }
                } else {
                    let v = &values;
                    level
                        .par_iter()
                        .map(|&s| apply(&self.tape[s as usize], &self.consts, x, v))
                        .collect_into_vec(&mut scratch);
                    for (&s, &val) in level.iter().zip(&scratch) {
                        values[s as usize] = val;
                    }
                }
            }
        } else {
            for i in 0..self.tape.len() {
                values[i] = apply(&self.tape[i], &self.consts, x, &values);
            }
        }
        // lowest failing division is the root cause: children precede parents
        if let Some(slot) = self.tape.iter().enumerate().position(|(i, ins)| {
            ins.op == OpCode::Div && !(values[ins.b as usize] > 0.0) && values[i].is_nan()
        }) {
            let output = (0..self.outputs.len())
                .find(|&o| self.output_reaches(o, slot))
                .unwrap_or(0);
            return Err(EvalError::Stability { slot, output });
        }
        let outputs = self.outputs.iter().map(|&o| values[o as usize]).collect();
        Ok(ForwardPass { values, outputs })
    }

    fn adjoint(&self, slot: usize, seed: &[f64], adj: &[f64], v: &[f64]) -> f64 {
        let (lo, hi) = (
            self.parent_start[slot] as usize,
            self.parent_start[slot + 1] as usize,
        );
        let mut acc = seed[slot];
        for &(p, k) in &self.parents[lo..hi] {
            let p = p as usize;
            let ap = adj[p];
            if ap != 0.0 {
                acc += ap * partial(&self.tape[p], k, v, v[p]);
            }
        }
        acc
    }

    fn backward_impl(&self, pass: &ForwardPass, w: &[f64], parallel: bool) -> Vec<f64> {
        assert_eq!(w.len(), self.outputs.len(), "one weight per output");
        let n = self.tape.len();
        let v = &pass.values;
        let mut seed = vec![0.0; n];
        for (&o, &wo) in self.outputs.iter().zip(w) {
            seed[o as usize] += wo;
        }
        let mut adj = vec![0.0; n];
        if parallel {
            let mut scratch = Vec::new();
            for level in &self.backward_levels {
                if level.len() < PARALLEL_LEVEL_MIN {
                    for &s in level {
                        adj[s as usize] = self.adjoint(s as usize, &seed, &adj, v);
                    }
                } else {
                    let a = &adj;
                    level
                        .par_iter()
                        .map(|&s| self.adjoint(s as usize, &seed, a, v))
                        .collect_into_vec(&mut scratch);
                    for (&s, &val) in level.iter().zip(&scratch) {
                        adj[s as usize] = val;
                    }
                }
            }
        } else {
            for s in (0..n).rev() {
                adj[s] = self.adjoint(s, &seed, &adj, v);
            }
        }
        self.var_slots
            .iter()
            .map(|s| s.map_or(0.0, |s| adj[s as usize]))
            .collect()
    }
}
