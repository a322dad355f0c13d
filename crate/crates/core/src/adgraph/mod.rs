//! Compilation of expression DAGs into a flat instruction tape, with forward
//! evaluation and reverse-mode gradients.
//!
//! The tape holds every node reachable from the requested outputs exactly
//! once, ordered by arena id (children before parents). Adjoints are
//! *pulled*: each slot sums the contributions of its parents in ascending
//! slot order. That order does not depend on how work is split across
//! threads, so parallel and serial evaluation agree bit for bit.

mod eval;

use thiserror::Error;

use crate::minplus::{ExprArena, ExprId, Node};

pub use eval::{eval_parallel, EvalResult, ForwardPass, ParallelEvaluator};

pub const TAPE_MAGIC: [u8; 4] = *b"NCTP";
pub const TAPE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("expression graph has a cycle through node {0}")]
    Cycle(usize),
    #[error("variable {var} outside declared count {count}")]
    VariableOutOfRange { var: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum OpCode {
    Const = 0,
    LoadVar = 1,
    Add = 2,
    Mul = 3,
    Div = 4,
    Min = 5,
    Max = 6,
    Ramp = 7,
    Exp = 8,
}

/// One tape instruction. The output slot is the instruction's own index.
/// `Const` reads `consts[a]`, `LoadVar` reads `x[a]`; unary ops ignore `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instr {
    pub op: OpCode,
    pub a: u32,
    pub b: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledGraph {
    tape: Vec<Instr>,
    consts: Vec<f64>,
    var_count: usize,
    outputs: Vec<u32>,
    /// Slot holding each variable, if the variable is used.
    var_slots: Vec<Option<u32>>,
    /// CSR parent lists: `(parent slot, operand index)`, ascending.
    parent_start: Vec<u32>,
    parents: Vec<(u32, u8)>,
    /// Slots grouped by distance from the leaves / from the roots.
    forward_levels: Vec<Vec<u32>>,
    backward_levels: Vec<Vec<u32>>,
}

/// Compiles `outputs` over `var_count` variables.
pub fn compile(
    arena: &ExprArena,
    outputs: &[ExprId],
    var_count: usize,
) -> Result<CompiledGraph, CompileError> {
    let reach = arena.reachable(outputs);
    let mut slot_of = vec![u32::MAX; arena.len()];
    let mut tape = Vec::new();
    let mut consts = Vec::new();
    let mut var_slots = vec![None; var_count];

    for (i, node) in arena.nodes().iter().enumerate() {
        if !reach[i] {
            continue;
        }
        let slot = tape.len() as u32;
        let operand = |c: ExprId| -> Result<u32, CompileError> {
            if c.index() >= i || slot_of[c.index()] == u32::MAX {
                return Err(CompileError::Cycle(i));
            }
            Ok(slot_of[c.index()])
        };
        let instr = match *node {
            Node::Const(bits) => {
                consts.push(f64::from_bits(bits));
                Instr {
                    op: OpCode::Const,
                    a: (consts.len() - 1) as u32,
                    b: 0,
                }
            }
            Node::Var(v) => {
                let vi = v as usize;
                if vi >= var_count {
                    return Err(CompileError::VariableOutOfRange {
                        var: vi,
                        count: var_count,
                    });
                }
                var_slots[vi] = Some(slot);
                Instr {
                    op: OpCode::LoadVar,
                    a: v,
                    b: 0,
                }
            }
            Node::Add(a, b) => binary(OpCode::Add, operand(a)?, operand(b)?),
            Node::Mul(a, b) => binary(OpCode::Mul, operand(a)?, operand(b)?),
            Node::Div(a, b) => binary(OpCode::Div, operand(a)?, operand(b)?),
            Node::Min(a, b) => binary(OpCode::Min, operand(a)?, operand(b)?),
            Node::Max(a, b) => binary(OpCode::Max, operand(a)?, operand(b)?),
            Node::Ramp(a) => binary(OpCode::Ramp, operand(a)?, 0),
            Node::Exp(a) => binary(OpCode::Exp, operand(a)?, 0),
        };
        slot_of[i] = slot;
        tape.push(instr);
    }

    let outputs: Vec<u32> = outputs.iter().map(|o| slot_of[o.index()]).collect();
    let n = tape.len();

    // parent lists, ascending by parent slot
    let mut counts = vec![0u32; n + 1];
    for ins in &tape {
        for (c, _) in operands(ins) {
            counts[c as usize + 1] += 1;
        }
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let parent_start = counts.clone();
    let mut fill = counts;
    let mut parents = vec![(0u32, 0u8); parent_start[n] as usize];
    for (p, ins) in tape.iter().enumerate() {
        for (c, k) in operands(ins) {
            let at = &mut fill[c as usize];
            parents[*at as usize] = (p as u32, k);
            *at += 1;
        }
    }

    let mut depth = vec![0usize; n];
    for (i, ins) in tape.iter().enumerate() {
        depth[i] = operands(ins)
            .map(|(c, _)| depth[c as usize] + 1)
            .max()
            .unwrap_or(0);
    }
    let mut height = vec![0usize; n];
    for i in (0..n).rev() {
        let (lo, hi) = (parent_start[i] as usize, parent_start[i + 1] as usize);
        height[i] = parents[lo..hi]
            .iter()
            .map(|&(p, _)| height[p as usize] + 1)
            .max()
            .unwrap_or(0);
    }

    Ok(CompiledGraph {
        forward_levels: group_levels(&depth),
        backward_levels: group_levels(&height),
        tape,
        consts,
        var_count,
        outputs,
        var_slots,
        parent_start,
        parents,
    })
}

fn binary(op: OpCode, a: u32, b: u32) -> Instr {
    Instr { op, a, b }
}

/// Slot operands of an instruction with their operand index.
fn operands(ins: &Instr) -> impl Iterator<Item = (u32, u8)> {
    let (a, b) = match ins.op {
        OpCode::Const | OpCode::LoadVar => (None, None),
        OpCode::Ramp | OpCode::Exp => (Some(ins.a), None),
        _ => (Some(ins.a), Some(ins.b)),
    };
    a.map(|a| (a, 0)).into_iter().chain(b.map(|b| (b, 1)))
}

fn group_levels(level: &[usize]) -> Vec<Vec<u32>> {
    let count = level.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); count];
    for (i, &l) in level.iter().enumerate() {
        out[l].push(i as u32);
    }
    out
}

impl CompiledGraph {
    pub fn tape(&self) -> &[Instr] {
        &self.tape
    }

    pub fn len(&self) -> usize {
        self.tape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tape.is_empty()
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    /// Whether `slot` contributes to `output`.
    fn output_reaches(&self, output: usize, slot: usize) -> bool {
        let mut stack = vec![self.outputs[output] as usize];
        let mut seen = vec![false; self.tape.len()];
        while let Some(s) = stack.pop() {
            if s == slot {
                return true;
            }
            if s < slot || std::mem::replace(&mut seen[s], true) {
                continue;
            }
            stack.extend(operands(&self.tape[s]).map(|(c, _)| c as usize));
        }
        false
    }

    /// Versioned little-endian dump: magic, version, variable count,
    /// constants, instructions, outputs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.consts.len() * 8 + self.tape.len() * 9);
        out.extend_from_slice(&TAPE_MAGIC);
        out.extend_from_slice(&TAPE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.var_count as u64).to_le_bytes());
        out.extend_from_slice(&(self.consts.len() as u64).to_le_bytes());
        for c in &self.consts {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&(self.tape.len() as u64).to_le_bytes());
        for ins in &self.tape {
            out.push(ins.op as u8);
            out.extend_from_slice(&ins.a.to_le_bytes());
            out.extend_from_slice(&ins.b.to_le_bytes());
        }
        out.extend_from_slice(&(self.outputs.len() as u64).to_le_bytes());
        for o in &self.outputs {
            out.extend_from_slice(&o.to_le_bytes());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_expression_compiles_to_div_add() {
        let mut a = ExprArena::new();
        let b = a.var(0);
        let r = a.var(1);
        let l = a.var(2);
        let q = a.div(b, r);
        let h = a.add(q, l);
        let g = compile(&a, &[h], 3).unwrap();
        let ops: Vec<OpCode> = g
            .tape()
            .iter()
            .map(|i| i.op)
            .filter(|op| *op != OpCode::LoadVar)
            .collect();
        assert_eq!(ops, vec![OpCode::Div, OpCode::Add]);
        assert_eq!(g.output_count(), 1);
    }

    #[test]
    fn shared_subexpression_emitted_once() {
        let mut a = ExprArena::new();
        let x = a.var(0);
        let y = a.var(1);
        let s = a.add(x, y);
        let two = a.constant(2.0);
        let o1 = a.mul(s, two);
        let o2 = a.div(s, two);
        let g = compile(&a, &[o1, o2], 2).unwrap();
        let adds = g.tape().iter().filter(|i| i.op == OpCode::Add).count();
        assert_eq!(adds, 1);
    }

    #[test]
    fn recompilation_is_byte_identical() {
        let mut a = ExprArena::new();
        let x = a.var(0);
        let c = a.constant(3.0);
        let m = a.min(x, c);
        let e = a.exp(m);
        let g1 = compile(&a, &[e, m], 1).unwrap();
        let g2 = compile(&a, &[e, m], 1).unwrap();
        assert_eq!(g1.to_bytes(), g2.to_bytes());
        assert_eq!(&g1.to_bytes()[..4], b"NCTP");
    }

    #[test]
    fn unused_nodes_are_skipped() {
        let mut a = ExprArena::new();
        let x = a.var(0);
        let y = a.var(1);
        let _unused = a.mul(x, y);
        let z = a.ramp(y);
        let g = compile(&a, &[z], 2).unwrap();
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn out_of_range_variable() {
        let mut a = ExprArena::new();
        let x = a.var(4);
        assert!(matches!(
            compile(&a, &[x], 2),
            Err(CompileError::VariableOutOfRange { var: 4, count: 2 })
        ));
    }
}
