//! Hash-consed scalar expression DAG.
//!
//! Nodes are appended to an [`ExprArena`] and never mutated, so a node's
//! children always have smaller ids than the node itself. Structurally equal
//! nodes are stored once, which is what makes cross-traffic terms shared
//! between the delay bounds of different flows.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExprId(pub(crate) u32);

impl ExprId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    /// Stored as raw bits so nodes can be hashed.
    Const(u64),
    Var(u32),
    Add(ExprId, ExprId),
    Mul(ExprId, ExprId),
    Div(ExprId, ExprId),
    Min(ExprId, ExprId),
    Max(ExprId, ExprId),
    /// `[x]⁺ = max(x, 0)`.
    Ramp(ExprId),
    Exp(ExprId),
}

impl Node {
    pub fn children(&self) -> (Option<ExprId>, Option<ExprId>) {
        match *self {
            Node::Const(_) | Node::Var(_) => (None, None),
            Node::Ramp(a) | Node::Exp(a) => (Some(a), None),
            Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Min(a, b) | Node::Max(a, b) => {
                (Some(a), Some(b))
            }
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct ExprArena {
    nodes: Vec<Node>,
    dedup: HashMap<Node, ExprId>,
}

impl ExprArena {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: ExprId) -> Node {
        self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn intern(&mut self, node: Node) -> ExprId {
        if let Some(&id) = self.dedup.get(&node) {
            return id;
        }
        let id = ExprId(u32::try_from(self.nodes.len()).expect("expression arena overflow"));
        self.nodes.push(node);
        self.dedup.insert(node, id);
        id
    }

    pub fn constant(&mut self, v: f64) -> ExprId {
        // fold -0.0 into 0.0 so both hash alike
        let v = if v == 0.0 { 0.0 } else { v };
        self.intern(Node::Const(v.to_bits()))
    }

    pub fn var(&mut self, index: usize) -> ExprId {
        self.intern(Node::Var(u32::try_from(index).expect("variable index overflow")))
    }

    /// Value of a constant node.
    pub fn as_const(&self, id: ExprId) -> Option<f64> {
        match self.nodes[id.index()] {
            Node::Const(bits) => Some(f64::from_bits(bits)),
            _ => None,
        }
    }

    pub fn add(&mut self, a: ExprId, b: ExprId) -> ExprId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x + y),
            (Some(0.0), None) => b,
            (None, Some(0.0)) => a,
            _ => {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                self.intern(Node::Add(a, b))
            }
        }
    }

    pub fn mul(&mut self, a: ExprId, b: ExprId) -> ExprId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => self.constant(0.0),
            (Some(1.0), None) => b,
            (None, Some(1.0)) => a,
            _ => {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                self.intern(Node::Mul(a, b))
            }
        }
    }

    /// `a − b`, expressed as `a + (−1)·b`.
    pub fn sub(&mut self, a: ExprId, b: ExprId) -> ExprId {
        if let (Some(x), Some(y)) = (self.as_const(a), self.as_const(b)) {
            return self.constant(x - y);
        }
        let m = self.constant(-1.0);
        let nb = self.mul(m, b);
        self.add(a, nb)
    }

    /// Non-positive constant denominators are left unfolded so evaluation
    /// reports them as stability violations.
    pub fn div(&mut self, a: ExprId, b: ExprId) -> ExprId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) if y > 0.0 => self.constant(x / y),
            (None, Some(1.0)) => a,
            _ => self.intern(Node::Div(a, b)),
        }
    }

    /// Ties route the derivative to `a`; operand order is preserved.
    pub fn min(&mut self, a: ExprId, b: ExprId) -> ExprId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x.min(y)),
            _ if a == b => a,
            _ => self.intern(Node::Min(a, b)),
        }
    }

    pub fn max(&mut self, a: ExprId, b: ExprId) -> ExprId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x.max(y)),
            _ if a == b => a,
            _ => self.intern(Node::Max(a, b)),
        }
    }

    pub fn ramp(&mut self, a: ExprId) -> ExprId {
        match self.as_const(a) {
            Some(x) => self.constant(x.max(0.0)),
            None => self.intern(Node::Ramp(a)),
        }
    }

    pub fn exp(&mut self, a: ExprId) -> ExprId {
        match self.as_const(a) {
            Some(x) => self.constant(x.exp()),
            None => self.intern(Node::Exp(a)),
        }
    }

    /// Sum of all terms; empty sums are 0.
    pub fn sum(&mut self, terms: &[ExprId]) -> ExprId {
        let mut acc = self.constant(0.0);
        for &t in terms {
            acc = self.add(acc, t);
        }
        acc
    }

    /// Number of distinct nodes reachable from `roots`.
    pub fn reachable_count(&self, roots: &[ExprId]) -> usize {
        self.reachable(roots).iter().filter(|&&r| r).count()
    }

    /// Reachability mask over the arena.
    pub fn reachable(&self, roots: &[ExprId]) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        for r in roots {
            mark[r.index()] = true;
        }
        for i in (0..self.nodes.len()).rev() {
            if !mark[i] {
                continue;
            }
            let (a, b) = self.nodes[i].children();
            for c in [a, b].into_iter().flatten() {
                mark[c.index()] = true;
            }
        }
        mark
    }

    /// Direct recursive interpretation, used as the reference against which
    /// compiled tapes are checked. Division by a non-positive value yields
    /// `Err(node)`.
    pub fn interpret(&self, root: ExprId, x: &[f64]) -> Result<f64, ExprId> {
        let mut memo = HashMap::new();
        self.interpret_memo(root, x, &mut memo)
    }

    /// Like [`interpret`](Self::interpret) but shares one memo over several
    /// roots.
    pub fn interpret_many(&self, roots: &[ExprId], x: &[f64]) -> Result<Vec<f64>, ExprId> {
        let mut memo = HashMap::new();
        roots
            .iter()
            .map(|&r| self.interpret_memo(r, x, &mut memo))
            .collect()
    }

    fn interpret_memo(
        &self,
        id: ExprId,
        x: &[f64],
        memo: &mut HashMap<ExprId, f64>,
    ) -> Result<f64, ExprId> {
        if let Some(&v) = memo.get(&id) {
            return Ok(v);
        }
        let v = match self.nodes[id.index()] {
            Node::Const(bits) => f64::from_bits(bits),
            Node::Var(i) => x[i as usize],
            Node::Add(a, b) => self.interpret_memo(a, x, memo)? + self.interpret_memo(b, x, memo)?,
            Node::Mul(a, b) => self.interpret_memo(a, x, memo)? * self.interpret_memo(b, x, memo)?,
            Node::Div(a, b) => {
                let num = self.interpret_memo(a, x, memo)?;
                let den = self.interpret_memo(b, x, memo)?;
                if !(den > 0.0) {
                    return Err(id);
                }
                num / den
            }
            Node::Min(a, b) => {
                let (p, q) = (self.interpret_memo(a, x, memo)?, self.interpret_memo(b, x, memo)?);
                if p <= q { p } else { q }
            }
            Node::Max(a, b) => {
                let (p, q) = (self.interpret_memo(a, x, memo)?, self.interpret_memo(b, x, memo)?);
                if p >= q { p } else { q }
            }
            Node::Ramp(a) => self.interpret_memo(a, x, memo)?.max(0.0),
            Node::Exp(a) => self.interpret_memo(a, x, memo)?.exp(),
        };
        memo.insert(id, v);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_sharing() {
        let mut a = ExprArena::new();
        let x = a.var(0);
        let y = a.var(1);
        let s1 = a.add(x, y);
        let s2 = a.add(y, x);
        assert_eq!(s1, s2);
        let n = a.len();
        let _ = a.mul(s1, s2);
        assert_eq!(a.len(), n + 1);
    }

    #[test]
    fn folding() {
        let mut a = ExprArena::new();
        let x = a.var(0);
        let zero = a.constant(0.0);
        let one = a.constant(1.0);
        assert_eq!(a.add(x, zero), x);
        assert_eq!(a.mul(x, one), x);
        assert_eq!(a.mul(x, zero), zero);
        let three = a.constant(3.0);
        let seven = a.constant(7.0);
        let m = a.min(three, seven);
        assert_eq!(a.as_const(m), Some(3.0));
        // non-positive constant denominator is kept
        let d = a.div(one, zero);
        assert!(a.as_const(d).is_none());
        assert!(a.interpret(d, &[0.0]).is_err());
    }

    #[test]
    fn interpret_min_max_ramp() {
        let mut a = ExprArena::new();
        let x = a.var(0);
        let y = a.var(1);
        let m = a.min(x, y);
        let mx = a.max(x, y);
        let r = a.ramp(x);
        assert_eq!(a.interpret(m, &[3.0, 7.0]), Ok(3.0));
        assert_eq!(a.interpret(mx, &[3.0, 7.0]), Ok(7.0));
        assert_eq!(a.interpret(r, &[-2.0, 0.0]), Ok(0.0));
    }
}
