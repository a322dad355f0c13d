//! (min,plus) operations on token-bucket / rate-latency curves whose
//! parameters are expression nodes rather than numbers.
//!
//! Every operation emits nodes into an [`ExprArena`]; the resulting DAG can
//! be interpreted directly or compiled by [`crate::adgraph`]. Stability
//! (`r < R`) is an obligation of the caller: a left-over whose denominator
//! turns non-positive surfaces as an evaluation error, not here.

pub mod expr;
pub mod oracle;

pub use expr::{ExprArena, ExprId, Node};

use crate::curve::{RateLatency, TokenBucket};

/// Rate used for the identity element of concatenation.
pub const INFINITE_RATE_SENTINEL: f64 = 1e18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymTokenBucket {
    pub rate: ExprId,
    pub burst: ExprId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymRateLatency {
    pub rate: ExprId,
    pub latency: ExprId,
}

impl SymTokenBucket {
    pub fn constant(arena: &mut ExprArena, tb: TokenBucket) -> Self {
        SymTokenBucket {
            rate: arena.constant(tb.rate),
            burst: arena.constant(tb.burst),
        }
    }

    pub fn zero(arena: &mut ExprArena) -> Self {
        Self::constant(arena, TokenBucket::ZERO)
    }

    /// Numeric value at `x`, through the reference interpreter.
    pub fn eval(&self, arena: &ExprArena, x: &[f64]) -> Result<TokenBucket, ExprId> {
        Ok(TokenBucket {
            rate: arena.interpret(self.rate, x)?,
            burst: arena.interpret(self.burst, x)?,
        })
    }
}

impl SymRateLatency {
    pub fn constant(arena: &mut ExprArena, rl: RateLatency) -> Self {
        SymRateLatency {
            rate: arena.constant(rl.rate),
            latency: arena.constant(rl.latency),
        }
    }

    /// Identity of concatenation: a zero-latency server of sentinel rate.
    pub fn identity(arena: &mut ExprArena, sentinel: f64) -> Self {
        Self::constant(
            arena,
            RateLatency {
                rate: sentinel,
                latency: 0.0,
            },
        )
    }

    pub fn eval(&self, arena: &ExprArena, x: &[f64]) -> Result<RateLatency, ExprId> {
        Ok(RateLatency {
            rate: arena.interpret(self.rate, x)?,
            latency: arena.interpret(self.latency, x)?,
        })
    }
}

/// `γ(r₁,B₁) + γ(r₂,B₂) = γ(r₁+r₂, B₁+B₂)`.
pub fn aggregate(arena: &mut ExprArena, a: SymTokenBucket, b: SymTokenBucket) -> SymTokenBucket {
    SymTokenBucket {
        rate: arena.add(a.rate, b.rate),
        burst: arena.add(a.burst, b.burst),
    }
}

/// Aggregate of any number of arrival curves; empty input gives `γ(0,0)`.
pub fn aggregate_all(arena: &mut ExprArena, curves: &[SymTokenBucket]) -> SymTokenBucket {
    let rates: Vec<ExprId> = curves.iter().map(|c| c.rate).collect();
    let bursts: Vec<ExprId> = curves.iter().map(|c| c.burst).collect();
    SymTokenBucket {
        rate: arena.sum(&rates),
        burst: arena.sum(&bursts),
    }
}

/// `β(R₁,L₁) ⊗ β(R₂,L₂) = β(min(R₁,R₂), L₁+L₂)`.
pub fn convolve(arena: &mut ExprArena, a: SymRateLatency, b: SymRateLatency) -> SymRateLatency {
    SymRateLatency {
        rate: arena.min(a.rate, b.rate),
        latency: arena.add(a.latency, b.latency),
    }
}

/// `γ(r,B) ⊘ β(R,L) = γ(r, B + r·L)`.
pub fn deconvolve(arena: &mut ExprArena, a: SymTokenBucket, b: SymRateLatency) -> SymTokenBucket {
    let rl = arena.mul(a.rate, b.latency);
    SymTokenBucket {
        rate: a.rate,
        burst: arena.add(a.burst, rl),
    }
}

/// `β(R,L) ⊖ γ(r,B) = β(R−r, (B + R·L)/(R−r))`.
pub fn leftover(arena: &mut ExprArena, b: SymRateLatency, a: SymTokenBucket) -> SymRateLatency {
    let rate = arena.sub(b.rate, a.rate);
    let rl = arena.mul(b.rate, b.latency);
    let num = arena.add(a.burst, rl);
    SymRateLatency {
        rate,
        latency: arena.div(num, rate),
    }
}

/// `h(γ(r,B), β(R,L)) = B/R + L`.
pub fn delay_bound(arena: &mut ExprArena, a: SymTokenBucket, b: SymRateLatency) -> ExprId {
    let q = arena.div(a.burst, b.rate);
    arena.add(q, b.latency)
}

/// `γ(p·r, p·B)`: the arrival curve gated by a selection weight.
pub fn scale(arena: &mut ExprArena, a: SymTokenBucket, p: ExprId) -> SymTokenBucket {
    SymTokenBucket {
        rate: arena.mul(p, a.rate),
        burst: arena.mul(p, a.burst),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tb(a: &mut ExprArena, r: f64, b: f64) -> SymTokenBucket {
        SymTokenBucket::constant(a, TokenBucket { rate: r, burst: b })
    }

    fn rl(a: &mut ExprArena, r: f64, l: f64) -> SymRateLatency {
        SymRateLatency::constant(a, RateLatency { rate: r, latency: l })
    }

    #[test]
    fn aggregate_examples() {
        let mut a = ExprArena::new();
        let (x, y) = (tb(&mut a, 1.0, 2.0), tb(&mut a, 3.0, 4.0));
        let s = aggregate(&mut a, x, y);
        assert_eq!(s.eval(&a, &[]).unwrap(), TokenBucket { rate: 4.0, burst: 6.0 });
        let z = SymTokenBucket::zero(&mut a);
        let (r, b) = (a.var(0), a.var(1));
        let sym = SymTokenBucket { rate: r, burst: b };
        let s = aggregate(&mut a, sym, z);
        assert_eq!(s, sym);
        let n = aggregate_all(&mut a, &[x; 5]);
        assert_eq!(n.eval(&a, &[]).unwrap(), TokenBucket { rate: 5.0, burst: 10.0 });
    }

    #[test]
    fn convolve_examples() {
        let mut a = ExprArena::new();
        let (p, q) = (rl(&mut a, 10.0, 1.0), rl(&mut a, 8.0, 2.0));
        let c = convolve(&mut a, p, q);
        assert_eq!(c.eval(&a, &[]).unwrap(), RateLatency { rate: 8.0, latency: 3.0 });

        let (r, l) = (a.var(0), a.var(1));
        let sym = SymRateLatency { rate: r, latency: l };
        let id = SymRateLatency::identity(&mut a, INFINITE_RATE_SENTINEL);
        let c = convolve(&mut a, sym, id);
        assert_eq!(c.eval(&a, &[7.0, 2.5]).unwrap(), RateLatency { rate: 7.0, latency: 2.5 });

        let (p, q) = (rl(&mut a, 5.0, 0.0), rl(&mut a, 5.0, 4.0));
        let c = convolve(&mut a, p, q);
        assert_eq!(c.eval(&a, &[]).unwrap(), RateLatency { rate: 5.0, latency: 4.0 });
    }

    #[test]
    fn deconvolve_examples() {
        let mut a = ExprArena::new();
        let (g, s) = (tb(&mut a, 2.0, 5.0), rl(&mut a, 10.0, 3.0));
        let o = deconvolve(&mut a, g, s);
        assert_eq!(o.eval(&a, &[]).unwrap(), TokenBucket { rate: 2.0, burst: 11.0 });
        let z = SymTokenBucket::zero(&mut a);
        let o = deconvolve(&mut a, z, s);
        assert_eq!(o.eval(&a, &[]).unwrap(), TokenBucket::ZERO);
        let s0 = rl(&mut a, 10.0, 0.0);
        let o = deconvolve(&mut a, g, s0);
        assert_eq!(o.eval(&a, &[]).unwrap(), TokenBucket { rate: 2.0, burst: 5.0 });
    }

    #[test]
    fn leftover_examples() {
        let mut a = ExprArena::new();
        let (s, g) = (rl(&mut a, 10.0, 2.0), tb(&mut a, 4.0, 6.0));
        let lo = leftover(&mut a, s, g).eval(&a, &[]).unwrap();
        assert_eq!(lo.rate, 6.0);
        assert!((lo.latency - 26.0 / 6.0).abs() < 1e-15);

        let z = SymTokenBucket::zero(&mut a);
        let lo = leftover(&mut a, s, z).eval(&a, &[]).unwrap();
        assert_eq!(lo, RateLatency { rate: 10.0, latency: 2.0 });

        let g = tb(&mut a, 10.0, 1.0);
        let lo = leftover(&mut a, s, g);
        assert!(lo.eval(&a, &[]).is_err());
    }

    #[test]
    fn delay_examples() {
        let mut a = ExprArena::new();
        let (g, s) = (tb(&mut a, 2.0, 5.0), rl(&mut a, 10.0, 3.0));
        let d = delay_bound(&mut a, g, s);
        assert_eq!(a.interpret(d, &[]), Ok(3.5));
        let (g, s) = (tb(&mut a, 4.0, 0.0), rl(&mut a, 10.0, 0.0));
        let d = delay_bound(&mut a, g, s);
        assert_eq!(a.interpret(d, &[]), Ok(0.0));
        let (g, s) = (tb(&mut a, 1.0, 2.0), rl(&mut a, 10.0, 3.0));
        let d = delay_bound(&mut a, g, s);
        assert!((a.interpret(d, &[]).unwrap() - 3.2).abs() < 1e-15);
    }

    #[test]
    fn scale_examples() {
        let mut a = ExprArena::new();
        let g = tb(&mut a, 2.0, 4.0);
        for (p, want) in [(0.0, (0.0, 0.0)), (1.0, (2.0, 4.0)), (0.5, (1.0, 2.0))] {
            let pid = a.constant(p);
            let s = scale(&mut a, g, pid).eval(&a, &[]).unwrap();
            assert_eq!((s.rate, s.burst), want);
        }
        // with a variable selection weight
        let p = a.var(0);
        let s = scale(&mut a, g, p);
        assert_eq!(s.eval(&a, &[0.25]).unwrap(), TokenBucket { rate: 0.5, burst: 1.0 });
    }
}
