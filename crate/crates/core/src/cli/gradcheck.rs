//! Reverse-mode gradients against central finite differences.

use serde::Serialize;

use crate::objective::CompiledObjective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Relative step of the differences.
    pub step: f64,
    /// Relative error accepted per coordinate.
    pub tolerance: f64,
    /// One-sided slopes disagreeing by more than this (relative) mark a kink.
    pub kink_threshold: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-6,
            tolerance: 1e-5,
            kink_threshold: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GradCheck {
    pub coordinates: usize,
    pub passed: usize,
    /// Coordinates at a min/max/ramp tie, where no derivative exists.
    pub ties_skipped: usize,
    /// Evaluations that failed outright.
    pub hard_failures: usize,
    pub max_rel_error: f64,
}

impl GradCheck {
    pub fn merge(&mut self, other: &GradCheck) {
        self.coordinates += other.coordinates;
        self.passed += other.passed;
        self.ties_skipped += other.ties_skipped;
        self.hard_failures += other.hard_failures;
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
    }

    /// Share of checked (non-tie) coordinates within tolerance.
    pub fn pass_rate(&self) -> f64 {
        let checked = self.coordinates - self.ties_skipped;
        if checked == 0 {
            1.0
        } else {
            self.passed as f64 / checked as f64
        }
    }
}

fn rel_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-10 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Checks the gradient of objective plus unit-weight penalties at `x`.
pub fn check_point(objective: &CompiledObjective, x: &[f64], opts: &GradCheckOptions) -> GradCheck {
    let graph = objective.graph();
    let mut w = vec![0.0; graph.output_count()];
    for wi in w.iter_mut().take(3) {
        *wi = 1.0;
    }
    let f = |p: &[f64]| -> Option<f64> {
        graph
            .forward(p)
            .ok()
            .map(|pass| pass.outputs().iter().zip(&w).map(|(o, w)| o * w).sum())
    };
    let mut out = GradCheck::default();
    let Ok(res) = graph.evaluate(x, &w) else {
        out.hard_failures += 1;
        return out;
    };
    let Some(f0) = f(x) else {
        out.hard_failures += 1;
        return out;
    };
    let mut p = x.to_vec();
    for i in 0..x.len() {
        out.coordinates += 1;
        let h = opts.step * x[i].abs().max(1.0);
        p[i] = x[i] + h;
        let up = f(&p);
        p[i] = x[i] - h;
        let down = f(&p);
        p[i] = x[i];
        let (Some(up), Some(down)) = (up, down) else {
            out.hard_failures += 1;
            continue;
        };
        let forward = (up - f0) / h;
        let backward = (f0 - down) / h;
        if rel_error(forward, backward) > opts.kink_threshold {
            out.ties_skipped += 1;
            continue;
        }
        let central = (up - down) / (2.0 * h);
        let err = rel_error(res.gradient[i], central);
        out.max_rel_error = out.max_rel_error.max(err);
        if err <= opts.tolerance {
            out.passed += 1;
        }
    }
    out
}
