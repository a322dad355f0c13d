use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("invalid token bucket (rate {rate}, burst {burst})")]
    InvalidTokenBucket { rate: f64, burst: f64 },
    #[error("invalid rate-latency curve (rate {rate}, latency {latency})")]
    InvalidRateLatency { rate: f64, latency: f64 },
    #[error("stability violated: arrival rate {arrival_rate} >= service rate {service_rate}")]
    Unstable { arrival_rate: f64, service_rate: f64 },
}

/// Failure while evaluating a compiled graph.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("stability violated: non-positive denominator at tape slot {slot} (output {output})")]
    Stability { slot: usize, output: usize },
    #[error("expected {expected} variables, got {got}")]
    Dimension { expected: usize, got: usize },
}
