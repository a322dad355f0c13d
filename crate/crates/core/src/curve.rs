//! Numeric token-bucket arrival curves and rate-latency service curves.
//!
//! These are the concrete counterparts of the symbolic curves in
//! [`crate::minplus`]. The closed forms below only hold for these two
//! families, under the stability condition `r < R` wherever a left-over or
//! a delay bound is taken.

use serde::{Deserialize, Serialize};

use crate::error::CurveError;

/// Token-bucket arrival curve `γ(t) = B + r·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenBucket {
    pub rate: f64,
    pub burst: f64,
}

/// Rate-latency service curve `β(t) = R·[t − L]⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLatency {
    pub rate: f64,
    pub latency: f64,
}

impl TokenBucket {
    /// The null curve, used for flows scaled out of a server.
    pub const ZERO: TokenBucket = TokenBucket {
        rate: 0.0,
        burst: 0.0,
    };

    pub fn new(rate: f64, burst: f64) -> Result<Self, CurveError> {
        if !(rate >= 0.0 && rate.is_finite()) || !(burst >= 0.0 && burst.is_finite()) {
            return Err(CurveError::InvalidTokenBucket { rate, burst });
        }
        Ok(TokenBucket { rate, burst })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.burst + self.rate * t
    }

    pub fn aggregate(&self, other: &TokenBucket) -> TokenBucket {
        TokenBucket {
            rate: self.rate + other.rate,
            burst: self.burst + other.burst,
        }
    }

    /// Output bound after crossing `service`: `γ(r, B + r·L)`.
    pub fn deconvolve(&self, service: &RateLatency) -> TokenBucket {
        TokenBucket {
            rate: self.rate,
            burst: self.burst + self.rate * service.latency,
        }
    }

    pub fn scale(&self, p: f64) -> TokenBucket {
        TokenBucket {
            rate: p * self.rate,
            burst: p * self.burst,
        }
    }

    /// Horizontal deviation `B/R + L` against a rate-latency curve.
    pub fn delay_bound(&self, service: &RateLatency) -> Result<f64, CurveError> {
        if !(self.rate < service.rate) {
            return Err(CurveError::Unstable {
                arrival_rate: self.rate,
                service_rate: service.rate,
            });
        }
        Ok(self.burst / service.rate + service.latency)
    }
}

impl RateLatency {
    pub fn new(rate: f64, latency: f64) -> Result<Self, CurveError> {
        if !(rate > 0.0 && rate.is_finite()) || !(latency >= 0.0 && latency.is_finite()) {
            return Err(CurveError::InvalidRateLatency { rate, latency });
        }
        Ok(RateLatency { rate, latency })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.rate * (t - self.latency).max(0.0)
    }

    /// Concatenation of two servers in tandem.
    pub fn convolve(&self, other: &RateLatency) -> RateLatency {
        RateLatency {
            rate: self.rate.min(other.rate),
            latency: self.latency + other.latency,
        }
    }

    /// Arbitrary-multiplexing residual service left to a flow after `cross`.
    pub fn leftover(&self, cross: &TokenBucket) -> Result<RateLatency, CurveError> {
        if !(cross.rate < self.rate) {
            return Err(CurveError::Unstable {
                arrival_rate: cross.rate,
                service_rate: self.rate,
            });
        }
        let rate = self.rate - cross.rate;
        Ok(RateLatency {
            rate,
            latency: (cross.burst + self.rate * self.latency) / rate,
        })
    }
}
