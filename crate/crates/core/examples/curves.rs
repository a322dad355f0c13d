//! Closed-form min-plus operations on token-bucket and rate-latency curves.

use ncsynth::{RateLatency, TokenBucket};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let flow = TokenBucket::new(1.0, 1.0)?;
    let cross = TokenBucket::new(2.0, 2.0)?;
    let s1 = RateLatency::new(10.0, 1.0)?;
    let s2 = RateLatency::new(5.0, 1.0)?;

    let left = s1.leftover(&cross)?;
    println!("leftover at s1:   rate {} latency {}", left.rate, left.latency);
    let chain = left.convolve(&s2);
    println!("end-to-end curve: rate {} latency {}", chain.rate, chain.latency);
    println!("delay bound:      {}", flow.delay_bound(&chain)?);

    let out = flow.deconvolve(&left);
    println!("output of s1:     rate {} burst {}", out.rate, out.burst);
    let both = flow.aggregate(&cross).scale(0.5);
    println!("half of both:     rate {} burst {}", both.rate, both.burst);
    Ok(())
}
