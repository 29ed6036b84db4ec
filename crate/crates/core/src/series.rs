//! Numerically careful differences used by every series in the crate.

use serde::{Deserialize, Serialize};

/// A truncated series value with a certified bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluated {
    pub value: f64,
    pub tail_bound: f64,
}

impl Evaluated {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            tail_bound: 0.0,
        }
    }
}

/// `(1 - a)^n`.
pub fn pow_one_minus(a: f64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if a < 1.0 {
        (n as f64 * (-a).ln_1p()).exp()
    } else {
        (1.0 - a).powf(n as f64)
    }
}

/// `(1 - a)^n - (1 - b)^n`, without cancellation when both bases are close to 1.
pub fn pow_diff(a: f64, b: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if a < 1.0 && b < 1.0 {
        let la = n as f64 * (-a).ln_1p();
        let lb = n as f64 * (-b).ln_1p();
        if la >= lb {
            -la.exp() * (lb - la).exp_m1()
        } else {
            lb.exp() * (la - lb).exp_m1()
        }
    } else {
        pow_one_minus(a, n) - pow_one_minus(b, n)
    }
}

/// `exp(-a) - exp(-b)`.
pub fn exp_diff(a: f64, b: f64) -> f64 {
    if a <= b {
        -(-a).exp() * (a - b).exp_m1()
    } else {
        (-b).exp() * (b - a).exp_m1()
    }
}
