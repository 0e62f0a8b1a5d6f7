use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::map::PiecewiseMonotoneMap;
use crate::error::{Error, Result};

/// How far an iterate may leave the domain before the orbit counts as escaped.
const ESCAPE_SLACK: f64 = 1e-9;

/// Closed-form observables selectable from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Identity,
    Square,
    /// `cos(2 pi x)`
    Cosine,
    /// Indicator of `[lo, hi)`.
    Indicator {
        lo: f64,
        hi: f64,
    },
}

impl Observable {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Observable::Identity => x,
            Observable::Square => x * x,
            Observable::Cosine => (2.0 * std::f64::consts::PI * x).cos(),
            Observable::Indicator { lo, hi } => f64::from(u8::from(x >= lo && x < hi)),
        }
    }
}

/// Running averages `A_m = (1/m) sum_{i<m} phi(f^i x0)` for `m = 1..=n`.
pub fn birkhoff_series(
    f: &PiecewiseMonotoneMap,
    x0: f64,
    phi: impl Fn(f64) -> f64,
    n: usize,
) -> Result<Vec<f64>> {
    if !f.contains(x0, 0.0) {
        return Err(Error::Precondition(format!("x0 = {x0} outside the domain")));
    }
    let (a, b) = f.domain;
    let mut x = x0;
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(n);
    for m in 1..=n {
        sum += phi(x);
        out.push(sum / m as f64);
        x = f.eval(x);
        if !f.contains(x, ESCAPE_SLACK) || !x.is_finite() {
            return Err(Error::OrbitEscaped { step: m, x });
        }
        x = x.clamp(a, b);
    }
    Ok(out)
}

/// Uniform starting point in the interior of the domain, drawn from
/// `ChaCha8Rng` seeded with `seed`.
pub fn seeded_start(f: &PiecewiseMonotoneMap, seed: u64) -> f64 {
    let (a, b) = f.domain;
    let u: f64 = ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..1.0);
    (a + (b - a) * u).clamp(a, b)
}
