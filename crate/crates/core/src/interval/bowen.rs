use std::collections::HashMap;

use rayon::prelude::*;

use super::map::PiecewiseMonotoneMap;
use crate::error::{Error, Result};

/// Largest `grid * n` accepted by [`bowen_entropy_estimate`].
pub const BOWEN_BUDGET: u64 = 100_000_000;

/// Orbits passing this close to a breakpoint are resampled once, then dropped.
const BREAKPOINT_GUARD: f64 = 1e-12;

const CHUNK: usize = 4096;

// f(x), ..., f^n(x), or None when the orbit grazes a breakpoint.
fn orbit(f: &PiecewiseMonotoneMap, breakpoints: &[f64], mut x: f64, n: usize) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        if breakpoints
            .iter()
            .any(|&c| (x - c).abs() < BREAKPOINT_GUARD)
        {
            return None;
        }
        x = f.eval(x).clamp(f.domain.0, f.domain.1);
        out.push(x);
    }
    Some(out)
}

/// `log |S| / n` for a greedily extracted `(n, eps)`-separated set `S` of grid
/// points, where orbits are compared at times `1..=n`.
///
/// Grid points are visited left to right and kept when their orbit is more
/// than `eps` away from every orbit kept so far.
pub fn bowen_entropy_estimate(
    f: &PiecewiseMonotoneMap,
    n: usize,
    eps: f64,
    grid: usize,
) -> Result<f64> {
    if n == 0 || grid == 0 || !(eps > 0.0) {
        return Err(Error::Precondition(
            "n, grid and eps must be positive".into(),
        ));
    }
    if (grid as u64).saturating_mul(n as u64) > BOWEN_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "grid * n exceeds {BOWEN_BUDGET}"
        )));
    }
    let (a, b) = f.domain;
    let h = (b - a) / grid as f64;
    let breakpoints = f.breakpoints();
    let cell = |y: f64| (y / eps).floor() as i64;
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for start in (0..grid).step_by(CHUNK) {
        let end = (start + CHUNK).min(grid);
        let orbits: Vec<Option<Vec<f64>>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let x = a + h * (i as f64 + 0.5);
                orbit(f, &breakpoints, x, n).or_else(|| orbit(f, &breakpoints, x + h / 7.0, n))
            })
            .collect();
        for o in orbits.into_iter().flatten() {
            let key = (cell(o[0]), cell(o[n - 1]));
            let close = (-1..=1).any(|d0| {
                (-1..=1).any(|d1| {
                    buckets.get(&(key.0 + d0, key.1 + d1)).is_some_and(|ids| {
                        ids.iter()
                            .any(|&id| kept[id].iter().zip(&o).all(|(u, v)| (u - v).abs() <= eps))
                    })
                })
            });
            if !close {
                buckets.entry(key).or_default().push(kept.len());
                kept.push(o);
            }
        }
    }
    if kept.is_empty() {
        return Ok(0.0);
    }
    Ok((kept.len() as f64).ln() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::map::{constant, rotation, tent};

    #[test]
    fn zero_entropy_examples() {
        assert_eq!(
            bowen_entropy_estimate(&constant(0.25).unwrap(), 10, 1e-3, 1000).unwrap(),
            0.0
        );
        let r = rotation(0.5_f64.sqrt() - 0.5).unwrap();
        let grid = 2000;
        for n in [10, 40] {
            let e = bowen_entropy_estimate(&r, n, 1e-2, grid).unwrap();
            assert!(e <= (grid as f64).ln() / n as f64 + 1e-12);
        }
        assert!(bowen_entropy_estimate(&r, 40, 1e-2, grid).unwrap() < 0.15);
    }

    #[test]
    fn tent_estimate_is_positive_and_bounded_by_grid() {
        let t = tent(2.0).unwrap();
        let grid = 20_000;
        let e = bowen_entropy_estimate(&t, 12, 1e-2, grid).unwrap();
        assert!(e > 0.3 && e <= (grid as f64).ln() / 12.0 + 1e-12, "{e}");
    }

    #[test]
    fn tent_estimate_near_log_two() {
        let t = tent(2.0).unwrap();
        let e = bowen_entropy_estimate(&t, 14, 1e-3, 100_000).unwrap();
        assert!((e - 2f64.ln()).abs() < 0.1, "{e}");
    }

    #[test]
    fn budget_is_enforced() {
        let t = tent(2.0).unwrap();
        assert!(bowen_entropy_estimate(&t, 1000, 1e-3, 1_000_000)
            .unwrap_err()
            .is_budget());
    }
}
