use serde::{Deserialize, Serialize};

use super::map::PiecewiseMonotoneMap;
use crate::error::{Error, Result};

/// Most laps a single iterate may have.
pub const LAP_BUDGET: usize = 1_000_000;

/// A maximal interval on which `f^k` follows one sequence of pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lap {
    pub lo: f64,
    pub hi: f64,
    /// Piece index used at each of the `k` steps.
    pub itinerary: Vec<u16>,
}

impl Lap {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `f^k(x)` along a fixed itinerary, each step clamped to its piece.
pub fn eval_along(f: &PiecewiseMonotoneMap, itinerary: &[u16], mut x: f64) -> f64 {
    for &i in itinerary {
        x = f.pieces()[i as usize].eval(x);
    }
    x
}

/// Plain iterate `f^k(x)`.
pub fn iterate(f: &PiecewiseMonotoneMap, k: usize, mut x: f64) -> f64 {
    for _ in 0..k {
        x = f.eval(x);
    }
    x
}

/// Sorted image of a lap under `f^k`.
pub fn lap_image(f: &PiecewiseMonotoneMap, lap: &Lap) -> (f64, f64) {
    let (a, b) = (
        eval_along(f, &lap.itinerary, lap.lo),
        eval_along(f, &lap.itinerary, lap.hi),
    );
    (a.min(b), a.max(b))
}

// Bisection bracket `(a, b)` around the solution of `g(x) = target`, with
// `g(a) < target <= g(b)` for increasing `g` and the reverse for decreasing.
fn bracket(g: impl Fn(f64) -> f64, lo: f64, hi: f64, target: f64) -> (f64, f64, bool) {
    let increasing = g(hi) >= g(lo);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (g(mid) < target) == increasing {
            a = mid;
        } else {
            b = mid;
        }
    }
    (a, b, increasing)
}

/// Solves `g(x) = target` on `[lo, hi]` for `g` monotone, bisecting down to
/// adjacent floats.
pub fn solve_monotone(g: impl Fn(f64) -> f64, lo: f64, hi: f64, target: f64) -> f64 {
    let (a, b, _) = bracket(g, lo, hi, target);
    0.5 * (a + b)
}

/// Preimage of `[t0, t1]` under `f^k` restricted to a lap, assuming the lap
/// image meets it. Returns the sorted subinterval of the lap, rounded
/// outwards so that its computed image contains `[t0, t1] ∩ image`.
pub fn lap_preimage(f: &PiecewiseMonotoneMap, lap: &Lap, t0: f64, t1: f64) -> (f64, f64) {
    let g = |x: f64| eval_along(f, &lap.itinerary, x);
    let (glo, ghi) = (g(lap.lo), g(lap.hi));
    let increasing = ghi >= glo;
    let (img_lo, img_hi) = (glo.min(ghi), glo.max(ghi));
    // `low` asks for a point whose image is at most `t`, otherwise at least `t`
    let solve = |t: f64, low: bool| -> f64 {
        if t <= img_lo {
            if increasing {
                lap.lo
            } else {
                lap.hi
            }
        } else if t >= img_hi {
            if increasing {
                lap.hi
            } else {
                lap.lo
            }
        } else {
            let (a, b, inc) = bracket(g, lap.lo, lap.hi, t);
            // g(a) is below t exactly when g increases
            if low == inc {
                a
            } else {
                b
            }
        }
    };
    let (a, b) = (solve(t0, true), solve(t1, false));
    (a.min(b), a.max(b))
}

/// Laps of `f^k`, found by pulling the piece boundaries back through the laps
/// of `f^(k-1)`. Laps passing through excluded pieces are dropped.
pub fn laps(f: &PiecewiseMonotoneMap, k: usize) -> Result<Vec<Lap>> {
    let mut all = laps_up_to(f, k)?;
    Ok(all.pop().unwrap_or_default())
}

/// Laps of `f^1, ..., f^k`.
pub fn laps_up_to(f: &PiecewiseMonotoneMap, k: usize) -> Result<Vec<Vec<Lap>>> {
    lap_sequence(f, k, LAP_BUDGET, false)
}

/// Laps of `f^1, ...` up to `k`, or up to the last iterate within `budget`
/// laps when `truncate` is set.
pub(crate) fn lap_sequence(
    f: &PiecewiseMonotoneMap,
    k: usize,
    budget: usize,
    truncate: bool,
) -> Result<Vec<Vec<Lap>>> {
    if k == 0 {
        return Err(Error::Precondition("iterate k must be at least 1".into()));
    }
    let pieces = f.pieces();
    let mut current: Vec<Lap> = pieces
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.excluded)
        .map(|(i, p)| Lap {
            lo: p.lo,
            hi: p.hi,
            itinerary: vec![i as u16],
        })
        .collect();
    let mut out = Vec::with_capacity(k);
    for _ in 1..k {
        let mut next = Vec::new();
        for lap in &current {
            let (img_lo, img_hi) = lap_image(f, lap);
            for (i, p) in pieces.iter().enumerate() {
                if p.excluded {
                    continue;
                }
                let (t0, t1) = (img_lo.max(p.lo), img_hi.min(p.hi));
                let degenerate = img_lo == img_hi;
                let meets = if degenerate {
                    f.piece_index(img_lo) == i
                } else {
                    t1 > t0
                };
                if !meets {
                    continue;
                }
                let (lo, hi) = if degenerate {
                    (lap.lo, lap.hi)
                } else {
                    lap_preimage(f, lap, t0, t1)
                };
                if hi <= lo {
                    continue;
                }
                let mut itinerary = lap.itinerary.clone();
                itinerary.push(i as u16);
                next.push(Lap { lo, hi, itinerary });
                if next.len() > budget {
                    if truncate {
                        out.push(current);
                        return Ok(out);
                    }
                    return Err(Error::BudgetExceeded(format!("more than {budget} laps")));
                }
            }
        }
        next.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        out.push(std::mem::replace(&mut current, next));
    }
    out.push(current);
    Ok(out)
}
