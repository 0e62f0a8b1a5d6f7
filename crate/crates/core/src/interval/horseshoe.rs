use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::laps::{eval_along, iterate, lap_image, lap_preimage, lap_sequence, Lap};
use super::map::PiecewiseMonotoneMap;
use crate::error::Result;

/// Iterates with more laps than this are left out of the horseshoe search.
pub const SEARCH_LAP_BUDGET: usize = 2048;

/// Iterates whose candidate targets times laps exceed this are skipped.
pub const SEARCH_WORK_BUDGET: usize = 1 << 20;

/// Relative distance below which two candidate targets count as one.
const TARGET_RESOLUTION: f64 = 1e-9;

/// Slack used when comparing interval images with their targets.
pub const CONTAINMENT_SLACK: f64 = 1e-13;

/// Intervals `J_1 < ... < J_p`, each mapped by `f^k` monotonically over
/// their whole hull.
///
/// `strict` is set when the closed intervals are pairwise disjoint;
/// otherwise neighbours may share an endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeCertificate {
    pub k: usize,
    pub p: usize,
    pub intervals: Vec<(f64, f64)>,
    pub bound_nats: f64,
    pub strict: bool,
    /// Piece sequence followed by `f^k` on each interval.
    pub itineraries: Vec<Vec<u16>>,
}

impl HorseshoeCertificate {
    pub fn hull(&self) -> (f64, f64) {
        (self.intervals[0].0, self.intervals[self.p - 1].1)
    }
}

fn covers(image: (f64, f64), target: (f64, f64)) -> bool {
    image.0 <= target.0 + CONTAINMENT_SLACK && image.1 >= target.1 - CONTAINMENT_SLACK
}

fn inside(inner: (f64, f64), outer: (f64, f64)) -> bool {
    inner.0 >= outer.0 - CONTAINMENT_SLACK && inner.1 <= outer.1 + CONTAINMENT_SLACK
}

struct Candidate {
    members: Vec<(usize, (f64, f64))>,
}

// Laps whose image covers `target`, each shrunk to the preimage of `target`,
// keeping only those whose preimage lies inside `target`.
fn members(
    f: &PiecewiseMonotoneMap,
    laps: &[Lap],
    images: &[(f64, f64)],
    target: (f64, f64),
) -> Vec<(usize, (f64, f64))> {
    laps.iter()
        .zip(images)
        .enumerate()
        .filter(|(_, (lap, img))| covers(**img, target) && lap.hi >= target.0 && lap.lo <= target.1)
        .filter_map(|(i, (lap, _))| {
            let j = lap_preimage(f, lap, target.0, target.1);
            (j.1 > j.0 && inside(j, target)).then_some((i, j))
        })
        .collect()
}

// Shrinks the target to the hull of its members until nothing changes.
fn settle(
    f: &PiecewiseMonotoneMap,
    laps: &[Lap],
    images: &[(f64, f64)],
    mut target: (f64, f64),
) -> Option<Candidate> {
    for _ in 0..64 {
        let found = members(f, laps, images, target);
        if found.len() < 2 {
            return None;
        }
        let hull = (found[0].1 .0, found[found.len() - 1].1 .1);
        if (hull.0 - target.0).abs() <= f64::EPSILON * target.0.abs().max(1.0)
            && (hull.1 - target.1).abs() <= f64::EPSILON * target.1.abs().max(1.0)
        {
            return Some(Candidate { members: found });
        }
        target = hull;
    }
    None
}

// Starting set: laps whose image contains at least `p_min` whole laps, then
// drop laps whose image misses the hull of the survivors.
fn pruned_start(laps: &[Lap], images: &[(f64, f64)], p_min: usize) -> Option<(f64, f64)> {
    let mut alive: Vec<usize> = (0..laps.len())
        .filter(|&i| {
            laps.iter()
                .filter(|l| inside((l.lo, l.hi), images[i]))
                .count()
                >= p_min
        })
        .collect();
    loop {
        if alive.len() < 2 {
            return None;
        }
        let hull = (laps[alive[0]].lo, laps[*alive.last().expect("nonempty")].hi);
        let before = alive.len();
        alive.retain(|&i| covers(images[i], hull));
        if alive.len() == before {
            return Some(hull);
        }
    }
}

fn search_iterate(
    f: &PiecewiseMonotoneMap,
    k: usize,
    laps: &[Lap],
    p_min: usize,
) -> Option<HorseshoeCertificate> {
    let images: Vec<(f64, f64)> = laps.iter().map(|l| lap_image(f, l)).collect();
    let mut targets: Vec<(f64, f64)> = images.iter().copied().filter(|t| t.1 > t.0).collect();
    targets.extend(pruned_start(laps, &images, p_min));
    // targets closer than TARGET_RESOLUTION settle to the same candidate
    let unit = TARGET_RESOLUTION * (f.domain.1 - f.domain.0);
    let key = |t: &(f64, f64)| ((t.0 / unit).round() as i64, (t.1 / unit).round() as i64);
    targets.sort_by(|a, b| {
        key(a)
            .cmp(&key(b))
            .then(a.0.total_cmp(&b.0))
            .then(a.1.total_cmp(&b.1))
    });
    targets.dedup_by(|a, b| key(a) == key(b));
    if targets.len().saturating_mul(laps.len()) > SEARCH_WORK_BUDGET {
        return None;
    }
    let best = targets
        .par_iter()
        .filter_map(|&t| settle(f, laps, &images, t))
        .filter(|c| c.members.len() >= p_min.max(2))
        .map(|c| {
            let p = c.members.len();
            let intervals: Vec<(f64, f64)> = c.members.iter().map(|m| m.1).collect();
            let strict = intervals.windows(2).all(|w| w[0].1 < w[1].0);
            HorseshoeCertificate {
                k,
                p,
                bound_nats: (p as f64).ln() / k as f64,
                strict,
                itineraries: c
                    .members
                    .iter()
                    .map(|m| laps[m.0].itinerary.clone())
                    .collect(),
                intervals,
            }
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a });
    best
}

// Larger bound first, then smaller k, larger p, leftmost intervals.
fn better(a: &HorseshoeCertificate, b: &HorseshoeCertificate) -> bool {
    let tol = 1e-15 * a.bound_nats.abs().max(b.bound_nats.abs());
    if (a.bound_nats - b.bound_nats).abs() > tol {
        return a.bound_nats > b.bound_nats;
    }
    if a.k != b.k {
        return a.k < b.k;
    }
    if a.p != b.p {
        return a.p > b.p;
    }
    let key = |c: &HorseshoeCertificate| c.intervals.first().map_or(f64::INFINITY, |i| i.0);
    key(a) < key(b)
}

/// Best horseshoe among the iterates `f^1 .. f^k_max`, by `log p / k`.
///
/// The search stops at the first iterate with more than
/// [`SEARCH_LAP_BUDGET`] laps, and skips iterates whose number of candidate
/// targets times laps exceeds [`SEARCH_WORK_BUDGET`]; the best certificate
/// found so far is returned. Only certificates that pass
/// [`verify_certificate`] are returned.
pub fn find_strict_horseshoe(
    f: &PiecewiseMonotoneMap,
    k_max: usize,
    p_min: usize,
) -> Result<Option<HorseshoeCertificate>> {
    if k_max == 0 {
        return Ok(None);
    }
    let lap_sets = lap_sequence(f, k_max, SEARCH_LAP_BUDGET, true)?;
    let best = lap_sets
        .par_iter()
        .enumerate()
        .filter_map(|(idx, laps)| {
            search_iterate(f, idx + 1, laps, p_min).filter(|c| verify_certificate(f, c))
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a });
    Ok(best)
}

/// `max log p / k` over the certificates found, or 0.
pub fn entropy_lower_bound(f: &PiecewiseMonotoneMap, k_max: usize) -> Result<f64> {
    Ok(find_strict_horseshoe(f, k_max, 2)?.map_or(0.0, |c| c.bound_nats))
}

/// Rechecks a certificate with plain iteration: each interval is mapped
/// monotonically (sampled) and its endpoint image covers the hull.
pub fn verify_certificate(f: &PiecewiseMonotoneMap, cert: &HorseshoeCertificate) -> bool {
    if cert.p < 2 || cert.intervals.len() != cert.p {
        return false;
    }
    if cert.intervals.windows(2).any(|w| w[0].1 > w[1].0) {
        return false;
    }
    let hull = cert.hull();
    cert.intervals
        .iter()
        .zip(&cert.itineraries)
        .all(|(&(lo, hi), itin)| {
            const SAMPLES: usize = 64;
            let ys: Vec<f64> = (0..=SAMPLES)
                .map(|i| {
                    let x = lo + (hi - lo) * i as f64 / SAMPLES as f64;
                    if i == 0 || i == SAMPLES {
                        // endpoints may sit on a breakpoint; follow the recorded branches
                        eval_along(f, itin, x)
                    } else {
                        iterate(f, cert.k, x)
                    }
                })
                .collect();
            let up = ys.windows(2).all(|w| w[1] >= w[0]);
            let down = ys.windows(2).all(|w| w[1] <= w[0]);
            let image = (ys[0].min(ys[SAMPLES]), ys[0].max(ys[SAMPLES]));
            (up || down) && covers(image, hull)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::map::{constant, identity, quadratic, tent};

    #[test]
    fn full_tent_and_quadratic() {
        let cert = find_strict_horseshoe(&tent(2.0).unwrap(), 1, 2)
            .unwrap()
            .unwrap();
        assert_eq!((cert.k, cert.p), (1, 2));
        assert!((cert.bound_nats - 2f64.ln()).abs() < 1e-12);
        assert!(verify_certificate(&tent(2.0).unwrap(), &cert));
        let q = quadratic(-2.0).unwrap();
        let cert = find_strict_horseshoe(&q, 1, 2).unwrap().unwrap();
        assert_eq!((cert.k, cert.p), (1, 2));
        assert!(verify_certificate(&q, &cert));
    }

    #[test]
    fn no_horseshoe_without_entropy() {
        assert!(find_strict_horseshoe(&identity().unwrap(), 6, 2)
            .unwrap()
            .is_none());
        assert_eq!(
            entropy_lower_bound(&constant(0.3).unwrap(), 6).unwrap(),
            0.0
        );
    }

    #[test]
    fn tent_bounds_approach_log_slope() {
        for s in [1.3_f64, 1.7, 2.0] {
            let f = tent(s).unwrap();
            let cert = find_strict_horseshoe(&f, 10, 2).unwrap().unwrap();
            assert!(verify_certificate(&f, &cert), "s = {s}");
            assert!(cert.bound_nats <= s.ln() + 1e-12);
            assert!(
                s.ln() - cert.bound_nats < 0.15,
                "s = {s}: {}",
                cert.bound_nats
            );
        }
    }
}
