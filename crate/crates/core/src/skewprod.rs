//! Skew products over the shift: contracting affine fibers with an invariant
//! graph, and the porcupine model with its spines.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::irregular::{
    naive_ratio, weighted_ratio_at_checkpoints, Checkpoint, IrregularPointProgram,
    OscillationReport, Parity, WindowFunction, NAIVE_BUDGET,
};
use crate::symbolic::{BiSequence, SubshiftSpec, Symbol};

/// Spines shorter than this count as trivial.
pub const TRIVIAL_THRESHOLD: f64 = 1e-6;

/// Longest past accepted by [`spine`].
pub const MAX_SPINE_DEPTH: usize = 10_000;

/// Fewest samples accepted by [`trivial_fraction`].
pub const MIN_SAMPLES: usize = 1_000;

/// Fiber maps `f_0(x) = (1 + a) x / (1 + a x)` and `f_1(x) = t (1 - x)` on
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PorcupineModel {
    pub t: f64,
    pub a: f64,
}

impl Default for PorcupineModel {
    fn default() -> Self {
        PorcupineModel { t: 0.5, a: 2.0 }
    }
}

impl PorcupineModel {
    pub fn new(t: f64, a: f64) -> Result<Self> {
        let model = PorcupineModel { t, a };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::BadParams(format!(
                "t = {} must lie in (0, 1)",
                self.t
            )));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::BadParams(format!("a = {} must be positive", self.a)));
        }
        Ok(())
    }

    pub fn f0(&self, x: f64) -> f64 {
        (1.0 + self.a) * x / (1.0 + self.a * x)
    }

    pub fn f1(&self, x: f64) -> f64 {
        self.t * (1.0 - x)
    }

    fn exact(&self) -> Result<(Q, Q)> {
        self.validate()?;
        Ok((exact::from_f64(self.t)?, exact::from_f64(self.a)?))
    }
}

/// Approximation of the spine over a past `xi_{-1} .. xi_{-depth}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpineApprox {
    pub past: Vec<Symbol>,
    #[serde(with = "crate::exact::q_string")]
    pub lo: Q,
    #[serde(with = "crate::exact::q_string")]
    pub hi: Q,
    pub depth: usize,
}

impl SpineApprox {
    pub fn length(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn length_f64(&self) -> f64 {
        exact::to_f64(&self.length())
    }

    pub fn contains(&self, other: &SpineApprox) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

fn spine_exact(t: &Q, a: &Q, past: &[Symbol]) -> Result<(Q, Q)> {
    let one = Q::one();
    let (mut lo, mut hi) = (Q::zero(), one.clone());
    for &s in past.iter().rev() {
        (lo, hi) = match s {
            0 => {
                let f0 = |x: &Q| (&one + a) * x / (&one + a * x);
                (f0(&lo), f0(&hi))
            }
            // decreasing branch: endpoints swap
            1 => (t * (&one - &hi), t * (&one - &lo)),
            _ => return Err(Error::BadParams(format!("porcupine past has symbol {s}"))),
        };
    }
    Ok((lo, hi))
}

/// `f_{xi_{-1}} o ... o f_{xi_{-depth}}([0, 1])` in exact arithmetic; `past[0]`
/// is `xi_{-1}`.
pub fn spine(model: &PorcupineModel, past: &[Symbol]) -> Result<SpineApprox> {
    if past.len() > MAX_SPINE_DEPTH {
        return Err(Error::Precondition(format!(
            "spine depth {} exceeds {MAX_SPINE_DEPTH}",
            past.len()
        )));
    }
    let (t, a) = model.exact()?;
    let (lo, hi) = spine_exact(&t, &a, past)?;
    Ok(SpineApprox {
        past: past.to_vec(),
        lo,
        hi,
        depth: past.len(),
    })
}

/// Fair-coin past for sample `index`; pasts of different depths share
/// prefixes, so deeper spines nest in shallower ones.
pub fn sample_past(seed: u64, index: u64, depth: usize) -> Vec<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..depth).map(|_| rng.gen_range(0..2u16)).collect()
}

/// Random admissible past of the given depth for sample `index`, written
/// `xi_{-1}` first: a uniform walk on the transition graph, read backwards.
pub fn sample_admissible_past(
    spec: &SubshiftSpec,
    seed: u64,
    index: u64,
    depth: usize,
) -> Vec<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut walk: Vec<Symbol> = Vec::with_capacity(depth);
    let starts: Vec<Symbol> = (0..spec.alphabet_size() as Symbol)
        .filter(|&s| !spec.successors(s).is_empty())
        .collect();
    if depth == 0 || starts.is_empty() {
        return walk;
    }
    walk.push(starts[rng.gen_range(0..starts.len())]);
    while walk.len() < depth {
        let next = spec.successors(walk[walk.len() - 1]);
        walk.push(next[rng.gen_range(0..next.len())]);
    }
    walk.reverse();
    walk
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialFractionReport {
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub fraction_trivial: f64,
    /// Spine length of each sample, in sample order.
    pub lengths: Vec<f64>,
}

/// Monte Carlo estimate of the fraction of pasts whose spine is shorter than
/// [`TRIVIAL_THRESHOLD`].
pub fn trivial_fraction_report(
    model: &PorcupineModel,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<TrivialFractionReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if depth > MAX_SPINE_DEPTH {
        return Err(Error::Precondition(format!(
            "spine depth {depth} exceeds {MAX_SPINE_DEPTH}"
        )));
    }
    let (t, a) = model.exact()?;
    let threshold = exact::from_f64(TRIVIAL_THRESHOLD)?;
    let results: Vec<(bool, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = spine_exact(&t, &a, &sample_past(seed, i, depth))?;
            let len = hi - lo;
            Ok((len < threshold, exact::to_f64(&len)))
        })
        .collect::<Result<_>>()?;
    let trivial = results.iter().filter(|r| r.0).count();
    Ok(TrivialFractionReport {
        depth,
        samples,
        seed,
        threshold: TRIVIAL_THRESHOLD,
        fraction_trivial: trivial as f64 / samples as f64,
        lengths: results.into_iter().map(|r| r.1).collect(),
    })
}

pub fn trivial_fraction(
    model: &PorcupineModel,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    Ok(trivial_fraction_report(model, depth, samples, seed)?.fraction_trivial)
}

/// `depth,fraction_trivial` rows for a sweep over depths.
pub fn fraction_sweep_csv(
    model: &PorcupineModel,
    depths: &[usize],
    samples: usize,
    seed: u64,
) -> Result<String> {
    let mut out = String::from("depth,fraction_trivial\n");
    for &d in depths {
        out.push_str(&format!(
            "{d},{}\n",
            trivial_fraction(model, d, samples, seed)?
        ));
    }
    Ok(out)
}

/// `past,lo,hi,length` rows; the past is written `xi_{-1}` first.
pub fn spines_csv(spines: &[SpineApprox]) -> String {
    let mut out = String::from("past,lo,hi,length\n");
    for s in spines {
        let past: String = s.past.iter().map(|d| char::from(b'0' + *d as u8)).collect();
        out.push_str(&format!(
            "{past},{},{},{}\n",
            exact::to_f64(&s.lo),
            exact::to_f64(&s.hi),
            s.length_f64()
        ));
    }
    out
}

/// Skew product `(x, y) -> (sigma x, kappa_{x_0} y + c_{x_0})` over a subshift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSkewProduct {
    pub base: SubshiftSpec,
    pub kappa: Vec<f64>,
    pub c: Vec<f64>,
}

impl GraphSkewProduct {
    pub fn new(base: SubshiftSpec, kappa: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let skew = GraphSkewProduct { base, kappa, c };
        skew.validate()?;
        Ok(skew)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.base.alphabet_size();
        if self.kappa.len() != n || self.c.len() != n {
            return Err(Error::BadParams(format!(
                "need {n} fiber maps, got {} slopes and {} offsets",
                self.kappa.len(),
                self.c.len()
            )));
        }
        if !self.c.iter().all(|c| c.is_finite()) || !self.kappa.iter().all(|k| k.abs() < 1.0) {
            return Err(Error::BadParams(
                "fiber maps must be uniform contractions".into(),
            ));
        }
        Ok(())
    }

    pub fn fiber_map(&self, s: Symbol, y: f64) -> f64 {
        self.kappa[s as usize] * y + self.c[s as usize]
    }

    pub fn contraction(&self) -> f64 {
        self.kappa.iter().fold(0.0, |m, k| m.max(k.abs()))
    }

    /// Bound on `|Phi|`: `max |c| / (1 - max |kappa|)`.
    pub fn graph_bound(&self) -> f64 {
        self.c.iter().fold(0.0_f64, |m, c| m.max(c.abs())) / (1.0 - self.contraction())
    }
}

/// `Phi_n(xi) = g_{xi_{-1}} o ... o g_{xi_{-n}}(0)` with the a priori bound
/// `kappa^n * max|c| / (1 - kappa)` on its distance to the invariant graph.
pub fn invariant_graph(
    skew: &GraphSkewProduct,
    xi_past: &[Symbol],
    depth: usize,
) -> Result<(f64, f64)> {
    skew.validate()?;
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    if xi_past.len() < depth {
        return Err(Error::Precondition(format!(
            "past of length {} is shorter than depth {depth}",
            xi_past.len()
        )));
    }
    let past = &xi_past[..depth];
    let mut reversed = past.to_vec();
    reversed.reverse();
    if !skew.base.is_admissible(&reversed) {
        return Err(Error::InvalidSpec("past is not admissible".into()));
    }
    let value = past.iter().rev().fold(0.0, |y, &s| skew.fiber_map(s, y));
    Ok((
        value,
        skew.contraction().powi(depth as i32) * skew.graph_bound(),
    ))
}

/// Observable on the skew product: a window of the base point plus the fiber
/// coordinate.
pub trait SkewObservable {
    fn radius(&self) -> usize;

    fn depends_on_fiber(&self) -> bool;

    fn value(&self, window: &[Symbol], y: f64) -> Result<&Q>;
}

/// Pullback of a base observable to the skew product.
#[derive(Debug, Clone, Copy)]
pub struct BaseLift<'a, P: ?Sized>(pub &'a P);

impl<P: WindowFunction + ?Sized> SkewObservable for BaseLift<'_, P> {
    fn radius(&self) -> usize {
        self.0.radius()
    }

    fn depends_on_fiber(&self) -> bool {
        false
    }

    fn value(&self, window: &[Symbol], _y: f64) -> Result<&Q> {
        self.0.value(window)
    }
}

// Declared or observed fiber dependence on the base windows is a contract
// violation.
fn check_fiber_free(
    skew: &GraphSkewProduct,
    phi: &dyn SkewObservable,
    probes: &[f64],
) -> Result<()> {
    if phi.depends_on_fiber() {
        return Err(Error::Precondition(
            "lifted observable depends on the fiber".into(),
        ));
    }
    let mut ys = vec![-1.0, 0.0, 1.0];
    ys.extend_from_slice(probes);
    for w in skew.base.admissible_words(2 * phi.radius() + 1) {
        let first = phi.value(&w, ys[0])?;
        for &y in &ys[1..] {
            if phi.value(&w, y)? != first {
                return Err(Error::Precondition(format!(
                    "lifted observable reads the fiber at window {w:?}"
                )));
            }
        }
    }
    Ok(())
}

/// Ratio reports along the skew orbits of `(x, y0)` for each fiber value,
/// summed term by term along the orbit.
pub fn lifted_reports(
    skew: &GraphSkewProduct,
    x: &BiSequence,
    checkpoints: &[u64],
    phi: &dyn SkewObservable,
    rho: &(dyn WindowFunction + Sync),
    c: f64,
    fiber_values: &[f64],
) -> Result<Vec<OscillationReport>> {
    skew.validate()?;
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    if last > NAIVE_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "orbit of {last} steps exceeds {NAIVE_BUDGET}"
        )));
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) || checkpoints.first() == Some(&0) {
        return Err(Error::Precondition(
            "checkpoints must be positive and increasing".into(),
        ));
    }
    let (rp, rr) = (phi.radius(), rho.radius());
    fiber_values
        .iter()
        .map(|&y0| {
            // distinct values are few, so tally them and multiply once
            let mut tally_phi: Vec<(Q, u64)> = Vec::new();
            let mut tally_rho: Vec<(Q, u64)> = Vec::new();
            let bump =
                |tally: &mut Vec<(Q, u64)>, v: &Q| match tally.iter_mut().find(|(q, _)| q == v) {
                    Some(entry) => entry.1 += 1,
                    None => tally.push((v.clone(), 1)),
                };
            let total = |tally: &[(Q, u64)]| -> Q {
                tally.iter().fold(Q::zero(), |acc, (q, n)| {
                    acc + q * Q::from_integer((*n).into())
                })
            };
            let mut y = y0;
            let mut next = checkpoints.iter().enumerate().peekable();
            let mut out = Vec::with_capacity(checkpoints.len());
            for i in 0..last as i64 {
                bump(&mut tally_phi, phi.value(&x.window(i, rp), y)?);
                bump(&mut tally_rho, rho.value(&x.window(i, rr))?);
                y = skew.fiber_map(x.symbol_at(i), y);
                while let Some(&(idx, &n)) = next.peek() {
                    if n != (i + 1) as u64 {
                        break;
                    }
                    let ratio = total(&tally_phi) / total(&tally_rho);
                    let j = idx + 1;
                    out.push(Checkpoint {
                        j,
                        n,
                        parity: Parity::of(j),
                        ratio: exact::to_f64(&ratio),
                        exact: ratio,
                    });
                    next.next();
                }
            }
            Ok(OscillationReport::from_checkpoints(out, c))
        })
        .collect()
}

fn all_identical(base: &OscillationReport, lifted: &[OscillationReport]) -> Result<bool> {
    let encode = |r: &OscillationReport| {
        serde_json::to_vec(r).map_err(|e| Error::Precondition(e.to_string()))
    };
    let reference = encode(base)?;
    for r in lifted {
        if encode(r)? != reference {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks that lifting a fiber-independent observable to the skew product
/// reproduces the base oscillation report exactly, for every fiber value.
pub fn lift_irregular_check<P, R>(
    skew: &GraphSkewProduct,
    base_point: &IrregularPointProgram,
    psi: &P,
    rho: &R,
    fiber_values: &[f64],
) -> Result<bool>
where
    P: WindowFunction + Sync,
    R: WindowFunction + Sync,
{
    lift_check_with(skew, base_point, psi, &BaseLift(psi), rho, fiber_values)
}

/// As [`lift_irregular_check`], with an explicit lifted observable that must
/// agree with `psi` and ignore the fiber.
pub fn lift_check_with<P, R>(
    skew: &GraphSkewProduct,
    base_point: &IrregularPointProgram,
    psi: &P,
    lifted: &dyn SkewObservable,
    rho: &R,
    fiber_values: &[f64],
) -> Result<bool>
where
    P: WindowFunction + Sync,
    R: WindowFunction + Sync,
{
    check_fiber_free(skew, lifted, fiber_values)?;
    let base = weighted_ratio_at_checkpoints(base_point, psi, rho)?;
    let reports = lifted_reports(
        skew,
        base_point.sequence(),
        &base_point.schedule().checkpoints,
        lifted,
        rho,
        base.c,
        fiber_values,
    )?;
    all_identical(&base, &reports)
}

/// Lift check for an arbitrary base sequence, with the base report summed
/// window by window.
pub fn lift_check_sequence<P, R>(
    skew: &GraphSkewProduct,
    x: &BiSequence,
    checkpoints: &[u64],
    c: f64,
    psi: &P,
    rho: &R,
    fiber_values: &[f64],
) -> Result<(bool, OscillationReport)>
where
    P: WindowFunction + Sync,
    R: WindowFunction + Sync,
{
    let lifted = BaseLift(psi);
    check_fiber_free(skew, &lifted, fiber_values)?;
    let base_points = checkpoints
        .iter()
        .enumerate()
        .map(|(idx, &n)| {
            let ratio = naive_ratio(x, psi, rho, n)?;
            let j = idx + 1;
            Ok(Checkpoint {
                j,
                n,
                parity: Parity::of(j),
                ratio: exact::to_f64(&ratio),
                exact: ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let base = OscillationReport::from_checkpoints(base_points, c);
    let reports = lifted_reports(skew, x, checkpoints, &lifted, rho, c, fiber_values)?;
    Ok((all_identical(&base, &reports)?, base))
}
