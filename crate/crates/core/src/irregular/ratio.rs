use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::construct::{BlockEntry, BlockKind, IrregularPointProgram};
use super::window::WindowFunction;
use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::symbolic::{BiSequence, Symbol, Word};

/// Largest `n` accepted by [`naive_ratio`].
pub const NAIVE_BUDGET: u64 = 10_000_000;

/// Checkpoints below this index are treated as transient.
pub const TRANSIENT_CUTOFF: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(j: usize) -> Self {
        if j % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub j: usize,
    pub n: u64,
    pub parity: Parity,
    pub ratio: f64,
    #[serde(with = "crate::exact::q_string")]
    pub exact: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationSummary {
    pub liminf_est: Option<f64>,
    pub limsup_est: Option<f64>,
    pub gap: Option<f64>,
    pub verdict: bool,
    #[serde(rename = "bound_2_over_3C")]
    pub bound_2_over_3c: f64,
}

/// Weighted Birkhoff ratios `S_N psi / S_N rho` at the schedule checkpoints.
///
/// `liminf_est` is the smallest ratio over odd `j >= 3`, `limsup_est` the
/// largest over even `j >= 3`; the verdict is `gap = liminf - limsup > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub checkpoints: Vec<Checkpoint>,
    pub liminf_est: Option<f64>,
    pub limsup_est: Option<f64>,
    pub gap: Option<f64>,
    pub verdict: bool,
    pub c: f64,
}

impl OscillationReport {
    pub fn from_checkpoints(checkpoints: Vec<Checkpoint>, c: f64) -> Self {
        let late = || checkpoints.iter().filter(|cp| cp.j >= TRANSIENT_CUTOFF);
        let liminf = late()
            .filter(|cp| cp.parity == Parity::Odd)
            .map(|cp| &cp.exact)
            .min()
            .cloned();
        let limsup = late()
            .filter(|cp| cp.parity == Parity::Even)
            .map(|cp| &cp.exact)
            .max()
            .cloned();
        let gap = match (&liminf, &limsup) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        };
        OscillationReport {
            liminf_est: liminf.as_ref().map(exact::to_f64),
            limsup_est: limsup.as_ref().map(exact::to_f64),
            verdict: gap.as_ref().is_some_and(|g| *g > Q::zero()),
            gap: gap.as_ref().map(exact::to_f64),
            checkpoints,
            c,
        }
    }

    pub fn bound(&self) -> f64 {
        2.0 / (3.0 * self.c)
    }

    pub fn summary(&self) -> OscillationSummary {
        OscillationSummary {
            liminf_est: self.liminf_est,
            limsup_est: self.limsup_est,
            gap: self.gap,
            verdict: self.verdict,
            bound_2_over_3c: self.bound(),
        }
    }

    /// Odd ratios above `2/(3C)` and even ratios below it, for `j >= from`.
    pub fn separated_from(&self, from: usize) -> bool {
        let bound = self.bound();
        self.checkpoints
            .iter()
            .filter(|cp| cp.j >= from)
            .all(|cp| match cp.parity {
                Parity::Odd => cp.ratio > bound,
                Parity::Even => cp.ratio < bound,
            })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,N_j,parity,ratio\n");
        for cp in &self.checkpoints {
            let _ = writeln!(out, "{},{},{},{}", cp.j, cp.n, cp.parity.as_str(), cp.ratio);
        }
        out
    }
}

// Values of a window function along one period of a periodic word, indexed by phase.
fn phase_values<F: WindowFunction>(f: &F, word: &[Symbol]) -> Result<Vec<Q>> {
    let periodic = BiSequence::periodic(word.to_vec())?;
    (0..word.len())
        .map(|phase| f.value(&periodic.window(phase as i64, f.radius())).cloned())
        .collect()
}

fn sum_positions<F: WindowFunction>(f: &F, seq: &BiSequence, from: u64, to: u64) -> Result<Q> {
    let mut total = Q::zero();
    for i in from..to {
        total += f.value(&seq.window(i as i64, f.radius()))?;
    }
    Ok(total)
}

// Exact sum of f over the positions of one block. Positions whose window
// stays inside a periodic block are summed per period.
fn block_sum<F: WindowFunction>(
    f: &F,
    seq: &BiSequence,
    block: &BlockEntry,
    word: Option<&[Symbol]>,
) -> Result<Q> {
    let r = f.radius() as u64;
    let (s, e) = (block.start, block.end());
    let Some(word) = word else {
        return sum_positions(f, seq, s, e);
    };
    if e - s <= 2 * r {
        return sum_positions(f, seq, s, e);
    }
    let (a, b) = (s + r, e - r);
    let values = phase_values(f, word)?;
    let period = word.len() as u64;
    let count = b - a;
    let (q, rem) = (count / period, count % period);
    let full: Q = values.iter().sum();
    let mut total = full * Q::from_integer(BigInt::from(q));
    let first_phase = (a - s) % period;
    for t in 0..rem {
        total += &values[((first_phase + t) % period) as usize];
    }
    total += sum_positions(f, seq, s, a)?;
    total += sum_positions(f, seq, b, e)?;
    Ok(total)
}

/// Exact ratios at every checkpoint `N_j`, by per-block summation.
///
/// Generic over the window functions so that any locally constant observable
/// can play the role of `psi`.
pub fn weighted_ratio_at_checkpoints<P, R>(
    point: &IrregularPointProgram,
    psi: &P,
    rho: &R,
) -> Result<OscillationReport>
where
    P: WindowFunction + Sync,
    R: WindowFunction + Sync,
{
    let seq = point.sequence();
    let per_block: Vec<(Q, Q)> = point
        .blocks()
        .par_iter()
        .map(|b| {
            let word = point.block_word(b.kind);
            Ok((block_sum(psi, seq, b, word)?, block_sum(rho, seq, b, word)?))
        })
        .collect::<Result<_>>()?;
    let mut num = Q::zero();
    let mut den = Q::zero();
    let mut checkpoints = Vec::with_capacity(point.schedule().len());
    for (block, (sp, sr)) in point.blocks().iter().zip(per_block) {
        num += sp;
        den += sr;
        if block.kind != BlockKind::Connector {
            let ratio = &num / &den;
            checkpoints.push(Checkpoint {
                j: block.j,
                n: block.end(),
                parity: Parity::of(block.j),
                ratio: exact::to_f64(&ratio),
                exact: ratio,
            });
        }
    }
    Ok(OscillationReport::from_checkpoints(
        checkpoints,
        point.schedule().c,
    ))
}

/// `S_n psi(x) / S_n rho(x)` by walking the first `n` positions one at a time.
pub fn naive_ratio<P, R>(x: &BiSequence, psi: &P, rho: &R, n: u64) -> Result<Q>
where
    P: WindowFunction + ?Sized,
    R: WindowFunction + ?Sized,
{
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    if n > NAIVE_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "naive summation of {n} terms exceeds {NAIVE_BUDGET}"
        )));
    }
    let count = |radius: usize| {
        let mut seen: BTreeMap<Word, u64> = BTreeMap::new();
        for i in 0..n as i64 {
            *seen.entry(x.window(i, radius)).or_default() += 1;
        }
        seen
    };
    let weighted = |f: &dyn Fn(&[Symbol]) -> Result<Q>, counts: BTreeMap<Word, u64>| -> Result<Q> {
        let mut total = Q::zero();
        for (w, c) in counts {
            total += f(&w)? * Q::from_integer(BigInt::from(c));
        }
        Ok(total)
    };
    let sp = weighted(&|w| psi.value(w).cloned(), count(psi.radius()))?;
    let sr = weighted(&|w| rho.value(w).cloned(), count(rho.radius()))?;
    if sr.is_zero() {
        return Err(Error::Precondition("roof sum vanishes".into()));
    }
    Ok(sp / sr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irregular::{
        build_psi, build_schedule, construct_irregular_point, ObservablePsi, RoofFunction,
        WindowTable,
    };
    use crate::symbolic::{PeriodicPoint, SubshiftSpec};
    use num_traits::One;

    fn canonical(m_count: usize, rho: &RoofFunction) -> (IrregularPointProgram, ObservablePsi) {
        let full = SubshiftSpec::full_shift(2);
        let p0 = PeriodicPoint::new(&full, vec![0]).unwrap();
        let p1 = PeriodicPoint::new(&full, vec![1]).unwrap();
        let psi = build_psi(&full, &p0, &p1, 2).unwrap();
        let s = build_schedule(1, 1, 1, rho.c_constant().max(1.2), m_count, 0.01).unwrap();
        (construct_irregular_point(&full, &p0, &p1, &s).unwrap(), psi)
    }

    #[test]
    fn block_sums_match_naive_walk() {
        let full = SubshiftSpec::full_shift(2);
        let rho = RoofFunction::symbol_average(
            &full,
            1,
            &exact::ratio(11, 10),
            &[Q::zero(), exact::ratio(-1, 5)],
        )
        .unwrap();
        let (point, psi) = canonical(6, &rho);
        let report = weighted_ratio_at_checkpoints(&point, &psi, &rho).unwrap();
        for cp in &report.checkpoints {
            assert_eq!(
                naive_ratio(point.sequence(), &psi, &rho, cp.n).unwrap(),
                cp.exact,
                "j = {}",
                cp.j
            );
        }
    }

    #[test]
    fn constant_observable_gives_no_oscillation() {
        let full = SubshiftSpec::full_shift(2);
        let rho = RoofFunction::constant(&full, exact::int(2)).unwrap();
        let (point, _) = canonical(6, &rho);
        let one = WindowTable::constant(&full, Q::one());
        let report = weighted_ratio_at_checkpoints(&point, &one, &rho).unwrap();
        assert!(report
            .checkpoints
            .iter()
            .all(|cp| cp.exact == exact::ratio(1, 2)));
        assert!(report.gap.unwrap() <= 0.0);
        assert!(!report.verdict);
    }

    #[test]
    fn naive_ratio_small_cases() {
        let full = SubshiftSpec::full_shift(2);
        let rho = RoofFunction::constant(&full, exact::int(2)).unwrap();
        let one = WindowTable::constant(&full, Q::one());
        let x = BiSequence::with_tails(vec![0], vec![1, 0, 1], vec![1]).unwrap();
        assert_eq!(naive_ratio(&x, &one, &rho, 7).unwrap(), exact::ratio(1, 2));
        let p0 = PeriodicPoint::new(&full, vec![0]).unwrap();
        let p1 = PeriodicPoint::new(&full, vec![1]).unwrap();
        let psi = build_psi(&full, &p0, &p1, 1).unwrap();
        // window at 0 is 0 1 0 -> 1/3, roof 2
        assert_eq!(naive_ratio(&x, &psi, &rho, 1).unwrap(), exact::ratio(1, 6));
        assert!(naive_ratio(&x, &psi, &rho, NAIVE_BUDGET + 1)
            .unwrap_err()
            .is_budget());
    }

    #[test]
    fn periodic_point_ratio_is_inverse_roof_average() {
        let full = SubshiftSpec::full_shift(2);
        let p0 = PeriodicPoint::new(&full, vec![0]).unwrap();
        let p1 = PeriodicPoint::new(&full, vec![1]).unwrap();
        let psi = build_psi(&full, &p0, &p1, 2).unwrap();
        let rho = RoofFunction::constant(&full, exact::ratio(5, 4)).unwrap();
        let x = BiSequence::periodic(vec![1]).unwrap();
        assert_eq!(naive_ratio(&x, &psi, &rho, 50).unwrap(), exact::ratio(4, 5));
    }

    #[test]
    fn canonical_run_oscillates() {
        let full = SubshiftSpec::full_shift(2);
        let rho = RoofFunction::constant(&full, Q::one()).unwrap();
        let (point, psi) = canonical(12, &rho);
        let report = weighted_ratio_at_checkpoints(&point, &psi, &rho).unwrap();
        assert_eq!(report.checkpoints.len(), 12);
        assert!(report.separated_from(TRANSIENT_CUTOFF));
        assert!(report.verdict);
        let csv = report.to_csv();
        assert!(csv.starts_with("j,N_j,parity,ratio\n1,4,odd,"));
        let summary = serde_json::to_value(report.summary()).unwrap();
        assert!(summary.get("bound_2_over_3C").is_some());
    }

    #[test]
    fn empty_schedule_has_no_verdict() {
        let full = SubshiftSpec::full_shift(2);
        let rho = RoofFunction::constant(&full, Q::one()).unwrap();
        let (point, psi) = canonical(0, &rho);
        let report = weighted_ratio_at_checkpoints(&point, &psi, &rho).unwrap();
        assert!(report.checkpoints.is_empty());
        assert!(!report.verdict);
        assert_eq!(report.gap, None);
    }
}
