use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};

/// Default margin added to both ratio targets.
pub const DEFAULT_DELTA: f64 = 0.01;

/// Block lengths for the irregular point.
///
/// Block `j` (1-based) repeats `p1` when `j` is odd and `p0` when `j` is even,
/// `n_j` times, after a connector of length `gap`. `checkpoints[j-1]` is the
/// position `N_j` where block `j` ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSchedule {
    #[serde(rename = "L")]
    pub gap: u64,
    #[serde(rename = "L0")]
    pub period0: u64,
    #[serde(rename = "L1")]
    pub period1: u64,
    pub n: Vec<u64>,
    #[serde(rename = "N")]
    pub checkpoints: Vec<u64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
}

impl TimingSchedule {
    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    /// Period of the word repeated in block `j` (1-based).
    pub fn period_of(&self, j: usize) -> u64 {
        if j % 2 == 1 {
            self.period1
        } else {
            self.period0
        }
    }

    /// The bound `2 / (3C)` separating odd and even checkpoint ratios.
    pub fn separating_bound(&self) -> f64 {
        2.0 / (3.0 * self.c)
    }

    /// Checks the recurrence for `N_m`, the two ratio inequalities and strict
    /// growth of `n_j` on the whole prefix, in exact arithmetic.
    pub fn verify(&self) -> Result<()> {
        let (odd, even) = targets(self.c, self.delta)?;
        let mut total = 0u64;
        let mut prev = 0u64;
        for (idx, (&n, &big_n)) in self.n.iter().zip(&self.checkpoints).enumerate() {
            let j = idx + 1;
            if n <= prev {
                return Err(Error::Precondition(format!(
                    "n_{j} = {n} does not exceed n_{} = {prev}",
                    j - 1
                )));
            }
            let block = n * self.period_of(j);
            total += self.gap + block;
            if total != big_n {
                return Err(Error::Precondition(format!(
                    "N_{j} = {big_n}, expected {total}"
                )));
            }
            let target = if j % 2 == 1 { &odd } else { &even };
            if Q::new(BigInt::from(block), BigInt::from(big_n)) <= *target {
                return Err(Error::Precondition(format!(
                    "ratio at j = {j} misses its target"
                )));
            }
            prev = n;
        }
        if self.n.len() != self.checkpoints.len() {
            return Err(Error::Precondition(
                "length mismatch between n and N".into(),
            ));
        }
        Ok(())
    }
}

// (2/3 + delta, 1 - 1/(3C^2) + delta) from the exact binary values of C, delta
fn targets(c: f64, delta: f64) -> Result<(Q, Q)> {
    let cq = exact::from_f64(c)?;
    let dq = exact::from_f64(delta)?;
    let odd = exact::ratio(2, 3) + &dq;
    let even = Q::one() - (exact::int(3) * &cq * &cq).recip() + &dq;
    Ok((odd, even))
}

/// Greedy schedule: each `n_j` is the least integer above `n_{j-1}` whose
/// block fills more than `target + delta` of `[0, N_j)`, with target `2/3` for
/// odd `j` and `1 - 1/(3C^2)` for even `j`.
pub fn build_schedule(
    gap: u64,
    period0: u64,
    period1: u64,
    c: f64,
    m_count: usize,
    delta: f64,
) -> Result<TimingSchedule> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::BadParams(format!("C = {c} must exceed 1")));
    }
    let delta_max = (1.0_f64 / 3.0).min(1.0 / (3.0 * c * c));
    if !(delta > 0.0 && delta < delta_max) {
        return Err(Error::BadParams(format!(
            "delta = {delta} outside (0, {delta_max})"
        )));
    }
    if gap == 0 || period0 == 0 || period1 == 0 {
        return Err(Error::BadParams("gap and periods must be positive".into()));
    }
    let (odd, even) = targets(c, delta)?;
    let mut schedule = TimingSchedule {
        gap,
        period0,
        period1,
        n: Vec::with_capacity(m_count),
        checkpoints: Vec::with_capacity(m_count),
        c,
        delta,
    };
    let mut prev_n = 0u64;
    let mut prev_total = 0u64;
    for j in 1..=m_count {
        let theta = if j % 2 == 1 { &odd } else { &even };
        let per = schedule.period_of(j);
        // n * per / (prev_total + gap + n * per) > theta
        //   <=> n > theta * (prev_total + gap) / (per * (1 - theta))
        let head = Q::from_integer(BigInt::from(prev_total) + BigInt::from(gap));
        let bound = theta * head / (Q::from_integer(BigInt::from(per)) * (Q::one() - theta));
        let least = bound.floor().to_integer() + BigInt::one();
        let least = least.max(BigInt::from(prev_n + 1));
        let n = least
            .to_u64()
            .ok_or_else(|| Error::Overflow(format!("n_{j} exceeds u64")))?;
        let total = n
            .checked_mul(per)
            .and_then(|b| b.checked_add(gap))
            .and_then(|b| b.checked_add(prev_total))
            .ok_or_else(|| Error::Overflow(format!("N_{j} exceeds u64")))?;
        schedule.n.push(n);
        schedule.checkpoints.push(total);
        prev_n = n;
        prev_total = total;
    }
    debug_assert!(schedule.verify().is_ok());
    Ok(schedule)
}
