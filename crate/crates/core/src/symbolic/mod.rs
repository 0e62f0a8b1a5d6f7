//! Subshifts of finite type.
//!
//! A [`SubshiftSpec`] is an alphabet `{0, .., N-1}` together with a 0/1
//! transition matrix. Everything here is a pure function of the matrix; the
//! irreducibility and aperiodicity flags are computed once at construction.

mod sequence;

pub use sequence::{metric_distance, BiSequence, MetricParams, PeriodicPoint, Segment};

use std::collections::VecDeque;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perron::{perron_root, SparseRows};

pub type Symbol = u16;
pub type Word = Vec<Symbol>;

/// Largest word length for which [`cylinder_count`] stays exact.
pub const EXACT_COUNT_MAX_LEN: usize = 256;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSpec {
    alphabet_size: usize,
    transition: Vec<Vec<u8>>,
    #[serde(default)]
    name: String,
}

/// Alphabet plus 0/1 transition matrix, with cached mixing metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct SubshiftSpec {
    name: String,
    size: usize,
    allowed: Vec<bool>,
    succ: Vec<Vec<Symbol>>,
    irreducible: bool,
    period: usize,
}

impl PartialEq for SubshiftSpec {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.allowed == other.allowed
    }
}

impl TryFrom<RawSpec> for SubshiftSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        if raw.transition.len() != raw.alphabet_size {
            return Err(Error::InvalidSpec(format!(
                "transition has {} rows for alphabet size {}",
                raw.transition.len(),
                raw.alphabet_size
            )));
        }
        let rows = raw
            .transition
            .iter()
            .map(|row| {
                if row.len() != raw.alphabet_size {
                    return Err(Error::InvalidSpec("transition matrix is not square".into()));
                }
                row.iter()
                    .map(|&v| match v {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(Error::InvalidSpec(format!("entry {other} is not 0/1"))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        SubshiftSpec::new(raw.name, rows)
    }
}

impl From<SubshiftSpec> for RawSpec {
    fn from(spec: SubshiftSpec) -> Self {
        let transition = (0..spec.size)
            .map(|i| {
                (0..spec.size)
                    .map(|j| spec.allowed[i * spec.size + j] as u8)
                    .collect()
            })
            .collect();
        RawSpec {
            alphabet_size: spec.size,
            transition,
            name: spec.name,
        }
    }
}

impl SubshiftSpec {
    pub fn new(name: impl Into<String>, transition: Vec<Vec<bool>>) -> Result<Self> {
        let n = transition.len();
        if n == 0 {
            return Err(Error::InvalidSpec("alphabet must be nonempty".into()));
        }
        if n > Symbol::MAX as usize + 1 {
            return Err(Error::InvalidSpec(format!(
                "alphabet of size {n} is too large"
            )));
        }
        let mut allowed = Vec::with_capacity(n * n);
        for row in &transition {
            if row.len() != n {
                return Err(Error::InvalidSpec("transition matrix is not square".into()));
            }
            allowed.extend_from_slice(row);
        }
        for i in 0..n {
            if !(0..n).any(|j| allowed[i * n + j]) {
                return Err(Error::InvalidSpec(format!("symbol {i} has no successor")));
            }
            if !(0..n).any(|j| allowed[j * n + i]) {
                return Err(Error::InvalidSpec(format!("symbol {i} has no predecessor")));
            }
        }
        let succ = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| allowed[i * n + j])
                    .map(|j| j as Symbol)
                    .collect()
            })
            .collect();
        let mut spec = SubshiftSpec {
            name: name.into(),
            size: n,
            allowed,
            succ,
            irreducible: false,
            period: 0,
        };
        spec.irreducible = spec.strongly_connected();
        spec.period = if spec.irreducible {
            spec.compute_period()
        } else {
            0
        };
        Ok(spec)
    }

    /// Full shift on `n` symbols.
    pub fn full_shift(n: usize) -> Self {
        Self::new(format!("full {n}-shift"), vec![vec![true; n]; n]).expect("full shift is valid")
    }

    /// Golden-mean shift: the word `11` is forbidden.
    pub fn golden_mean() -> Self {
        Self::new("golden mean", vec![vec![true, true], vec![true, false]]).expect("valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet_size(&self) -> usize {
        self.size
    }

    pub fn allows(&self, a: Symbol, b: Symbol) -> bool {
        let (a, b) = (a as usize, b as usize);
        a < self.size && b < self.size && self.allowed[a * self.size + b]
    }

    pub fn successors(&self, a: Symbol) -> &[Symbol] {
        &self.succ[a as usize]
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// Period of the irreducible transition graph (0 when reducible).
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_mixing(&self) -> bool {
        self.irreducible && self.period == 1
    }

    /// Whether a finite word respects the transition matrix.
    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        word.iter().all(|&s| (s as usize) < self.size)
            && word.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    /// Admissible words of length `n` in lexicographic order.
    pub fn admissible_words(&self, n: usize) -> Vec<Word> {
        let mut out = Vec::new();
        if n == 0 {
            out.push(Vec::new());
            return out;
        }
        let mut stack: Vec<Word> = (0..self.size as Symbol).rev().map(|s| vec![s]).collect();
        while let Some(w) = stack.pop() {
            if w.len() == n {
                out.push(w);
                continue;
            }
            let last = *w.last().expect("nonempty");
            for &t in self.succ[last as usize].iter().rev() {
                let mut next = w.clone();
                next.push(t);
                stack.push(next);
            }
        }
        out
    }

    pub(crate) fn weighted_rows(&self, weight: impl Fn(usize) -> f64) -> SparseRows {
        (0..self.size)
            .map(|i| {
                let w = weight(i);
                self.succ[i].iter().map(|&j| (j as usize, w)).collect()
            })
            .collect()
    }

    fn strongly_connected(&self) -> bool {
        let n = self.size;
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for (v, seen_v) in seen.iter_mut().enumerate() {
                    let edge = if forward {
                        self.allowed[u * n + v]
                    } else {
                        self.allowed[v * n + u]
                    };
                    if edge && !*seen_v {
                        *seen_v = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    fn compute_period(&self) -> usize {
        let n = self.size;
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.succ[u] {
                let v = v as usize;
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g = 0usize;
        for u in 0..n {
            for &v in &self.succ[u] {
                let d = (level[u] as i64 + 1 - level[v as usize] as i64).unsigned_abs() as usize;
                g = g.gcd(&d);
            }
        }
        g
    }
}

/// Least `n >= 1` with every entry of `A^n` positive.
///
/// This is also the connecting gap: two symbols can always be joined by a
/// word of exactly this length.
pub fn mixing_time(spec: &SubshiftSpec) -> Result<usize> {
    if !spec.is_mixing() {
        return Err(Error::NotMixing);
    }
    let n = spec.size;
    let mut reach: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| spec.allowed[i * n + j]).collect())
        .collect();
    for power in 1..=n * n {
        if reach.iter().all(|row| row.iter().all(|&b| b)) {
            return Ok(power);
        }
        reach = reach
            .iter()
            .map(|row| {
                let mut next = vec![false; n];
                for (j, _) in row.iter().enumerate().filter(|(_, &b)| b) {
                    for &k in &spec.succ[j] {
                        next[k as usize] = true;
                    }
                }
                next
            })
            .collect();
    }
    Err(Error::NotMixing)
}

/// Lexicographically least word `z` of length `gap` with `a z b` admissible.
pub fn connecting_word(spec: &SubshiftSpec, a: Symbol, b: Symbol, gap: usize) -> Result<Word> {
    let n = spec.size;
    let no_path = || Error::NoPath {
        from: a as usize,
        to: b as usize,
        gap,
    };
    if a as usize >= n || b as usize >= n {
        return Err(no_path());
    }
    // can_reach[k][s]: b is reachable from s in exactly k steps
    let mut can_reach = vec![vec![false; n]];
    can_reach[0][b as usize] = true;
    for k in 1..=gap {
        let prev = &can_reach[k - 1];
        let next = (0..n)
            .map(|s| spec.succ[s].iter().any(|&t| prev[t as usize]))
            .collect();
        can_reach.push(next);
    }
    let mut word = Vec::with_capacity(gap);
    let mut current = a;
    for remaining in (0..gap).rev() {
        // b must stay reachable from the chosen symbol in remaining + 1 steps
        let pick = spec.succ[current as usize]
            .iter()
            .copied()
            .find(|&z| can_reach[remaining + 1][z as usize])
            .ok_or_else(no_path)?;
        word.push(pick);
        current = pick;
    }
    if !spec.allows(current, b) {
        return Err(no_path());
    }
    Ok(word)
}

/// Topological entropy in nats: log of the Perron root of the transition matrix.
pub fn sft_entropy(spec: &SubshiftSpec) -> f64 {
    perron_root(&spec.weighted_rows(|_| 1.0)).ln()
}

/// Number of admissible words of a given length.
#[derive(Debug, Clone, PartialEq)]
pub enum CylinderCount {
    Exact(BigUint),
    /// Past the exact budget only the natural log of the count is kept.
    LogOnly(f64),
}

impl CylinderCount {
    pub fn ln(&self) -> f64 {
        match self {
            CylinderCount::Exact(c) => biguint_ln(c),
            CylinderCount::LogOnly(l) => *l,
        }
    }

    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            CylinderCount::Exact(c) => Some(c),
            CylinderCount::LogOnly(_) => None,
        }
    }
}

fn biguint_ln(c: &BigUint) -> f64 {
    if c.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = c.bits();
    if bits <= 1000 {
        return c.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top = (c >> shift).to_f64().expect("finite");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Counts admissible words of length `n` (sum of the entries of `A^(n-1)`).
pub fn cylinder_count(spec: &SubshiftSpec, n: usize) -> Result<CylinderCount> {
    if n == 0 {
        return Err(Error::BadParams(
            "cylinder length must be at least 1".into(),
        ));
    }
    if n <= EXACT_COUNT_MAX_LEN {
        let mut v: Vec<BigUint> = vec![BigUint::one(); spec.size];
        for _ in 1..n {
            v = (0..spec.size)
                .map(|i| {
                    spec.succ[i]
                        .iter()
                        .fold(BigUint::zero(), |acc, &j| acc + &v[j as usize])
                })
                .collect();
        }
        return Ok(CylinderCount::Exact(v.into_iter().sum()));
    }
    let mut v = vec![1.0_f64; spec.size];
    let mut log_scale = 0.0;
    for _ in 1..n {
        let next: Vec<f64> = (0..spec.size)
            .map(|i| spec.succ[i].iter().map(|&j| v[j as usize]).sum())
            .collect();
        let norm = next.iter().cloned().fold(0.0, f64::max);
        log_scale += norm.ln();
        v = next.into_iter().map(|x| x / norm).collect();
    }
    Ok(CylinderCount::LogOnly(
        log_scale + v.iter().sum::<f64>().ln(),
    ))
}

/// The subshift generated by the `k`-th power of the shift map, recoded over
/// the alphabet of admissible `k`-words. Block `u` may be followed by `v`
/// exactly when the concatenation `uv` is admissible.
pub fn power_spec(spec: &SubshiftSpec, k: usize) -> Result<SubshiftSpec> {
    if k == 0 {
        return Err(Error::BadParams("power must be at least 1".into()));
    }
    if k == 1 {
        return Ok(spec.clone());
    }
    let words = spec.admissible_words(k);
    let m = words.len();
    if m > Symbol::MAX as usize + 1 {
        return Err(Error::BudgetExceeded(format!(
            "{m} blocks exceed the symbol range"
        )));
    }
    let transition = words
        .iter()
        .map(|u| {
            let last = *u.last().expect("k >= 1");
            words.iter().map(|v| spec.allows(last, v[0])).collect()
        })
        .collect();
    SubshiftSpec::new(format!("{}^{}", spec.name, k), transition)
}

/// `|h(power k spec) - k h(spec)|`, which vanishes for the iterate scaling law.
pub fn entropy_iterate_scaling_check(spec: &SubshiftSpec, k: usize) -> Result<f64> {
    if k == 1 {
        return Ok(0.0);
    }
    let power = power_spec(spec, k)?;
    Ok((sft_entropy(&power) - k as f64 * sft_entropy(spec)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_cycle_with_chord() -> SubshiftSpec {
        // 0->1, 1->2, 2->0, 0->0
        SubshiftSpec::new(
            "3-cycle + chord",
            vec![
                vec![true, true, false],
                vec![false, false, true],
                vec![true, false, false],
            ],
        )
        .unwrap()
    }

    // brute-force oracle: smallest n with A^n > 0 using integer matrix products
    fn mixing_time_by_powers(spec: &SubshiftSpec) -> usize {
        let n = spec.alphabet_size();
        let a: Vec<Vec<u64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| spec.allows(i as Symbol, j as Symbol) as u64)
                    .collect()
            })
            .collect();
        let mut p = a.clone();
        for power in 1..=n * n {
            if p.iter().all(|r| r.iter().all(|&v| v > 0)) {
                return power;
            }
            p = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            (0..n)
                                .map(|k| (p[i][k] * a[k][j]).min(1))
                                .sum::<u64>()
                                .min(1)
                        })
                        .collect()
                })
                .collect();
        }
        panic!("not mixing")
    }

    #[test]
    fn mixing_time_examples() {
        assert_eq!(mixing_time(&SubshiftSpec::full_shift(2)).unwrap(), 1);
        assert_eq!(mixing_time(&SubshiftSpec::golden_mean()).unwrap(), 2);
        let chord = three_cycle_with_chord();
        let expected = mixing_time_by_powers(&chord);
        assert_eq!(expected, 4);
        assert_eq!(mixing_time(&chord).unwrap(), expected);
    }

    #[test]
    fn non_mixing_is_rejected() {
        let cycle =
            SubshiftSpec::new("2-cycle", vec![vec![false, true], vec![true, false]]).unwrap();
        assert!(cycle.is_irreducible());
        assert_eq!(cycle.period(), 2);
        assert_eq!(mixing_time(&cycle), Err(Error::NotMixing));
    }

    #[test]
    fn stranded_symbol_is_invalid() {
        let err = SubshiftSpec::new("bad", vec![vec![true, false], vec![true, false]]).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }

    #[test]
    fn connecting_word_examples() {
        let full = SubshiftSpec::full_shift(2);
        assert_eq!(connecting_word(&full, 0, 1, 1).unwrap(), vec![0]);
        let gm = SubshiftSpec::golden_mean();
        assert_eq!(connecting_word(&gm, 1, 1, 1).unwrap(), vec![0]);
        assert_eq!(
            connecting_word(&gm, 1, 1, 0),
            Err(Error::NoPath {
                from: 1,
                to: 1,
                gap: 0
            })
        );
        assert_eq!(connecting_word(&gm, 0, 0, 0).unwrap(), Vec::<Symbol>::new());
    }

    #[test]
    fn connecting_word_is_lexicographically_least() {
        let chord = three_cycle_with_chord();
        for gap in 0..8 {
            for a in 0..3 {
                for b in 0..3 {
                    let brute = chord
                        .admissible_words(gap + 2)
                        .into_iter()
                        .find(|w| w[0] == a && w[gap + 1] == b)
                        .map(|w| w[1..=gap].to_vec());
                    match connecting_word(&chord, a, b, gap) {
                        Ok(z) => assert_eq!(Some(z), brute),
                        Err(_) => assert_eq!(brute, None),
                    }
                }
            }
        }
    }

    #[test]
    fn entropy_examples() {
        assert!((sft_entropy(&SubshiftSpec::full_shift(2)) - 2f64.ln()).abs() < 1e-12);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sft_entropy(&SubshiftSpec::golden_mean()) - phi.ln()).abs() < 1e-12);
        assert!((sft_entropy(&SubshiftSpec::full_shift(3)) - 3f64.ln()).abs() < 1e-12);
        assert_eq!(sft_entropy(&SubshiftSpec::full_shift(1)), 0.0);
    }

    #[test]
    fn cylinder_count_examples() {
        let full = SubshiftSpec::full_shift(2);
        assert_eq!(
            cylinder_count(&full, 3).unwrap().exact().unwrap(),
            &BigUint::from(8u32)
        );
        let gm = SubshiftSpec::golden_mean();
        assert_eq!(
            cylinder_count(&gm, 3).unwrap().exact().unwrap(),
            &BigUint::from(5u32)
        );
        assert_eq!(gm.admissible_words(3).len(), 5);
        let chord = three_cycle_with_chord();
        assert_eq!(
            cylinder_count(&chord, 1).unwrap().exact().unwrap(),
            &BigUint::from(3u32)
        );
        assert!(cylinder_count(&chord, 0).is_err());
    }

    #[test]
    fn cylinder_count_switches_to_log_space() {
        let full = SubshiftSpec::full_shift(2);
        let exact = cylinder_count(&full, EXACT_COUNT_MAX_LEN).unwrap();
        assert!((exact.ln() - 256.0 * 2f64.ln()).abs() < 1e-9);
        let approx = cylinder_count(&full, 300).unwrap();
        assert!(approx.exact().is_none());
        assert!((approx.ln() - 300.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn scaling_examples() {
        assert!(entropy_iterate_scaling_check(&SubshiftSpec::full_shift(2), 3).unwrap() < 1e-9);
        assert!(entropy_iterate_scaling_check(&SubshiftSpec::golden_mean(), 2).unwrap() < 1e-9);
        assert_eq!(
            entropy_iterate_scaling_check(&three_cycle_with_chord(), 1).unwrap(),
            0.0
        );
    }

    #[test]
    fn json_shape() {
        let spec: SubshiftSpec =
            serde_json_roundtrip(r#"{"alphabet_size":2,"transition":[[1,1],[1,0]],"name":"gm"}"#);
        assert_eq!(spec, SubshiftSpec::golden_mean());
        assert_eq!(spec.name(), "gm");
    }

    fn serde_json_roundtrip(s: &str) -> SubshiftSpec {
        let spec: SubshiftSpec = serde_json::from_str(s).unwrap();
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(back, s);
        spec
    }
}
