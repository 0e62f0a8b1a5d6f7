use serde::{Deserialize, Serialize};

use super::{SubshiftSpec, Symbol, Word};
use crate::error::{Error, Result};

/// A word repeated a finite number of times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub word: Word,
    pub repeat: u64,
}

impl Segment {
    pub fn new(word: Word, repeat: u64) -> Self {
        Segment { word, repeat }
    }

    pub fn len(&self) -> u64 {
        self.word.len() as u64 * self.repeat
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Bi-infinite sequence given by a compressed program: a periodic left tail,
/// finitely many repeated segments starting at coordinate `start`, and a
/// periodic right tail.
///
/// The left tail ends at `start - 1` with its last symbol; the right tail
/// begins right after the last segment with its first symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBiSequence", into = "RawBiSequence")]
pub struct BiSequence {
    left_tail: Word,
    segments: Vec<Segment>,
    right_tail: Word,
    start: i64,
    ends: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct RawBiSequence {
    left_tail: Word,
    segments: Vec<Segment>,
    right_tail: Word,
    start: i64,
}

impl TryFrom<RawBiSequence> for BiSequence {
    type Error = Error;

    fn try_from(raw: RawBiSequence) -> Result<Self> {
        BiSequence::new(raw.left_tail, raw.segments, raw.right_tail, raw.start)
    }
}

impl From<BiSequence> for RawBiSequence {
    fn from(s: BiSequence) -> Self {
        RawBiSequence {
            left_tail: s.left_tail,
            segments: s.segments,
            right_tail: s.right_tail,
            start: s.start,
        }
    }
}

impl BiSequence {
    pub fn new(
        left_tail: Word,
        segments: Vec<Segment>,
        right_tail: Word,
        start: i64,
    ) -> Result<Self> {
        if left_tail.is_empty() || right_tail.is_empty() {
            return Err(Error::Precondition(
                "periodic tails must be nonempty".into(),
            ));
        }
        let segments: Vec<Segment> = segments.into_iter().filter(|s| !s.is_empty()).collect();
        let mut ends = Vec::with_capacity(segments.len());
        let mut pos = start;
        for seg in &segments {
            let len =
                i64::try_from(seg.len()).map_err(|_| Error::Overflow("segment length".into()))?;
            pos = pos
                .checked_add(len)
                .ok_or_else(|| Error::Overflow("sequence length".into()))?;
            ends.push(pos);
        }
        Ok(BiSequence {
            left_tail,
            segments,
            right_tail,
            start,
            ends,
        })
    }

    /// The periodic point `...www.www...` with `word[0]` at coordinate 0.
    pub fn periodic(word: Word) -> Result<Self> {
        BiSequence::new(word.clone(), Vec::new(), word, 0)
    }

    /// Finite word placed at coordinate 0 with periodic tails on both sides.
    pub fn with_tails(left_tail: Word, middle: Word, right_tail: Word) -> Result<Self> {
        BiSequence::new(left_tail, vec![Segment::new(middle, 1)], right_tail, 0)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn left_tail(&self) -> &[Symbol] {
        &self.left_tail
    }

    pub fn right_tail(&self) -> &[Symbol] {
        &self.right_tail
    }

    /// Coordinate of the first symbol of the finite part.
    pub fn start(&self) -> i64 {
        self.start
    }

    /// One past the coordinate of the last symbol of the finite part.
    pub fn end(&self) -> i64 {
        self.ends.last().copied().unwrap_or(self.start)
    }

    fn rebuild_index(&mut self) {
        let mut pos = self.start;
        self.ends = self
            .segments
            .iter()
            .map(|s| {
                pos += s.len() as i64;
                pos
            })
            .collect();
    }

    pub fn symbol_at(&self, n: i64) -> Symbol {
        if n < self.start {
            let len = self.left_tail.len() as i64;
            return self.left_tail[(n - self.start).rem_euclid(len) as usize];
        }
        let end = self.end();
        if n >= end {
            let len = self.right_tail.len() as i64;
            return self.right_tail[(n - end).rem_euclid(len) as usize];
        }
        let idx = self.ends.partition_point(|&e| e <= n);
        let seg_start = if idx == 0 {
            self.start
        } else {
            self.ends[idx - 1]
        };
        let word = &self.segments[idx].word;
        word[((n - seg_start) as u64 % word.len() as u64) as usize]
    }

    /// Symbols at coordinates `center - radius ..= center + radius`.
    pub fn window(&self, center: i64, radius: usize) -> Word {
        let r = radius as i64;
        (center - r..=center + r)
            .map(|n| self.symbol_at(n))
            .collect()
    }

    /// Symbols at coordinates `from .. from + len`.
    pub fn slice(&self, from: i64, len: usize) -> Word {
        (from..from + len as i64)
            .map(|n| self.symbol_at(n))
            .collect()
    }

    /// Checks every transition of the program, including the cyclic wrap of
    /// repeated words and tails and the junctions between pieces.
    pub fn is_admissible(&self, spec: &SubshiftSpec) -> bool {
        let cyclic_ok = |w: &[Symbol]| spec.is_admissible(w) && spec.allows(w[w.len() - 1], w[0]);
        if !cyclic_ok(&self.left_tail) || !cyclic_ok(&self.right_tail) {
            return false;
        }
        let mut prev = *self.left_tail.last().expect("nonempty");
        for seg in &self.segments {
            if !spec.is_admissible(&seg.word) || !spec.allows(prev, seg.word[0]) {
                return false;
            }
            if seg.repeat > 1 && !spec.allows(seg.word[seg.word.len() - 1], seg.word[0]) {
                return false;
            }
            prev = seg.word[seg.word.len() - 1];
        }
        spec.allows(prev, self.right_tail[0])
    }

    /// Largest absolute difference between any two symbols that occur.
    fn symbol_span(&self, other: &BiSequence) -> u32 {
        let all = self
            .left_tail
            .iter()
            .chain(&self.right_tail)
            .chain(self.segments.iter().flat_map(|s| s.word.iter()))
            .chain(other.left_tail.iter().chain(&other.right_tail))
            .chain(other.segments.iter().flat_map(|s| s.word.iter()));
        let (lo, hi) = all.fold((Symbol::MAX, 0), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        (hi.saturating_sub(lo)) as u32
    }

    /// The shifted sequence `sigma^k(self)`.
    pub fn shifted(&self, k: i64) -> BiSequence {
        let mut s = self.clone();
        s.start -= k;
        s.rebuild_index();
        s
    }
}

/// A periodic point given by its minimal repeating word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    word: Word,
}

impl PeriodicPoint {
    pub fn new(spec: &SubshiftSpec, word: Word) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidPeriodicPoint("empty word".into()));
        }
        if !spec.is_admissible(&word) || !spec.allows(word[word.len() - 1], word[0]) {
            return Err(Error::InvalidPeriodicPoint(format!(
                "{word:?} is not cyclically admissible"
            )));
        }
        let n = word.len();
        if let Some(d) =
            (1..n).find(|&d| n.is_multiple_of(d) && (0..n).all(|i| word[i] == word[i % d]))
        {
            return Err(Error::InvalidPeriodicPoint(format!(
                "{word:?} has smaller period {d}"
            )));
        }
        Ok(PeriodicPoint { word })
    }

    pub fn word(&self) -> &[Symbol] {
        &self.word
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }

    /// Windows of radius `radius` seen along the orbit, one per phase.
    pub fn orbit_windows(&self, radius: usize) -> Vec<Word> {
        let p = self.word.len() as i64;
        let r = radius as i64;
        (0..p)
            .map(|phase| {
                (phase - r..=phase + r)
                    .map(|i| self.word[i.rem_euclid(p) as usize])
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub beta: f64,
    pub truncation_radius: usize,
}

impl MetricParams {
    pub fn new(beta: f64, truncation_radius: usize) -> Result<Self> {
        if !(beta > 1.0) || !beta.is_finite() {
            return Err(Error::BadParams(format!(
                "metric base {beta} must exceed 1"
            )));
        }
        Ok(MetricParams {
            beta,
            truncation_radius,
        })
    }

    /// Bound on the omitted terms `|m| > R` per unit of symbol difference.
    pub fn tail_bound(&self) -> f64 {
        2.0 * self.beta.powi(-(self.truncation_radius as i32)) / (1.0 - 1.0 / self.beta)
    }
}

/// Weighted distance `sum_m |x_m - y_m| / beta^|m|` truncated to `|m| <= R`.
///
/// Returns the truncated value and a bound on the omitted tail, scaled by the
/// largest symbol difference occurring in the two programs.
pub fn metric_distance(x: &BiSequence, y: &BiSequence, params: MetricParams) -> (f64, f64) {
    let r = params.truncation_radius as i64;
    let inv = 1.0 / params.beta;
    let mut value = 0.0;
    for m in -r..=r {
        let diff = (x.symbol_at(m) as f64 - y.symbol_at(m) as f64).abs();
        if diff != 0.0 {
            value += diff * inv.powi(m.unsigned_abs() as i32);
        }
    }
    let span = x.symbol_span(y).max(1) as f64;
    (value, span * params.tail_bound())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_lookup_covers_tails_and_segments() {
        let seq = BiSequence::new(
            vec![0, 1],
            vec![Segment::new(vec![1, 1, 0], 2), Segment::new(vec![0], 3)],
            vec![1],
            0,
        )
        .unwrap();
        let got: Vec<Symbol> = (-4..12).map(|n| seq.symbol_at(n)).collect();
        assert_eq!(got, vec![0, 1, 0, 1, 1, 1, 0, 1, 1, 0, 0, 0, 0, 1, 1, 1]);
        assert_eq!(seq.end(), 9);
        assert_eq!(seq.shifted(2).symbol_at(0), seq.symbol_at(2));
    }

    #[test]
    fn admissibility_checks_junctions() {
        let gm = SubshiftSpec::golden_mean();
        let ok = BiSequence::with_tails(vec![0], vec![1, 0, 1], vec![0]).unwrap();
        assert!(ok.is_admissible(&gm));
        let bad = BiSequence::with_tails(vec![0, 1], vec![1, 0], vec![0]).unwrap();
        assert!(!bad.is_admissible(&gm));
        let bad_repeat =
            BiSequence::new(vec![0], vec![Segment::new(vec![1], 2)], vec![0], 0).unwrap();
        assert!(!bad_repeat.is_admissible(&gm));
    }

    #[test]
    fn periodic_point_validation() {
        let gm = SubshiftSpec::golden_mean();
        assert!(PeriodicPoint::new(&gm, vec![0, 1]).is_ok());
        assert!(PeriodicPoint::new(&gm, vec![1]).is_err());
        assert!(PeriodicPoint::new(&gm, vec![0, 1, 0, 1]).is_err());
        let p = PeriodicPoint::new(&gm, vec![0, 1]).unwrap();
        assert_eq!(p.orbit_windows(1), vec![vec![1, 0, 1], vec![0, 1, 0]]);
    }

    #[test]
    fn metric_examples() {
        let params = MetricParams::new(2.0, 40).unwrap();
        let x = BiSequence::periodic(vec![0]).unwrap();
        let (d, tail) = metric_distance(&x, &x, params);
        assert_eq!(d, 0.0);
        assert!((tail - params.tail_bound()).abs() < 1e-300);

        let y = BiSequence::new(vec![0], vec![Segment::new(vec![1], 1)], vec![0], 0).unwrap();
        assert_eq!(metric_distance(&x, &y, params).0, 1.0);

        let ones = BiSequence::periodic(vec![1]).unwrap();
        let twos = BiSequence::periodic(vec![2]).unwrap();
        let (d, tail) = metric_distance(&ones, &twos, MetricParams::new(2.0, 60).unwrap());
        assert!((d - 3.0).abs() < 1e-15 + tail);
        assert!(tail < 1e-15);
    }
}
