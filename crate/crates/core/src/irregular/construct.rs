use serde::{Deserialize, Serialize};

use super::schedule::TimingSchedule;
use crate::error::{Error, Result};
use crate::symbolic::{connecting_word, BiSequence, PeriodicPoint, Segment, SubshiftSpec, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Connector,
    P1Block,
    P0Block,
}

/// One piece of the forward half of the constructed sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub start: u64,
    pub kind: BlockKind,
    pub length: u64,
    /// Checkpoint index `j` (1-based) the block belongs to.
    pub j: usize,
}

impl BlockEntry {
    pub fn end(&self) -> u64 {
        self.start + self.length
    }
}

/// Compressed description of the irregular point
/// `... p0 p0 . z_1 [p1]^{n_1} z_2 [p0]^{n_2} z_3 [p1]^{n_3} ...`.
///
/// Coordinate 0 is the first symbol of `z_1`. Left of it the sequence
/// repeats `p0`; after the last scheduled block it keeps repeating the word
/// of that block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrregularPointProgram {
    sequence: BiSequence,
    schedule: TimingSchedule,
    blocks: Vec<BlockEntry>,
    p0: Word,
    p1: Word,
}

impl IrregularPointProgram {
    pub fn sequence(&self) -> &BiSequence {
        &self.sequence
    }

    pub fn schedule(&self) -> &TimingSchedule {
        &self.schedule
    }

    pub fn blocks(&self) -> &[BlockEntry] {
        &self.blocks
    }

    pub fn p0(&self) -> &[u16] {
        &self.p0
    }

    pub fn p1(&self) -> &[u16] {
        &self.p1
    }

    /// The repeating word of a periodic block.
    pub fn block_word(&self, kind: BlockKind) -> Option<&[u16]> {
        match kind {
            BlockKind::P0Block => Some(&self.p0),
            BlockKind::P1Block => Some(&self.p1),
            BlockKind::Connector => None,
        }
    }
}

pub fn construct_irregular_point(
    spec: &SubshiftSpec,
    p0: &PeriodicPoint,
    p1: &PeriodicPoint,
    schedule: &TimingSchedule,
) -> Result<IrregularPointProgram> {
    if p0.period() as u64 != schedule.period0 || p1.period() as u64 != schedule.period1 {
        return Err(Error::Precondition(format!(
            "schedule periods ({}, {}) do not match the periodic points ({}, {})",
            schedule.period0,
            schedule.period1,
            p0.period(),
            p1.period()
        )));
    }
    if !spec.is_mixing() {
        return Err(Error::NotMixing);
    }
    let gap =
        usize::try_from(schedule.gap).map_err(|_| Error::Overflow("connecting gap".into()))?;
    let mut segments = Vec::with_capacity(2 * schedule.len());
    let mut blocks = Vec::with_capacity(2 * schedule.len());
    let mut last = *p0.word().last().expect("periodic word is nonempty");
    let mut pos = 0u64;
    let mut right_tail = p0.word().to_vec();
    for (idx, &n) in schedule.n.iter().enumerate() {
        let j = idx + 1;
        let (kind, word) = if j % 2 == 1 {
            (BlockKind::P1Block, p1.word())
        } else {
            (BlockKind::P0Block, p0.word())
        };
        let z = connecting_word(spec, last, word[0], gap)?;
        blocks.push(BlockEntry {
            start: pos,
            kind: BlockKind::Connector,
            length: schedule.gap,
            j,
        });
        pos += schedule.gap;
        segments.push(Segment::new(z, 1));
        let length = n * word.len() as u64;
        blocks.push(BlockEntry {
            start: pos,
            kind,
            length,
            j,
        });
        pos += length;
        segments.push(Segment::new(word.to_vec(), n));
        debug_assert_eq!(pos, schedule.checkpoints[idx]);
        last = *word.last().expect("nonempty");
        right_tail = word.to_vec();
    }
    let sequence = BiSequence::new(p0.word().to_vec(), segments, right_tail, 0)?;
    debug_assert!(sequence.is_admissible(spec));
    Ok(IrregularPointProgram {
        sequence,
        schedule: schedule.clone(),
        blocks,
        p0: p0.word().to_vec(),
        p1: p1.word().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irregular::build_schedule;
    use crate::symbolic::mixing_time;

    #[test]
    fn canonical_prefix_and_tiling() {
        let full = SubshiftSpec::full_shift(2);
        let p0 = PeriodicPoint::new(&full, vec![0]).unwrap();
        let p1 = PeriodicPoint::new(&full, vec![1]).unwrap();
        let s = build_schedule(1, 1, 1, 1.2, 2, 0.01).unwrap();
        let point = construct_irregular_point(&full, &p0, &p1, &s).unwrap();
        let mut expected = vec![0, 1, 1, 1, 0];
        expected.extend(std::iter::repeat_n(0, 18));
        assert_eq!(point.sequence().slice(0, 23), expected);
        let tiles: Vec<(u64, BlockKind, u64)> = point
            .blocks()
            .iter()
            .map(|b| (b.start, b.kind, b.end()))
            .collect();
        assert_eq!(
            tiles,
            vec![
                (0, BlockKind::Connector, 1),
                (1, BlockKind::P1Block, 4),
                (4, BlockKind::Connector, 5),
                (5, BlockKind::P0Block, 23)
            ]
        );
        assert_eq!(point.sequence().symbol_at(-1), 0);
        assert_eq!(point.sequence().symbol_at(100), 0);
    }

    #[test]
    fn golden_mean_construction_is_admissible() {
        let gm = SubshiftSpec::golden_mean();
        let p0 = PeriodicPoint::new(&gm, vec![0]).unwrap();
        let p1 = PeriodicPoint::new(&gm, vec![0, 1]).unwrap();
        let gap = mixing_time(&gm).unwrap() as u64;
        let s = build_schedule(gap, 1, 2, 1.5, 7, 0.01).unwrap();
        let point = construct_irregular_point(&gm, &p0, &p1, &s).unwrap();
        assert!(point.sequence().is_admissible(&gm));
        let end = *s.checkpoints.last().unwrap() as usize;
        let symbols = point.sequence().slice(-5, end + 10);
        assert!(gm.is_admissible(&symbols));
        let mut pos = 0;
        for b in point.blocks() {
            assert_eq!(b.start, pos);
            pos = b.end();
        }
        assert_eq!(pos as usize, end);
    }

    #[test]
    fn mismatched_periods_are_rejected() {
        let full = SubshiftSpec::full_shift(2);
        let p0 = PeriodicPoint::new(&full, vec![0]).unwrap();
        let p1 = PeriodicPoint::new(&full, vec![0, 1]).unwrap();
        let s = build_schedule(1, 1, 1, 1.2, 2, 0.01).unwrap();
        assert!(construct_irregular_point(&full, &p0, &p1, &s).is_err());
    }

    #[test]
    fn program_roundtrips_through_json() {
        let full = SubshiftSpec::full_shift(2);
        let p0 = PeriodicPoint::new(&full, vec![0]).unwrap();
        let p1 = PeriodicPoint::new(&full, vec![1]).unwrap();
        let s = build_schedule(1, 1, 1, 1.2, 4, 0.01).unwrap();
        let point = construct_irregular_point(&full, &p0, &p1, &s).unwrap();
        let json = serde_json::to_string(&point).unwrap();
        let back: IrregularPointProgram = serde_json::from_str(&json).unwrap();
        assert_eq!(back, point);
    }
}
