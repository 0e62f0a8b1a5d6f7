use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::symbolic::{PeriodicPoint, SubshiftSpec, Symbol, Word};

/// A locally constant function on the shift: its value at `x` only depends
/// on the coordinates `x_{-r} .. x_r`.
pub trait WindowFunction {
    fn radius(&self) -> usize;

    /// Value on a window of length `2 * radius + 1`.
    fn value(&self, window: &[Symbol]) -> Result<&Q>;
}

/// Lookup table over every admissible window of a fixed radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTable {
    radius: usize,
    #[serde(with = "table_serde")]
    table: BTreeMap<Word, Q>,
}

impl WindowTable {
    pub fn from_fn(spec: &SubshiftSpec, radius: usize, mut f: impl FnMut(&[Symbol]) -> Q) -> Self {
        let table = spec.admissible_words(2 * radius + 1).into_iter().map(|w| {
            let v = f(&w);
            (w, v)
        });
        WindowTable {
            radius,
            table: table.collect(),
        }
    }

    /// Builds from explicit entries, rejecting tables that miss an admissible window.
    pub fn from_entries(
        spec: &SubshiftSpec,
        radius: usize,
        entries: BTreeMap<Word, Q>,
    ) -> Result<Self> {
        for w in spec.admissible_words(2 * radius + 1) {
            if !entries.contains_key(&w) {
                return Err(Error::MissingWindow(w));
            }
        }
        if let Some(w) = entries.keys().find(|w| w.len() != 2 * radius + 1) {
            return Err(Error::Precondition(format!(
                "window {w:?} does not have radius {radius}"
            )));
        }
        Ok(WindowTable {
            radius,
            table: entries,
        })
    }

    pub fn constant(spec: &SubshiftSpec, value: Q) -> Self {
        Self::from_fn(spec, 0, |_| value.clone())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Word, &Q)> {
        self.table.iter()
    }

    fn min_max(&self) -> Option<(Q, Q)> {
        let mut it = self.table.values();
        let first = it.next()?.clone();
        Some(it.fold((first.clone(), first), |(lo, hi), v| {
            (
                if *v < lo { v.clone() } else { lo },
                if *v > hi { v.clone() } else { hi },
            )
        }))
    }
}

impl WindowFunction for WindowTable {
    fn radius(&self) -> usize {
        self.radius
    }

    fn value(&self, window: &[Symbol]) -> Result<&Q> {
        self.table
            .get(window)
            .ok_or_else(|| Error::MissingWindow(window.to_vec()))
    }
}

mod table_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        window: Word,
        #[serde(with = "crate::exact::q_string")]
        value: Q,
    }

    pub fn serialize<S: Serializer>(
        t: &BTreeMap<Word, Q>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = t
            .iter()
            .map(|(w, v)| Entry {
                window: w.clone(),
                value: v.clone(),
            })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<Word, Q>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries.into_iter().map(|e| (e.window, e.value)).collect())
    }
}

/// Positive locally constant roof function with cached extreme values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoofFunction {
    table: WindowTable,
    #[serde(with = "crate::exact::q_string")]
    min: Q,
    #[serde(with = "crate::exact::q_string")]
    max: Q,
}

impl RoofFunction {
    pub fn new(table: WindowTable) -> Result<Self> {
        let (min, max) = table
            .min_max()
            .ok_or_else(|| Error::Precondition("empty roof table".into()))?;
        if !min.is_positive() {
            return Err(Error::BadParams(format!(
                "roof value {} is not positive",
                exact::format(&min)
            )));
        }
        Ok(RoofFunction { table, min, max })
    }

    pub fn constant(spec: &SubshiftSpec, value: Q) -> Result<Self> {
        Self::new(WindowTable::constant(spec, value))
    }

    pub fn from_fn(
        spec: &SubshiftSpec,
        radius: usize,
        f: impl FnMut(&[Symbol]) -> Q,
    ) -> Result<Self> {
        Self::new(WindowTable::from_fn(spec, radius, f))
    }

    /// `base + mean(per_symbol[x_i])` over the window, an affine roof that is
    /// convenient for configuration files.
    pub fn symbol_average(
        spec: &SubshiftSpec,
        radius: usize,
        base: &Q,
        per_symbol: &[Q],
    ) -> Result<Self> {
        if per_symbol.len() != spec.alphabet_size() {
            return Err(Error::BadParams(format!(
                "{} per-symbol weights for an alphabet of {}",
                per_symbol.len(),
                spec.alphabet_size()
            )));
        }
        let width = exact::int(2 * radius as i64 + 1);
        Self::from_fn(spec, radius, |w| {
            let total: Q = w.iter().map(|&s| per_symbol[s as usize].clone()).sum();
            base + total / &width
        })
    }

    pub fn table(&self) -> &WindowTable {
        &self.table
    }

    pub fn min(&self) -> &Q {
        &self.min
    }

    pub fn max(&self) -> &Q {
        &self.max
    }

    /// Smallest `C >= 1` with `1/C <= rho <= C`.
    pub fn c_constant(&self) -> f64 {
        let inv_min = self.min.recip();
        exact::to_f64(if inv_min > self.max {
            &inv_min
        } else {
            &self.max
        })
    }

    /// Whether `1/C <= rho <= C` holds for the given constant.
    pub fn within(&self, c: f64) -> bool {
        match exact::from_f64(c) {
            Ok(c) if c.is_positive() => self.min >= c.recip() && self.max <= c,
            _ => false,
        }
    }
}

impl WindowFunction for RoofFunction {
    fn radius(&self) -> usize {
        self.table.radius
    }

    fn value(&self, window: &[Symbol]) -> Result<&Q> {
        self.table.value(window)
    }
}

/// The oscillating observable: 1 near the orbit of `p1`, 0 near the orbit of
/// `p0`, interpolated in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservablePsi {
    table: WindowTable,
    orbit0: Vec<Word>,
    orbit1: Vec<Word>,
}

impl ObservablePsi {
    pub fn table(&self) -> &WindowTable {
        &self.table
    }

    pub fn orbit0(&self) -> &[Word] {
        &self.orbit0
    }

    pub fn orbit1(&self) -> &[Word] {
        &self.orbit1
    }
}

impl WindowFunction for ObservablePsi {
    fn radius(&self) -> usize {
        self.table.radius
    }

    fn value(&self, window: &[Symbol]) -> Result<&Q> {
        self.table.value(window)
    }
}

fn hamming(a: &[Symbol], b: &[Symbol]) -> i64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as i64
}

/// Urysohn-type observable for two periodic orbits.
///
/// Windows of radius `m0` seen along `p1` get 1, those along `p0` get 0, and
/// any other window `w` gets `d0 / (d0 + d1)` with `d_j` the Hamming distance
/// from `w` to the nearest window of the orbit of `p_j`.
pub fn build_psi(
    spec: &SubshiftSpec,
    p0: &PeriodicPoint,
    p1: &PeriodicPoint,
    m0: usize,
) -> Result<ObservablePsi> {
    let orbit0: Vec<Word> = p0.orbit_windows(m0);
    let orbit1: Vec<Word> = p1.orbit_windows(m0);
    let set0: BTreeSet<&Word> = orbit0.iter().collect();
    let set1: BTreeSet<&Word> = orbit1.iter().collect();
    if set0.intersection(&set1).next().is_some() {
        return Err(Error::OrbitsOverlap(m0));
    }
    let table = WindowTable::from_fn(spec, m0, |w| {
        let w = w.to_vec();
        if set1.contains(&w) {
            return Q::one();
        }
        if set0.contains(&w) {
            return Q::zero();
        }
        let d0 = orbit0
            .iter()
            .map(|o| hamming(&w, o))
            .min()
            .expect("nonempty orbit");
        let d1 = orbit1
            .iter()
            .map(|o| hamming(&w, o))
            .min()
            .expect("nonempty orbit");
        exact::ratio(d0, d0 + d1)
    });
    Ok(ObservablePsi {
        table,
        orbit0,
        orbit1,
    })
}
