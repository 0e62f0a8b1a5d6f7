use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points checked per branch when validating monotonicity and range.
const CHECK_GRID: usize = 1000;
const RANGE_SLACK: f64 = 1e-12;

/// Closed-form monotone branch formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Branch {
    /// `slope * x + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `x^2 + a`
    Quadratic { a: f64 },
    /// `x + x^(1 + alpha) - shift`
    MannevillePomeau { alpha: f64, shift: f64 },
    /// `sign * (theta * |x|^alpha - 1)`
    LorenzPower { theta: f64, alpha: f64, sign: f64 },
    /// A constant value; not monotone, allowed for degenerate test maps
    Constant { value: f64 },
}

impl Branch {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Branch::Affine { slope, intercept } => slope * x + intercept,
            Branch::Quadratic { a } => x * x + a,
            Branch::MannevillePomeau { alpha, shift } => x + x.max(0.0).powf(1.0 + alpha) - shift,
            Branch::LorenzPower { theta, alpha, sign } => {
                sign * (theta * x.abs().powf(alpha) - 1.0)
            }
            Branch::Constant { value } => value,
        }
    }
}

/// A branch together with the closed interval it acts on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub branch: Branch,
    /// Pieces flagged as excluded take no part in lap and horseshoe searches.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub excluded: bool,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, branch: Branch) -> Self {
        Piece {
            lo,
            hi,
            branch,
            excluded: false,
        }
    }

    /// Branch value with the argument clamped to the piece.
    pub fn eval(&self, x: f64) -> f64 {
        self.branch.eval(x.clamp(self.lo, self.hi))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.branch, Branch::Constant { .. })
    }

    pub fn increasing(&self) -> bool {
        self.branch.eval(self.hi) >= self.branch.eval(self.lo)
    }

    /// Sorted image of the piece.
    pub fn image(&self) -> (f64, f64) {
        let (a, b) = (self.eval(self.lo), self.eval(self.hi));
        (a.min(b), a.max(b))
    }
}

/// A piecewise monotone map of a closed interval.
///
/// Pieces tile the domain in order. At a shared endpoint the right-hand piece
/// is used for plain evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseMonotoneMap {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub domain: (f64, f64),
    pieces: Vec<Piece>,
}

impl PiecewiseMonotoneMap {
    /// Validates tiling, strict monotonicity on a grid and the range.
    pub fn new(
        family: impl Into<String>,
        params: BTreeMap<String, f64>,
        domain: (f64, f64),
        pieces: Vec<Piece>,
    ) -> Result<Self> {
        let (a, b) = domain;
        if !(a < b) || pieces.is_empty() {
            return Err(Error::BadParams("empty domain or no pieces".into()));
        }
        let mut at = a;
        for p in &pieces {
            if (p.lo - at).abs() > 1e-15 || !(p.lo < p.hi) {
                return Err(Error::BadParams(format!(
                    "pieces do not tile [{a}, {b}] near {at}"
                )));
            }
            at = p.hi;
        }
        if (at - b).abs() > 1e-15 {
            return Err(Error::BadParams(format!("pieces end at {at}, not {b}")));
        }
        for p in &pieces {
            let mut prev: Option<f64> = None;
            let sign = if p.increasing() { 1.0 } else { -1.0 };
            for i in 0..=CHECK_GRID {
                let x = p.lo + (p.hi - p.lo) * i as f64 / CHECK_GRID as f64;
                let y = p.branch.eval(x);
                if !(y >= a - RANGE_SLACK && y <= b + RANGE_SLACK) {
                    return Err(Error::RangeViolation(format!(
                        "f({x}) = {y} leaves [{a}, {b}]"
                    )));
                }
                if let Some(q) = prev {
                    if !p.is_constant() && sign * (y - q) <= 0.0 {
                        return Err(Error::BadParams(format!(
                            "branch on [{}, {}] is not strictly monotone",
                            p.lo, p.hi
                        )));
                    }
                }
                prev = Some(y);
            }
        }
        Ok(PiecewiseMonotoneMap {
            family: family.into(),
            params,
            domain,
            pieces,
        })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Interior breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.lo).collect()
    }

    pub fn piece_index(&self, x: f64) -> usize {
        self.pieces
            .partition_point(|p| p.hi <= x)
            .min(self.pieces.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].eval(x)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.domain.0 - slack && x <= self.domain.1 + slack
    }

    /// Splits the pieces at `lo` and `hi` and flags everything in between as
    /// excluded, e.g. to keep searches away from a singularity.
    pub fn with_excluded(&self, lo: f64, hi: f64) -> Result<Self> {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            let mut cuts = vec![p.lo];
            cuts.extend([lo, hi].into_iter().filter(|&c| c > p.lo && c < p.hi));
            cuts.push(p.hi);
            for w in cuts.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                pieces.push(Piece {
                    lo: w[0],
                    hi: w[1],
                    branch: p.branch,
                    excluded: p.excluded || (mid > lo && mid < hi),
                });
            }
        }
        let mut map = PiecewiseMonotoneMap::new(
            self.family.clone(),
            self.params.clone(),
            self.domain,
            pieces,
        )?;
        map.params.insert("excluded_lo".into(), lo);
        map.params.insert("excluded_hi".into(), hi);
        Ok(map)
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

/// Tent map `x -> s min(x, 1 - x)` on `[0, 1]`, `s in (1, 2]`.
pub fn tent(s: f64) -> Result<PiecewiseMonotoneMap> {
    if !(s > 1.0 && s <= 2.0) {
        return Err(Error::BadParams(format!("tent slope {s} outside (1, 2]")));
    }
    PiecewiseMonotoneMap::new(
        "tent",
        params(&[("s", s)]),
        (0.0, 1.0),
        vec![
            Piece::new(
                0.0,
                0.5,
                Branch::Affine {
                    slope: s,
                    intercept: 0.0,
                },
            ),
            Piece::new(
                0.5,
                1.0,
                Branch::Affine {
                    slope: -s,
                    intercept: s,
                },
            ),
        ],
    )
}

/// `x -> x^2 + a` on its invariant interval `[-beta, beta]`, `a in [-2, 1/4]`.
pub fn quadratic(a: f64) -> Result<PiecewiseMonotoneMap> {
    if !(-2.0..=0.25).contains(&a) {
        return Err(Error::BadParams(format!(
            "quadratic parameter {a} outside [-2, 1/4]"
        )));
    }
    let beta = (1.0 + (1.0 - 4.0 * a).sqrt()) / 2.0;
    PiecewiseMonotoneMap::new(
        "quadratic",
        params(&[("a", a)]),
        (-beta, beta),
        vec![
            Piece::new(-beta, 0.0, Branch::Quadratic { a }),
            Piece::new(0.0, beta, Branch::Quadratic { a }),
        ],
    )
}

/// Root of `x + x^(1 + alpha) = 1` in `(0, 1)`.
pub fn manneville_pomeau_split(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid + mid.powf(1.0 + alpha) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `x -> x + x^(1 + alpha) mod 1`, `alpha in (0, 1)`.
pub fn manneville_pomeau(alpha: f64) -> Result<PiecewiseMonotoneMap> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadParams(format!(
            "Manneville-Pomeau exponent {alpha} outside (0, 1)"
        )));
    }
    let c = manneville_pomeau_split(alpha);
    PiecewiseMonotoneMap::new(
        "manneville_pomeau",
        params(&[("alpha", alpha)]),
        (0.0, 1.0),
        vec![
            Piece::new(0.0, c, Branch::MannevillePomeau { alpha, shift: 0.0 }),
            Piece::new(c, 1.0, Branch::MannevillePomeau { alpha, shift: 1.0 }),
        ],
    )
}

/// One-dimensional Lorenz map `x -> sign(x) (theta |x|^alpha - 1)` on `[-1, 1]`.
pub fn lorenz1d(theta: f64, alpha: f64) -> Result<PiecewiseMonotoneMap> {
    if !(alpha > 0.0 && alpha < 1.0) || !(theta > 1.0 && theta <= 2.0) {
        return Err(Error::BadParams(format!(
            "Lorenz map needs theta in (1, 2], alpha in (0, 1); got {theta}, {alpha}"
        )));
    }
    PiecewiseMonotoneMap::new(
        "lorenz1d",
        params(&[("theta", theta), ("alpha", alpha)]),
        (-1.0, 1.0),
        vec![
            Piece::new(
                -1.0,
                0.0,
                Branch::LorenzPower {
                    theta,
                    alpha,
                    sign: -1.0,
                },
            ),
            Piece::new(
                0.0,
                1.0,
                Branch::LorenzPower {
                    theta,
                    alpha,
                    sign: 1.0,
                },
            ),
        ],
    )
}

pub fn identity() -> Result<PiecewiseMonotoneMap> {
    PiecewiseMonotoneMap::new(
        "identity",
        BTreeMap::new(),
        (0.0, 1.0),
        vec![Piece::new(
            0.0,
            1.0,
            Branch::Affine {
                slope: 1.0,
                intercept: 0.0,
            },
        )],
    )
}

pub fn constant(value: f64) -> Result<PiecewiseMonotoneMap> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::BadParams(format!("constant {value} outside [0, 1]")));
    }
    PiecewiseMonotoneMap::new(
        "constant",
        params(&[("c", value)]),
        (0.0, 1.0),
        vec![Piece::new(0.0, 1.0, Branch::Constant { value })],
    )
}

/// Circle rotation `x -> x + gamma mod 1` as a two-branch map of `[0, 1]`.
pub fn rotation(gamma: f64) -> Result<PiecewiseMonotoneMap> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::BadParams(format!("rotation {gamma} outside (0, 1)")));
    }
    PiecewiseMonotoneMap::new(
        "rotation",
        params(&[("gamma", gamma)]),
        (0.0, 1.0),
        vec![
            Piece::new(
                0.0,
                1.0 - gamma,
                Branch::Affine {
                    slope: 1.0,
                    intercept: gamma,
                },
            ),
            Piece::new(
                1.0 - gamma,
                1.0,
                Branch::Affine {
                    slope: 1.0,
                    intercept: gamma - 1.0,
                },
            ),
        ],
    )
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    params
        .get(key)
        .copied()
        .or(default)
        .ok_or_else(|| Error::BadParams(format!("missing parameter {key}")))
}

/// Looks up a model family by name.
pub fn model_catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<PiecewiseMonotoneMap> {
    match name {
        "tent" => tent(param(params, "s", Some(2.0))?),
        "quadratic" => quadratic(param(params, "a", Some(-2.0))?),
        "manneville_pomeau" | "mp" => manneville_pomeau(param(params, "alpha", Some(0.5))?),
        "lorenz1d" => lorenz1d(
            param(params, "theta", Some(1.9))?,
            param(params, "alpha", Some(0.5))?,
        ),
        "identity" => identity(),
        "constant" => constant(param(params, "c", Some(0.5))?),
        "rotation" => rotation(param(params, "gamma", None)?),
        other => Err(Error::BadParams(format!("unknown map family {other}"))),
    }
}

/// The standard map `(x, y) -> (-y + 2x + k sin(2 pi x), x)`.
pub fn standard_map(k: f64, (x, y): (f64, f64)) -> (f64, f64) {
    (-y + 2.0 * x + k * (2.0 * std::f64::consts::PI * x).sin(), x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_members() {
        let q = quadratic(-2.0).unwrap();
        assert_eq!(q.domain, (-2.0, 2.0));
        assert_eq!(q.breakpoints(), vec![0.0]);
        assert_eq!(q.eval(2.0), 2.0);
        let t = tent(2.0).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(0.25), 0.5);
        assert_eq!(t.eval(0.75), 0.5);
        let c = manneville_pomeau_split(0.5);
        assert!((c + c.powf(1.5) - 1.0).abs() < 1e-14);
        // the root is 0.5698...; its complement 1 - c is 0.4302...
        assert!((c - 0.5698).abs() < 1e-4);
        assert!((1.0 - c - 0.4302).abs() < 1e-4);
        let mp = manneville_pomeau(0.5).unwrap();
        assert_eq!(mp.pieces().len(), 2);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(tent(2.5).is_err());
        assert!(quadratic(0.3).is_err());
        assert!(manneville_pomeau(1.0).is_err());
        assert!(model_catalog("nope", &BTreeMap::new()).is_err());
        // decreasing then flat is not strictly monotone
        let flat = PiecewiseMonotoneMap::new(
            "flat",
            BTreeMap::new(),
            (0.0, 1.0),
            vec![Piece::new(0.0, 1.0, Branch::Quadratic { a: 0.0 })],
        );
        assert!(flat.is_ok());
        let bumpy = PiecewiseMonotoneMap::new(
            "bumpy",
            BTreeMap::new(),
            (-1.0, 1.0),
            vec![Piece::new(-1.0, 1.0, Branch::Quadratic { a: 0.0 })],
        );
        assert!(bumpy.is_err());
    }

    #[test]
    fn excluded_window_splits_pieces() {
        let l = lorenz1d(1.9, 0.5)
            .unwrap()
            .with_excluded(-1e-3, 1e-3)
            .unwrap();
        let flags: Vec<bool> = l.pieces().iter().map(|p| p.excluded).collect();
        assert_eq!(flags, vec![false, true, true, false]);
    }

    #[test]
    fn standard_map_fixes_origin() {
        assert_eq!(standard_map(0.7, (0.0, 0.0)), (0.0, 0.0));
    }
}
