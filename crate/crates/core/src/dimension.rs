//! Dimension formulas and estimators for self-similar sets, affine
//! horseshoes and the two-sided shift.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{cylinder_count, SubshiftSpec};

/// Largest `depth * k^depth` accepted by [`ifs_attractor`].
pub const IFS_BUDGET: u64 = 10_000_000;

/// Smallest point set accepted by [`box_dimension`].
pub const MIN_BOX_POINTS: usize = 1000;

/// Contractions `x -> r_i x + c_i` of the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranSystem {
    pub ratios: Vec<f64>,
    #[serde(default)]
    pub translations: Option<Vec<f64>>,
    #[serde(default)]
    pub open_set: bool,
}

impl MoranSystem {
    /// Validates ratios and, when `open_set` is set, that the images of
    /// `[0, 1]` have pairwise disjoint interiors.
    pub fn new(ratios: Vec<f64>, translations: Option<Vec<f64>>, open_set: bool) -> Result<Self> {
        let system = MoranSystem {
            ratios,
            translations,
            open_set,
        };
        system.validate()?;
        Ok(system)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() || self.ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::BadParams(
                "ratios must be nonempty and lie in (0, 1)".into(),
            ));
        }
        if let Some(t) = &self.translations {
            if t.len() != self.ratios.len() {
                return Err(Error::BadParams(
                    "one translation per ratio required".into(),
                ));
            }
            if self.open_set {
                let mut images: Vec<(f64, f64)> = t
                    .iter()
                    .zip(&self.ratios)
                    .map(|(&c, &r)| (c, c + r))
                    .collect();
                images.sort_by(|a, b| a.0.total_cmp(&b.0));
                if images.windows(2).any(|w| w[0].1 > w[1].0) {
                    return Err(Error::BadParams("images of [0, 1] overlap".into()));
                }
            }
        }
        Ok(())
    }

    /// The middle-third Cantor system.
    pub fn middle_third() -> Self {
        MoranSystem {
            ratios: vec![1.0 / 3.0; 2],
            translations: Some(vec![0.0, 2.0 / 3.0]),
            open_set: true,
        }
    }
}

/// The root `s` of `sum r_i^s = 1`.
pub fn moran_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() || ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::BadParams(
            "ratios must be nonempty and lie in (0, 1)".into(),
        ));
    }
    let excess = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
    if ratios.len() == 1 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while excess(hi) >= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Affine horseshoe with `branches` strips, expansion `lambda_u` and
/// contraction `mu_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeSpec {
    pub lambda_u: f64,
    pub mu_s: f64,
    pub branches: u32,
    #[serde(default)]
    pub d_u_index: u32,
    #[serde(default = "one")]
    pub d_s_index: u32,
}

fn one() -> u32 {
    1
}

impl HorseshoeSpec {
    pub fn new(lambda_u: f64, mu_s: f64, branches: u32) -> Result<Self> {
        let spec = HorseshoeSpec {
            lambda_u,
            mu_s,
            branches,
            d_u_index: 1,
            d_s_index: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_u > 1.0) || !(self.mu_s > 0.0 && self.mu_s < 1.0) || self.branches < 2 {
            return Err(Error::BadParams(
                "need lambda_u > 1, mu_s in (0, 1), at least two branches".into(),
            ));
        }
        let k = self.branches as f64;
        if k / self.lambda_u > 1.0 + 1e-12 || k * self.mu_s > 1.0 + 1e-12 {
            return Err(Error::BadParams(
                "strips do not fit in the unit square".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeDimension {
    pub d_u: f64,
    pub d_s: f64,
    pub total: f64,
    /// `d_s_index + d_u`, the lower bound for the irregular set.
    pub irregular_lower_bound: f64,
}

pub fn horseshoe_dimension(spec: &HorseshoeSpec) -> Result<HorseshoeDimension> {
    spec.validate()?;
    let log_k = (spec.branches as f64).ln();
    let d_u = log_k / spec.lambda_u.ln();
    let d_s = log_k / -spec.mu_s.ln();
    Ok(HorseshoeDimension {
        d_u,
        d_s,
        total: d_u + d_s,
        irregular_lower_bound: spec.d_s_index as f64 + d_u,
    })
}

/// Ordinary least squares: `(slope, intercept, standard error of the slope)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if xs.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountReport {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub stderr: f64,
}

impl BoxCountReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,count\n");
        for (e, c) in self.scales.iter().zip(&self.counts) {
            let _ = writeln!(out, "{e},{c}");
        }
        out
    }
}

/// Box-counting estimate on grids anchored at the origin.
///
/// `levels` scales are spaced geometrically from `eps_max` down to
/// `eps_min`; the slope of `log N` against `log 1/eps` is fitted after
/// dropping the largest and the smallest scale.
pub fn box_dimension(
    points: &[Vec<f64>],
    scale_range: (f64, f64),
    levels: usize,
) -> Result<BoxCountReport> {
    let (eps_min, eps_max) = scale_range;
    if !(eps_min > 0.0 && eps_min < eps_max) || levels < 4 {
        return Err(Error::DegenerateRange(format!(
            "need 0 < eps_min < eps_max and at least 4 levels; got ({eps_min}, {eps_max}), {levels}"
        )));
    }
    if points.len() < MIN_BOX_POINTS {
        return Err(Error::Precondition(format!(
            "{} points, at least {MIN_BOX_POINTS} needed",
            points.len()
        )));
    }
    let step = (eps_min / eps_max).powf(1.0 / (levels - 1) as f64);
    let scales: Vec<f64> = (0..levels).map(|i| eps_max * step.powi(i as i32)).collect();
    let counts: Vec<u64> = scales
        .par_iter()
        .map(|&eps| {
            let cells: HashSet<Vec<i64>> = points
                .iter()
                .map(|p| p.iter().map(|x| (x / eps).floor() as i64).collect())
                .collect();
            cells.len() as u64
        })
        .collect();
    let xs: Vec<f64> = scales[1..levels - 1].iter().map(|e| -e.ln()).collect();
    let ys: Vec<f64> = counts[1..levels - 1]
        .iter()
        .map(|&c| (c as f64).ln())
        .collect();
    let (slope, _, stderr) = linear_fit(&xs, &ys);
    Ok(BoxCountReport {
        scales,
        counts,
        slope,
        stderr,
    })
}

/// Slope of `log #{admissible words of length 2n+1}` against `n log 2`, the
/// dimension of the shift under the metric `2^{-|n|}`.
pub fn shift_metric_dimension(spec: &SubshiftSpec, depths: (usize, usize)) -> Result<f64> {
    if !spec.is_irreducible() {
        return Err(Error::Precondition("subshift is not irreducible".into()));
    }
    let (lo, hi) = depths;
    if hi <= lo {
        return Err(Error::DegenerateRange(format!(
            "depth range {lo}..{hi} is empty"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in lo..=hi {
        xs.push(n as f64 * std::f64::consts::LN_2);
        ys.push(cylinder_count(spec, 2 * n + 1)?.ln());
    }
    Ok(linear_fit(&xs, &ys).0)
}

/// Images of 0 under all compositions `T_{w_1} o ... o T_{w_depth}`, words in
/// lexicographic order.
pub fn ifs_attractor(system: &MoranSystem, depth: usize) -> Result<Vec<f64>> {
    system.validate()?;
    let translations = system
        .translations
        .as_ref()
        .ok_or_else(|| Error::Precondition("translations are required".into()))?;
    let k = system.ratios.len() as u64;
    let size = k
        .checked_pow(depth as u32)
        .filter(|s| s.saturating_mul(depth.max(1) as u64) <= IFS_BUDGET);
    let Some(size) = size else {
        return Err(Error::BudgetExceeded(format!(
            "{k}^{depth} words exceed the budget"
        )));
    };
    if k == 1 {
        let mut x = 0.0;
        for _ in 0..depth {
            x = system.ratios[0] * x + translations[0];
        }
        return Ok(vec![x]);
    }
    // the innermost map is applied first, so build from the last letter outwards
    let mut points = vec![0.0];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(points.len() * k as usize);
        for (r, c) in system.ratios.iter().zip(translations) {
            next.extend(points.iter().map(|x| r * x + c));
        }
        points = next;
    }
    debug_assert_eq!(points.len() as u64, size);
    Ok(points)
}

/// Cartesian product of two point sets on the line.
pub fn product_points(a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| vec![x, y]))
        .collect()
}
