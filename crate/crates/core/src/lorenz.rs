//! Geometric Lorenz model: a linear saddle in the cube `[-1, 1]^3`, an
//! affine reinjection tube, the resulting Poincare map on `z = 1`, and an
//! irregular point built on a horseshoe of the one-dimensional factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::interval::{
    eval_along, find_strict_horseshoe, lorenz1d, solve_monotone, HorseshoeCertificate,
};
use crate::irregular::{
    build_psi, build_schedule, construct_irregular_point, weighted_ratio_at_checkpoints,
    OscillationReport, RoofFunction, DEFAULT_DELTA,
};
use crate::symbolic::{mixing_time, PeriodicPoint, SubshiftSpec};

/// Half-width of the neighbourhood of the singularity kept out of horseshoes.
pub const SINGULARITY_CUTOFF: f64 = 1e-3;

/// Slack allowed when checking that map values stay in `[-1, 1]`.
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzModel {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    #[serde(rename = "Theta")]
    pub theta: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(default = "default_c_g")]
    pub c_g: f64,
}

fn default_c_g() -> f64 {
    0.75
}

impl Default for LorenzModel {
    fn default() -> Self {
        LorenzModel {
            lambda1: 1.0,
            lambda2: -3.0,
            lambda3: -0.5,
            theta: 1.9,
            b: 0.25,
            t0: 1.0,
            c_g: 0.75,
        }
    }
}

/// Outcome of parameter validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFlags {
    pub alpha: f64,
    pub beta_c: f64,
    /// `Theta * alpha`, the infimum of `|F'|` on `[-1, 1] \ {0}`.
    pub min_expansion: f64,
    pub expanding: bool,
    /// `beta_c > alpha + 2`.
    pub regular: bool,
}

impl LorenzModel {
    pub fn new(
        lambda1: f64,
        lambda2: f64,
        lambda3: f64,
        theta: f64,
        b: f64,
        t0: f64,
    ) -> Result<Self> {
        let model = LorenzModel {
            lambda1,
            lambda2,
            lambda3,
            theta,
            b,
            t0,
            c_g: default_c_g(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn alpha(&self) -> f64 {
        -self.lambda3 / self.lambda1
    }

    pub fn beta_c(&self) -> f64 {
        -self.lambda2 / self.lambda1
    }

    /// Checks the eigenvalue chain `0 < -lambda3 < lambda1 < -lambda2`, the
    /// range of `F` and `G`, and reports expansion and regularity.
    pub fn validate(&self) -> Result<ModelFlags> {
        let finite = [
            self.lambda1,
            self.lambda2,
            self.lambda3,
            self.theta,
            self.b,
            self.t0,
            self.c_g,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::BadParams("model parameters must be finite".into()));
        }
        if !(0.0 < -self.lambda3 && -self.lambda3 < self.lambda1 && self.lambda1 < -self.lambda2) {
            return Err(Error::BadParams(format!(
                "eigenvalues ({}, {}, {}) violate 0 < -lambda3 < lambda1 < -lambda2",
                self.lambda1, self.lambda2, self.lambda3
            )));
        }
        let (alpha, beta_c) = (self.alpha(), self.beta_c());
        if !(self.theta > 1.0) {
            return Err(Error::BadParams(format!(
                "Theta = {} gives a degenerate one-dimensional map",
                self.theta
            )));
        }
        if self.theta - 1.0 > 1.0 {
            return Err(Error::BadParams(format!(
                "Theta = {} sends F outside [-1, 1]",
                self.theta
            )));
        }
        if !(self.b > 0.0) || !(self.c_g > 0.0 && self.c_g < 1.0) || self.b + (1.0 - self.c_g) > 1.0
        {
            return Err(Error::BadParams(
                "need B > 0, c_g in (0, 1) and B + 1 - c_g <= 1".into(),
            ));
        }
        if !(self.t0 >= 0.0) {
            return Err(Error::BadParams("T0 must be nonnegative".into()));
        }
        let min_expansion = self.theta * alpha;
        Ok(ModelFlags {
            alpha,
            beta_c,
            min_expansion,
            expanding: min_expansion > 1.0,
            regular: beta_c > alpha + 2.0,
        })
    }

    /// `F(x) = sign(x) (Theta |x|^alpha - 1)`.
    pub fn f(&self, x: f64) -> Result<f64> {
        check_nonsingular(x)?;
        Ok(x.signum() * (self.theta * x.abs().powf(self.alpha()) - 1.0))
    }

    /// `|F'(x)| = Theta alpha |x|^(alpha - 1)`.
    pub fn f_derivative(&self, x: f64) -> Result<f64> {
        check_nonsingular(x)?;
        let alpha = self.alpha();
        Ok(self.theta * alpha * x.abs().powf(alpha - 1.0))
    }

    /// `G(x, y) = sign(x) (1 - c_g) + B |x|^beta_c y`.
    pub fn g(&self, x: f64, y: f64) -> Result<f64> {
        check_nonsingular(x)?;
        Ok(x.signum() * (1.0 - self.c_g) + self.fiber_contraction(x) * y)
    }

    /// Lipschitz constant `B |x|^beta_c` of `G(x, .)`.
    pub fn fiber_contraction(&self, x: f64) -> f64 {
        self.b * x.abs().powf(self.beta_c())
    }
}

fn check_nonsingular(x: f64) -> Result<()> {
    if x == 0.0 {
        return Err(Error::Singular(
            "x = 0 lies on the stable manifold of the origin".into(),
        ));
    }
    if !(x.abs() <= 1.0) {
        return Err(Error::RangeViolation(format!("x = {x} outside [-1, 1]")));
    }
    Ok(())
}

/// A point of the cross-section `z = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareState {
    pub x: f64,
    pub y: f64,
}

impl PoincareState {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.abs() <= 1.0 && y.abs() <= 1.0) {
            return Err(Error::RangeViolation(format!(
                "({x}, {y}) is not on the section"
            )));
        }
        Ok(PoincareState { x, y })
    }

    pub fn is_singular(&self) -> bool {
        self.x == 0.0
    }
}

/// Time for `x' = lambda1 x` to carry `|x|` to 1.
pub fn exit_time(model: &LorenzModel, x: f64) -> Result<f64> {
    check_nonsingular(x)?;
    Ok(-x.abs().ln() / model.lambda1)
}

/// `P(x, y) = (F(x), G(x, y))`.
pub fn poincare_map(model: &LorenzModel, state: PoincareState) -> Result<PoincareState> {
    let fx = model.f(state.x)?;
    let gy = model.g(state.x, state.y)?;
    if fx.abs() > 1.0 + RANGE_SLACK || gy.abs() > 1.0 + RANGE_SLACK {
        return Err(Error::RangeViolation(format!(
            "P({}, {}) = ({fx}, {gy})",
            state.x, state.y
        )));
    }
    Ok(PoincareState {
        x: fx.clamp(-1.0, 1.0),
        y: gy.clamp(-1.0, 1.0),
    })
}

/// Return time to the section: exit time plus the reinjection flight.
pub fn roof(model: &LorenzModel, x: f64) -> Result<f64> {
    Ok(exit_time(model, x)? + model.t0)
}

/// Position along the flow: inside the cube, or on the reinjection tube
/// from an exit point to the section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "where", rename_all = "snake_case")]
pub enum FlowState {
    Cube {
        p: [f64; 3],
    },
    Tube {
        exit: [f64; 3],
        entry: [f64; 3],
        elapsed: f64,
    },
}

impl FlowState {
    pub fn position(&self, model: &LorenzModel) -> [f64; 3] {
        match *self {
            FlowState::Cube { p } => p,
            FlowState::Tube {
                exit,
                entry,
                elapsed,
            } => {
                let s = if model.t0 > 0.0 {
                    elapsed / model.t0
                } else {
                    1.0
                };
                [0, 1, 2].map(|i| exit[i] + s * (entry[i] - exit[i]))
            }
        }
    }
}

/// Affine reinjection of an exit point `(+-1, y, z)` onto the section.
fn reinject(model: &LorenzModel, exit: [f64; 3]) -> [f64; 3] {
    let s = exit[0].signum();
    [
        s * (model.theta * exit[2] - 1.0),
        s * (1.0 - model.c_g) + model.b * exit[1],
        1.0,
    ]
}

fn linear_flow(model: &LorenzModel, p: [f64; 3], t: f64) -> [f64; 3] {
    [
        p[0] * (model.lambda1 * t).exp(),
        p[1] * (model.lambda2 * t).exp(),
        p[2] * (model.lambda3 * t).exp(),
    ]
}

/// Advances the flow by time `t >= 0`.
///
/// Inside the cube the linear field is solved in closed form until `|x|`
/// reaches 1; the tube then carries the exit point affinely to its image on
/// the section in time `T0`.
pub fn flow_integrate(model: &LorenzModel, state: FlowState, t: f64) -> Result<FlowState> {
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!(
            "flow time {t} must be nonnegative"
        )));
    }
    let mut state = state;
    let mut left = t;
    loop {
        match state {
            FlowState::Cube { p } => {
                if p.iter().any(|c| !(c.abs() <= 1.0 + RANGE_SLACK)) {
                    return Err(Error::RangeViolation(format!("{p:?} is outside the cube")));
                }
                if p[0] == 0.0 {
                    return Err(Error::Singular(
                        "orbit lies on the stable manifold x = 0".into(),
                    ));
                }
                let to_exit = -p[0].abs().ln() / model.lambda1;
                if left <= to_exit {
                    return Ok(FlowState::Cube {
                        p: linear_flow(model, p, left),
                    });
                }
                let mut exit = linear_flow(model, p, to_exit);
                exit[0] = p[0].signum();
                left -= to_exit;
                state = FlowState::Tube {
                    exit,
                    entry: reinject(model, exit),
                    elapsed: 0.0,
                };
            }
            FlowState::Tube {
                exit,
                entry,
                elapsed,
            } => {
                let remaining = (model.t0 - elapsed).max(0.0);
                if left < remaining {
                    return Ok(FlowState::Tube {
                        exit,
                        entry,
                        elapsed: elapsed + left,
                    });
                }
                left = (left - remaining).max(0.0);
                if entry[0] == 0.0 {
                    return Err(Error::Singular("reinjection lands on x = 0".into()));
                }
                state = FlowState::Cube { p: entry };
                if left == 0.0 {
                    return Ok(state);
                }
            }
        }
    }
}

/// Classical fourth-order Runge-Kutta for the linear field, as a cross-check
/// of the closed form inside the cube.
pub fn rk4_in_cube(model: &LorenzModel, p: [f64; 3], t: f64, step: f64) -> [f64; 3] {
    let field = |q: [f64; 3]| {
        [
            model.lambda1 * q[0],
            model.lambda2 * q[1],
            model.lambda3 * q[2],
        ]
    };
    let add =
        |q: [f64; 3], d: [f64; 3], h: f64| [q[0] + h * d[0], q[1] + h * d[1], q[2] + h * d[2]];
    let steps = (t / step).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut q = p;
    for _ in 0..steps {
        let k1 = field(q);
        let k2 = field(add(q, k1, h / 2.0));
        let k3 = field(add(q, k2, h / 2.0));
        let k4 = field(add(q, k3, h));
        q = [0, 1, 2].map(|i| q[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    q
}

/// Horseshoe of the one-dimensional factor away from the singularity, with
/// the range of the single-step roof over its intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzHorseshoe {
    pub certificate: HorseshoeCertificate,
    /// `(min, max)` of the roof over the certificate intervals.
    pub roof_bounds: (f64, f64),
}

pub fn lorenz_horseshoe(model: &LorenzModel, k_max: usize) -> Result<Option<LorenzHorseshoe>> {
    let flags = model.validate()?;
    if k_max > 12 {
        return Err(Error::Precondition(
            "horseshoe search is limited to k <= 12".into(),
        ));
    }
    let map = lorenz1d(model.theta, flags.alpha)?
        .with_excluded(-SINGULARITY_CUTOFF, SINGULARITY_CUTOFF)?;
    let Some(certificate) = find_strict_horseshoe(&map, k_max, 2)? else {
        return Ok(None);
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(a, b) in &certificate.intervals {
        // the roof decreases in |x| on either side of 0
        let near = if a > 0.0 { a } else { -b };
        let far = a.abs().max(b.abs());
        lo = lo.min(roof(model, far)?);
        hi = hi.max(roof(model, near)?);
    }
    Ok(Some(LorenzHorseshoe {
        certificate,
        roof_bounds: (lo, hi),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzDemoConfig {
    pub k_max: usize,
    pub m_count: usize,
    pub m0: usize,
    pub window_radius: usize,
    /// Replace the sampled roof by this constant.
    #[serde(default, with = "optional_q")]
    pub roof_override: Option<Q>,
    /// Use this `C` instead of the one derived from the roof.
    #[serde(default)]
    pub c_override: Option<f64>,
}

impl Default for LorenzDemoConfig {
    fn default() -> Self {
        LorenzDemoConfig {
            k_max: 6,
            m_count: 8,
            m0: 2,
            window_radius: 3,
            roof_override: None,
            c_override: None,
        }
    }
}

mod optional_q {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        q.as_ref().map(exact::format).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Q>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| exact::parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzDemo {
    pub model: LorenzModel,
    pub flags: ModelFlags,
    pub horseshoe: LorenzHorseshoe,
    /// Intervals coding the symbols 0 and 1.
    pub coding: [(f64, f64); 2],
    pub c: f64,
    /// Largest deviation of the return time from its sampled value, over the
    /// cylinder endpoints.
    pub roof_approx_error: f64,
    pub report: OscillationReport,
}

// Subinterval of the cylinder with forward symbols `word`: points of
// J[word[0]] whose images under the horseshoe iterate visit J[word[1]], ...
fn cylinder(
    cert: &HorseshoeCertificate,
    map: &crate::interval::PiecewiseMonotoneMap,
    word: &[u16],
) -> (f64, f64) {
    let last = word[word.len() - 1] as usize;
    let mut current = cert.intervals[last];
    for &s in word[..word.len() - 1].iter().rev() {
        let (a, b) = cert.intervals[s as usize];
        let itin = &cert.itineraries[s as usize];
        let g = |x: f64| eval_along(map, itin, x);
        let p = solve_monotone(g, a, b, current.0);
        let q = solve_monotone(g, a, b, current.1);
        current = (p.min(q), p.max(q));
    }
    current
}

/// Return time of `k` consecutive passes through the section starting at `x`.
fn return_time(model: &LorenzModel, k: usize, mut x: f64) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..k {
        total += roof(model, x)?;
        x = model.f(x)?;
    }
    Ok(total)
}

/// Irregular point for the Poincare map on a two-interval horseshoe of the
/// one-dimensional factor, with the return time as roof.
pub fn lorenz_irregular_demo(model: &LorenzModel, config: &LorenzDemoConfig) -> Result<LorenzDemo> {
    let flags = model.validate()?;
    let horseshoe = lorenz_horseshoe(model, config.k_max)?
        .ok_or_else(|| Error::Precondition("no horseshoe away from the singularity".into()))?;
    let cert = &horseshoe.certificate;
    let k = cert.k;
    let map = lorenz1d(model.theta, flags.alpha)?
        .with_excluded(-SINGULARITY_CUTOFF, SINGULARITY_CUTOFF)?;
    let full = SubshiftSpec::full_shift(2);
    let w = config.window_radius;
    let mut approx_error: f64 = 0.0;
    let roof_fn = match &config.roof_override {
        Some(value) => RoofFunction::constant(&full, value.clone())?,
        None => {
            let mut failure = None;
            let table = RoofFunction::from_fn(&full, w, |window| {
                let forward = &window[w..];
                let (a, b) = cylinder(cert, &map, forward);
                let mid = 0.5 * (a + b);
                let sampled = return_time(model, k, mid);
                let ends =
                    return_time(model, k, a).and_then(|ra| Ok((ra, return_time(model, k, b)?)));
                match (sampled, ends) {
                    (Ok(v), Ok((ra, rb))) => {
                        approx_error = approx_error.max((ra - v).abs()).max((rb - v).abs());
                        exact::from_f64(v).unwrap_or_else(|e| {
                            failure = Some(e);
                            exact::int(1)
                        })
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        failure = Some(e);
                        exact::int(1)
                    }
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            table?
        }
    };
    let c = config.c_override.unwrap_or_else(|| roof_fn.c_constant());
    if !(c > 1.0) || !roof_fn.within(c) {
        return Err(Error::BadParams(format!("C = {c} does not bound the roof")));
    }
    let delta = DEFAULT_DELTA.min(1.0 / (6.0 * c * c));
    let p0 = PeriodicPoint::new(&full, vec![0])?;
    let p1 = PeriodicPoint::new(&full, vec![1])?;
    let psi = build_psi(&full, &p0, &p1, config.m0)?;
    let gap = mixing_time(&full)? as u64;
    let schedule = build_schedule(gap, 1, 1, c, config.m_count, delta)?;
    let point = construct_irregular_point(&full, &p0, &p1, &schedule)?;
    let report = weighted_ratio_at_checkpoints(&point, &psi, &roof_fn)?;
    Ok(LorenzDemo {
        model: *model,
        flags,
        coding: [cert.intervals[0], cert.intervals[1]],
        horseshoe: horseshoe.clone(),
        c,
        roof_approx_error: approx_error,
        report,
    })
}
