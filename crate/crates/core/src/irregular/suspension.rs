use std::sync::OnceLock;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::window::{ObservablePsi, RoofFunction, WindowFunction};
use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::perron::perron_root;
use crate::symbolic::{sft_entropy, BiSequence, SubshiftSpec, Symbol};

/// Most fibers [`flow_time_average_exact`] will cross.
pub const FIBER_BUDGET: u64 = 10_000_000;

/// Region under the roof over a subshift, with `(x, rho(x)) ~ (sigma x, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspensionSpace {
    pub base: SubshiftSpec,
    pub roof: RoofFunction,
}

/// `phi(x, z) = psi(x) + (z / rho(x)) (psi(sigma x) - psi(x))`, which
/// interpolates linearly along each fiber and is continuous across the
/// identification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowObservable {
    pub psi: ObservablePsi,
}

/// The values entering the fiber over `x`: `psi(x)`, `psi(sigma x)`, `rho(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    pub psi_here: Q,
    pub psi_next: Q,
    pub roof: Q,
}

impl Fiber {
    /// Fiber over coordinate `i` of a sequence.
    pub fn at(phi: &FlowObservable, rho: &RoofFunction, x: &BiSequence, i: i64) -> Result<Self> {
        let r = phi.psi.radius();
        Ok(Fiber {
            psi_here: phi.psi.value(&x.window(i, r))?.clone(),
            psi_next: phi.psi.value(&x.window(i + 1, r))?.clone(),
            roof: rho.value(&x.window(i, rho.radius()))?.clone(),
        })
    }

    /// Fiber read off a window centred at `x_0`.
    pub fn from_window(
        phi: &FlowObservable,
        rho: &RoofFunction,
        window: &[Symbol],
    ) -> Result<Self> {
        if window.len().is_multiple_of(2) {
            return Err(Error::Precondition("window length must be odd".into()));
        }
        let w = window.len() / 2;
        let (rp, rr) = (phi.psi.radius(), rho.radius());
        if w < rp + 1 || w < rr {
            return Err(Error::Precondition(format!(
                "window radius {w} is below the required {}",
                (rp + 1).max(rr)
            )));
        }
        let around = |c: usize, r: usize| &window[c - r..=c + r];
        Ok(Fiber {
            psi_here: phi.psi.value(around(w, rp))?.clone(),
            psi_next: phi.psi.value(around(w + 1, rp))?.clone(),
            roof: rho.value(around(w, rr))?.clone(),
        })
    }

    /// `phi(x, z)` for `0 <= z <= rho(x)`.
    pub fn phi(&self, z: &Q) -> Q {
        &self.psi_here + z / &self.roof * (&self.psi_next - &self.psi_here)
    }

    /// `int_0^t phi(x, z) dz` for `0 <= t <= rho(x)`.
    pub fn partial_integral(&self, t: &Q) -> Q {
        &self.psi_here * t
            + (&self.psi_next - &self.psi_here) * t * t / (exact::int(2) * &self.roof)
    }

    /// `iota(phi)(x) = int_0^{rho(x)} phi(x, z) dz = rho(x) (psi(x) + psi(sigma x)) / 2`.
    pub fn iota(&self) -> Q {
        &self.roof * (&self.psi_here + &self.psi_next) / exact::int(2)
    }
}

/// Closed-form fiber integral of `phi` over the fiber at the window's centre.
pub fn iota(phi: &FlowObservable, rho: &RoofFunction, window: &[Symbol]) -> Result<Q> {
    Ok(Fiber::from_window(phi, rho, window)?.iota())
}

fn gauss_legendre_16() -> &'static [(f64, f64); 16] {
    static RULE: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 16;
        let mut rule = [(0.0, 0.0); N];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // three-term recurrence for P_N and its derivative
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// `int_0^upper f(z) dz` by 16-point Gauss-Legendre quadrature.
pub fn quadrature(f: impl Fn(f64) -> f64, upper: f64) -> f64 {
    let half = upper / 2.0;
    gauss_legendre_16()
        .iter()
        .map(|&(x, w)| w * f(half * (x + 1.0)))
        .sum::<f64>()
        * half
}

/// Fiber integral by quadrature, used to cross-check [`iota`].
pub fn iota_quadrature(phi: &FlowObservable, rho: &RoofFunction, window: &[Symbol]) -> Result<f64> {
    let fiber = Fiber::from_window(phi, rho, window)?;
    let (a, b, r) = (
        exact::to_f64(&fiber.psi_here),
        exact::to_f64(&fiber.psi_next),
        exact::to_f64(&fiber.roof),
    );
    Ok(quadrature(|z| a + z / r * (b - a), r))
}

/// `(1/T) int_0^T phi(f^t(x, 0)) dt`, exactly.
///
/// Whole fibers contribute `iota(phi)` at successive shifts of `x`; the last,
/// partial fiber contributes its closed-form integral.
pub fn flow_time_average_exact(
    space: &SuspensionSpace,
    phi: &FlowObservable,
    x: &BiSequence,
    t: &Q,
) -> Result<Q> {
    if !t.is_positive() {
        return Err(Error::Precondition("flow time must be positive".into()));
    }
    if !x.is_admissible(&space.base) {
        return Err(Error::Precondition("base point is not admissible".into()));
    }
    let mut elapsed = Q::zero();
    let mut integral = Q::zero();
    for i in 0..=FIBER_BUDGET as i64 {
        let fiber = Fiber::at(phi, &space.roof, x, i)?;
        let next = &elapsed + &fiber.roof;
        if next > *t {
            integral += fiber.partial_integral(&(t - &elapsed));
            return Ok(integral / t);
        }
        integral += fiber.iota();
        elapsed = next;
        if elapsed == *t {
            return Ok(integral / t);
        }
    }
    Err(Error::BudgetExceeded(format!(
        "flow time crosses more than {FIBER_BUDGET} fibers"
    )))
}

pub fn flow_time_average(
    space: &SuspensionSpace,
    phi: &FlowObservable,
    x: &BiSequence,
    t: f64,
) -> Result<f64> {
    let t = exact::from_f64(t)?;
    flow_time_average_exact(space, phi, x, &t).map(|q| exact::to_f64(&q))
}

/// Cumulative return times `sum_{j<n} rho(sigma^j x)` for `n = 1..=count`.
pub fn return_times(rho: &RoofFunction, x: &BiSequence, count: usize) -> Result<Vec<Q>> {
    let mut total = Q::zero();
    (0..count as i64)
        .map(|j| {
            total += rho.value(&x.window(j, rho.radius()))?;
            Ok(total.clone())
        })
        .collect()
}

/// Topological entropy of the suspension flow with a roof depending on the
/// first symbol: the root `s` of `P(-s rho) = 0`, where the pressure is the log
/// Perron root of `A_ij exp(-s rho_i)`.
pub fn suspension_entropy(spec: &SubshiftSpec, roof_per_symbol: &[f64]) -> Result<f64> {
    if roof_per_symbol.len() != spec.alphabet_size() {
        return Err(Error::BadParams(format!(
            "{} roof values for an alphabet of {}",
            roof_per_symbol.len(),
            spec.alphabet_size()
        )));
    }
    if roof_per_symbol.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::BadParams(
            "roof values must be positive and finite".into(),
        ));
    }
    if !spec.is_irreducible() {
        return Err(Error::Precondition("subshift is not irreducible".into()));
    }
    let h = sft_entropy(spec);
    if h <= 0.0 {
        return Ok(0.0);
    }
    let min_roof = roof_per_symbol
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let root_at = |s: f64| perron_root(&spec.weighted_rows(|i| (-s * roof_per_symbol[i]).exp()));
    let (mut lo, mut hi) = (0.0, h / min_roof);
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if root_at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Roof value at the symbol `x_0`, for configurations given per symbol.
pub fn roof_from_symbols(spec: &SubshiftSpec, roof_per_symbol: &[Q]) -> Result<RoofFunction> {
    if roof_per_symbol.len() != spec.alphabet_size() {
        return Err(Error::BadParams(
            "one roof value per symbol required".into(),
        ));
    }
    RoofFunction::from_fn(spec, 0, |w| roof_per_symbol[w[0] as usize].clone())
}

/// `phi(x, rho(x)) - phi(sigma x, 0)`, zero by construction.
pub fn identification_defect(
    phi: &FlowObservable,
    rho: &RoofFunction,
    x: &BiSequence,
    i: i64,
) -> Result<Q> {
    let here = Fiber::at(phi, rho, x, i)?;
    let next = Fiber::at(phi, rho, x, i + 1)?;
    Ok(here.phi(&here.roof) - next.phi(&Q::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irregular::build_psi;
    use crate::symbolic::PeriodicPoint;
    use num_traits::One;

    fn setup() -> (SubshiftSpec, FlowObservable) {
        let full = SubshiftSpec::full_shift(2);
        let p0 = PeriodicPoint::new(&full, vec![0]).unwrap();
        let p1 = PeriodicPoint::new(&full, vec![1]).unwrap();
        let psi = build_psi(&full, &p0, &p1, 0).unwrap();
        (full, FlowObservable { psi })
    }

    #[test]
    fn iota_examples() {
        let (full, phi) = setup();
        let two = RoofFunction::constant(&full, exact::int(2)).unwrap();
        assert_eq!(iota(&phi, &two, &[1, 1, 1]).unwrap(), exact::int(2));
        let one = RoofFunction::constant(&full, Q::one()).unwrap();
        assert_eq!(iota(&phi, &one, &[0, 0, 1]).unwrap(), exact::ratio(1, 2));
        assert!(iota(&phi, &one, &[0]).is_err());
    }

    #[test]
    fn quadrature_is_exact_on_polynomials() {
        let v = quadrature(|z| z.powi(7) - 3.0 * z * z + 1.0, 2.0);
        let exact = 2f64.powi(8) / 8.0 - 8.0 + 2.0;
        assert!((v - exact).abs() < 1e-12);
        let total: f64 = gauss_legendre_16().iter().map(|p| p.1).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn partial_fiber_integral() {
        let (full, phi) = setup();
        let one = RoofFunction::constant(&full, Q::one()).unwrap();
        let space = SuspensionSpace {
            base: full,
            roof: one,
        };
        // psi(x) = 0, psi(sigma x) = 1, so phi(x, z) = z
        let x = BiSequence::with_tails(vec![0], vec![0, 1], vec![1]).unwrap();
        let avg = flow_time_average_exact(&space, &phi, &x, &exact::ratio(1, 2)).unwrap();
        assert_eq!(avg, exact::ratio(1, 4));
    }

    #[test]
    fn constant_observable_average() {
        let full = SubshiftSpec::full_shift(2);
        let p0 = PeriodicPoint::new(&full, vec![0]).unwrap();
        let p1 = PeriodicPoint::new(&full, vec![1]).unwrap();
        let phi = FlowObservable {
            psi: build_psi(&full, &p0, &p1, 1).unwrap(),
        };
        let rho = RoofFunction::constant(&full, exact::ratio(3, 2)).unwrap();
        let space = SuspensionSpace {
            base: full,
            roof: rho,
        };
        let x = BiSequence::periodic(vec![1]).unwrap();
        for n in [1, 5, 17] {
            let t = exact::ratio(3 * n, 2);
            assert_eq!(
                flow_time_average_exact(&space, &phi, &x, &t).unwrap(),
                Q::one()
            );
        }
    }

    #[test]
    fn identification_is_continuous() {
        let (full, phi) = setup();
        let rho = RoofFunction::symbol_average(
            &full,
            1,
            &exact::ratio(11, 10),
            &[Q::zero(), exact::ratio(-1, 5)],
        )
        .unwrap();
        let x = BiSequence::with_tails(vec![0, 1], vec![1, 1, 0, 1, 0, 0], vec![1]).unwrap();
        for i in -3..10 {
            assert!(identification_defect(&phi, &rho, &x, i).unwrap().is_zero());
        }
    }

    #[test]
    fn abramov_scaling_and_three_symbol_example() {
        let full2 = SubshiftSpec::full_shift(2);
        assert!((suspension_entropy(&full2, &[1.0, 1.0]).unwrap() - 2f64.ln()).abs() < 1e-10);
        assert!((suspension_entropy(&full2, &[2.0, 2.0]).unwrap() - 2f64.ln() / 2.0).abs() < 1e-10);
        let full3 = SubshiftSpec::full_shift(3);
        let s = suspension_entropy(&full3, &[1.0, 1.0, 2.0]).unwrap();
        assert!((s - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-9);
        assert!(suspension_entropy(&full3, &[1.0, 0.0, 2.0]).is_err());
    }
}
