//! Piecewise monotone interval maps: laps, horseshoes, entropy bounds and
//! Birkhoff averages.

mod birkhoff;
mod bowen;
mod horseshoe;
mod laps;
mod map;

pub use birkhoff::{birkhoff_series, seeded_start, Observable};
pub use bowen::{bowen_entropy_estimate, BOWEN_BUDGET};
pub use horseshoe::{
    entropy_lower_bound, find_strict_horseshoe, verify_certificate, HorseshoeCertificate,
    CONTAINMENT_SLACK, SEARCH_LAP_BUDGET, SEARCH_WORK_BUDGET,
};
pub use laps::{
    eval_along, iterate, lap_image, lap_preimage, laps, laps_up_to, solve_monotone, Lap, LAP_BUDGET,
};
pub use map::{
    constant, identity, lorenz1d, manneville_pomeau, manneville_pomeau_split, model_catalog,
    quadratic, rotation, standard_map, tent, Branch, Piece, PiecewiseMonotoneMap,
};
