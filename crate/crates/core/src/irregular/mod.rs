//! Explicit irregular points for weighted Birkhoff ratios over mixing
//! subshifts, and the suspension flows built over them.

mod construct;
mod ratio;
mod schedule;
mod suspension;
mod window;

pub use construct::{construct_irregular_point, BlockEntry, BlockKind, IrregularPointProgram};
pub use ratio::{
    naive_ratio, weighted_ratio_at_checkpoints, Checkpoint, OscillationReport, OscillationSummary,
    Parity, NAIVE_BUDGET, TRANSIENT_CUTOFF,
};
pub use schedule::{build_schedule, TimingSchedule, DEFAULT_DELTA};
pub use suspension::{
    flow_time_average, flow_time_average_exact, identification_defect, iota, iota_quadrature,
    quadrature, return_times, roof_from_symbols, suspension_entropy, Fiber, FlowObservable,
    SuspensionSpace, FIBER_BUDGET,
};
pub use window::{build_psi, ObservablePsi, RoofFunction, WindowFunction, WindowTable};
