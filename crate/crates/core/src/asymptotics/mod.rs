//! Closed-form tails, critical scales, comparison ODEs and flowlines.

mod flowlines;
mod ode;
mod scales;
mod tails;

pub use flowlines::{
    default_bracket, default_t_max, flowline_grid, separatrix, separatrix_start, write_flow_csv, write_separatrix_json,
    Flow, FlowField, FlowGrid, FlowMode, FlowRun, FlowTable, SeparatrixBracket, SeparatrixSidecar, DEFAULT_FLOW_DT,
};
pub use ode::{ode_f, ode_f_at_tau, ode_h, ode_h_pole, FAtTau};
pub use scales::{critical_scales, default_c2, default_c3, working_delta, working_xi, CriticalScales};
pub use tails::{
    band, brownian_tail_bounds, log_left_tail, log_right_tail, log_right_tail_beta2_painleve, right_tail_slope,
    right_tail_warning, DEFAULT_KAPPA,
};
