//! Drift reversal with a correction term, and the resulting importance sampler.

mod importance;
mod phi;
mod weight;

pub use importance::{estimate_tail_is, estimate_tail_is_detailed, sample_branch, Branch, IsRun};
pub use phi::{c1_floor, default_c1, PhiSpec, PhiVariant};
pub use weight::{closed_form_weight, girsanov_log_weight, write_weight_csv, WeightAccumulator, WeightRecord};
