//! Whole-network pruning sweep, baselines and artifact formats.

pub mod baselines;
pub mod collapse;
pub mod io;
pub mod schedule;
pub mod sweep;

pub use baselines::{baseline_l1_magnitude, baseline_random};
pub use collapse::{collapse_filters, collapse_layer, CollapseFn};
pub use io::{
    read_activation_dump, read_masks_json, write_activation_dump, write_masks_json, MaskFile,
};
pub use schedule::confidence_schedule;
pub use sweep::{feature_select, mipp, LayerReport, MippConfig, MippReport, ScheduleParams};
