//! Mutual information via predictive loss.
//!
//! The MI between an upstream activation set and a downstream matrix is
//! approximated as the drop in prediction error gained by using the upstream
//! activations instead of a constant predictor. Estimates are repeated over
//! independently trained probe replicas so that decisions can be gated on a
//! one-sided confidence rather than a hard threshold.

pub mod confidence;
pub mod estimate;
pub mod panel;
pub mod probe;
pub mod standardize;

pub use confidence::{keep_confidence, normal_cdf, LossDelta};
pub use estimate::{
    estimate_mi, estimate_mi_categorical, null_loss, FoldSplit, MiEstimate, MIN_EVAL_ROWS,
};
pub use panel::{masked_refit_delta, DropTrial, ProbePanel};
pub use probe::{Probe, ProbeConfig, WIDE_LAYER_THRESHOLD};
pub use standardize::{Standardizer, CONST_COLUMN_VAR_EPS};
