//! Mutual-information preserving structured pruning.
//!
//! The crate decides which nodes or filters of a network to keep by checking,
//! layer pair by layer pair from outputs to inputs, that the kept activations
//! still carry all the entropy needed to reconstruct the next layer's
//! activations. Redundant nodes are dropped, masks are applied, and the
//! pruned model can be re-trained.
//!
//! Modules:
//! - [`tensor`]: dense math, SGD and reverse-mode gradients.
//! - [`models`]: toy dense/conv classifiers, activation capture, masks.
//! - [`mi`]: predictive-loss mutual-information estimation with probes.
//! - [`terc`]: the per-layer transfer-entropy redundancy criterion.
//! - [`pipeline`]: the whole-network sweep, baselines and artifact formats.

pub mod error;
pub mod mi;
pub mod models;
pub mod pipeline;
pub mod tensor;
pub mod terc;

pub use error::{MippError, Result};
