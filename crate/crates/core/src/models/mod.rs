//! Toy classifiers, activation capture, masks and the train/re-train harness.

pub mod capture;
pub mod checkpoint;
pub mod masks;
pub mod mnist;
pub mod toy;
pub mod train;
pub mod zoo;

pub use capture::{capture_activations, ActivationCapture, CapturedLayer, LayerActs};
pub use checkpoint::{load_model, save_model};
pub use masks::{
    apply_masks, detect_layer_collapse, identity_masks, mask_totals, CollapseReport, PruneMask,
};
pub use mnist::{parse_idx_images, parse_idx_labels, read_idx_images, read_idx_labels, IdxImages};
pub use toy::{Layer, Shape, ToyModel};
pub use train::{accuracy, snapshot_params, train_classifier, AccuracyTrace, Dataset};
