//! Patch extraction, augmentation and preprocessing.

mod augment;
mod extract;
mod preprocess;
pub(crate) mod sampling;

pub use augment::{augment, augment_pair, AffineDraw, AugmentationSpec, Augmented};
pub use extract::{
    crop_defect_window, crop_offset, extract_grid_patches, extract_random_patches, grid_offsets, grid_positions,
    random_offsets, CropWindow,
};
pub use preprocess::{gaussian_kernel, preprocess, PreprocessSpec};
