//! On-disk formats: 8-bit PNG, MVTec-style folder splits, the chunked HDF5
//! training container and the predictions CSV.

mod container;
mod folder;
mod png;
mod predictions;

pub use container::{
    read_supervised_container, write_supervised_container, ContainerOptions, ContainerReader, ContainerWriter,
    SupervisedContainer, IMAGES_DATASET, MASKS_DATASET,
};
pub use folder::{read_folder_split, write_folder_split, FolderSample, FolderSplit, TestEntry};
pub use png::{read_gray, read_mask, write_gray, write_mask};
pub use predictions::{load_score_map, read_prediction_rows, read_predictions, JoinedPredictions, PredictionRow};
