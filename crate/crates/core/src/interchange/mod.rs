//! On-disk formats shared by the detection/depth front end and the
//! estimation pipeline: per-frame detections, depth and mask rasters, and
//! the JSON dataset manifest that ties them together.

mod manifest;
mod raster;

use std::path::PathBuf;

use thiserror::Error;

pub use manifest::{
    parse_manifest, read_manifest, write_manifest, BBox, DatasetManifest, DatasetMetadata,
    DepthConvention, DepthUnits, Detection, FrameObservation, Perspective, SampleEntry,
};
pub use raster::{
    read_depth_raster, read_mask_raster, write_depth_raster, write_mask_raster, DepthRaster,
    MaskRaster, DEPTH_MAGIC, FORMAT_VERSION, HEADER_LEN, MASK_MAGIC,
};

#[derive(Debug, Error)]
pub enum InterchangeError {
    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },

    #[error("unsupported raster format version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated raster: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("raster has {extra} unexpected trailing bytes")]
    TrailingBytes { extra: u64 },

    #[error("non-finite depth value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("mask value {value} at index {index} is not 0 or 1")]
    MaskValue { index: usize, value: u8 },

    #[error("invalid raster dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },

    #[error("raster holds {actual} values but its dimensions require {expected}")]
    LengthMismatch { expected: u64, actual: u64 },

    #[error("malformed manifest: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid manifest{}: {field}: {message}", location(.sample_id, .frame_index))]
    Validation {
        sample_id: Option<String>,
        frame_index: Option<u64>,
        field: String,
        message: String,
    },

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(sample_id: &Option<String>, frame_index: &Option<u64>) -> String {
    match (sample_id, frame_index) {
        (Some(s), Some(f)) => format!(" (sample {s}, frame {f})"),
        (Some(s), None) => format!(" (sample {s})"),
        (None, Some(f)) => format!(" (frame {f})"),
        (None, None) => String::new(),
    }
}
