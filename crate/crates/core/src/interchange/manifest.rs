use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::InterchangeError;

/// Axis-aligned box in pixel coordinates, origin at the top-left corner.
///
/// Serialized as `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl From<[f64; 4]> for BBox {
    fn from([x1, y1, x2, y2]: [f64; 4]) -> Self {
        Self { x1, y1, x2, y2 }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_valid(&self) -> bool {
        [self.x1, self.y1, self.x2, self.y2]
            .iter()
            .all(|v| v.is_finite())
            && self.x1 <= self.x2
            && self.y1 <= self.y2
    }

    /// Pixel columns and rows covered by the box on a `width` x `height`
    /// grid, as half-open ranges `(cols, rows)`.
    ///
    /// A pixel `(c, r)` is covered when its center `(c + 0.5, r + 0.5)` lies
    /// in `[x1, x2) x [y1, y2)`. Returns `None` when no pixel is covered.
    pub fn pixel_span(
        &self,
        width: u32,
        height: u32,
    ) -> Option<(std::ops::Range<u32>, std::ops::Range<u32>)> {
        let span = |lo: f64, hi: f64, limit: u32| {
            let start = (lo - 0.5).ceil().clamp(0.0, limit as f64) as u32;
            let end = (hi - 0.5).ceil().clamp(0.0, limit as f64) as u32;
            (start < end).then_some(start..end)
        };
        Some((
            span(self.x1, self.x2, width)?,
            span(self.y1, self.y2, height)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub class_label: String,
    pub confidence: f64,
    pub bbox: BBox,
}

impl Detection {
    pub fn new(class_label: impl Into<String>, confidence: f64, bbox: BBox) -> Self {
        Self {
            class_label: class_label.into(),
            confidence,
            bbox,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameObservation {
    pub frame_index: u64,
    #[serde(default)]
    pub detections: Vec<Detection>,
    /// Relative to the manifest's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perspective {
    Front,
    Side,
    #[default]
    Unknown,
}

impl Perspective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Front => "front",
            Self::Side => "side",
            Self::Unknown => "unknown",
        }
    }
}

impl std::str::FromStr for Perspective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "front" => Ok(Self::Front),
            "side" => Ok(Self::Side),
            "unknown" => Ok(Self::Unknown),
            other => Err(format!("unknown perspective {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthUnits {
    #[serde(rename = "relative")]
    Relative,
    #[serde(rename = "metric_m")]
    MetricMeters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthConvention {
    LargerIsNearer,
    LargerIsFarther,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMetadata {
    pub depth_units: DepthUnits,
    pub depth_convention: DepthConvention,
    /// Free-form producer information (model identifiers, versions, seeds).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, String>,
}

impl DatasetMetadata {
    pub fn new(depth_units: DepthUnits, depth_convention: DepthConvention) -> Self {
        Self {
            depth_units,
            depth_convention,
            provenance: BTreeMap::new(),
        }
    }
}

/// One video: a single vehicle observed over a sequence of frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEntry {
    pub sample_id: String,
    pub fps: f64,
    pub frames: Vec<FrameObservation>,
    #[serde(default)]
    pub ground_truth_speed_kmh: Option<f64>,
    #[serde(default)]
    pub perspective: Perspective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub metadata: DatasetMetadata,
    pub samples: Vec<SampleEntry>,
}

fn invalid(
    sample_id: Option<&str>,
    frame_index: Option<u64>,
    field: &str,
    message: impl Into<String>,
) -> InterchangeError {
    InterchangeError::Validation {
        sample_id: sample_id.map(str::to_owned),
        frame_index,
        field: field.to_owned(),
        message: message.into(),
    }
}

impl DatasetManifest {
    pub fn new(metadata: DatasetMetadata) -> Self {
        Self {
            metadata,
            samples: Vec::new(),
        }
    }

    /// Checks every structural invariant; does not touch the filesystem.
    pub fn validate(&self) -> Result<(), InterchangeError> {
        let mut seen_ids = HashSet::new();
        for sample in &self.samples {
            let id = sample.sample_id.as_str();
            if id.is_empty() {
                return Err(invalid(Some(id), None, "sample_id", "must not be empty"));
            }
            if !seen_ids.insert(id) {
                return Err(invalid(Some(id), None, "sample_id", "duplicate sample_id"));
            }
            if !(sample.fps.is_finite() && sample.fps > 0.0) {
                return Err(invalid(
                    Some(id),
                    None,
                    "fps",
                    format!("must be finite and > 0, got {}", sample.fps),
                ));
            }
            if let Some(speed) = sample.ground_truth_speed_kmh {
                if !(speed.is_finite() && speed >= 0.0) {
                    return Err(invalid(
                        Some(id),
                        None,
                        "ground_truth_speed_kmh",
                        format!("must be finite and >= 0, got {speed}"),
                    ));
                }
            }
            if sample.frames.len() < 2 {
                return Err(invalid(
                    Some(id),
                    None,
                    "frames",
                    format!("need at least 2 frames, got {}", sample.frames.len()),
                ));
            }
            let mut seen_frames = HashSet::new();
            for frame in &sample.frames {
                let fi = Some(frame.frame_index);
                if !seen_frames.insert(frame.frame_index) {
                    return Err(invalid(
                        Some(id),
                        fi,
                        "frame_index",
                        "duplicate frame_index",
                    ));
                }
                for det in &frame.detections {
                    if !(det.confidence.is_finite() && (0.0..=1.0).contains(&det.confidence)) {
                        return Err(invalid(
                            Some(id),
                            fi,
                            "confidence",
                            format!("must lie in [0, 1], got {}", det.confidence),
                        ));
                    }
                    if !det.bbox.is_valid() {
                        return Err(invalid(
                            Some(id),
                            fi,
                            "bbox",
                            format!(
                                "need finite x1 <= x2 and y1 <= y2, got {:?}",
                                <[f64; 4]>::from(det.bbox)
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Confirms that every referenced raster exists under `root`.
    pub fn check_files(&self, root: &Path) -> Result<(), InterchangeError> {
        for sample in &self.samples {
            for frame in &sample.frames {
                for path in [&frame.depth_path, &frame.mask_path].into_iter().flatten() {
                    let full = root.join(path);
                    if !full.is_file() {
                        return Err(InterchangeError::MissingFile(full));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, sample_id: &str) -> Option<&SampleEntry> {
        self.samples.iter().find(|s| s.sample_id == sample_id)
    }
}

/// Parses and validates manifest text without checking referenced files.
pub fn parse_manifest(text: &str) -> Result<DatasetManifest, InterchangeError> {
    let manifest: DatasetManifest = serde_json::from_str(text)?;
    manifest.validate()?;
    Ok(manifest)
}

/// Loads a manifest, validates it and stat-checks its raster references
/// relative to the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, InterchangeError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            InterchangeError::MissingFile(path.to_path_buf())
        } else {
            InterchangeError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let manifest = parse_manifest(&text)?;
    manifest.check_files(path.parent().unwrap_or(Path::new(".")))?;
    Ok(manifest)
}

pub fn write_manifest(
    manifest: &DatasetManifest,
    path: impl AsRef<Path>,
) -> Result<(), InterchangeError> {
    manifest.validate()?;
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path.as_ref(), text).map_err(|source| InterchangeError::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })
}
