//! Reduction of one video's frame sequence to the regressor inputs:
//! elapsed time, bounding-box area change and region-averaged depth change
//! between the first and last usable frames.

mod table;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interchange::{
    read_depth_raster, read_mask_raster, BBox, DepthRaster, Detection, FrameObservation,
    InterchangeError, MaskRaster, Perspective, SampleEntry,
};

pub use table::{read_features_table, write_features_table, TableError, FEATURES_HEADER};

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.7;

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("no accepted detection above the confidence threshold")]
    NoVehicle,

    #[error("need at least two frames with a detected vehicle, found {usable} of {total}")]
    NoUsableFramePair { usable: usize, total: usize },

    #[error("need at least 2 frames, got {0}")]
    InsufficientFrames(usize),

    #[error("frame index {0} appears more than once")]
    DuplicateFrame(u64),

    #[error("fps must be finite and > 0, got {0}")]
    InvalidFps(f64),

    #[error("depth region contains no pixels")]
    EmptyRegion,

    #[error("mask is {mask_width}x{mask_height} but depth is {depth_width}x{depth_height}")]
    DimensionMismatch {
        depth_width: u32,
        depth_height: u32,
        mask_width: u32,
        mask_height: u32,
    },

    #[error("frame {frame_index} has no {kind} raster")]
    MissingRaster {
        frame_index: u64,
        kind: &'static str,
    },

    #[error("frame {frame_index}: {source}")]
    Raster {
        frame_index: u64,
        #[source]
        source: InterchangeError,
    },

    #[error("invalid extraction config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthRegion {
    #[default]
    Mask,
    Bbox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimarySelection {
    #[default]
    MaxArea,
    MaxConfidence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    /// Detections must score strictly above this value.
    pub confidence_threshold: f64,
    pub accepted_classes: BTreeSet<String>,
    pub depth_region: DepthRegion,
    pub primary_selection: PrimarySelection,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            accepted_classes: BTreeSet::from(["car".to_owned()]),
            depth_region: DepthRegion::Mask,
            primary_selection: PrimarySelection::MaxArea,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), ExtractionError> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(ExtractionError::InvalidConfig(format!(
                "confidence_threshold must lie in [0, 1], got {}",
                self.confidence_threshold
            )));
        }
        if self.accepted_classes.is_empty() {
            return Err(ExtractionError::InvalidConfig(
                "accepted_classes must not be empty".into(),
            ));
        }
        Ok(())
    }
}

/// One video reduced to the regressor inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_id: String,
    /// Seconds between the two frames used.
    pub t: f64,
    /// First-frame bbox area minus last-frame bbox area, px².
    pub area_diff: f64,
    /// First-frame mean depth minus last-frame mean depth, depth units.
    pub dist_diff: f64,
    pub speed_kmh: Option<f64>,
    pub perspective: Perspective,
}

impl SampleRecord {
    pub fn new(sample_id: impl Into<String>, t: f64, area_diff: f64, dist_diff: f64) -> Self {
        Self {
            sample_id: sample_id.into(),
            t,
            area_diff,
            dist_diff,
            speed_kmh: None,
            perspective: Perspective::Unknown,
        }
    }

    pub fn with_speed(mut self, speed_kmh: f64) -> Self {
        self.speed_kmh = Some(speed_kmh);
        self
    }

    pub fn is_valid(&self) -> bool {
        self.t.is_finite()
            && self.t > 0.0
            && self.area_diff.is_finite()
            && self.dist_diff.is_finite()
            && self.speed_kmh.is_none_or(|s| s.is_finite() && s >= 0.0)
    }
}

pub fn bbox_area(detection: &Detection) -> f64 {
    detection.bbox.area()
}

fn rank_candidates(a: &Detection, b: &Detection, selection: PrimarySelection) -> Ordering {
    let primary = match selection {
        PrimarySelection::MaxArea => b.bbox.area().total_cmp(&a.bbox.area()),
        PrimarySelection::MaxConfidence => Ordering::Equal,
    };
    primary
        .then_with(|| b.confidence.total_cmp(&a.confidence))
        .then_with(|| a.bbox.x1.total_cmp(&b.bbox.x1))
        .then_with(|| a.bbox.y1.total_cmp(&b.bbox.y1))
        .then_with(|| a.bbox.x2.total_cmp(&b.bbox.x2))
        .then_with(|| a.bbox.y2.total_cmp(&b.bbox.y2))
        .then_with(|| a.class_label.cmp(&b.class_label))
}

/// Picks the subject vehicle among a frame's detections.
///
/// Only accepted classes scoring strictly above the threshold survive. Among
/// survivors the configured criterion wins, ties broken by confidence
/// (descending) and then by the top-left corner (ascending), so the result
/// does not depend on input order.
pub fn select_primary_vehicle<'a>(
    detections: &'a [Detection],
    config: &ExtractionConfig,
) -> Result<&'a Detection, ExtractionError> {
    detections
        .iter()
        .filter(|d| {
            d.confidence > config.confidence_threshold
                && config.accepted_classes.contains(&d.class_label)
        })
        .min_by(|a, b| rank_candidates(a, b, config.primary_selection))
        .ok_or(ExtractionError::NoVehicle)
}

/// Pixel set over which depth is averaged.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Mask(&'a MaskRaster),
    Bbox(BBox),
}

/// Arithmetic mean of the depth values inside `region`, accumulated in f64.
pub fn region_mean_depth(depth: &DepthRaster, region: Region<'_>) -> Result<f64, ExtractionError> {
    let (sum, count) = match region {
        Region::Mask(mask) => {
            if mask.width != depth.width || mask.height != depth.height {
                return Err(ExtractionError::DimensionMismatch {
                    depth_width: depth.width,
                    depth_height: depth.height,
                    mask_width: mask.width,
                    mask_height: mask.height,
                });
            }
            depth
                .values
                .iter()
                .zip(&mask.values)
                .filter(|(_, &m)| m == 1)
                .fold((0.0f64, 0usize), |(s, n), (&v, _)| (s + v as f64, n + 1))
        }
        Region::Bbox(bbox) => {
            let (cols, rows) = bbox
                .pixel_span(depth.width, depth.height)
                .ok_or(ExtractionError::EmptyRegion)?;
            let mut sum = 0.0f64;
            for row in rows.clone() {
                for col in cols.clone() {
                    sum += depth.get(col, row) as f64;
                }
            }
            (sum, cols.len() * rows.len())
        }
    };
    if count == 0 {
        return Err(ExtractionError::EmptyRegion);
    }
    Ok(sum / count as f64)
}

/// Supplies the rasters referenced by a frame.
pub trait RasterSource {
    fn depth(&self, frame: &FrameObservation) -> Result<DepthRaster, ExtractionError>;
    fn mask(&self, frame: &FrameObservation) -> Result<MaskRaster, ExtractionError>;
}

/// Loads rasters from disk, resolving frame paths against `root`.
#[derive(Debug, Clone)]
pub struct FileRasters {
    root: PathBuf,
}

impl FileRasters {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// Resolves paths relative to the directory holding `manifest_path`.
    pub fn for_manifest(manifest_path: &Path) -> Self {
        Self::new(manifest_path.parent().unwrap_or(Path::new(".")))
    }
}

impl RasterSource for FileRasters {
    fn depth(&self, frame: &FrameObservation) -> Result<DepthRaster, ExtractionError> {
        let rel = frame
            .depth_path
            .as_ref()
            .ok_or(ExtractionError::MissingRaster {
                frame_index: frame.frame_index,
                kind: "depth",
            })?;
        read_depth_raster(self.root.join(rel)).map_err(|source| ExtractionError::Raster {
            frame_index: frame.frame_index,
            source,
        })
    }

    fn mask(&self, frame: &FrameObservation) -> Result<MaskRaster, ExtractionError> {
        let rel = frame
            .mask_path
            .as_ref()
            .ok_or(ExtractionError::MissingRaster {
                frame_index: frame.frame_index,
                kind: "mask",
            })?;
        read_mask_raster(self.root.join(rel)).map_err(|source| ExtractionError::Raster {
            frame_index: frame.frame_index,
            source,
        })
    }
}

/// In-memory rasters keyed by frame index.
#[derive(Debug, Clone, Default)]
pub struct MemoryRasters {
    frames: HashMap<u64, (DepthRaster, Option<MaskRaster>)>,
}

impl MemoryRasters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, frame_index: u64, depth: DepthRaster, mask: Option<MaskRaster>) {
        self.frames.insert(frame_index, (depth, mask));
    }
}

impl RasterSource for MemoryRasters {
    fn depth(&self, frame: &FrameObservation) -> Result<DepthRaster, ExtractionError> {
        self.frames
            .get(&frame.frame_index)
            .map(|(d, _)| d.clone())
            .ok_or(ExtractionError::MissingRaster {
                frame_index: frame.frame_index,
                kind: "depth",
            })
    }

    fn mask(&self, frame: &FrameObservation) -> Result<MaskRaster, ExtractionError> {
        self.frames
            .get(&frame.frame_index)
            .and_then(|(_, m)| m.clone())
            .ok_or(ExtractionError::MissingRaster {
                frame_index: frame.frame_index,
                kind: "mask",
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointMeasurement {
    pub frame_index: u64,
    pub bbox: BBox,
    pub area: f64,
    pub mean_depth: f64,
}

/// Features of one sample plus the endpoint frames they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub t: f64,
    pub area_diff: f64,
    pub dist_diff: f64,
    pub first: EndpointMeasurement,
    pub last: EndpointMeasurement,
}

impl Extraction {
    pub fn into_record(self, entry: &SampleEntry) -> SampleRecord {
        SampleRecord {
            sample_id: entry.sample_id.clone(),
            t: self.t,
            area_diff: self.area_diff,
            dist_diff: self.dist_diff,
            speed_kmh: entry.ground_truth_speed_kmh,
            perspective: entry.perspective,
        }
    }
}

fn measure_endpoint(
    frame: &FrameObservation,
    vehicle: &Detection,
    config: &ExtractionConfig,
    source: &dyn RasterSource,
) -> Result<EndpointMeasurement, ExtractionError> {
    let depth = source.depth(frame)?;
    let mean_depth = match config.depth_region {
        DepthRegion::Mask => {
            let mask = source.mask(frame)?;
            region_mean_depth(&depth, Region::Mask(&mask))?
        }
        DepthRegion::Bbox => region_mean_depth(&depth, Region::Bbox(vehicle.bbox))?,
    };
    Ok(EndpointMeasurement {
        frame_index: frame.frame_index,
        bbox: vehicle.bbox,
        area: vehicle.bbox.area(),
        mean_depth,
    })
}

/// Computes `t`, ΔA and ΔD from the first and last frames holding a vehicle.
///
/// Frames are ordered by index. When a boundary frame has no usable
/// detection the scan moves inward to the nearest frame that does, and `t`
/// is measured between the frames actually used. Only the two endpoint
/// frames are read from `source`.
pub fn extract_sample(
    frames: &[FrameObservation],
    fps: f64,
    config: &ExtractionConfig,
    source: &dyn RasterSource,
) -> Result<Extraction, ExtractionError> {
    config.validate()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(ExtractionError::InvalidFps(fps));
    }
    if frames.len() < 2 {
        return Err(ExtractionError::InsufficientFrames(frames.len()));
    }
    let mut ordered: Vec<&FrameObservation> = frames.iter().collect();
    ordered.sort_by_key(|f| f.frame_index);
    if let Some(w) = ordered
        .windows(2)
        .find(|w| w[0].frame_index == w[1].frame_index)
    {
        return Err(ExtractionError::DuplicateFrame(w[0].frame_index));
    }

    let usable = |f: &&FrameObservation| select_primary_vehicle(&f.detections, config).is_ok();
    let (i_first, i_last) = match (
        ordered.iter().position(usable),
        ordered.iter().rposition(usable),
    ) {
        (Some(a), Some(b)) if a < b => (a, b),
        (a, _) => {
            return Err(ExtractionError::NoUsableFramePair {
                usable: usize::from(a.is_some()),
                total: frames.len(),
            })
        }
    };
    let d_first = select_primary_vehicle(&ordered[i_first].detections, config)?;
    let d_last = select_primary_vehicle(&ordered[i_last].detections, config)?;

    let first = measure_endpoint(ordered[i_first], d_first, config, source)?;
    let last = measure_endpoint(ordered[i_last], d_last, config, source)?;
    Ok(Extraction {
        t: (last.frame_index - first.frame_index) as f64 / fps,
        area_diff: first.area - last.area,
        dist_diff: first.mean_depth - last.mean_depth,
        first,
        last,
    })
}

/// Runs [`extract_sample`] on a manifest entry and labels the result.
pub fn extract_entry(
    entry: &SampleEntry,
    config: &ExtractionConfig,
    source: &dyn RasterSource,
) -> Result<SampleRecord, ExtractionError> {
    extract_sample(&entry.frames, entry.fps, config, source).map(|e| e.into_record(entry))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(conf: f64, bbox: [f64; 4]) -> Detection {
        Detection::new("car", conf, BBox::from(bbox))
    }

    fn frame(index: u64, detections: Vec<Detection>) -> FrameObservation {
        FrameObservation {
            frame_index: index,
            detections,
            depth_path: None,
            mask_path: None,
        }
    }

    #[test]
    fn largest_box_wins_by_default() {
        let dets = vec![
            car(0.9, [0.0, 0.0, 10.0, 10.0]),
            car(0.8, [0.0, 0.0, 20.0, 20.0]),
        ];
        let chosen = select_primary_vehicle(&dets, &ExtractionConfig::default()).unwrap();
        assert_eq!(bbox_area(chosen), 400.0);

        let config = ExtractionConfig {
            primary_selection: PrimarySelection::MaxConfidence,
            ..Default::default()
        };
        assert_eq!(
            select_primary_vehicle(&dets, &config).unwrap().confidence,
            0.9
        );
    }

    #[test]
    fn below_threshold_is_dropped() {
        let dets = vec![car(0.65, [0.0, 0.0, 50.0, 50.0])];
        assert!(matches!(
            select_primary_vehicle(&dets, &ExtractionConfig::default()),
            Err(ExtractionError::NoVehicle)
        ));
        // the threshold itself is excluded
        let dets = vec![car(0.7, [0.0, 0.0, 50.0, 50.0])];
        assert!(select_primary_vehicle(&dets, &ExtractionConfig::default()).is_err());
    }

    #[test]
    fn other_classes_are_dropped() {
        let dets = vec![Detection::new(
            "person",
            0.99,
            BBox::new(0.0, 0.0, 5.0, 5.0),
        )];
        assert!(matches!(
            select_primary_vehicle(&dets, &ExtractionConfig::default()),
            Err(ExtractionError::NoVehicle)
        ));
    }

    #[test]
    fn ties_break_on_confidence_then_corner() {
        let a = car(0.8, [0.0, 0.0, 10.0, 10.0]);
        let b = car(0.9, [5.0, 0.0, 15.0, 10.0]);
        let c = car(0.9, [2.0, 0.0, 12.0, 10.0]);
        let config = ExtractionConfig::default();
        for dets in [
            vec![a.clone(), b.clone(), c.clone()],
            vec![c.clone(), b.clone(), a.clone()],
            vec![b.clone(), a.clone(), c.clone()],
        ] {
            assert_eq!(select_primary_vehicle(&dets, &config).unwrap(), &c);
        }
    }

    #[test]
    fn bbox_areas() {
        assert_eq!(bbox_area(&car(1.0, [0.0, 0.0, 10.0, 10.0])), 100.0);
        assert_eq!(bbox_area(&car(1.0, [5.0, 5.0, 5.0, 9.0])), 0.0);
        assert_eq!(bbox_area(&car(1.0, [2.5, 0.0, 7.5, 4.0])), 20.0);
    }

    #[test]
    fn masked_mean() {
        let depth = DepthRaster::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mask = MaskRaster::new(2, 2, vec![1, 1, 0, 0]).unwrap();
        assert_eq!(region_mean_depth(&depth, Region::Mask(&mask)).unwrap(), 1.5);

        let zeros = MaskRaster::new(2, 2, vec![0; 4]).unwrap();
        assert!(matches!(
            region_mean_depth(&depth, Region::Mask(&zeros)),
            Err(ExtractionError::EmptyRegion)
        ));

        let wrong = MaskRaster::new(1, 4, vec![1; 4]).unwrap();
        assert!(matches!(
            region_mean_depth(&depth, Region::Mask(&wrong)),
            Err(ExtractionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bbox_mean_clips_to_raster() {
        let depth = DepthRaster::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let whole = BBox::new(-10.0, -10.0, 10.0, 10.0);
        assert_eq!(region_mean_depth(&depth, Region::Bbox(whole)).unwrap(), 2.5);
        let right_col = BBox::new(1.0, 0.0, 2.0, 2.0);
        assert_eq!(
            region_mean_depth(&depth, Region::Bbox(right_col)).unwrap(),
            3.0
        );
        let outside = BBox::new(5.0, 5.0, 9.0, 9.0);
        assert!(matches!(
            region_mean_depth(&depth, Region::Bbox(outside)),
            Err(ExtractionError::EmptyRegion)
        ));
    }

    #[test]
    fn constant_field_mean() {
        let depth = DepthRaster::filled(7, 5, 5.0).unwrap();
        let mut values = vec![0u8; 35];
        values[3] = 1;
        values[17] = 1;
        let mask = MaskRaster::new(7, 5, values).unwrap();
        assert_eq!(region_mean_depth(&depth, Region::Mask(&mask)).unwrap(), 5.0);
        let bbox = BBox::new(1.2, 0.3, 6.1, 3.3);
        assert_eq!(region_mean_depth(&depth, Region::Bbox(bbox)).unwrap(), 5.0);
    }

    /// Frame with a centred box of the given area and a mask/depth pair whose
    /// vehicle pixels all read `depth`.
    fn rasters_for(bbox: BBox, depth: f32, size: (u32, u32)) -> (DepthRaster, MaskRaster) {
        let (w, h) = size;
        let mut d = vec![1000.0f32; (w * h) as usize];
        let mut m = vec![0u8; (w * h) as usize];
        let (cols, rows) = bbox.pixel_span(w, h).unwrap();
        for r in rows {
            for c in cols.clone() {
                d[(r * w + c) as usize] = depth;
                m[(r * w + c) as usize] = 1;
            }
        }
        (
            DepthRaster::new(w, h, d).unwrap(),
            MaskRaster::new(w, h, m).unwrap(),
        )
    }

    #[test]
    fn pinhole_endpoints() {
        // f = 1000 px, vehicle 1.8 m x 1.5 m: 90x75 px at 20 m, 180x150 px at 10 m
        let far = BBox::new(275.0, 405.0, 365.0, 480.0);
        let near = BBox::new(230.0, 330.0, 410.0, 480.0);
        let mut source = MemoryRasters::new();
        let (d0, m0) = rasters_for(far, 20.0, (640, 480));
        let (d1, m1) = rasters_for(near, 10.0, (640, 480));
        source.insert(0, d0, Some(m0));
        source.insert(89, d1, Some(m1));
        let frames = vec![
            frame(0, vec![car(0.99, far.into())]),
            frame(89, vec![car(0.99, near.into())]),
        ];

        let ex = extract_sample(&frames, 30.0, &ExtractionConfig::default(), &source).unwrap();
        assert!((ex.t - 2.966_666_666_666_667).abs() < 1e-12);
        assert_eq!(ex.first.area, 6750.0);
        assert_eq!(ex.last.area, 27000.0);
        assert_eq!(ex.area_diff, 6750.0 - 27000.0);
        assert_eq!(ex.dist_diff, 10.0);

        let bbox_mode = ExtractionConfig {
            depth_region: DepthRegion::Bbox,
            ..Default::default()
        };
        let ex2 = extract_sample(&frames, 30.0, &bbox_mode, &source).unwrap();
        assert_eq!(ex2.dist_diff, 10.0);

        // boxes of 27000 and 108000 px² over the same depths
        let small = BBox::new(230.0, 330.0, 410.0, 480.0);
        let large = BBox::new(140.0, 180.0, 500.0, 480.0);
        let mut source = MemoryRasters::new();
        let (d0, m0) = rasters_for(small, 20.0, (640, 480));
        let (d1, m1) = rasters_for(large, 10.0, (640, 480));
        source.insert(0, d0, Some(m0));
        source.insert(89, d1, Some(m1));
        let frames = vec![
            frame(0, vec![car(0.99, small.into())]),
            frame(89, vec![car(0.99, large.into())]),
        ];
        let ex = extract_sample(&frames, 30.0, &ExtractionConfig::default(), &source).unwrap();
        assert_eq!(ex.area_diff, -81000.0);
        assert_eq!(ex.dist_diff, 10.0);
        assert!((ex.t - 2.9667).abs() < 1e-4);
    }

    #[test]
    fn stationary_sample_has_zero_diffs() {
        let bbox = BBox::new(10.0, 10.0, 30.0, 25.0);
        let (d, m) = rasters_for(bbox, 7.5, (40, 40));
        let mut source = MemoryRasters::new();
        source.insert(3, d.clone(), Some(m.clone()));
        source.insert(9, d, Some(m));
        let frames = vec![
            frame(9, vec![car(0.9, bbox.into())]),
            frame(3, vec![car(0.9, bbox.into())]),
        ];
        let ex = extract_sample(&frames, 3.0, &ExtractionConfig::default(), &source).unwrap();
        assert_eq!(ex.area_diff, 0.0);
        assert_eq!(ex.dist_diff, 0.0);
        assert_eq!(ex.t, 2.0);
    }

    #[test]
    fn single_frame_is_insufficient() {
        let frames = vec![frame(0, vec![car(0.9, [0.0, 0.0, 1.0, 1.0])])];
        assert!(matches!(
            extract_sample(
                &frames,
                30.0,
                &ExtractionConfig::default(),
                &MemoryRasters::new()
            ),
            Err(ExtractionError::InsufficientFrames(1))
        ));
    }

    #[test]
    fn boundary_dropouts_scan_inward() {
        let bbox = BBox::new(10.0, 10.0, 30.0, 25.0);
        let (d, m) = rasters_for(bbox, 7.5, (40, 40));
        let mut source = MemoryRasters::new();
        for i in 0..6 {
            source.insert(i, d.clone(), Some(m.clone()));
        }
        let frames = vec![
            frame(0, vec![]),
            frame(1, vec![car(0.5, bbox.into())]),
            frame(2, vec![car(0.9, bbox.into())]),
            frame(3, vec![car(0.9, bbox.into())]),
            frame(4, vec![car(0.9, bbox.into())]),
            frame(5, vec![Detection::new("truck", 0.95, bbox)]),
        ];
        let ex = extract_sample(&frames, 10.0, &ExtractionConfig::default(), &source).unwrap();
        assert_eq!(ex.first.frame_index, 2);
        assert_eq!(ex.last.frame_index, 4);
        assert!((ex.t - 0.2).abs() < 1e-15);
    }

    #[test]
    fn one_usable_frame_is_no_pair() {
        let bbox = BBox::new(0.0, 0.0, 4.0, 4.0);
        let frames = vec![frame(0, vec![]), frame(1, vec![car(0.9, bbox.into())])];
        assert!(matches!(
            extract_sample(
                &frames,
                10.0,
                &ExtractionConfig::default(),
                &MemoryRasters::new()
            ),
            Err(ExtractionError::NoUsableFramePair {
                usable: 1,
                total: 2
            })
        ));
    }

    #[test]
    fn missing_mask_is_reported() {
        let bbox = BBox::new(0.0, 0.0, 4.0, 4.0);
        let mut source = MemoryRasters::new();
        source.insert(0, DepthRaster::filled(8, 8, 1.0).unwrap(), None);
        source.insert(1, DepthRaster::filled(8, 8, 1.0).unwrap(), None);
        let frames = vec![
            frame(0, vec![car(0.9, bbox.into())]),
            frame(1, vec![car(0.9, bbox.into())]),
        ];
        assert!(matches!(
            extract_sample(&frames, 10.0, &ExtractionConfig::default(), &source),
            Err(ExtractionError::MissingRaster { kind: "mask", .. })
        ));
        let bbox_mode = ExtractionConfig {
            depth_region: DepthRegion::Bbox,
            ..Default::default()
        };
        assert!(extract_sample(&frames, 10.0, &bbox_mode, &source).is_ok());
    }
}
