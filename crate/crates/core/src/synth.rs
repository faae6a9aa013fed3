//! Synthetic constant-speed approach scenes under a pinhole camera.
//!
//! The vehicle is a `W x H` metre rectangle facing the camera on the optical
//! axis. At distance `Z` it images to a `f·W/Z x f·H/Z` pixel box, centred
//! horizontally and resting on the bottom edge of the image. The mask covers
//! exactly the pixels whose centres fall inside that box, and the depth
//! raster reads `Z` (metric) or `1/Z` (inverse relative) over the mask with a
//! constant background beyond the vehicle.
//!
//! Randomness is keyed, never sequential: every scenario derives its own
//! stream from `(seed, sample index)` and every frame's noise from
//! `(scenario seed, frame index)`, so output does not depend on generation
//! order or thread count.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::MemoryRasters;
use crate::interchange::{
    write_depth_raster, write_manifest, write_mask_raster, BBox, DatasetManifest, DatasetMetadata,
    DepthConvention, DepthRaster, DepthUnits, Detection, FrameObservation, InterchangeError,
    MaskRaster, Perspective, SampleEntry,
};

pub const DETECTION_CONFIDENCE: f64 = 0.99;
pub const VEHICLE_CLASS: &str = "car";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCENARIO_FILE: &str = "scenario.json";

/// Distances are snapped to multiples of 2^-10 m so that endpoint depths
/// survive storage as f32 exactly (for distances below 2^14 m).
const DISTANCE_GRID_M: f64 = 1.0 / 1024.0;

const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("vehicle at non-positive distance {distance_m} m at t = {time_s} s")]
    Geometry { time_s: f64, distance_m: f64 },

    #[error(
        "no feasible scenario for sample {sample_index} after {attempts} draws: {last_reason}"
    )]
    InfeasibleRanges {
        sample_index: usize,
        attempts: usize,
        last_reason: String,
    },

    #[error(transparent)]
    Interchange(#[from] InterchangeError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMode {
    #[default]
    Metric,
    InverseRelative,
}

impl DepthMode {
    pub fn metadata(self) -> DatasetMetadata {
        match self {
            Self::Metric => {
                DatasetMetadata::new(DepthUnits::MetricMeters, DepthConvention::LargerIsFarther)
            }
            Self::InverseRelative => {
                DatasetMetadata::new(DepthUnits::Relative, DepthConvention::LargerIsNearer)
            }
        }
    }

    fn encode(self, distance_m: f64) -> f64 {
        match self {
            Self::Metric => distance_m,
            Self::InverseRelative => 1.0 / distance_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseParams {
    pub bbox_sigma_px: f64,
    pub depth_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub focal_px: f64,
    pub vehicle_width_m: f64,
    pub vehicle_height_m: f64,
    pub initial_distance_m: f64,
    /// Approach speed towards the camera.
    pub speed_kmh: f64,
    pub fps: f64,
    pub duration_s: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub depth_mode: DepthMode,
    pub noise: NoiseParams,
    pub rng_seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            focal_px: 1000.0,
            vehicle_width_m: 1.8,
            vehicle_height_m: 1.5,
            initial_distance_m: 20.0,
            speed_kmh: 36.0,
            fps: 30.0,
            duration_s: 1.0,
            image_width: 640,
            image_height: 480,
            depth_mode: DepthMode::Metric,
            noise: NoiseParams::default(),
            rng_seed: 0,
        }
    }
}

/// Projected box and camera distance at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub bbox: BBox,
    pub distance_m: f64,
}

impl ScenarioParams {
    pub fn speed_mps(&self) -> f64 {
        self.speed_kmh / 3.6
    }

    pub fn distance_at(&self, time_s: f64) -> f64 {
        self.initial_distance_m - self.speed_mps() * time_s
    }

    pub fn final_distance_m(&self) -> f64 {
        self.distance_at(self.duration_s)
    }

    /// Index of the last frame inside the clip, `floor(duration · fps)`.
    pub fn last_frame_index(&self) -> u64 {
        (self.duration_s * self.fps * (1.0 + 1e-12)).floor() as u64
    }

    pub fn frame_time(&self, frame_index: u64) -> f64 {
        frame_index as f64 / self.fps
    }

    fn box_size(&self, distance_m: f64) -> (f64, f64) {
        (
            self.focal_px * self.vehicle_width_m / distance_m,
            self.focal_px * self.vehicle_height_m / distance_m,
        )
    }

    /// Checks camera, vehicle, frame-rate and noise settings.
    pub fn validate_settings(&self) -> Result<(), SynthError> {
        let positive = [
            ("focal_px", self.focal_px),
            ("vehicle_width_m", self.vehicle_width_m),
            ("vehicle_height_m", self.vehicle_height_m),
            ("fps", self.fps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SynthError::InvalidScenario(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        let non_negative = [
            ("bbox_sigma_px", self.noise.bbox_sigma_px),
            ("depth_sigma", self.noise.depth_sigma),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SynthError::InvalidScenario(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(SynthError::InvalidScenario(
                "image size must be nonzero".into(),
            ));
        }
        Ok(())
    }

    /// Checks settings plus the motion: positive distance throughout, a box
    /// of at least one pixel at the start and one that fits at the end.
    pub fn validate(&self) -> Result<(), SynthError> {
        self.validate_settings()?;
        if !(self.initial_distance_m.is_finite() && self.initial_distance_m > 0.0) {
            return Err(SynthError::InvalidScenario(format!(
                "initial_distance_m must be > 0, got {}",
                self.initial_distance_m
            )));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(SynthError::InvalidScenario(format!(
                "duration_s must be > 0, got {}",
                self.duration_s
            )));
        }
        if !(self.speed_kmh.is_finite() && self.speed_kmh >= 0.0) {
            return Err(SynthError::InvalidScenario(format!(
                "speed_kmh must be >= 0, got {}",
                self.speed_kmh
            )));
        }
        if self.last_frame_index() == 0 {
            return Err(SynthError::InvalidScenario(
                "duration covers less than one frame interval".into(),
            ));
        }
        let end = self.final_distance_m();
        if end <= 0.0 {
            return Err(SynthError::InvalidScenario(format!(
                "vehicle reaches the camera (final distance {end} m)"
            )));
        }
        let (w, h) = self.box_size(end);
        if w > self.image_width as f64 || h > self.image_height as f64 {
            return Err(SynthError::InvalidScenario(format!(
                "final box {w:.1}x{h:.1} px exceeds the {}x{} image",
                self.image_width, self.image_height
            )));
        }
        let (w0, h0) = self.box_size(self.initial_distance_m);
        if w0 < 1.0 || h0 < 1.0 {
            return Err(SynthError::InvalidScenario(format!(
                "initial box {w0:.2}x{h0:.2} px is smaller than one pixel"
            )));
        }
        Ok(())
    }
}

/// Pinhole projection of the vehicle at `time_s`.
pub fn project_vehicle(params: &ScenarioParams, time_s: f64) -> Result<Projection, SynthError> {
    if !(time_s.is_finite() && time_s >= 0.0 && time_s <= params.duration_s * (1.0 + 1e-12)) {
        return Err(SynthError::InvalidScenario(format!(
            "time {time_s} s is outside [0, {}]",
            params.duration_s
        )));
    }
    let distance_m = params.distance_at(time_s);
    if distance_m <= 0.0 {
        return Err(SynthError::Geometry { time_s, distance_m });
    }
    let (w, h) = params.box_size(distance_m);
    let x1 = (params.image_width as f64 - w) / 2.0;
    let y2 = params.image_height as f64;
    Ok(Projection {
        bbox: BBox::new(x1, y2 - h, x1 + w, y2),
        distance_m,
    })
}

/// SplitMix64 finaliser over `parent` and `key`, used to derive independent
/// seeds for scenarios and frames.
pub fn substream_seed(parent: u64, key: u64) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    mix(parent ^ mix(key))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub observation: FrameObservation,
    pub depth: DepthRaster,
    pub mask: MaskRaster,
    pub projection: Projection,
}

/// Renders one frame. Noise for frame `i` comes from its own substream, so
/// any frame can be reproduced without rendering the others.
pub fn render_frame(
    params: &ScenarioParams,
    frame_index: u64,
) -> Result<RenderedFrame, SynthError> {
    let projection = project_vehicle(params, params.frame_time(frame_index))?;
    let (w, h) = (params.image_width, params.image_height);
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(params.rng_seed, frame_index));

    let vehicle = params.depth_mode.encode(projection.distance_m);
    let background = params.depth_mode.encode(2.0 * params.initial_distance_m);
    let mut mask = vec![0u8; w as usize * h as usize];
    if let Some((cols, rows)) = projection.bbox.pixel_span(w, h) {
        for row in rows {
            let start = row as usize * w as usize;
            mask[start + cols.start as usize..start + cols.end as usize].fill(1);
        }
    }
    let depth_noise = (params.noise.depth_sigma > 0.0)
        .then(|| Normal::new(0.0, params.noise.depth_sigma).expect("sigma validated"));
    let depth: Vec<f32> = mask
        .iter()
        .map(|&m| {
            let base = if m == 1 { vehicle } else { background };
            let noise = depth_noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
            (base + noise) as f32
        })
        .collect();

    let mut det_box = projection.bbox;
    if params.noise.bbox_sigma_px > 0.0 {
        let n = Normal::new(0.0, params.noise.bbox_sigma_px).expect("sigma validated");
        let [x1, y1, x2, y2]: [f64; 4] = det_box.into();
        let jitter = [x1, y1, x2, y2].map(|v| v + n.sample(&mut rng));
        det_box = BBox::new(
            jitter[0].min(jitter[2]),
            jitter[1].min(jitter[3]),
            jitter[0].max(jitter[2]),
            jitter[1].max(jitter[3]),
        );
    }

    Ok(RenderedFrame {
        observation: FrameObservation {
            frame_index,
            detections: vec![Detection::new(VEHICLE_CLASS, DETECTION_CONFIDENCE, det_box)],
            depth_path: None,
            mask_path: None,
        },
        depth: DepthRaster::new(w, h, depth)?,
        mask: MaskRaster::new(w, h, mask)?,
        projection,
    })
}

/// Frame indices `0, stride, 2·stride, …` plus the last frame; only the
/// two endpoints when `stride` is `None`.
pub fn keyframes(last_frame: u64, stride: Option<u64>) -> Vec<u64> {
    let step = stride.unwrap_or(last_frame).max(1) as usize;
    let mut frames: Vec<u64> = (0..=last_frame).step_by(step).collect();
    if frames.last() != Some(&last_frame) {
        frames.push(last_frame);
    }
    frames
}

/// Renders the given frames into memory.
pub fn render_sample(
    params: &ScenarioParams,
    frame_indices: &[u64],
) -> Result<(Vec<FrameObservation>, MemoryRasters), SynthError> {
    let mut rasters = MemoryRasters::new();
    let mut frames = Vec::with_capacity(frame_indices.len());
    for &i in frame_indices {
        let f = render_frame(params, i)?;
        rasters.insert(i, f.depth, Some(f.mask));
        frames.push(f.observation);
    }
    Ok((frames, rasters))
}

/// Ranges and fixed camera/vehicle settings for a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub speed_kmh: [f64; 2],
    pub duration_s: [f64; 2],
    pub initial_distance_m: [f64; 2],
    pub focal_px: f64,
    pub vehicle_width_m: f64,
    pub vehicle_height_m: f64,
    pub fps: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub depth_mode: DepthMode,
    pub noise: NoiseParams,
    /// Frames between written keyframes; the last frame is always written.
    /// `None` writes only the first and last frames.
    #[serde(default)]
    pub frame_stride: Option<u64>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            speed_kmh: [5.0, 60.0],
            duration_s: [2.0, 6.0],
            initial_distance_m: [110.0, 150.0],
            focal_px: 1000.0,
            vehicle_width_m: 1.8,
            vehicle_height_m: 1.5,
            fps: 30.0,
            image_width: 640,
            image_height: 480,
            depth_mode: DepthMode::Metric,
            noise: NoiseParams::default(),
            frame_stride: None,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, [lo, hi]) in [
            ("speed_kmh", self.speed_kmh),
            ("duration_s", self.duration_s),
            ("initial_distance_m", self.initial_distance_m),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(SynthError::InvalidScenario(format!(
                    "{name} range [{lo}, {hi}] is not a finite interval"
                )));
            }
        }
        if self.frame_stride == Some(0) {
            return Err(SynthError::InvalidScenario(
                "frame_stride must be >= 1".into(),
            ));
        }
        if self.speed_kmh[0] < 0.0 || self.duration_s[0] <= 0.0 || self.initial_distance_m[0] <= 0.0
        {
            return Err(SynthError::InvalidScenario(
                "speeds must be >= 0 and durations and distances > 0".into(),
            ));
        }
        self.scenario(0.0, 1.0, 1.0, 0).validate_settings()
    }

    fn draw(&self, rng: &mut impl Rng, range: [f64; 2]) -> f64 {
        if range[0] == range[1] {
            range[0]
        } else {
            rng.random_range(range[0]..=range[1])
        }
    }

    /// Builds a scenario from raw draws, snapping duration to whole frames
    /// and distances to the storage grid so that the recorded speed is the
    /// exact speed of the rendered scene.
    pub fn scenario(
        &self,
        speed_kmh: f64,
        duration_s: f64,
        initial_distance_m: f64,
        rng_seed: u64,
    ) -> ScenarioParams {
        let frames = (duration_s * self.fps).round().max(1.0);
        let duration_s = frames / self.fps;
        let snap = |v: f64| (v / DISTANCE_GRID_M).round() * DISTANCE_GRID_M;
        let initial_distance_m = snap(initial_distance_m);
        let travel = snap(speed_kmh / 3.6 * duration_s);
        ScenarioParams {
            focal_px: self.focal_px,
            vehicle_width_m: self.vehicle_width_m,
            vehicle_height_m: self.vehicle_height_m,
            initial_distance_m,
            speed_kmh: 3.6 * travel / duration_s,
            fps: self.fps,
            duration_s,
            image_width: self.image_width,
            image_height: self.image_height,
            depth_mode: self.depth_mode,
            noise: self.noise,
            rng_seed,
        }
    }
}

/// Draws `n` valid scenarios, resampling each up to a bounded number of
/// times.
pub fn sample_scenarios(
    n: usize,
    spec: &DatasetSpec,
    seed: u64,
) -> Result<Vec<ScenarioParams>, SynthError> {
    spec.validate()?;
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, i as u64));
            let mut last_reason = String::new();
            for _ in 0..MAX_ATTEMPTS {
                let speed = spec.draw(&mut rng, spec.speed_kmh);
                let duration = spec.draw(&mut rng, spec.duration_s);
                let distance = spec.draw(&mut rng, spec.initial_distance_m);
                let params = spec.scenario(speed, duration, distance, rng.next_u64());
                match params.validate() {
                    Ok(()) => return Ok(params),
                    Err(e) => last_reason = e.to_string(),
                }
            }
            Err(SynthError::InfeasibleRanges {
                sample_index: i,
                attempts: MAX_ATTEMPTS,
                last_reason,
            })
        })
        .collect()
}

pub fn sample_id(index: usize) -> String {
    format!("synth_{index:05}")
}

#[derive(Serialize)]
struct ScenarioFile<'a> {
    n: usize,
    seed: u64,
    spec: &'a DatasetSpec,
}

fn create_dir(path: &Path) -> Result<(), SynthError> {
    fs::create_dir_all(path).map_err(|source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one scenario's keyframes under `root` and returns its manifest
/// entry.
pub fn write_sample(
    root: &Path,
    sample_id: &str,
    params: &ScenarioParams,
    frame_stride: Option<u64>,
) -> Result<SampleEntry, SynthError> {
    let rel_dir = format!("rasters/{sample_id}");
    create_dir(&root.join(&rel_dir))?;
    let mut frames = Vec::new();
    for index in keyframes(params.last_frame_index(), frame_stride) {
        let rendered = render_frame(params, index)?;
        let depth_rel = format!("{rel_dir}/f{index:06}.depth");
        let mask_rel = format!("{rel_dir}/f{index:06}.mask");
        write_depth_raster(&rendered.depth, root.join(&depth_rel))?;
        write_mask_raster(&rendered.mask, root.join(&mask_rel))?;
        frames.push(FrameObservation {
            depth_path: Some(depth_rel.into()),
            mask_path: Some(mask_rel.into()),
            ..rendered.observation
        });
    }
    Ok(SampleEntry {
        sample_id: sample_id.to_owned(),
        fps: params.fps,
        frames,
        ground_truth_speed_kmh: Some(params.speed_kmh),
        perspective: Perspective::Front,
    })
}

/// Generates `n` labelled samples under `out_dir`: `manifest.json`,
/// `scenario.json` and `rasters/<sample_id>/f<frame>.{depth,mask}`.
pub fn generate_dataset(
    n: usize,
    spec: &DatasetSpec,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest, SynthError> {
    let out_dir = out_dir.as_ref();
    let scenarios = sample_scenarios(n, spec, seed)?;
    create_dir(out_dir)?;

    let samples = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, params)| write_sample(out_dir, &sample_id(i), params, spec.frame_stride))
        .collect::<Result<Vec<_>, _>>()?;

    let mut metadata = spec.depth_mode.metadata();
    metadata
        .provenance
        .insert("generator".into(), "carspeed synth".into());
    metadata.provenance.insert("seed".into(), seed.to_string());
    let manifest = DatasetManifest { metadata, samples };
    write_manifest(&manifest, out_dir.join(MANIFEST_FILE))?;

    let scenario_path = out_dir.join(SCENARIO_FILE);
    let mut text = serde_json::to_string_pretty(&ScenarioFile { n, seed, spec })?;
    text.push('\n');
    fs::write(&scenario_path, text).map_err(|source| SynthError::Io {
        path: scenario_path,
        source,
    })?;
    Ok(manifest)
}
