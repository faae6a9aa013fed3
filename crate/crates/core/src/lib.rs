//! Vehicle speed estimation from monocular detections and depth maps.
//!
//! A sample is a short clip of one approaching (or receding) vehicle. From
//! its first and last usable frames we extract the elapsed time, the change
//! in bounding-box area and the change in mean depth over the vehicle, and
//! regress the ground-truth speed on polynomial terms of those three values.

pub mod cli;
pub mod features;
pub mod interchange;
pub mod regression;
pub mod synth;
