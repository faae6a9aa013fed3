//! Binary depth and mask rasters.
//!
//! Both formats share a 13-byte header: a 4-byte magic, a version byte and
//! the width and height as little-endian `u32`. The payload follows in
//! row-major order with a top-left origin:
//!
//! ```text
//! DPTH 0x01 <width:u32 LE> <height:u32 LE> <width*height x f32 LE>
//! MASK 0x01 <width:u32 LE> <height:u32 LE> <width*height x u8 in {0,1}>
//! ```

use std::fs;
use std::path::Path;

use super::InterchangeError;

pub const DEPTH_MAGIC: [u8; 4] = *b"DPTH";
pub const MASK_MAGIC: [u8; 4] = *b"MASK";
pub const FORMAT_VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 13;

/// Per-pixel depth estimates for one frame.
///
/// Units and ordering convention are declared once per dataset in the
/// manifest metadata, not per raster.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f32>,
}

/// Binary vehicle mask, 1 for vehicle pixels and 0 for background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskRaster {
    pub width: u32,
    pub height: u32,
    pub values: Vec<u8>,
}

fn check_dims(width: u32, height: u32, len: usize) -> Result<(), InterchangeError> {
    if width == 0 || height == 0 {
        return Err(InterchangeError::InvalidDimensions { width, height });
    }
    let expected = width as u64 * height as u64;
    if expected != len as u64 {
        return Err(InterchangeError::LengthMismatch {
            expected,
            actual: len as u64,
        });
    }
    Ok(())
}

impl DepthRaster {
    pub fn new(width: u32, height: u32, values: Vec<f32>) -> Result<Self, InterchangeError> {
        let raster = Self {
            width,
            height,
            values,
        };
        raster.validate()?;
        Ok(raster)
    }

    /// Constant-valued raster.
    pub fn filled(width: u32, height: u32, value: f32) -> Result<Self, InterchangeError> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn validate(&self) -> Result<(), InterchangeError> {
        check_dims(self.width, self.height, self.values.len())?;
        if let Some(index) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(InterchangeError::NonFiniteValue { index });
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, col: u32, row: u32) -> f32 {
        self.values[row as usize * self.width as usize + col as usize]
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, InterchangeError> {
        self.validate()?;
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        write_header(&mut out, DEPTH_MAGIC, self.width, self.height);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, InterchangeError> {
        let (width, height, payload) = read_header(bytes, DEPTH_MAGIC, 4)?;
        let values: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(InterchangeError::NonFiniteValue { index });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }
}

impl MaskRaster {
    pub fn new(width: u32, height: u32, values: Vec<u8>) -> Result<Self, InterchangeError> {
        let mask = Self {
            width,
            height,
            values,
        };
        mask.validate()?;
        Ok(mask)
    }

    pub fn validate(&self) -> Result<(), InterchangeError> {
        check_dims(self.width, self.height, self.values.len())?;
        if let Some(index) = self.values.iter().position(|&v| v > 1) {
            return Err(InterchangeError::MaskValue {
                index,
                value: self.values[index],
            });
        }
        Ok(())
    }

    pub fn vehicle_pixels(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, InterchangeError> {
        self.validate()?;
        let mut out = Vec::with_capacity(HEADER_LEN + self.values.len());
        write_header(&mut out, MASK_MAGIC, self.width, self.height);
        out.extend_from_slice(&self.values);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, InterchangeError> {
        let (width, height, payload) = read_header(bytes, MASK_MAGIC, 1)?;
        if let Some(index) = payload.iter().position(|&v| v > 1) {
            return Err(InterchangeError::MaskValue {
                index,
                value: payload[index],
            });
        }
        Ok(Self {
            width,
            height,
            values: payload.to_vec(),
        })
    }
}

fn write_header(out: &mut Vec<u8>, magic: [u8; 4], width: u32, height: u32) {
    out.extend_from_slice(&magic);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
}

/// Validates the header and returns `(width, height, payload)` with the
/// payload length already checked against the declared dimensions.
fn read_header(
    bytes: &[u8],
    magic: [u8; 4],
    elem_size: usize,
) -> Result<(u32, u32, &[u8]), InterchangeError> {
    if bytes.len() < 4 || bytes[..4] != magic {
        let found = bytes[..bytes.len().min(4)].to_vec();
        return Err(InterchangeError::BadMagic {
            expected: magic,
            found,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(InterchangeError::Truncated {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(InterchangeError::UnsupportedVersion(bytes[4]));
    }
    let width = u32::from_le_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]);
    let height = u32::from_le_bytes([bytes[9], bytes[10], bytes[11], bytes[12]]);
    if width == 0 || height == 0 {
        return Err(InterchangeError::InvalidDimensions { width, height });
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = width as u64 * height as u64 * elem_size as u64;
    let actual = payload.len() as u64;
    if actual < expected {
        return Err(InterchangeError::Truncated {
            expected: HEADER_LEN as u64 + expected,
            actual: HEADER_LEN as u64 + actual,
        });
    }
    if actual > expected {
        return Err(InterchangeError::TrailingBytes {
            extra: actual - expected,
        });
    }
    Ok((width, height, payload))
}

fn read_file(path: &Path) -> Result<Vec<u8>, InterchangeError> {
    fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            InterchangeError::MissingFile(path.to_path_buf())
        } else {
            InterchangeError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), InterchangeError> {
    fs::write(path, bytes).map_err(|source| InterchangeError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_depth_raster(path: impl AsRef<Path>) -> Result<DepthRaster, InterchangeError> {
    DepthRaster::from_bytes(&read_file(path.as_ref())?)
}

/// Writes `raster`, rejecting invalid rasters before touching the file.
pub fn write_depth_raster(
    raster: &DepthRaster,
    path: impl AsRef<Path>,
) -> Result<(), InterchangeError> {
    write_file(path.as_ref(), &raster.to_bytes()?)
}

pub fn read_mask_raster(path: impl AsRef<Path>) -> Result<MaskRaster, InterchangeError> {
    MaskRaster::from_bytes(&read_file(path.as_ref())?)
}

pub fn write_mask_raster(
    mask: &MaskRaster,
    path: impl AsRef<Path>,
) -> Result<(), InterchangeError> {
    write_file(path.as_ref(), &mask.to_bytes()?)
}
