//! Binary portable graymap (P5) input and output.
//!
//! Frames read from disk must be exactly 99 wide, 72 high, maxval 255.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{AlvsError, Result};
use crate::map::{Frame, Map, HEIGHT, WIDTH};

/// Parses a P5 image of any size with maxval 255.
pub fn decode(bytes: &[u8]) -> Result<Frame> {
    let mut pos = 0usize;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // whitespace and comments between header tokens
        while pos < bytes.len() {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(AlvsError::Pgm("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(AlvsError::Pgm(format!("magic `{}` is not P5", fields[0])));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| AlvsError::Pgm(format!("bad {what} `{s}`")))
    };
    let width = parse(&fields[1], "width")?;
    let height = parse(&fields[2], "height")?;
    let maxval = parse(&fields[3], "maxval")?;
    if maxval != 255 {
        return Err(AlvsError::Pgm(format!("maxval {maxval} (must be 255)")));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    let n = width * height;
    if width == 0 || height == 0 || bytes.len() < pos + n {
        return Err(AlvsError::Pgm(format!(
            "raster holds {} bytes, need {}",
            bytes.len().saturating_sub(pos),
            n
        )));
    }
    Frame::new(width, height, 0, bytes[pos..pos + n].to_vec())
}

/// Reads a sensor frame; anything other than 99x72 is rejected.
pub fn read_frame(path: &Path, index: u64) -> Result<Frame> {
    let bytes = fs::read(path)?;
    let mut frame = decode(&bytes)?;
    if !frame.is_sensor_sized() {
        return Err(AlvsError::DimensionMismatch {
            expected_w: WIDTH,
            expected_h: HEIGHT,
            got_w: frame.width(),
            got_h: frame.height(),
        });
    }
    frame.set_index(index);
    Ok(frame)
}

pub fn encode(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.data());
    out
}

pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(frame))?;
    Ok(())
}

/// Affine map from real values to `[0, 255]` used for debug dumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescale {
    pub min: f64,
    pub max: f64,
}

impl Rescale {
    pub fn of(map: &Map) -> Self {
        let (min, max) = map
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if min.is_finite() {
            Rescale { min, max }
        } else {
            Rescale { min: 0.0, max: 0.0 }
        }
    }

    pub fn apply(&self, v: f64) -> u8 {
        if self.max <= self.min {
            return 0;
        }
        ((v - self.min) / (self.max - self.min) * 255.0)
            .round()
            .clamp(0.0, 255.0) as u8
    }
}

/// Writes `map` rescaled to 8 bits, plus a `<path>.txt` sidecar holding the
/// affine parameters (`min max`). A constant map is written as all zeros.
pub fn write_map(path: &Path, map: &Map) -> Result<Rescale> {
    let scale = Rescale::of(map);
    let data = map.data().iter().map(|&v| scale.apply(v)).collect();
    let frame = Frame::new(map.width(), map.height(), 0, data)?;
    write_frame(path, &frame)?;
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".txt");
    fs::write(
        Path::new(&sidecar),
        format!("min {}\nmax {}\n", scale.min, scale.max),
    )?;
    Ok(scale)
}
