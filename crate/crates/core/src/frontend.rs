//! Retina and ON/OFF channel stage: frame differencing, half-wave
//! rectification and 3x3 mean smoothing.

use crate::error::{AlvsError, Result};
use crate::map::{Frame, Map};

/// Signed per-pixel luminance change.
pub type DiffMap = Map;

/// ON and OFF channel maps (rectified, optionally smoothed).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub on: Map,
    pub off: Map,
}

impl ChannelPair {
    pub fn zeros(width: usize, height: usize) -> Self {
        ChannelPair {
            on: Map::zeros(width, height),
            off: Map::zeros(width, height),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.on.is_zero() && self.off.is_zero()
    }
}

/// `curr - prev`, pixelwise.
pub fn retina_diff(prev: &Frame, curr: &Frame) -> Result<DiffMap> {
    if prev.width() != curr.width() || prev.height() != curr.height() {
        return Err(AlvsError::DimensionMismatch {
            expected_w: prev.width(),
            expected_h: prev.height(),
            got_w: curr.width(),
            got_h: curr.height(),
        });
    }
    let data = curr
        .data()
        .iter()
        .zip(prev.data())
        .map(|(&c, &p)| c as f64 - p as f64)
        .collect();
    Map::from_vec(curr.width(), curr.height(), data)
}

/// Half-wave rectification: `on = w * max(R, 0)`, `off = max(-R, 0)`.
pub fn rectify(diff: &DiffMap, w: f64) -> ChannelPair {
    ChannelPair {
        on: diff.map(|r| w * r.max(0.0)),
        off: diff.map(|r| (-r).max(0.0)),
    }
}

/// 3x3 mean with zero padding; the divisor is always 9.
pub fn smooth3x3(map: &Map) -> Map {
    let (w, h) = (map.width(), map.height());
    let src = map.data();
    // separable: horizontal 3-sum, then vertical 3-sum
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        let r = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut s = r[x];
            if x > 0 {
                s += r[x - 1];
            }
            if x + 1 < w {
                s += r[x + 1];
            }
            rows[y * w + x] = s;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = rows[y * w + x];
            if y > 0 {
                s += rows[(y - 1) * w + x];
            }
            if y + 1 < h {
                s += rows[(y + 1) * w + x];
            }
            out[y * w + x] = s / 9.0;
        }
    }
    Map::from_vec(w, h, out).expect("dimensions preserved")
}

pub fn smooth_pair(pair: &ChannelPair) -> ChannelPair {
    ChannelPair {
        on: smooth3x3(&pair.on),
        off: smooth3x3(&pair.off),
    }
}
