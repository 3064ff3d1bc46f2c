//! Direction-selective local motion from Hassenstein-Reichardt
//! correlation of current and delayed ON/OFF channels.

use std::collections::VecDeque;

use crate::frontend::ChannelPair;
use crate::map::Map;
use crate::params::{HrcForm, Precision};

/// Preferred motion direction in image coordinates (y grows downward).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Right,
    Left,
    Down,
    Up,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Right,
        Direction::Left,
        Direction::Down,
        Direction::Up,
    ];

    /// Unit pixel offset towards the correlation partner.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::Right => (1, 0),
            Direction::Left => (-1, 0),
            Direction::Down => (0, 1),
            Direction::Up => (0, -1),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Direction::Right => "r",
            Direction::Left => "l",
            Direction::Down => "d",
            Direction::Up => "u",
        }
    }
}

/// Correlates one channel along `dir`, summing `n` partners spaced `s`
/// pixels apart. Partners outside the map contribute zero.
pub fn hrc_channel(
    now: &Map,
    delayed: &Map,
    dir: Direction,
    n: usize,
    s: usize,
    form: HrcForm,
) -> Map {
    debug_assert!(now.same_dims(delayed));
    let (w, h) = (now.width() as isize, now.height() as isize);
    let (dx, dy) = dir.offset();
    let nd = now.data();
    let dd = delayed.data();
    let mut out = vec![0.0; nd.len()];
    for c in 1..=n as isize {
        let ox = dx * c * s as isize;
        let oy = dy * c * s as isize;
        // rows/cols whose partner stays inside the map
        let x0 = 0.max(-ox);
        let x1 = w.min(w - ox);
        let y0 = 0.max(-oy);
        let y1 = h.min(h - oy);
        for y in y0..y1 {
            for x in x0..x1 {
                let i = (y * w + x) as usize;
                let j = ((y + oy) * w + (x + ox)) as usize;
                out[i] += match form {
                    HrcForm::Opponent => dd[i] * nd[j] - nd[i] * dd[j],
                    HrcForm::Printed => dd[i] * nd[j] - nd[i] * nd[j],
                };
            }
        }
    }
    Map::from_vec(now.width(), now.height(), out).expect("dimensions preserved")
}

/// Four direction-selective maps.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionMaps {
    pub lm_r: Map,
    pub lm_l: Map,
    pub lm_d: Map,
    pub lm_u: Map,
}

impl MotionMaps {
    pub fn zeros(width: usize, height: usize) -> Self {
        MotionMaps {
            lm_r: Map::zeros(width, height),
            lm_l: Map::zeros(width, height),
            lm_d: Map::zeros(width, height),
            lm_u: Map::zeros(width, height),
        }
    }

    pub fn get(&self, dir: Direction) -> &Map {
        match dir {
            Direction::Right => &self.lm_r,
            Direction::Left => &self.lm_l,
            Direction::Down => &self.lm_d,
            Direction::Up => &self.lm_u,
        }
    }

    pub fn is_zero(&self) -> bool {
        Direction::ALL.iter().all(|d| self.get(*d).is_zero())
    }

    pub fn scaled(&self, k: f64) -> MotionMaps {
        MotionMaps {
            lm_r: self.lm_r.map(|v| v * k),
            lm_l: self.lm_l.map(|v| v * k),
            lm_d: self.lm_d.map(|v| v * k),
            lm_u: self.lm_u.map(|v| v * k),
        }
    }
}

/// Per-direction correlator outputs for one channel, ordered as
/// [`Direction::ALL`].
pub type DirectionalMaps = [Map; 4];

pub fn hrc_all(now: &Map, delayed: &Map, n: usize, s: usize, form: HrcForm) -> DirectionalMaps {
    Direction::ALL.map(|d| hrc_channel(now, delayed, d, n, s, form))
}

/// ON (T4) and OFF (T5) correlator outputs converge by addition.
pub fn local_motion(t4: &DirectionalMaps, t5: &DirectionalMaps) -> MotionMaps {
    let add = |a: &Map, b: &Map| a.zip_with(b, |p, q| p + q).expect("same dimensions");
    MotionMaps {
        lm_r: add(&t4[0], &t5[0]),
        lm_l: add(&t4[1], &t5[1]),
        lm_d: add(&t4[2], &t5[2]),
        lm_u: add(&t4[3], &t5[3]),
    }
}

/// Full motion stage for one pair of (current, delayed) channels.
pub fn motion_maps(
    now: &ChannelPair,
    delayed: &ChannelPair,
    n: usize,
    s: usize,
    form: HrcForm,
) -> MotionMaps {
    let t4 = hrc_all(&now.on, &delayed.on, n, s, form);
    let t5 = hrc_all(&now.off, &delayed.off, n, s, form);
    local_motion(&t4, &t5)
}

/// Fractional bits of the compact channel representation.
const FIXED_SHIFT: f64 = 256.0;

#[derive(Debug, Clone, PartialEq)]
enum StoredPair {
    Float(ChannelPair),
    Compact {
        width: usize,
        height: usize,
        on: Vec<u16>,
        off: Vec<u16>,
    },
}

fn to_fixed(v: f64) -> u16 {
    (v * FIXED_SHIFT).round().clamp(0.0, u16::MAX as f64) as u16
}

impl StoredPair {
    fn store(pair: &ChannelPair, precision: Precision) -> Self {
        match precision {
            Precision::Float => StoredPair::Float(pair.clone()),
            Precision::Compact => StoredPair::Compact {
                width: pair.on.width(),
                height: pair.on.height(),
                on: pair.on.data().iter().map(|&v| to_fixed(v)).collect(),
                off: pair.off.data().iter().map(|&v| to_fixed(v)).collect(),
            },
        }
    }

    fn load(&self) -> ChannelPair {
        match self {
            StoredPair::Float(p) => p.clone(),
            StoredPair::Compact {
                width,
                height,
                on,
                off,
            } => {
                let conv = |v: &[u16]| {
                    Map::from_vec(
                        *width,
                        *height,
                        v.iter().map(|&q| q as f64 / FIXED_SHIFT).collect(),
                    )
                    .expect("stored dimensions")
                };
                ChannelPair {
                    on: conv(on),
                    off: conv(off),
                }
            }
        }
    }
}

/// Ring of the last `c_d` unsmoothed channel pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    capacity: usize,
    precision: Precision,
    ring: VecDeque<StoredPair>,
}

impl DelayLine {
    pub fn new(c_d: usize, precision: Precision) -> Self {
        DelayLine {
            capacity: c_d.max(1),
            precision,
            ring: VecDeque::with_capacity(c_d.max(1)),
        }
    }

    pub fn is_warm(&self) -> bool {
        self.ring.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// The pair exactly `c_d` frames old, once warmed up.
    pub fn delayed(&self) -> Option<ChannelPair> {
        if self.is_warm() {
            self.ring.front().map(StoredPair::load)
        } else {
            None
        }
    }

    pub fn push(&mut self, pair: &ChannelPair) {
        if self.ring.len() == self.capacity {
            self.ring.pop_front();
        }
        self.ring.push_back(StoredPair::store(pair, self.precision));
    }

    /// Bytes held by a fully warmed line of `width x height` pairs.
    pub fn storage_bytes(&self, width: usize, height: usize) -> usize {
        let elem = match self.precision {
            Precision::Float => std::mem::size_of::<f64>(),
            Precision::Compact => std::mem::size_of::<u16>(),
        };
        self.capacity * 2 * width * height * elem
    }
}
