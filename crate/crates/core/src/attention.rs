//! Bottom-up attention: saliency, spawning, centroid tracking, fusion and
//! pruning of square attention fields.

use std::collections::VecDeque;

use crate::frontend::ChannelPair;
use crate::map::Map;

/// Smoothed ON + OFF.
pub type SaliencyMap = Map;

pub fn saliency(smoothed: &ChannelPair) -> SaliencyMap {
    smoothed
        .on
        .zip_with(&smoothed.off, |a, b| a + b)
        .expect("channel maps share dimensions")
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionField {
    pub id: u64,
    pub cx: f64,
    pub cy: f64,
    pub half_side: f64,
    /// Most recent responses, newest last; at most `d` entries.
    pub history: VecDeque<f64>,
    /// Frames since spawn.
    pub age: u32,
}

/// Inclusive pixel bounds of a field's region clipped to the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn is_empty(&self) -> bool {
        self.x0 > self.x1 || self.y0 > self.y1
    }

    pub fn area(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)
        }
    }
}

impl AttentionField {
    pub fn new(id: u64, cx: f64, cy: f64, half_side: f64) -> Self {
        AttentionField {
            id,
            cx,
            cy,
            half_side,
            history: VecDeque::new(),
            age: 0,
        }
    }

    /// Whether a (real-valued) point lies in the square region.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.cx).abs() <= self.half_side && (y - self.cy).abs() <= self.half_side
    }

    pub fn rect(&self, width: usize, height: usize) -> PixelRect {
        let lo = |c: f64| (c - self.half_side).ceil().max(0.0) as usize;
        let hi = |c: f64, n: usize| ((c + self.half_side).floor().max(0.0) as usize).min(n - 1);
        PixelRect {
            x0: lo(self.cx),
            x1: hi(self.cx, width),
            y0: lo(self.cy),
            y1: hi(self.cy, height),
        }
    }

    pub fn last_response(&self) -> f64 {
        self.history.back().copied().unwrap_or(0.0)
    }

    pub fn push_response(&mut self, value: f64, d: usize) {
        self.history.push_back(value);
        while self.history.len() > d {
            self.history.pop_front();
        }
    }

    pub fn mean_response(&self) -> f64 {
        if self.history.is_empty() {
            0.0
        } else {
            self.history.iter().sum::<f64>() / self.history.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldSet {
    pub fields: Vec<AttentionField>,
    pub next_id: u64,
}

impl FieldSet {
    pub fn new() -> Self {
        FieldSet::default()
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn covers(&self, x: f64, y: f64) -> bool {
        self.fields.iter().any(|f| f.contains(x, y))
    }

    pub fn iter(&self) -> impl Iterator<Item = &AttentionField> {
        self.fields.iter()
    }

    /// Advances every field's age by one frame.
    pub fn tick(&mut self) {
        for f in &mut self.fields {
            f.age += 1;
        }
    }
}

/// Picks the strongest uncovered saliency pixel and spawns a field there if
/// it exceeds `t_a`. Ties go to the smallest row-major index. Returns the new
/// field's id.
pub fn spawn(fields: &mut FieldSet, sal: &SaliencyMap, t_a: f64, half_side: f64) -> Option<u64> {
    let w = sal.width();
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in sal.data().iter().enumerate() {
        if best.is_some_and(|(_, b)| v <= b) {
            continue;
        }
        let (x, y) = ((i % w) as f64, (i / w) as f64);
        if !fields.covers(x, y) {
            best = Some((i, v));
        }
    }
    let (i, v) = best?;
    if v <= t_a {
        return None;
    }
    let id = fields.next_id;
    fields.next_id += 1;
    fields.fields.push(AttentionField::new(
        id,
        (i % w) as f64,
        (i / w) as f64,
        half_side,
    ));
    Some(id)
}

/// Moves every centroid to the saliency-weighted mean position over its
/// clipped region. Zero-mass fields stay put.
pub fn update_centroids(fields: &mut FieldSet, sal: &SaliencyMap) {
    let (w, h) = (sal.width(), sal.height());
    for f in &mut fields.fields {
        let r = f.rect(w, h);
        if r.is_empty() {
            continue;
        }
        let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                let v = sal.get(x, y);
                m += v;
                mx += x as f64 * v;
                my += y as f64 * v;
            }
        }
        if m > 0.0 {
            f.cx = mx / m;
            f.cy = my / m;
        }
    }
}

/// Removes fields whose centroid lies inside an older surviving field.
/// Returns the removed ids.
pub fn fuse(fields: &mut FieldSet) -> Vec<u64> {
    fields.fields.sort_by_key(|f| f.id);
    let mut kept: Vec<AttentionField> = Vec::with_capacity(fields.len());
    let mut removed = Vec::new();
    for f in fields.fields.drain(..) {
        if kept.iter().any(|k| k.contains(f.cx, f.cy)) {
            removed.push(f.id);
        } else {
            kept.push(f);
        }
    }
    fields.fields = kept;
    removed
}

/// Drops fields at least `d` frames old whose mean response is below `t_d`,
/// keeping the best one if all would go. Returns the removed ids.
pub fn prune(fields: &mut FieldSet, t_d: f64, d: usize) -> Vec<u64> {
    let doomed = |f: &AttentionField| f.age as usize >= d && f.mean_response() < t_d;
    if fields.fields.is_empty() {
        return Vec::new();
    }
    let survivors = fields.fields.iter().filter(|f| !doomed(f)).count();
    let rescue = if survivors == 0 {
        // highest recent mean, oldest on ties
        fields
            .fields
            .iter()
            .fold(None::<&AttentionField>, |best, f| match best {
                Some(b) if b.mean_response() >= f.mean_response() => Some(b),
                _ => Some(f),
            })
            .map(|f| f.id)
    } else {
        None
    };
    let mut removed = Vec::new();
    fields.fields.retain(|f| {
        let keep = !doomed(f) || Some(f.id) == rescue;
        if !keep {
            removed.push(f.id);
        }
        keep
    });
    removed
}
