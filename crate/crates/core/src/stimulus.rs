//! Synthetic two-dimensional stimuli rendered straight into sensor frames:
//! looming and receding discs, translating bars, static textures.

use crate::map::{Frame, HEIGHT, WIDTH};

const SUB: usize = 4;

/// Frame with a dark disc of radius `r` (pixels) on a uniform background,
/// with 4x4 supersampled edges.
pub fn disc_frame(index: u64, cx: f64, cy: f64, r: f64, disc: u8, bg: u8) -> Frame {
    let mut f = Frame::filled(WIDTH, HEIGHT, index, bg);
    let r2 = r * r;
    let x0 = ((cx - r - 1.0).floor().max(0.0)) as usize;
    let x1 = ((cx + r + 1.0).ceil().min(WIDTH as f64 - 1.0)).max(0.0) as usize;
    let y0 = ((cy - r - 1.0).floor().max(0.0)) as usize;
    let y1 = ((cy + r + 1.0).ceil().min(HEIGHT as f64 - 1.0)).max(0.0) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let mut inside = 0usize;
            for sy in 0..SUB {
                for sx in 0..SUB {
                    let px = x as f64 + (sx as f64 + 0.5) / SUB as f64 - 0.5;
                    let py = y as f64 + (sy as f64 + 0.5) / SUB as f64 - 0.5;
                    if (px - cx).powi(2) + (py - cy).powi(2) <= r2 {
                        inside += 1;
                    }
                }
            }
            let cover = inside as f64 / (SUB * SUB) as f64;
            let v = bg as f64 + cover * (disc as f64 - bg as f64);
            f.set(x, y, v.round() as u8);
        }
    }
    f
}

/// Disc approaching at constant speed: angular radius follows `1/distance`
/// between `r_start` and `r_end`.
pub fn looming_disc(
    frames: usize,
    cx: f64,
    cy: f64,
    r_start: f64,
    r_end: f64,
    disc: u8,
    bg: u8,
) -> Vec<Frame> {
    // distance falls linearly, so 1/r is linear in time
    let (a, b) = (1.0 / r_start, 1.0 / r_end);
    (0..frames)
        .map(|i| {
            let t = if frames > 1 {
                i as f64 / (frames - 1) as f64
            } else {
                1.0
            };
            let r = 1.0 / (a + (b - a) * t);
            disc_frame(i as u64, cx, cy, r, disc, bg)
        })
        .collect()
}

/// Disc shrinking from `r_start` to `r_end`, as an object moving away at
/// constant speed.
pub fn receding_disc(
    frames: usize,
    cx: f64,
    cy: f64,
    r_start: f64,
    r_end: f64,
    disc: u8,
    bg: u8,
) -> Vec<Frame> {
    looming_disc(frames, cx, cy, r_start, r_end, disc, bg)
}

/// Vertical dark bar of `width` pixels spanning rows `y0..y1`, moving
/// `speed` pixels per frame from `x_start`.
pub fn translating_bar(
    frames: usize,
    x_start: f64,
    speed: f64,
    width: f64,
    rows: (usize, usize),
    bar: u8,
    bg: u8,
) -> Vec<Frame> {
    (0..frames)
        .map(|i| {
            let left = x_start + speed * i as f64;
            let right = left + width;
            let mut f = Frame::filled(WIDTH, HEIGHT, i as u64, bg);
            for x in 0..WIDTH {
                let (px0, px1) = (x as f64 - 0.5, x as f64 + 0.5);
                let cover = (px1.min(right) - px0.max(left)).clamp(0.0, 1.0);
                if cover > 0.0 {
                    let v = (bg as f64 + cover * (bar as f64 - bg as f64)).round() as u8;
                    for y in rows.0..rows.1.min(HEIGHT) {
                        f.set(x, y, v);
                    }
                }
            }
            f
        })
        .collect()
}

pub fn checkerboard(index: u64, cell: usize, a: u8, b: u8) -> Frame {
    let mut f = Frame::filled(WIDTH, HEIGHT, index, a);
    for y in 0..HEIGHT {
        for x in 0..WIDTH {
            if ((x / cell) + (y / cell)) % 2 == 1 {
                f.set(x, y, b);
            }
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn receding_disc_shrinks() {
        let dark = |f: &Frame| f.data().iter().filter(|&&v| v < 100).count();
        let v = receding_disc(10, 49.0, 36.0, 30.0, 3.0, 20, 200);
        assert!(v.windows(2).all(|w| dark(&w[1]) <= dark(&w[0])));
        assert!(dark(&v[0]) > 10 * dark(&v[9]));
        assert_eq!(v[9].index(), 9);
    }

    #[test]
    fn disc_area_tracks_radius() {
        let f = disc_frame(0, 49.0, 36.0, 10.0, 0, 255);
        let dark: f64 = f.data().iter().map(|&v| (255 - v) as f64 / 255.0).sum();
        let area = std::f64::consts::PI * 100.0;
        assert!((dark - area).abs() / area < 0.02);
    }

    #[test]
    fn looming_radius_grows_monotonically() {
        let frames = looming_disc(10, 49.0, 36.0, 2.0, 20.0, 30, 200);
        let dark: Vec<usize> = frames
            .iter()
            .map(|f| f.data().iter().filter(|&&v| v < 115).count())
            .collect();
        assert!(dark.windows(2).all(|w| w[0] <= w[1]));
        assert!(dark[9] > dark[0]);
    }

    #[test]
    fn bar_moves_by_speed() {
        let frames = translating_bar(3, 10.0, 2.0, 5.0, (20, 40), 0, 200);
        let first_dark = |f: &Frame| (0..WIDTH).find(|&x| f.get(x, 30) < 100).unwrap();
        assert_eq!(first_dark(&frames[1]) - first_dark(&frames[0]), 2);
    }
}
