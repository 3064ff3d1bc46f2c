//! Egocentric column raycaster producing 99x72 luminance frames.

use crate::error::{AlvsError, Result};
use crate::map::{Frame, HEIGHT, WIDTH};

use super::world::{Arena, Pose};

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    /// lens height above the floor, cm
    pub mount_height: f64,
    /// sub-rays per column
    pub oversample: usize,
    /// [1,2,1] optical blur applied in both axes
    pub blur: bool,
    /// image row (continuous, 0 = top edge) the horizon projects to
    pub horizon: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            hfov_deg: 70.0,
            vfov_deg: 48.0,
            mount_height: 1.5,
            oversample: 3,
            blur: true,
            horizon: HEIGHT as f64 / 2.0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return Err(AlvsError::param("camera.hfov", "must lie in (0, 180)"));
        }
        if !(self.vfov_deg > 0.0 && self.vfov_deg < 180.0) {
            return Err(AlvsError::param("camera.vfov", "must lie in (0, 180)"));
        }
        if !(self.mount_height >= 0.0) {
            return Err(AlvsError::param("camera.mount_height", "must be >= 0"));
        }
        if !(self.horizon >= 0.0 && self.horizon <= HEIGHT as f64) {
            return Err(AlvsError::param("camera.horizon", "must lie within the image rows"));
        }
        if self.oversample == 0 {
            return Err(AlvsError::param("camera.oversample", "must be >= 1"));
        }
        Ok(())
    }

    /// Degrees per image column.
    pub fn column_pitch(&self) -> f64 {
        self.hfov_deg / WIDTH as f64
    }

    /// Bearing of the centre of a (fractional) column; column 49 looks straight ahead.
    pub fn column_bearing(&self, c: f64) -> f64 {
        self.column_pitch() * (c - (WIDTH / 2) as f64)
    }

    /// Fractional column a bearing projects onto.
    pub fn bearing_column(&self, bearing: f64) -> f64 {
        bearing / self.column_pitch() + (WIDTH / 2) as f64
    }

    /// Vertical focal length in pixels per unit tangent.
    pub fn focal_y(&self) -> f64 {
        (HEIGHT as f64 / 2.0) / (self.vfov_deg.to_radians() / 2.0).tan()
    }

    pub fn horizon_row(&self) -> f64 {
        self.horizon
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Texture {
    Uniform(u8),
    /// square cells of `cell` cm along the wall and up its height
    Checker { cell: f64, dark: u8, light: u8 },
    /// wrapped once around the perimeter, stretched to the wall height
    Image {
        width: usize,
        height: usize,
        data: Vec<u8>,
    },
}

impl Texture {
    pub fn validate(&self) -> Result<()> {
        match self {
            Texture::Uniform(_) => Ok(()),
            Texture::Checker { cell, .. } if *cell > 0.0 => Ok(()),
            Texture::Checker { .. } => Err(AlvsError::param("arena.checker_cm", "must be > 0")),
            Texture::Image { width, height, data } => {
                if *width == 0 || *height == 0 || data.len() != width * height {
                    Err(AlvsError::param("arena.image", "texture must be at least 1x1"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `u` runs along the perimeter (0..perimeter), `z` is height above the floor.
    pub fn sample(&self, u: f64, z: f64, perimeter: f64, wall_height: f64) -> f64 {
        match self {
            Texture::Uniform(v) => *v as f64,
            Texture::Checker { cell, dark, light } => {
                let i = (u / cell).floor() as i64 + (z / cell).floor() as i64;
                if i.rem_euclid(2) == 0 {
                    *light as f64
                } else {
                    *dark as f64
                }
            }
            Texture::Image { width, height, data } => {
                let col = ((u / perimeter) * *width as f64).floor() as i64;
                let row = ((1.0 - z / wall_height) * *height as f64).floor() as i64;
                let col = col.clamp(0, *width as i64 - 1) as usize;
                let row = row.clamp(0, *height as i64 - 1) as usize;
                data[row * width + col] as f64
            }
        }
    }
}

/// Everything about the arena's appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenery {
    pub wall: Texture,
    pub wall_height: f64,
    pub floor: u8,
    pub sky: u8,
    pub robot_luminance: u8,
    pub robot_height: f64,
}

impl Default for Scenery {
    fn default() -> Self {
        Scenery {
            wall: Texture::Uniform(120),
            wall_height: 8.0,
            floor: 180,
            sky: 235,
            robot_luminance: 30,
            robot_height: 5.0,
        }
    }
}

impl Scenery {
    pub fn validate(&self) -> Result<()> {
        self.wall.validate()?;
        if !(self.wall_height > 0.0) {
            return Err(AlvsError::param("arena.wall_height", "must be > 0"));
        }
        if !(self.robot_height > 0.0) {
            return Err(AlvsError::param("arena.robot_height", "must be > 0"));
        }
        Ok(())
    }
}

/// Distance along the ray to the first crossing of a circle, if any.
fn ray_circle(ox: f64, oy: f64, dx: f64, dy: f64, cx: f64, cy: f64, r: f64) -> Option<f64> {
    let (px, py) = (cx - ox, cy - oy);
    let along = px * dx + py * dy;
    let perp2 = px * px + py * py - along * along;
    if perp2 > r * r {
        return None;
    }
    if px * px + py * py <= r * r {
        // inside the body: it fills the view
        return Some(1e-3);
    }
    let t = along - (r * r - perp2).sqrt();
    (t > 0.0).then_some(t)
}

/// Exit distance through the arena walls and the perimeter coordinate of the hit.
fn ray_wall(arena: &Arena, ox: f64, oy: f64, dx: f64, dy: f64) -> (f64, f64) {
    let (w, h) = (arena.width, arena.height);
    let mut best = (f64::INFINITY, 0.0);
    let mut consider = |t: f64, u: f64| {
        if t > 0.0 && t < best.0 {
            best = (t, u);
        }
    };
    if dy < 0.0 {
        let t = -oy / dy;
        consider(t, (ox + t * dx).clamp(0.0, w));
    }
    if dx > 0.0 {
        let t = (w - ox) / dx;
        consider(t, w + (oy + t * dy).clamp(0.0, h));
    }
    if dy > 0.0 {
        let t = (h - oy) / dy;
        consider(t, w + h + (w - (ox + t * dx)).clamp(0.0, w));
    }
    if dx < 0.0 {
        let t = -ox / dx;
        consider(t, 2.0 * w + h + (h - (oy + t * dy)).clamp(0.0, h));
    }
    if !best.0.is_finite() {
        best = (1e-3, 0.0);
    }
    best
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Renders the view of robot `observer`. Each column averages `oversample`
/// rays; vertical extents are integrated analytically per row.
pub fn render_view(
    arena: &Arena,
    poses: &[Pose],
    diameter: f64,
    observer: usize,
    camera: &CameraModel,
    scenery: &Scenery,
    index: u64,
) -> Frame {
    let me = poses[observer];
    let fy = camera.focal_y();
    let horizon = camera.horizon_row();
    let hc = camera.mount_height;
    let radius = diameter / 2.0;
    let perimeter = arena.perimeter();
    let s = camera.oversample;

    let mut acc = vec![0.0f64; WIDTH * HEIGHT];
    for c in 0..WIDTH {
        for k in 0..s {
            let frac = c as f64 - 0.5 + (k as f64 + 0.5) / s as f64;
            let a = (me.heading + camera.column_bearing(frac)).to_radians();
            let (dx, dy) = (a.cos(), a.sin());

            let (tw, u) = ray_wall(arena, me.x, me.y, dx, dy);
            // nearest body surface decides occlusion; its vertical extent
            // scales with the distance to the body centre
            let mut robot_t = f64::INFINITY;
            let mut centre_d = f64::INFINITY;
            for (j, p) in poses.iter().enumerate() {
                if j == observer {
                    continue;
                }
                if let Some(t) = ray_circle(me.x, me.y, dx, dy, p.x, p.y, radius) {
                    if t < robot_t {
                        robot_t = t;
                        centre_d = me.distance(p).max(1e-3);
                    }
                }
            }
            let robot = (robot_t < tw).then(|| {
                (
                    horizon - fy * (scenery.robot_height - hc) / centre_d,
                    horizon + fy * hc / centre_d,
                )
            });
            let wall_top = horizon - fy * (scenery.wall_height - hc) / tw;
            let wall_bot = horizon + fy * hc / tw;

            for r in 0..HEIGHT {
                let (r0, r1) = (r as f64, r as f64 + 1.0);
                let mut v = 0.0;
                // wall, sky and floor segments with any robot cover removed
                let segment = |s0: f64, s1: f64| -> f64 {
                    let full = overlap(r0, r1, s0, s1);
                    match robot {
                        Some((q0, q1)) => full - overlap(r0, r1, s0.max(q0), s1.min(q1)).min(full),
                        None => full,
                    }
                };
                v += segment(f64::NEG_INFINITY, wall_top) * scenery.sky as f64;
                v += segment(wall_bot, f64::INFINITY) * scenery.floor as f64;
                let wall_cov = segment(wall_top, wall_bot);
                if wall_cov > 0.0 {
                    let m0 = r0.max(wall_top);
                    let m1 = r1.min(wall_bot);
                    let z = hc + (horizon - 0.5 * (m0 + m1)) * tw / fy;
                    v += wall_cov * scenery.wall.sample(u, z, perimeter, scenery.wall_height);
                }
                if let Some((q0, q1)) = robot {
                    v += overlap(r0, r1, q0, q1) * scenery.robot_luminance as f64;
                }
                acc[r * WIDTH + c] += v;
            }
        }
    }
    let inv = 1.0 / s as f64;
    acc.iter_mut().for_each(|v| *v *= inv);
    if camera.blur {
        acc = blur121(&acc);
    }
    let data = acc.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    Frame::new(WIDTH, HEIGHT, index, data).expect("sensor-sized buffer")
}

/// Separable [1,2,1]/4 with replicated edges.
fn blur121(src: &[f64]) -> Vec<f64> {
    let (w, h) = (WIDTH, HEIGHT);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let l = src[y * w + x.saturating_sub(1)];
            let r = src[y * w + (x + 1).min(w - 1)];
            tmp[y * w + x] = 0.25 * l + 0.5 * src[y * w + x] + 0.25 * r;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let u = tmp[y.saturating_sub(1) * w + x];
            let d = tmp[(y + 1).min(h - 1) * w + x];
            out[y * w + x] = 0.25 * u + 0.5 * tmp[y * w + x] + 0.25 * d;
        }
    }
    out
}

/// Columns containing at least one pixel at or below `threshold`.
pub fn dark_columns(frame: &Frame, threshold: u8) -> Vec<usize> {
    (0..frame.width())
        .filter(|&x| (0..frame.height()).any(|y| frame.get(x, y) <= threshold))
        .collect()
}

/// Pixel extent (width, height) of the region at or below `threshold`.
pub fn dark_extent(frame: &Frame, threshold: u8) -> Option<(usize, usize)> {
    let cols = dark_columns(frame, threshold);
    let rows: Vec<usize> = (0..frame.height())
        .filter(|&y| (0..frame.width()).any(|x| frame.get(x, y) <= threshold))
        .collect();
    if cols.is_empty() {
        return None;
    }
    Some((
        cols.last().unwrap() - cols[0] + 1,
        rows.last().unwrap() - rows[0] + 1,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arena() -> Arena {
        Arena {
            width: 100.0,
            height: 100.0,
        }
    }

    fn sharp() -> CameraModel {
        CameraModel {
            blur: false,
            ..CameraModel::default()
        }
    }

    #[test]
    fn empty_arena_uniform_wall() {
        let scenery = Scenery {
            wall: Texture::Uniform(200),
            ..Scenery::default()
        };
        let cam = sharp();
        let poses = [Pose::new(50.0, 50.0, 0.0)];
        let f = render_view(&arena(), &poses, 4.0, 0, &cam, &scenery, 0);
        // 50 cm to the wall: its band is fully inside the image
        let fy = cam.focal_y();
        let top = 36.0 - fy * (scenery.wall_height - cam.mount_height) / 50.0;
        let bot = 36.0 + fy * cam.mount_height / 50.0;
        for y in 0..HEIGHT {
            let (y0, y1) = (y as f64, y as f64 + 1.0);
            let v = f.get(49, y);
            if y0 >= top && y1 <= bot {
                assert_eq!(v, 200, "row {y}");
            } else if y1 <= top {
                assert_eq!(v, scenery.sky, "row {y}");
            } else if y0 >= bot {
                assert_eq!(v, scenery.floor, "row {y}");
            }
        }
        // no occluder anywhere
        assert!(dark_columns(&f, 100).is_empty());
    }

    #[test]
    fn span_doubles_at_half_distance() {
        let cam = sharp();
        let scenery = Scenery::default();
        let extent = |d: f64| {
            let poses = [Pose::new(20.0, 50.0, 0.0), Pose::new(20.0 + d, 50.0, 0.0)];
            let f = render_view(&arena(), &poses, 4.0, 0, &cam, &scenery, 0);
            dark_extent(&f, 80).unwrap()
        };
        for d in [30.0, 40.0, 50.0] {
            let (w1, h1) = extent(d);
            let (w2, h2) = extent(d / 2.0);
            assert!((w2 as i64 - 2 * w1 as i64).abs() <= 1, "width {w1} -> {w2} at {d}");
            assert!((h2 as i64 - 2 * h1 as i64).abs() <= 1, "height {h1} -> {h2} at {d}");
        }
    }

    #[test]
    fn robot_outside_fov_is_invisible() {
        let cam = CameraModel::default();
        let scenery = Scenery::default();
        for bearing in [36.0f64, 40.0, -40.0, 90.0, 180.0] {
            let b = bearing.to_radians();
            let poses = [
                Pose::new(50.0, 50.0, 0.0),
                Pose::new(50.0 + 30.0 * b.cos(), 50.0 + 30.0 * b.sin(), 0.0),
            ];
            let f = render_view(&arena(), &poses, 4.0, 0, &cam, &scenery, 0);
            // robot is small: fully off-screen once its edge clears 35 deg
            if bearing.abs() - (2.0f64 / 30.0).asin().to_degrees() > 35.0 {
                assert!(dark_columns(&f, 80).is_empty(), "bearing {bearing}");
            }
        }
    }

    #[test]
    fn right_bearing_maps_to_higher_columns() {
        let cam = CameraModel::default();
        let poses = [Pose::new(50.0, 50.0, 0.0), Pose::new(80.0, 60.0, 0.0)];
        let f = render_view(&arena(), &poses, 4.0, 0, &cam, &Scenery::default(), 0);
        let cols = dark_columns(&f, 80);
        let mid = (cols[0] + cols[cols.len() - 1]) as f64 / 2.0;
        let expect = cam.bearing_column(poses[0].bearing_to(80.0, 60.0));
        assert!((mid - expect).abs() <= 1.0, "{mid} vs {expect}");
    }

    #[test]
    fn approach_widens_monotonically() {
        let cam = CameraModel::default();
        let scenery = Scenery::default();
        let mut last = 0;
        for i in 0..60 {
            let d = 60.0 - i as f64 * 0.8;
            let poses = [Pose::new(20.0, 50.0, 0.0), Pose::new(20.0 + d, 50.0, 180.0)];
            let f = render_view(&arena(), &poses, 4.0, 0, &cam, &scenery, i);
            let n = dark_columns(&f, 100).len();
            assert!(n >= last, "frame {i}: {n} < {last}");
            last = n;
        }
    }

    #[test]
    fn render_is_deterministic() {
        let cam = CameraModel::default();
        let scenery = Scenery {
            wall: Texture::Checker {
                cell: 4.0,
                dark: 40,
                light: 220,
            },
            ..Scenery::default()
        };
        let poses = [Pose::new(31.0, 47.0, 33.0), Pose::new(60.0, 70.0, 0.0)];
        let a = render_view(&arena(), &poses, 4.0, 0, &cam, &scenery, 3);
        let b = render_view(&arena(), &poses, 4.0, 0, &cam, &scenery, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn perimeter_coordinate_is_continuous() {
        let a = arena();
        let (_, u) = ray_wall(&a, 50.0, 50.0, 1.0, 0.0);
        assert!((u - 150.0).abs() < 1e-9);
        let (_, u) = ray_wall(&a, 50.0, 50.0, 0.0, -1.0);
        assert!((u - 50.0).abs() < 1e-9);
        let (_, u) = ray_wall(&a, 50.0, 50.0, -1.0, 0.0);
        assert!((u - 350.0).abs() < 1e-9);
    }
}
