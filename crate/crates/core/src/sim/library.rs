//! Ready-made scenarios and the measurements taken on their logs.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::visuomotor::wrap_deg;

use super::render::CameraModel;
use super::scenario::{Background, ControllerKind, Leg, RobotConfig, ScenarioConfig};
use super::trial::TrialLog;
use super::world::Pose;

/// Approach angles of the directional sweep, degrees right of the heading.
pub const SWEEP_ANGLES: [f64; 9] = [
    -35.0, -26.25, -17.5, -8.75, 0.0, 8.75, 17.5, 26.25, 35.0,
];

/// Length of an arena trial: two simulated minutes.
pub const ARENA_FRAMES: u64 = 3600;

const WANDER_SPEED: f64 = 10.0;

/// The in-repo `scenarios/` directory.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn observer() -> RobotConfig {
    RobotConfig::observer(Pose::new(20.0, 50.0, 0.0))
}

pub fn approach_head_on() -> ScenarioConfig {
    ScenarioConfig::new(
        "approach_head_on",
        75,
        vec![
            observer(),
            RobotConfig::scripted(Pose::new(80.0, 50.0, 180.0), 30.0, Some(60)),
        ],
    )
}

/// A robot crossing the view 30 cm ahead, left to right.
pub fn translation_pass() -> ScenarioConfig {
    ScenarioConfig::new(
        "translation_pass",
        120,
        vec![
            observer(),
            RobotConfig::scripted(Pose::new(50.0, 10.0, 90.0), 20.0, None),
        ],
    )
}

pub fn receding() -> ScenarioConfig {
    ScenarioConfig::new(
        "receding",
        90,
        vec![
            observer(),
            RobotConfig::scripted(Pose::new(30.0, 50.0, 0.0), 20.0, None),
        ],
    )
}

/// Frames of the fast leg and of the slow final leg of a multi-target run.
pub const DASH_FRAMES: u64 = 60;
pub const CREEP_FRAMES: u64 = 30;

/// Two or three robots dash in, then creep for the final second.
pub fn multi_approach(n: usize) -> ScenarioConfig {
    let (name, bearings, end, creep, dash, dash_frames): (&str, &[f64], f64, f64, f64, u64) =
        match n {
            2 => ("double_approach", &[-20.0, 20.0], 8.0, 8.0, 60.0, DASH_FRAMES),
            _ => ("triple_approach", &[-27.0, 0.0, 27.0], 11.0, 5.0, 60.0, 40),
        };
    let dt = 1.0 / 30.0;
    let o = Pose::new(150.0, 150.0, 0.0);
    let mut robots = vec![RobotConfig::observer(o)];
    for &b in bearings {
        let d0 = end + creep * dt * CREEP_FRAMES as f64 + dash * dt * dash_frames as f64;
        let r = b.to_radians();
        robots.push(RobotConfig::scripted_legs(
            Pose::new(o.x + d0 * r.cos(), o.y + d0 * r.sin(), b + 180.0),
            vec![
                Leg { frames: dash_frames, speed: dash, turn_rate: 0.0 },
                Leg { frames: CREEP_FRAMES, speed: creep, turn_rate: 0.0 },
            ],
        ));
    }
    let mut cfg = ScenarioConfig::new(name, dash_frames + CREEP_FRAMES + 5, robots);
    cfg.arena.width = 300.0;
    cfg.arena.height = 300.0;
    cfg
}

/// Pose of a robot `dist` away at `bearing` from `me` that, driving
/// straight at `speed`, meets `me` moving ahead at `me_speed`.
pub fn collision_course(me: Pose, me_speed: f64, bearing: f64, dist: f64, speed: f64) -> Pose {
    let a = (me.heading + bearing).to_radians();
    let h = me.heading.to_radians();
    let (ux, uy) = (a.cos(), a.sin());
    let (vx, vy) = (me_speed * h.cos(), me_speed * h.sin());
    let dot = vx * ux + vy * uy;
    let k = dot + (dot * dot - me_speed * me_speed + speed * speed).max(0.0).sqrt();
    let heading = (vy - k * uy).atan2(vx - k * ux).to_degrees();
    Pose::new(me.x + dist * ux, me.y + dist * uy, heading)
}

fn evader() -> Pose {
    Pose::new(40.0, 100.0, 0.0)
}

fn open_arena(cfg: &mut ScenarioConfig) {
    cfg.arena.width = 200.0;
    cfg.arena.height = 200.0;
}

/// A free-running ALVS robot and one threat on a collision course from
/// `angle` degrees.
pub fn sweep_angle(angle: f64) -> ScenarioConfig {
    let me = evader();
    let threat = collision_course(me, WANDER_SPEED, angle, 40.0, 30.0);
    let mut cfg = ScenarioConfig::new(
        &format!("sweep_{angle:+06.2}"),
        150,
        vec![
            RobotConfig::alvs(Some(me)),
            RobotConfig::scripted(threat, 30.0, None),
        ],
    );
    open_arena(&mut cfg);
    cfg
}

pub fn sweep() -> Vec<ScenarioConfig> {
    SWEEP_ANGLES.iter().map(|&a| sweep_angle(a)).collect()
}

/// Two threats from opposite sides, equally far, one twice as fast. The
/// side and the angles come from `seed`. Robot 1 is the fast one.
pub fn dual_threat(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let fast_angle = side * rng.random_range(10.0..30.0);
    let slow_angle = -side * rng.random_range(10.0..30.0);
    let me = Pose::new(30.0, 100.0, 0.0);
    let mut cfg = ScenarioConfig::new(
        "dual_threat",
        150,
        vec![
            RobotConfig::alvs(Some(me)),
            RobotConfig::scripted(collision_course(me, WANDER_SPEED, fast_angle, 40.0, 30.0), 30.0, None),
            RobotConfig::scripted(collision_course(me, WANDER_SPEED, slow_angle, 40.0, 15.0), 15.0, None),
        ],
    );
    cfg.seed = seed;
    open_arena(&mut cfg);
    cfg
}

pub fn background_name(bg: Background) -> &'static str {
    match bg {
        Background::Uniform => "uniform",
        Background::Checker => "checker",
        Background::Image => "image",
    }
}

/// Three robots with the same controller at seeded poses in the default
/// arena. `controller` is either ALVS or the blind baseline.
pub fn arena_trial(bg: Background, controller: ControllerKind, seed: u64) -> ScenarioConfig {
    let robot = match controller {
        ControllerKind::BlindWander => RobotConfig::blind_wander(None),
        _ => RobotConfig::alvs(None),
    };
    let suffix = if controller == ControllerKind::BlindWander { "_blind" } else { "" };
    let mut cfg = ScenarioConfig::new(
        &format!("arena_{}{suffix}", background_name(bg)),
        ARENA_FRAMES,
        vec![robot; 3],
    );
    cfg.seed = seed;
    cfg.arena.background = bg;
    if bg == Background::Image {
        cfg.arena.image = Some("textures/foliage.pgm".into());
        cfg.base_dir = Some(bundled_dir());
    }
    cfg
}

/// Every scenario shipped under `scenarios/`, keyed by file stem.
pub fn bundled() -> Vec<ScenarioConfig> {
    let mut v = vec![
        approach_head_on(),
        translation_pass(),
        receding(),
        multi_approach(2),
        multi_approach(3),
    ];
    v.extend(sweep());
    v.push(dual_threat(0));
    for bg in [Background::Uniform, Background::Checker, Background::Image] {
        v.push(arena_trial(bg, ControllerKind::Alvs, 1));
        v.push(arena_trial(bg, ControllerKind::BlindWander, 1));
    }
    v
}

/// Per-frame gating of `robot` up to (not including) the first contact
/// between it and `other`.
pub fn gated_until_contact(log: &TrialLog, robot: usize, other: usize) -> Vec<bool> {
    let mut out = Vec::new();
    for f in &log.frames {
        let (a, b) = (f.robots[robot].pose, f.robots[other].pose);
        if a.distance(&b) < log.scenario.arena.diameter {
            break;
        }
        if let Some(p) = &f.robots[robot].perception {
            out.push(p.gated_count() > 0);
        }
    }
    out
}

/// Fraction of `robot`'s frames with at least one gated field.
pub fn gated_fraction(log: &TrialLog, robot: usize) -> f64 {
    let (mut n, mut g) = (0usize, 0usize);
    for (_, p) in log.perception(robot) {
        n += 1;
        g += usize::from(p.gated_count() > 0);
    }
    if n == 0 {
        0.0
    } else {
        g as f64 / n as f64
    }
}

/// Image position of the visible part of a robot, or `None` if it is out
/// of view.
pub fn target_center(
    camera: &CameraModel,
    robot_height: f64,
    diameter: f64,
    from: Pose,
    target: Pose,
) -> Option<(f64, f64)> {
    let d = from.distance(&target);
    let b = from.bearing_to(target.x, target.y);
    let half = ((diameter / 2.0) / d.max(diameter / 2.0)).asin().to_degrees();
    let c0 = camera.bearing_column(b - half).max(-0.5);
    let c1 = camera.bearing_column(b + half).min(98.5);
    if c0 >= c1 {
        return None;
    }
    let fy = camera.focal_y();
    let top = camera.horizon - fy * (robot_height - camera.mount_height) / d;
    let bottom = camera.horizon + fy * camera.mount_height / d;
    Some(((c0 + c1) / 2.0, (top.max(-0.5) + bottom.min(71.5)) / 2.0))
}

/// Multi-target tracking quality over the last `window` frames before
/// `end`: a frame counts when `robot` holds exactly one gated field per
/// target and every gated field sits within `tol` pixels of some target.
pub fn multi_target_frames(
    log: &TrialLog,
    robot: usize,
    targets: &[usize],
    end: u64,
    window: u64,
    tol: f64,
) -> (usize, usize) {
    let cfg = &log.scenario;
    let camera = cfg.camera_model();
    let start = end.saturating_sub(window);
    let mut good = 0;
    let mut total = 0;
    for f in &log.frames[start as usize..(end as usize).min(log.frames.len())] {
        let Some(p) = &f.robots[robot].perception else {
            continue;
        };
        total += 1;
        let me = f.robots[robot].pose;
        let centers: Vec<(f64, f64)> = targets
            .iter()
            .filter_map(|&t| {
                target_center(&camera, cfg.arena.robot_height, cfg.arena.diameter, me, f.robots[t].pose)
            })
            .collect();
        let gated: Vec<_> = p.fields.iter().filter(|r| r.response.gated).collect();
        let placed = gated.iter().all(|r| {
            centers
                .iter()
                .any(|c| (r.cx - c.0).abs() <= tol && (r.cy - c.1).abs() <= tol)
        });
        if gated.len() == targets.len() && placed {
            good += 1;
        }
    }
    (good, total)
}

/// How an ALVS robot turned away from a threat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeOutcome {
    /// first frame outside Wander
    pub trigger_frame: u64,
    /// world direction from the robot to the threat at the trigger frame
    pub threat_bearing: f64,
    /// world heading when the escape run starts
    pub escape_heading: f64,
    /// escape heading minus the direction straight away from the threat
    pub error: f64,
}

pub fn escape_outcome(log: &TrialLog, robot: usize, threat: usize) -> Option<EscapeOutcome> {
    let mut trigger = None;
    for (k, f) in log.frames.iter().enumerate() {
        let p = f.robots[robot].perception.as_ref()?;
        if trigger.is_none() && p.state.is_takeoff() {
            let me = f.robots[robot].pose;
            let t = f.robots[threat].pose;
            trigger = Some((f.frame, me.direction_to(t.x, t.y)));
        }
        if let (Some((frame, bearing)), "escape") = (trigger, p.state.name()) {
            // escape commands no turn, so the heading after this step is the
            // one the run starts with
            let heading = match log.frames.get(k + 1) {
                Some(next) => next.robots[robot].pose.heading,
                None => f.robots[robot].pose.heading,
            };
            return Some(EscapeOutcome {
                trigger_frame: frame,
                threat_bearing: bearing,
                escape_heading: heading,
                error: wrap_deg(heading - (bearing + 180.0)),
            });
        }
    }
    None
}
