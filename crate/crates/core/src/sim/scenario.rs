//! Scenario files: TOML with `[arena]`, `[camera]`, `[params]` and one
//! `[[robot]]` table per robot.
//!
//! ```toml
//! name = "approach_head_on"
//! frames = 90
//! seed = 1
//! mode = "escape"
//!
//! [arena]
//! background = "checker"
//!
//! [params]
//! t_s = 7000
//!
//! [[robot]]
//! controller = "alvs"
//! x = 50.0
//! y = 50.0
//! heading = 0.0
//! motors = false
//!
//! [[robot]]
//! controller = "scripted"
//! x = 90.0
//! y = 50.0
//! heading = 180.0
//! speed = 20.0
//! stop_frame = 80
//! ```
//!
//! A robot without `x`/`y`/`heading` is placed at a seeded random pose.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AlvsError, Result};
use crate::params::{BehaviorMode, PipelineConfig};
use crate::pgm;

use super::render::{CameraModel, Scenery, Texture};
use super::world::{Arena, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Alvs,
    Scripted,
    BlindWander,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Background {
    #[default]
    Uniform,
    Checker,
    Image,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

fn yes() -> bool {
    true
}

fn is_true(v: &bool) -> bool {
    *v
}

fn default_turn_interval() -> f64 {
    2.0
}

fn is_default_turn_interval(v: &f64) -> bool {
    *v == default_turn_interval()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub controller: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
    /// alvs only; `false` keeps the robot still while it perceives
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub motors: bool,
    /// scripted: forward speed, cm/s
    #[serde(default, skip_serializing_if = "is_default")]
    pub speed: f64,
    /// scripted: turn rate, deg/s
    #[serde(default, skip_serializing_if = "is_default")]
    pub turn_rate: f64,
    #[serde(default, skip_serializing_if = "is_default")]
    pub start_frame: u64,
    /// scripted robots halt here (exclusive)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_frame: Option<u64>,
    /// scripted: consecutive constant-velocity legs starting at
    /// `start_frame`; when present they replace speed/turn_rate/stop_frame
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub legs: Vec<Leg>,
    /// blind-wander: mean seconds between random turns
    #[serde(
        default = "default_turn_interval",
        skip_serializing_if = "is_default_turn_interval"
    )]
    pub turn_interval: f64,
}

impl RobotConfig {
    fn base(controller: ControllerKind) -> Self {
        RobotConfig {
            controller,
            x: None,
            y: None,
            heading: None,
            motors: true,
            speed: 0.0,
            turn_rate: 0.0,
            start_frame: 0,
            stop_frame: None,
            legs: Vec::new(),
            turn_interval: default_turn_interval(),
        }
    }

    pub fn scripted_legs(pose: Pose, legs: Vec<Leg>) -> Self {
        RobotConfig {
            legs,
            ..Self::base(ControllerKind::Scripted).at(Some(pose))
        }
    }

    /// Scripted command for a frame.
    pub fn script_at(&self, frame: u64) -> (f64, f64) {
        if frame < self.start_frame {
            return (0.0, 0.0);
        }
        if self.legs.is_empty() {
            return match self.stop_frame {
                Some(stop) if frame >= stop => (0.0, 0.0),
                _ => (self.speed, self.turn_rate),
            };
        }
        let mut t = frame - self.start_frame;
        for leg in &self.legs {
            if t < leg.frames {
                return (leg.speed, leg.turn_rate);
            }
            t -= leg.frames;
        }
        (0.0, 0.0)
    }

    /// Frame at which a scripted robot stops for good, if it ever does.
    pub fn script_end(&self) -> Option<u64> {
        if self.legs.is_empty() {
            self.stop_frame
        } else {
            Some(self.start_frame + self.legs.iter().map(|l| l.frames).sum::<u64>())
        }
    }

    pub fn alvs(pose: Option<Pose>) -> Self {
        Self::base(ControllerKind::Alvs).at(pose)
    }

    pub fn observer(pose: Pose) -> Self {
        RobotConfig {
            motors: false,
            ..Self::alvs(Some(pose))
        }
    }

    pub fn scripted(pose: Pose, speed: f64, stop_frame: Option<u64>) -> Self {
        RobotConfig {
            speed,
            stop_frame,
            ..Self::base(ControllerKind::Scripted).at(Some(pose))
        }
    }

    pub fn blind_wander(pose: Option<Pose>) -> Self {
        Self::base(ControllerKind::BlindWander).at(pose)
    }

    fn at(mut self, pose: Option<Pose>) -> Self {
        if let Some(p) = pose {
            self.x = Some(p.x);
            self.y = Some(p.y);
            self.heading = Some(p.heading);
        }
        self
    }

    fn fixed_pose(&self) -> Option<Pose> {
        match (self.x, self.y, self.heading) {
            (Some(x), Some(y), Some(h)) => Some(Pose::new(x, y, h)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Leg {
    pub frames: u64,
    /// cm/s
    pub speed: f64,
    /// deg/s
    #[serde(default, skip_serializing_if = "is_default")]
    pub turn_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaConfig {
    pub width: f64,
    pub height: f64,
    pub background: Background,
    /// uniform wall luminance
    pub wall: u8,
    pub checker_cm: f64,
    pub checker_dark: u8,
    pub checker_light: u8,
    /// P5 texture, relative to the scenario file
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub wall_height: f64,
    pub floor: u8,
    pub sky: u8,
    pub robot_luminance: u8,
    pub robot_height: f64,
    pub diameter: f64,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        let s = Scenery::default();
        ArenaConfig {
            width: 100.0,
            height: 100.0,
            background: Background::Uniform,
            wall: 120,
            checker_cm: 4.0,
            checker_dark: 40,
            checker_light: 220,
            image: None,
            wall_height: s.wall_height,
            floor: s.floor,
            sky: s.sky,
            robot_luminance: s.robot_luminance,
            robot_height: s.robot_height,
            diameter: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub hfov: f64,
    pub vfov: f64,
    pub mount_height: f64,
    pub oversample: usize,
    pub blur: bool,
    pub horizon: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        let c = CameraModel::default();
        CameraConfig {
            hfov: c.hfov_deg,
            vfov: c.vfov_deg,
            mount_height: c.mount_height,
            oversample: c.oversample,
            blur: c.blur,
            horizon: c.horizon,
        }
    }
}

fn default_frames() -> u64 {
    18_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "default_frames")]
    pub frames: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: BehaviorMode,
    #[serde(default)]
    pub arena: ArenaConfig,
    #[serde(default)]
    pub camera: CameraConfig,
    /// pipeline overrides, same keys as `--set`
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, toml::Value>,
    #[serde(default, rename = "robot")]
    pub robots: Vec<RobotConfig>,
    /// directory relative paths resolve against
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl ScenarioConfig {
    pub fn new(name: &str, frames: u64, robots: Vec<RobotConfig>) -> Self {
        ScenarioConfig {
            name: name.to_string(),
            frames,
            seed: 0,
            mode: BehaviorMode::Escape,
            arena: ArenaConfig::default(),
            camera: CameraConfig::default(),
            params: BTreeMap::new(),
            robots,
            base_dir: None,
        }
    }

    /// Parses TOML text; `origin` is used in diagnostics and for relative paths.
    pub fn from_toml_str(src: &str, origin: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig = toml::from_str(src).map_err(|e| AlvsError::Parse {
            path: origin.to_path_buf(),
            line: e.span().map(|s| line_of(src, s.start)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        cfg.base_dir = origin.parent().map(Path::to_path_buf);
        // semantic checks before anyone runs it; point at the params table on failure
        cfg.pipeline_config().map_err(|e| AlvsError::Parse {
            path: origin.to_path_buf(),
            line: src
                .lines()
                .position(|l| l.trim() == "[params]")
                .map(|i| i + 1)
                .unwrap_or(0),
            msg: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&src, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn set_param(&mut self, key: &str, value: &str) -> Result<()> {
        let mut probe = self.clone();
        probe
            .params
            .insert(key.trim().to_string(), toml::Value::String(value.trim().to_string()));
        probe.pipeline_config()?;
        *self = probe;
        Ok(())
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut pc = PipelineConfig {
            mode: self.mode,
            ..PipelineConfig::default()
        };
        for (k, v) in &self.params {
            pc.set(k, &value_text(v))?;
        }
        Ok(pc)
    }

    pub fn camera_model(&self) -> CameraModel {
        CameraModel {
            hfov_deg: self.camera.hfov,
            vfov_deg: self.camera.vfov,
            mount_height: self.camera.mount_height,
            oversample: self.camera.oversample,
            blur: self.camera.blur,
            horizon: self.camera.horizon,
        }
    }

    fn texture(&self) -> Result<Texture> {
        let a = &self.arena;
        Ok(match a.background {
            Background::Uniform => Texture::Uniform(a.wall),
            Background::Checker => Texture::Checker {
                cell: a.checker_cm,
                dark: a.checker_dark,
                light: a.checker_light,
            },
            Background::Image => {
                let rel = a.image.as_ref().ok_or_else(|| {
                    AlvsError::Scenario("background = \"image\" needs `image = PATH`".into())
                })?;
                let path = match &self.base_dir {
                    Some(dir) => dir.join(rel),
                    None => PathBuf::from(rel),
                };
                let bytes = fs::read(&path).map_err(|e| {
                    AlvsError::Scenario(format!("texture {}: {e}", path.display()))
                })?;
                let img = pgm::decode(&bytes)?;
                Texture::Image {
                    width: img.width(),
                    height: img.height(),
                    data: img.data().to_vec(),
                }
            }
        })
    }

    pub fn scenery(&self) -> Result<Scenery> {
        let a = &self.arena;
        Ok(Scenery {
            wall: self.texture()?,
            wall_height: a.wall_height,
            floor: a.floor,
            sky: a.sky,
            robot_luminance: a.robot_luminance,
            robot_height: a.robot_height,
        })
    }

    pub fn arena(&self) -> Arena {
        Arena {
            width: self.arena.width,
            height: self.arena.height,
        }
    }

    /// Checks everything and materializes the runtime description.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let bad = |m: String| Err(AlvsError::Scenario(m));
        if self.robots.is_empty() {
            return bad("at least one [[robot]] is required".into());
        }
        let a = &self.arena;
        if !(a.width > 0.0 && a.height > 0.0) {
            return bad("arena width and height must be positive".into());
        }
        if !(a.diameter > 0.0) {
            return bad("robot diameter must be positive".into());
        }
        let r = a.diameter / 2.0;
        if a.width <= a.diameter || a.height <= a.diameter {
            return bad("arena is smaller than a robot".into());
        }
        let camera = self.camera_model();
        camera.validate()?;
        let scenery = self.scenery()?;
        scenery.validate()?;
        let pipeline = self.pipeline_config()?;

        for (i, rb) in self.robots.iter().enumerate() {
            let given = [rb.x.is_some(), rb.y.is_some(), rb.heading.is_some()];
            if given.iter().any(|&g| g) && !given.iter().all(|&g| g) {
                return bad(format!("robot {i}: give all of x, y, heading or none"));
            }
            if let Some(p) = rb.fixed_pose() {
                if p.x < r || p.y < r || p.x > a.width - r || p.y > a.height - r {
                    return bad(format!("robot {i}: pose ({}, {}) is outside the arena", p.x, p.y));
                }
            }
            if rb.controller == ControllerKind::BlindWander && !(rb.turn_interval > 0.0) {
                return bad(format!("robot {i}: turn_interval must be > 0"));
            }
            if rb.legs.iter().any(|l| l.frames == 0) {
                return bad(format!("robot {i}: every leg needs frames > 0"));
            }
            if let Some(stop) = rb.stop_frame {
                if stop < rb.start_frame {
                    return bad(format!("robot {i}: stop_frame precedes start_frame"));
                }
            }
        }
        let poses = self.initial_poses();
        Ok(ResolvedScenario {
            config: self.clone(),
            arena: self.arena(),
            scenery,
            camera,
            pipeline,
            diameter: a.diameter,
            poses,
        })
    }

    /// Fixed poses as given; missing ones drawn from the seed, kept 10 cm off
    /// the walls and 15 cm from every other robot where possible.
    fn initial_poses(&self) -> Vec<Pose> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_0f_a12e_0a);
        let mut placed: Vec<Pose> = self.robots.iter().filter_map(|r| r.fixed_pose()).collect();
        let margin = (10.0f64).min(self.arena.width / 4.0).min(self.arena.height / 4.0);
        self.robots
            .iter()
            .map(|rb| {
                if let Some(p) = rb.fixed_pose() {
                    return p;
                }
                let mut candidate = Pose::new(self.arena.width / 2.0, self.arena.height / 2.0, 0.0);
                for _ in 0..1000 {
                    candidate = Pose::new(
                        rng.random_range(margin..self.arena.width - margin),
                        rng.random_range(margin..self.arena.height - margin),
                        rng.random_range(-180.0..180.0),
                    );
                    if placed.iter().all(|p| p.distance(&candidate) >= 15.0) {
                        break;
                    }
                }
                placed.push(candidate);
                candidate
            })
            .collect()
    }
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub arena: Arena,
    pub scenery: Scenery,
    pub camera: CameraModel,
    pub pipeline: PipelineConfig,
    pub diameter: f64,
    pub poses: Vec<Pose>,
}
