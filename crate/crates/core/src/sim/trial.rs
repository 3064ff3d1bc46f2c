//! Lock-step trial execution and the CSV / summary outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::map::Frame;
use crate::params::BehaviorParams;
use crate::pipeline::{FieldReport, FrameTrace, Pipeline};
use crate::visuomotor::{FsmState, MotorCommand, ThreatSummary};

use super::render::render_view;
use super::scenario::{ControllerKind, ResolvedScenario, RobotConfig, ScenarioConfig};
use super::world::{CollisionEvent, CollisionTracker, Contact, Pose, WorldState};

/// What an ALVS robot perceived and decided on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Perception {
    pub state: FsmState,
    pub summary: ThreatSummary,
    pub fields: Vec<FieldReport>,
    pub warm: bool,
}

impl Perception {
    pub fn gated_count(&self) -> usize {
        self.fields.iter().filter(|f| f.response.gated).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotStep {
    /// pose the frame was rendered from
    pub pose: Pose,
    pub command: MotorCommand,
    pub perception: Option<Perception>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame: u64,
    pub robots: Vec<RobotStep>,
}

#[derive(Debug, Clone)]
pub struct TrialLog {
    pub scenario: ScenarioConfig,
    pub controllers: Vec<ControllerKind>,
    pub frames: Vec<FrameRecord>,
    pub events: Vec<CollisionEvent>,
    pub parameters: String,
}

/// Data handed to an observer callback for every ALVS robot and frame.
pub struct Observation<'a> {
    pub frame: u64,
    pub robot: usize,
    pub view: &'a Frame,
    pub trace: &'a FrameTrace,
}

enum Driver {
    Alvs {
        pipeline: Box<Pipeline>,
        motors: bool,
    },
    Scripted(RobotConfig),
    Blind {
        rng: ChaCha8Rng,
        mean_frames: f64,
        next_turn: u64,
        turn_left: u32,
        turn_rate: f64,
    },
}

fn exp_frames(rng: &mut ChaCha8Rng, mean_frames: f64) -> u64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    (-u.ln() * mean_frames).ceil().max(1.0) as u64
}

impl Driver {
    fn new(cfg: &RobotConfig, scenario: &ResolvedScenario, id: usize) -> Result<Self> {
        let dt = scenario.pipeline.model.dt();
        Ok(match cfg.controller {
            ControllerKind::Alvs => Driver::Alvs {
                pipeline: Box::new(Pipeline::new(scenario.pipeline)?),
                motors: cfg.motors,
            },
            ControllerKind::Scripted => Driver::Scripted(cfg.clone()),
            ControllerKind::BlindWander => {
                let seed = scenario.config.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ id as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mean_frames = cfg.turn_interval / dt;
                let next_turn = exp_frames(&mut rng, mean_frames);
                Driver::Blind {
                    rng,
                    mean_frames,
                    next_turn,
                    turn_left: 0,
                    turn_rate: 0.0,
                }
            }
        })
    }

    fn blind_command(&mut self, frame: u64, b: &BehaviorParams, dt: f64) -> MotorCommand {
        let Driver::Blind {
            rng,
            mean_frames,
            next_turn,
            turn_left,
            turn_rate,
        } = self
        else {
            unreachable!()
        };
        if *turn_left == 0 && frame >= *next_turn {
            let angle: f64 = rng.random_range(-180.0..180.0);
            let per_frame = b.max_turn_rate * dt;
            *turn_left = (angle.abs() / per_frame).ceil().max(1.0) as u32;
            *turn_rate = angle / (*turn_left as f64 * dt);
            *next_turn = frame + *turn_left as u64 + exp_frames(rng, *mean_frames);
        }
        if *turn_left > 0 {
            *turn_left -= 1;
            MotorCommand {
                linear: 0.0,
                angular: *turn_rate,
            }
        } else {
            MotorCommand {
                linear: b.wander_speed,
                angular: 0.0,
            }
        }
    }
}

pub fn run_trial(cfg: &ScenarioConfig) -> Result<TrialLog> {
    run_trial_observed(cfg, None)
}

/// Runs the trial; `observer` sees every rendered view and pipeline trace.
pub fn run_trial_observed(
    cfg: &ScenarioConfig,
    mut observer: Option<&mut dyn FnMut(&Observation)>,
) -> Result<TrialLog> {
    let sc = cfg.resolve()?;
    let dt = sc.pipeline.model.dt();
    let behavior = sc.pipeline.behavior;
    let mut drivers = cfg
        .robots
        .iter()
        .enumerate()
        .map(|(i, r)| Driver::new(r, &sc, i))
        .collect::<Result<Vec<_>>>()?;
    let mut world = WorldState {
        arena: sc.arena.clone(),
        poses: sc.poses.clone(),
        diameter: sc.diameter,
        frame: 0,
    };
    let mut tracker = CollisionTracker::new();
    let mut frames = Vec::with_capacity(cfg.frames as usize);
    let mut events = Vec::new();

    for k in 0..cfg.frames {
        events.extend(tracker.detect(&world, sc.diameter));
        let mut steps = Vec::with_capacity(drivers.len());
        for (id, driver) in drivers.iter_mut().enumerate() {
            let pose = world.poses[id];
            let (command, perception) = match driver {
                Driver::Alvs { pipeline, motors } => {
                    let view = render_view(
                        &world.arena,
                        &world.poses,
                        sc.diameter,
                        id,
                        &sc.camera,
                        &sc.scenery,
                        k,
                    );
                    let (out, trace) = pipeline.process_frame_traced(&view, pose.heading)?;
                    if let Some(obs) = observer.as_deref_mut() {
                        obs(&Observation {
                            frame: k,
                            robot: id,
                            view: &view,
                            trace: &trace,
                        });
                    }
                    let command = if *motors { out.command } else { MotorCommand::stop() };
                    (
                        command,
                        Some(Perception {
                            state: out.state,
                            summary: out.summary,
                            fields: out.fields,
                            warm: out.warm,
                        }),
                    )
                }
                Driver::Scripted(script) => {
                    let (linear, angular) = script.script_at(k);
                    (MotorCommand { linear, angular }, None)
                }
                Driver::Blind { .. } => (driver.blind_command(k, &behavior, dt), None),
            };
            steps.push(RobotStep {
                pose,
                command,
                perception,
            });
        }
        let commands: Vec<MotorCommand> = steps.iter().map(|s| s.command).collect();
        world.step(&commands, dt);
        frames.push(FrameRecord {
            frame: k,
            robots: steps,
        });
    }

    Ok(TrialLog {
        scenario: cfg.clone(),
        controllers: cfg.robots.iter().map(|r| r.controller).collect(),
        frames,
        events,
        parameters: sc.pipeline.describe(),
    })
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_default()
}

/// Aggregate statistics written to `summary.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub frames: u64,
    pub episodes: usize,
    pub robot_episodes: usize,
    pub wall_episodes: usize,
    /// episodes that involve at least one ALVS robot
    pub alvs_episodes: usize,
    /// runs of consecutive frames with a gated field, over ALVS robots
    pub opportunities: usize,
    pub long_takeoffs: usize,
    pub short_takeoffs: usize,
    pub spins: usize,
    pub state_frames: BTreeMap<&'static str, u64>,
    pub gated_frames: u64,
}

impl TrialSummary {
    /// 1 − episodes / opportunities; `None` when nothing was ever detected.
    pub fn success_rate(&self) -> Option<f64> {
        (self.opportunities > 0)
            .then(|| 1.0 - self.alvs_episodes as f64 / self.opportunities as f64)
    }
}

impl TrialLog {
    pub fn alvs_robots(&self) -> Vec<usize> {
        self.controllers
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == ControllerKind::Alvs)
            .map(|(i, _)| i)
            .collect()
    }

    /// Perception records of one robot, frame by frame.
    pub fn perception(&self, robot: usize) -> impl Iterator<Item = (u64, &Perception)> {
        self.frames
            .iter()
            .filter_map(move |f| f.robots[robot].perception.as_ref().map(|p| (f.frame, p)))
    }

    pub fn pose(&self, frame: u64, robot: usize) -> Pose {
        self.frames[frame as usize].robots[robot].pose
    }

    pub fn first_contact(&self) -> Option<u64> {
        self.events.iter().map(|e| e.frame).min()
    }

    pub fn summary(&self) -> TrialSummary {
        let alvs = self.alvs_robots();
        let is_alvs = |i: usize| self.controllers[i] == ControllerKind::Alvs;
        let mut s = TrialSummary {
            frames: self.frames.len() as u64,
            episodes: self.events.len(),
            robot_episodes: 0,
            wall_episodes: 0,
            alvs_episodes: 0,
            opportunities: 0,
            long_takeoffs: 0,
            short_takeoffs: 0,
            spins: 0,
            state_frames: BTreeMap::new(),
            gated_frames: 0,
        };
        for e in &self.events {
            let involves = match e.contact {
                Contact::Robots(a, b) => {
                    s.robot_episodes += 1;
                    is_alvs(a) || is_alvs(b)
                }
                Contact::Wall(a) => {
                    s.wall_episodes += 1;
                    is_alvs(a)
                }
            };
            if involves {
                s.alvs_episodes += 1;
            }
        }
        for &r in &alvs {
            let mut prev_gated = false;
            let mut prev: Option<FsmState> = None;
            for (_, p) in self.perception(r) {
                *s.state_frames.entry(p.state.name()).or_insert(0) += 1;
                let gated = p.gated_count() > 0;
                if gated {
                    s.gated_frames += 1;
                    if !prev_gated {
                        s.opportunities += 1;
                    }
                }
                prev_gated = gated;
                let was = prev.map(|q| q.name());
                match p.state {
                    FsmState::LongTakeoff { .. } if was != Some("long_takeoff") => {
                        s.long_takeoffs += 1
                    }
                    FsmState::ShortTakeoff { .. }
                        if !matches!(prev, Some(FsmState::ShortTakeoff { .. })) =>
                    {
                        s.short_takeoffs += 1
                    }
                    FsmState::Spin { .. } if was != Some("spin") => s.spins += 1,
                    _ => {}
                }
                prev = Some(p.state);
            }
        }
        s
    }

    pub fn trajectories_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["frame", "robot_id", "x", "y", "heading"])?;
        for f in &self.frames {
            for (id, r) in f.robots.iter().enumerate() {
                w.write_record([
                    f.frame.to_string(),
                    id.to_string(),
                    format!("{:.4}", r.pose.x),
                    format!("{:.4}", r.pose.y),
                    format!("{:.4}", r.pose.heading),
                ])?;
            }
        }
        finish(w)
    }

    pub fn events_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["frame", "kind", "robot_a", "robot_b", "x", "y"])?;
        for e in &self.events {
            let (kind, a, b) = match e.contact {
                Contact::Robots(a, b) => ("robot", a.to_string(), b.to_string()),
                Contact::Wall(a) => ("wall", a.to_string(), String::new()),
            };
            w.write_record([
                e.frame.to_string(),
                kind.to_string(),
                a,
                b,
                format!("{:.4}", e.x),
                format!("{:.4}", e.y),
            ])?;
        }
        finish(w)
    }

    pub fn behavior_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "frame",
            "robot_id",
            "state",
            "raw_sum",
            "strength",
            "centroid_x",
            "target_heading",
            "linear",
            "angular",
        ])?;
        for f in &self.frames {
            for (id, r) in f.robots.iter().enumerate() {
                let Some(p) = &r.perception else { continue };
                w.write_record([
                    f.frame.to_string(),
                    id.to_string(),
                    p.state.name().to_string(),
                    format!("{:.3}", p.summary.raw_sum),
                    format!("{:.6}", p.summary.strength),
                    opt(p.summary.centroid_x, 3),
                    opt(p.state.target_heading(), 3),
                    format!("{:.4}", r.command.linear),
                    format!("{:.4}", r.command.angular),
                ])?;
            }
        }
        finish(w)
    }

    pub fn attention_csv(&self, robot: usize) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["frame", "af_id", "cx", "cy", "resp"])?;
        for (frame, p) in self.perception(robot) {
            for f in &p.fields {
                w.write_record([
                    frame.to_string(),
                    f.id.to_string(),
                    format!("{:.4}", f.cx),
                    format!("{:.4}", f.cy),
                    format!("{:.3}", f.response.value),
                ])?;
            }
        }
        finish(w)
    }

    pub fn quadrants_csv(&self, robot: usize) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["frame", "af_id", "q1", "q2", "q3", "q4"])?;
        for (frame, p) in self.perception(robot) {
            for f in &p.fields {
                let q = f.quadrants;
                w.write_record([
                    frame.to_string(),
                    f.id.to_string(),
                    format!("{:.3}", q.q1),
                    format!("{:.3}", q.q2),
                    format!("{:.3}", q.q3),
                    format!("{:.3}", q.q4),
                ])?;
            }
        }
        finish(w)
    }

    pub fn summary_text(&self) -> String {
        let s = self.summary();
        let c = &self.scenario;
        let mut t = String::new();
        let _ = writeln!(t, "scenario = {}", c.name);
        let _ = writeln!(t, "frames = {}", s.frames);
        let _ = writeln!(t, "seed = {}", c.seed);
        let _ = writeln!(t, "robots = {}", self.controllers.len());
        let _ = writeln!(t, "alvs_robots = {}", self.alvs_robots().len());
        let _ = writeln!(t, "background = {:?}", c.arena.background);
        let _ = writeln!(t);
        let _ = writeln!(t, "collision_episodes = {}", s.episodes);
        let _ = writeln!(t, "robot_robot_episodes = {}", s.robot_episodes);
        let _ = writeln!(t, "robot_wall_episodes = {}", s.wall_episodes);
        let _ = writeln!(t, "alvs_episodes = {}", s.alvs_episodes);
        let _ = writeln!(t, "avoidance_opportunities = {}", s.opportunities);
        let _ = writeln!(
            t,
            "success_rate = {}",
            s.success_rate()
                .map(|r| format!("{r:.4}"))
                .unwrap_or_else(|| "n/a".into())
        );
        let _ = writeln!(t, "gated_frames = {}", s.gated_frames);
        let _ = writeln!(t, "long_takeoff_entries = {}", s.long_takeoffs);
        let _ = writeln!(t, "short_takeoff_entries = {}", s.short_takeoffs);
        let _ = writeln!(t, "spin_entries = {}", s.spins);
        let _ = writeln!(t);
        for name in [
            "wander",
            "long_takeoff",
            "short_takeoff_1",
            "short_takeoff_2",
            "escape",
            "spin",
        ] {
            let _ = writeln!(
                t,
                "state_frames.{name} = {}",
                s.state_frames.get(name).copied().unwrap_or(0)
            );
        }
        let _ = writeln!(t);
        if !c.params.is_empty() {
            let _ = writeln!(t, "[overrides]");
            for (k, v) in &c.params {
                let v = match v {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                let _ = writeln!(t, "{k} = {v}");
            }
            let _ = writeln!(t);
        }
        let _ = writeln!(t, "[parameters]");
        t.push_str(&self.parameters);
        if !t.ends_with('\n') {
            t.push('\n');
        }
        t
    }

    /// Writes every CSV plus `summary.txt` into `dir`.
    pub fn write_outputs(&self, dir: &Path, quadrants: bool) -> Result<()> {
        // render everything first so a failure leaves nothing behind
        let mut files = vec![
            ("trajectories.csv".to_string(), self.trajectories_csv()?),
            ("events.csv".to_string(), self.events_csv()?),
            ("behavior.csv".to_string(), self.behavior_csv()?),
        ];
        for r in self.alvs_robots() {
            files.push((format!("attention_r{r}.csv"), self.attention_csv(r)?));
            if quadrants {
                files.push((format!("quadrants_r{r}.csv"), self.quadrants_csv(r)?));
            }
        }
        files.push(("summary.txt".to_string(), self.summary_text()));
        fs::create_dir_all(dir)?;
        for (name, body) in files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::RobotConfig;

    fn approach(frames: u64) -> ScenarioConfig {
        ScenarioConfig::new(
            "approach",
            frames,
            vec![
                RobotConfig::observer(Pose::new(20.0, 50.0, 0.0)),
                RobotConfig::scripted(Pose::new(70.0, 50.0, 180.0), 20.0, Some(80)),
            ],
        )
    }

    #[test]
    fn zero_duration_is_empty() {
        let log = run_trial(&approach(0)).unwrap();
        assert!(log.frames.is_empty());
        assert!(log.events.is_empty());
    }

    #[test]
    fn scripted_robot_follows_script() {
        let log = run_trial(&approach(20)).unwrap();
        let dt = 33.33 / 1000.0;
        let p = log.pose(10, 1);
        assert!((p.x - (70.0 - 20.0 * dt * 10.0)).abs() < 1e-9);
        // observer never moves
        assert_eq!(log.pose(19, 0), log.pose(0, 0));
    }

    #[test]
    fn approach_is_detected_before_contact() {
        let log = run_trial(&approach(90)).unwrap();
        let gated = log.perception(0).filter(|(_, p)| p.gated_count() > 0).count();
        assert!(gated > 0);
    }

    #[test]
    fn deterministic_outputs() {
        let mut cfg = approach(40);
        cfg.robots.push(RobotConfig::blind_wander(None));
        cfg.seed = 4;
        let a = run_trial(&cfg).unwrap();
        let b = run_trial(&cfg).unwrap();
        assert_eq!(a.trajectories_csv().unwrap(), b.trajectories_csv().unwrap());
        assert_eq!(a.behavior_csv().unwrap(), b.behavior_csv().unwrap());
        assert_eq!(a.summary_text(), b.summary_text());
    }

    #[test]
    fn per_frame_motion_is_bounded() {
        let mut cfg = ScenarioConfig::new(
            "bounded",
            300,
            vec![RobotConfig::alvs(None), RobotConfig::blind_wander(None), RobotConfig::alvs(None)],
        );
        cfg.seed = 2;
        let log = run_trial(&cfg).unwrap();
        let dt = 0.03333;
        for w in log.frames.windows(2) {
            for r in 0..3 {
                let d = w[0].robots[r].pose.distance(&w[1].robots[r].pose);
                assert!(d <= 20.0 * dt + 1e-9, "robot {r} jumped {d}");
            }
        }
    }

    #[test]
    fn blind_wander_turns_and_moves() {
        let mut cfg = ScenarioConfig::new("blind", 600, vec![RobotConfig::blind_wander(None)]);
        cfg.seed = 1;
        let log = run_trial(&cfg).unwrap();
        let h0 = log.pose(0, 0).heading;
        assert!(log.frames.iter().any(|f| f.robots[0].pose.heading != h0));
        assert!(log.frames.iter().any(|f| f.robots[0].command.linear > 0.0));
    }
}
