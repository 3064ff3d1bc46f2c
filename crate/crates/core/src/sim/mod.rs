//! Closed-loop 2D arena: kinematics, rendering, scenarios and trial logs.

pub mod library;
pub mod render;
pub mod scenario;
pub mod trial;
pub mod world;

pub use render::{render_view, CameraModel, Scenery, Texture};
pub use world::{step_world, Arena, CollisionEvent, CollisionTracker, Contact, Pose, WorldState};
pub use scenario::{Background, ControllerKind, Leg, ResolvedScenario, RobotConfig, ScenarioConfig};
pub use trial::{run_trial, run_trial_observed, Observation, Perception, TrialLog, TrialSummary};
