//! Attention-driven LPLC2 looming detection for a small ground robot.
//!
//! The perception path turns consecutive 99x72 luminance frames into ON/OFF
//! channels, direction-selective motion, and per-attention-field looming
//! responses; the visuomotor state machine converts those into escape
//! manoeuvres. [`sim`] closes the loop in a 2D multi-robot arena.

pub mod attention;
pub mod cli;
pub mod error;
pub mod frontend;
pub mod lplc2;
pub mod map;
pub mod motion;
pub mod params;
pub mod pgm;
pub mod pipeline;
pub mod sim;
pub mod stimulus;
pub mod visuomotor;

pub use error::{AlvsError, Result};
pub use map::{Frame, Map, HEIGHT, WIDTH};
pub use params::{BehaviorMode, BehaviorParams, GateForm, HrcForm, ModelParams, PipelineConfig, Precision};
pub use pipeline::{BudgetReport, FrameOutput, FrameTrace, Pipeline};
pub use visuomotor::{FsmState, MotorCommand, ThreatSummary};
