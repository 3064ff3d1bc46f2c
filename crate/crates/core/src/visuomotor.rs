//! Population read-out of LPLC2 responses and the wander / takeoff /
//! escape state machine that turns them into motor commands.

use std::fmt;

use crate::attention::FieldSet;
use crate::lplc2::Lplc2Response;
use crate::params::{BehaviorMode, BehaviorParams, ModelParams};

/// Image column of the optical axis.
pub const CENTER_COLUMN: f64 = 49.0;

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn wrap_deg(a: f64) -> f64 {
    let mut r = a % 360.0;
    if r > 180.0 {
        r -= 360.0;
    } else if r <= -180.0 {
        r += 360.0;
    }
    r
}

/// Threat bearing (degrees, right positive) of an image column.
pub fn column_bearing(x: f64, alpha: f64) -> f64 {
    alpha * (x - CENTER_COLUMN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreatSummary {
    pub raw_sum: f64,
    pub strength: f64,
    /// Response-weighted mean field column; `None` when nothing responds.
    pub centroid_x: Option<f64>,
}

impl ThreatSummary {
    pub fn quiet() -> Self {
        ThreatSummary {
            raw_sum: 0.0,
            strength: 0.5,
            centroid_x: None,
        }
    }
}

pub fn strength(raw_sum: f64, w_s: f64) -> f64 {
    1.0 / (1.0 + (-raw_sum / w_s).exp())
}

/// `responses` is aligned with `fields.fields`.
pub fn summarize(fields: &FieldSet, responses: &[Lplc2Response], w_s: f64) -> ThreatSummary {
    debug_assert_eq!(fields.len(), responses.len());
    let raw_sum: f64 = responses.iter().map(|r| r.value).sum();
    let centroid_x = if raw_sum > 0.0 {
        let weighted: f64 = fields
            .iter()
            .zip(responses)
            .map(|(f, r)| f.cx * r.value)
            .sum();
        Some(weighted / raw_sum)
    } else {
        None
    };
    ThreatSummary {
        raw_sum,
        strength: strength(raw_sum, w_s),
        centroid_x,
    }
}

/// Turn (relative to the current heading) that puts the threat behind.
pub fn long_heading(centroid_x: f64, alpha: f64) -> f64 {
    wrap_deg(column_bearing(centroid_x, alpha) + 180.0)
}

/// Relative headings of the retreat phase and the final phase of the
/// two-stage escape.
pub fn short_headings(centroid_x: f64, alpha: f64) -> (f64, f64) {
    let b = column_bearing(centroid_x, alpha);
    let t1 = if b >= 0.0 { b - 90.0 } else { b + 90.0 };
    let t2 = if t1 < 0.0 { t1 - 90.0 } else { t1 + 90.0 };
    (t1, wrap_deg(t2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShortPhase {
    Retreat,
    Flee,
}

/// Behavioural state. Headings stored here are absolute (world) headings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FsmState {
    Wander,
    LongTakeoff {
        target_heading: f64,
        strength: f64,
    },
    ShortTakeoff {
        phase: ShortPhase,
        theta1: f64,
        theta2: f64,
        trigger_bearing: f64,
        strength: f64,
    },
    Escape {
        remaining_frames: u32,
        strength: f64,
    },
    Spin {
        remaining_frames: u32,
    },
}

impl FsmState {
    pub fn name(&self) -> &'static str {
        match self {
            FsmState::Wander => "wander",
            FsmState::LongTakeoff { .. } => "long_takeoff",
            FsmState::ShortTakeoff {
                phase: ShortPhase::Retreat,
                ..
            } => "short_takeoff_1",
            FsmState::ShortTakeoff {
                phase: ShortPhase::Flee,
                ..
            } => "short_takeoff_2",
            FsmState::Escape { .. } => "escape",
            FsmState::Spin { .. } => "spin",
        }
    }

    /// Heading the state is currently steering to, if any.
    pub fn target_heading(&self) -> Option<f64> {
        match *self {
            FsmState::LongTakeoff { target_heading, .. } => Some(target_heading),
            FsmState::ShortTakeoff {
                phase: ShortPhase::Retreat,
                theta1,
                ..
            } => Some(theta1),
            FsmState::ShortTakeoff { theta2, .. } => Some(theta2),
            _ => None,
        }
    }

    pub fn is_takeoff(&self) -> bool {
        matches!(
            self,
            FsmState::LongTakeoff { .. } | FsmState::ShortTakeoff { .. }
        )
    }
}

impl fmt::Display for FsmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Linear speed in cm/s (negative reverses) and turn rate in deg/s
/// (positive turns right).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorCommand {
    pub linear: f64,
    pub angular: f64,
}

impl MotorCommand {
    pub fn stop() -> Self {
        MotorCommand::default()
    }

    pub fn clamped(self, b: &BehaviorParams) -> Self {
        MotorCommand {
            linear: self.linear.clamp(-b.max_speed, b.max_speed),
            angular: self.angular.clamp(-b.max_turn_rate, b.max_turn_rate),
        }
    }
}

/// Turn rate that reaches `target` without overshooting in one frame.
fn steer(current: f64, target: f64, b: &BehaviorParams, dt: f64) -> f64 {
    let err = wrap_deg(target - current);
    (err / dt).clamp(-b.max_turn_rate, b.max_turn_rate)
}

fn enter_short(summary: &ThreatSummary, heading: f64, alpha: f64) -> FsmState {
    let cx = summary.centroid_x.unwrap_or(CENTER_COLUMN);
    let (t1, t2) = short_headings(cx, alpha);
    FsmState::ShortTakeoff {
        phase: ShortPhase::Retreat,
        theta1: wrap_deg(heading + t1),
        theta2: wrap_deg(heading + t2),
        trigger_bearing: wrap_deg(heading + column_bearing(cx, alpha)),
        strength: summary.strength,
    }
}

/// One controller tick. `heading` is the robot's current world heading.
pub fn fsm_step(
    state: FsmState,
    summary: &ThreatSummary,
    heading: f64,
    model: &ModelParams,
    behavior: &BehaviorParams,
    mode: BehaviorMode,
) -> (FsmState, MotorCommand) {
    let dt = model.dt();
    let b = behavior;

    let mut state = state;
    if mode == BehaviorMode::Escape
        && summary.raw_sum > model.t_s
        && !matches!(state, FsmState::ShortTakeoff { .. })
    {
        state = enter_short(summary, heading, model.alpha);
    } else if let FsmState::Wander = state {
        if summary.raw_sum > 0.0 {
            state = match mode {
                BehaviorMode::Escape => FsmState::LongTakeoff {
                    target_heading: wrap_deg(
                        heading + long_heading(summary.centroid_x.unwrap_or(CENTER_COLUMN), model.alpha),
                    ),
                    strength: summary.strength,
                },
                BehaviorMode::Spin => FsmState::Spin {
                    remaining_frames: b.spin_frames,
                },
            };
        }
    }

    let escape = |strength: f64| {
        (
            FsmState::Escape {
                remaining_frames: b.escape_frames,
                strength,
            },
            MotorCommand {
                linear: strength * b.max_speed,
                angular: 0.0,
            },
        )
    };

    let (next, cmd) = match state {
        FsmState::Wander => (
            FsmState::Wander,
            MotorCommand {
                linear: b.wander_speed,
                angular: 0.0,
            },
        ),
        FsmState::LongTakeoff {
            target_heading,
            strength,
        } => {
            if wrap_deg(target_heading - heading).abs() <= b.heading_tol {
                escape(strength)
            } else {
                (
                    state,
                    MotorCommand {
                        linear: 0.0,
                        angular: steer(heading, target_heading, b, dt),
                    },
                )
            }
        }
        FsmState::ShortTakeoff {
            phase,
            theta1,
            theta2,
            trigger_bearing,
            strength,
        } => {
            let deviation = wrap_deg(heading - trigger_bearing).abs();
            let phase = match phase {
                ShortPhase::Retreat if deviation >= 90.0 - b.heading_tol => ShortPhase::Flee,
                p => p,
            };
            if phase == ShortPhase::Flee && deviation >= 180.0 - b.heading_tol {
                escape(strength)
            } else {
                let next = FsmState::ShortTakeoff {
                    phase,
                    theta1,
                    theta2,
                    trigger_bearing,
                    strength,
                };
                let cmd = match phase {
                    ShortPhase::Retreat => MotorCommand {
                        linear: -b.retreat_speed,
                        angular: steer(heading, theta1, b, dt),
                    },
                    ShortPhase::Flee => MotorCommand {
                        linear: strength * b.max_speed,
                        angular: steer(heading, theta2, b, dt),
                    },
                };
                (next, cmd)
            }
        }
        FsmState::Escape {
            remaining_frames,
            strength,
        } => {
            if remaining_frames == 0 {
                (
                    FsmState::Wander,
                    MotorCommand {
                        linear: b.wander_speed,
                        angular: 0.0,
                    },
                )
            } else {
                (
                    FsmState::Escape {
                        remaining_frames: remaining_frames - 1,
                        strength,
                    },
                    MotorCommand {
                        linear: strength * b.max_speed,
                        angular: 0.0,
                    },
                )
            }
        }
        FsmState::Spin { remaining_frames } => {
            if remaining_frames == 0 {
                (
                    FsmState::Wander,
                    MotorCommand {
                        linear: b.wander_speed,
                        angular: 0.0,
                    },
                )
            } else {
                (
                    FsmState::Spin {
                        remaining_frames: remaining_frames - 1,
                    },
                    MotorCommand {
                        linear: 0.0,
                        angular: b.max_turn_rate,
                    },
                )
            }
        }
    };
    (next, cmd.clamped(b))
}
