//! Model and controller parameters with their defaults and `key=value`
//! override support.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AlvsError, Result};

/// Neural-network parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// ON-channel weight.
    pub w: f64,
    /// Correlation partners per HRC pixel.
    pub n: usize,
    /// Attention-field half-side, pixels.
    pub r_af: usize,
    /// Saliency threshold for spawning a field.
    pub t_a: f64,
    /// Mean-response threshold below which a field is pruned.
    pub t_d: f64,
    /// Response window (frames) for pruning.
    pub d: usize,
    /// Sigmoid scale for escape strength.
    pub w_s: f64,
    /// Degrees per pixel column.
    pub alpha: f64,
    /// Summed response above which short takeoff overrides everything.
    pub t_s: f64,
    /// Inter-frame interval, milliseconds.
    pub t_i: f64,
    /// HRC delay in frames.
    pub c_d: usize,
    /// HRC sampling distance increment, pixels.
    pub s: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            w: 0.25,
            n: 3,
            r_af: 36,
            t_a: 100.0,
            t_d: 5000.0,
            d: 4,
            w_s: 4000.0,
            alpha: 0.707,
            t_s: 7000.0,
            t_i: 33.33,
            c_d: 1,
            s: 1,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("w", self.w),
            ("t_a", self.t_a),
            ("t_d", self.t_d),
            ("w_s", self.w_s),
            ("alpha", self.alpha),
            ("t_s", self.t_s),
            ("t_i", self.t_i),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AlvsError::param(name, format!("must be > 0, got {v}")));
            }
        }
        if self.n < 1 {
            return Err(AlvsError::param("n", "must be >= 1"));
        }
        if !(1..=49).contains(&self.r_af) {
            return Err(AlvsError::param("r_af", "must lie in [1, 49]"));
        }
        if self.d < 1 {
            return Err(AlvsError::param("d", "must be >= 1"));
        }
        if self.c_d < 1 {
            return Err(AlvsError::param("c_d", "must be >= 1"));
        }
        if self.s < 1 {
            return Err(AlvsError::param("s", "must be >= 1"));
        }
        Ok(())
    }

    /// Frame interval in seconds.
    pub fn dt(&self) -> f64 {
        self.t_i / 1000.0
    }
}

/// Motor and state-machine constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorParams {
    /// cm/s
    pub wander_speed: f64,
    /// cm/s
    pub max_speed: f64,
    /// deg/s
    pub max_turn_rate: f64,
    /// cm/s, reverse speed in the first short-takeoff phase
    pub retreat_speed: f64,
    /// degrees
    pub heading_tol: f64,
    pub escape_frames: u32,
    pub spin_frames: u32,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        BehaviorParams {
            wander_speed: 10.0,
            max_speed: 20.0,
            max_turn_rate: 360.0,
            retreat_speed: 20.0,
            heading_tol: 5.0,
            escape_frames: 30,
            spin_frames: 15,
        }
    }
}

impl BehaviorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_speed > 0.0) {
            return Err(AlvsError::param("max_speed", "must be > 0"));
        }
        if !(self.max_turn_rate > 0.0) {
            return Err(AlvsError::param("max_turn_rate", "must be > 0"));
        }
        if self.wander_speed.abs() > self.max_speed {
            return Err(AlvsError::param("wander_speed", "exceeds max_speed"));
        }
        if self.retreat_speed < 0.0 || self.retreat_speed > self.max_speed {
            return Err(AlvsError::param("retreat_speed", "must lie in [0, max_speed]"));
        }
        if !(0.0..90.0).contains(&self.heading_tol) {
            return Err(AlvsError::param("heading_tol", "must lie in [0, 90)"));
        }
        Ok(())
    }
}

/// What the robot does when a looming threat is detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorMode {
    #[default]
    Escape,
    Spin,
}

impl fmt::Display for BehaviorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BehaviorMode::Escape => "escape",
            BehaviorMode::Spin => "spin",
        })
    }
}

impl std::str::FromStr for BehaviorMode {
    type Err = AlvsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "escape" => Ok(BehaviorMode::Escape),
            "spin" => Ok(BehaviorMode::Spin),
            _ => Err(AlvsError::param("mode", format!("`{s}` is not escape|spin"))),
        }
    }
}

/// HRC formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HrcForm {
    /// delayed-near x current-far minus current-near x delayed-far
    #[default]
    Opponent,
    /// second product term without delay, as typeset in the original
    /// formulation; not direction selective
    Printed,
}

/// LPLC2 gate on the four quadrant sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateForm {
    /// all four sums strictly positive
    #[default]
    Strict,
    /// none of the four sums equals zero
    Printed,
}

/// Storage width of the persistent channel buffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Float,
    /// 16-bit fixed point (8 fractional bits)
    Compact,
}

/// Everything a per-robot pipeline needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub model: ModelParams,
    pub behavior: BehaviorParams,
    pub mode: BehaviorMode,
    pub hrc: HrcForm,
    pub gate: GateForm,
    pub precision: Precision,
}

/// Keys accepted by [`PipelineConfig::set`].
pub const OVERRIDE_KEYS: &[&str] = &[
    "w",
    "n",
    "r_af",
    "t_a",
    "t_d",
    "d",
    "w_s",
    "alpha",
    "t_s",
    "t_i",
    "c_d",
    "s",
    "wander_speed",
    "max_speed",
    "max_turn_rate",
    "retreat_speed",
    "heading_tol",
    "escape_frames",
    "spin_frames",
    "mode",
    "hrc",
    "gate",
    "precision",
];

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.behavior.validate()
    }

    /// Applies a single `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| AlvsError::param(key, format!("cannot parse `{value}`")))
        }
        let mut next = *self;
        let m = &mut next.model;
        let b = &mut next.behavior;
        match key.trim() {
            "w" => m.w = num(key, value)?,
            "n" => m.n = num(key, value)?,
            "r_af" => m.r_af = num(key, value)?,
            "t_a" => m.t_a = num(key, value)?,
            "t_d" => m.t_d = num(key, value)?,
            "d" => m.d = num(key, value)?,
            "w_s" => m.w_s = num(key, value)?,
            "alpha" => m.alpha = num(key, value)?,
            "t_s" => m.t_s = num(key, value)?,
            "t_i" => m.t_i = num(key, value)?,
            "c_d" => m.c_d = num(key, value)?,
            "s" => m.s = num(key, value)?,
            "wander_speed" => b.wander_speed = num(key, value)?,
            "max_speed" => b.max_speed = num(key, value)?,
            "max_turn_rate" => b.max_turn_rate = num(key, value)?,
            "retreat_speed" => b.retreat_speed = num(key, value)?,
            "heading_tol" => b.heading_tol = num(key, value)?,
            "escape_frames" => b.escape_frames = num(key, value)?,
            "spin_frames" => b.spin_frames = num(key, value)?,
            "mode" => next.mode = value.trim().parse()?,
            "hrc" => {
                next.hrc = match value.trim() {
                    "opponent" => HrcForm::Opponent,
                    "printed" => HrcForm::Printed,
                    v => return Err(AlvsError::param(key, format!("`{v}` is not opponent|printed"))),
                }
            }
            "gate" => {
                next.gate = match value.trim() {
                    "strict" => GateForm::Strict,
                    "printed" => GateForm::Printed,
                    v => return Err(AlvsError::param(key, format!("`{v}` is not strict|printed"))),
                }
            }
            "precision" => {
                next.precision = match value.trim() {
                    "float" => Precision::Float,
                    "compact" => Precision::Compact,
                    v => return Err(AlvsError::param(key, format!("`{v}` is not float|compact"))),
                }
            }
            other => return Err(AlvsError::UnknownParam(other.to_string())),
        }
        next.validate()?;
        *self = next;
        Ok(())
    }

    /// Parses and applies `key=value`.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| AlvsError::param(kv, "expected key=value"))?;
        self.set(k, v)
    }

    /// One `key = value` line per parameter, for run summaries.
    pub fn describe(&self) -> String {
        let m = &self.model;
        let b = &self.behavior;
        let rows: Vec<(&str, String)> = vec![
            ("w", m.w.to_string()),
            ("n", m.n.to_string()),
            ("r_af", m.r_af.to_string()),
            ("t_a", m.t_a.to_string()),
            ("t_d", m.t_d.to_string()),
            ("d", m.d.to_string()),
            ("w_s", m.w_s.to_string()),
            ("alpha", m.alpha.to_string()),
            ("t_s", m.t_s.to_string()),
            ("t_i", m.t_i.to_string()),
            ("c_d", m.c_d.to_string()),
            ("s", m.s.to_string()),
            ("wander_speed", b.wander_speed.to_string()),
            ("max_speed", b.max_speed.to_string()),
            ("max_turn_rate", b.max_turn_rate.to_string()),
            ("retreat_speed", b.retreat_speed.to_string()),
            ("heading_tol", b.heading_tol.to_string()),
            ("escape_frames", b.escape_frames.to_string()),
            ("spin_frames", b.spin_frames.to_string()),
            ("mode", self.mode.to_string()),
            (
                "hrc",
                match self.hrc {
                    HrcForm::Opponent => "opponent".into(),
                    HrcForm::Printed => "printed".into(),
                },
            ),
            (
                "gate",
                match self.gate {
                    GateForm::Strict => "strict".into(),
                    GateForm::Printed => "printed".into(),
                },
            ),
            (
                "precision",
                match self.precision {
                    Precision::Float => "float".into(),
                    Precision::Compact => "compact".into(),
                },
            ),
        ];
        rows.iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
