//! Per-robot perception-action loop with fixed stage order, warm-up
//! handling and memory/latency accounting.

use std::fmt;
use std::time::Duration;

use crate::attention::{self, FieldSet, SaliencyMap};
use crate::error::{AlvsError, Result};
use crate::frontend::{self, ChannelPair, DiffMap};
use crate::lplc2::{self, Lplc2Response, QuadrantSums};
use crate::map::{Frame, HEIGHT, PIXELS, WIDTH};
use crate::motion::{self, DelayLine, MotionMaps};
use crate::params::{PipelineConfig, Precision};
use crate::visuomotor::{self, FsmState, MotorCommand, ThreatSummary};

/// Snapshot of one field after the response stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldReport {
    pub id: u64,
    pub cx: f64,
    pub cy: f64,
    pub quadrants: QuadrantSums,
    pub response: Lplc2Response,
}

/// Every intermediate of one `process_frame` call.
#[derive(Debug, Clone)]
pub struct FrameTrace {
    pub frame_index: u64,
    pub diff: DiffMap,
    pub channels: ChannelPair,
    pub smoothed: ChannelPair,
    pub saliency: SaliencyMap,
    pub motion: MotionMaps,
    pub spawned: Option<u64>,
    pub fused: Vec<u64>,
    pub pruned: Vec<u64>,
    /// Fields that received a response this frame, before pruning.
    pub fields: Vec<FieldReport>,
    pub summary: ThreatSummary,
}

/// Per-frame outcome without the intermediate maps.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub command: MotorCommand,
    pub state: FsmState,
    pub summary: ThreatSummary,
    pub fields: Vec<FieldReport>,
    pub warm: bool,
}

impl FrameOutput {
    pub fn gated_count(&self) -> usize {
        self.fields.iter().filter(|f| f.response.gated).count()
    }
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    prev: Option<Frame>,
    delay: DelayLine,
    fields: FieldSet,
    fsm: FsmState,
    frames: u64,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline {
            delay: DelayLine::new(config.model.c_d, config.precision),
            config,
            prev: None,
            fields: FieldSet::new(),
            fsm: FsmState::Wander,
            frames: 0,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn fields(&self) -> &FieldSet {
        &self.fields
    }

    pub fn state(&self) -> FsmState {
        self.fsm
    }

    pub fn frames_processed(&self) -> u64 {
        self.frames
    }

    /// Runs one frame and returns the command plus the full trace.
    pub fn process_frame_traced(
        &mut self,
        frame: &Frame,
        heading: f64,
    ) -> Result<(FrameOutput, FrameTrace)> {
        if !frame.is_sensor_sized() {
            return Err(AlvsError::DimensionMismatch {
                expected_w: WIDTH,
                expected_h: HEIGHT,
                got_w: frame.width(),
                got_h: frame.height(),
            });
        }
        let cfg = self.config;
        let m = &cfg.model;

        // retina: no change is observed on the very first frame
        let diff = match &self.prev {
            Some(prev) => frontend::retina_diff(prev, frame)?,
            None => DiffMap::zeros(WIDTH, HEIGHT),
        };
        let channels = frontend::rectify(&diff, m.w);
        let smoothed = frontend::smooth_pair(&channels);
        let sal = attention::saliency(&smoothed);

        self.fields.tick();
        attention::update_centroids(&mut self.fields, &sal);
        let fused = attention::fuse(&mut self.fields);
        let spawned = attention::spawn(&mut self.fields, &sal, m.t_a, m.r_af as f64);

        let warm = self.delay.is_warm();
        let lm = match self.delay.delayed() {
            Some(delayed) => motion::motion_maps(&channels, &delayed, m.n, m.s, cfg.hrc),
            None => MotionMaps::zeros(WIDTH, HEIGHT),
        };
        self.delay.push(&channels);

        let mut reports = Vec::with_capacity(self.fields.len());
        let mut responses = Vec::with_capacity(self.fields.len());
        for f in &mut self.fields.fields {
            let q = lplc2::quadrant_sums(f, &lm);
            let r = lplc2::lplc2_response(&q, cfg.gate);
            f.push_response(r.value, m.d);
            reports.push(FieldReport {
                id: f.id,
                cx: f.cx,
                cy: f.cy,
                quadrants: q,
                response: r,
            });
            responses.push(r);
        }
        let summary = visuomotor::summarize(&self.fields, &responses, m.w_s);
        let pruned = attention::prune(&mut self.fields, m.t_d, m.d);

        let (next, command) =
            visuomotor::fsm_step(self.fsm, &summary, heading, m, &cfg.behavior, cfg.mode);
        self.fsm = next;
        self.prev = Some(frame.clone());
        self.frames += 1;

        let out = FrameOutput {
            command,
            state: next,
            summary,
            fields: reports.clone(),
            warm,
        };
        let trace = FrameTrace {
            frame_index: frame.index(),
            diff,
            channels,
            smoothed,
            saliency: sal,
            motion: lm,
            spawned,
            fused,
            pruned,
            fields: reports,
            summary,
        };
        Ok((out, trace))
    }

    pub fn process_frame(&mut self, frame: &Frame, heading: f64) -> Result<FrameOutput> {
        self.process_frame_traced(frame, heading).map(|(o, _)| o)
    }

    /// Itemized persistent memory plus timing statistics.
    pub fn budget_report(&self, samples: &[Duration]) -> BudgetReport {
        let field_bytes = attention_field_bytes(self.config.model.d);
        let max_fields = max_field_count(self.config.model.r_af).max(FIELD_SANITY_BOUND);
        let channel_elem = match self.config.precision {
            Precision::Float => "f64",
            Precision::Compact => "u16 (Q8.8)",
        };
        let items = vec![
            BudgetItem {
                name: "previous frame".into(),
                detail: format!("{WIDTH}x{HEIGHT} u8"),
                bytes: PIXELS,
            },
            BudgetItem {
                name: "HRC delay line".into(),
                detail: format!(
                    "{} x ON/OFF x {WIDTH}x{HEIGHT} {channel_elem}",
                    self.delay.capacity()
                ),
                bytes: self.delay.storage_bytes(WIDTH, HEIGHT),
            },
            BudgetItem {
                name: "attention fields".into(),
                detail: format!("{max_fields} x {field_bytes} B (id, centroid, history[d], age)"),
                bytes: max_fields * field_bytes,
            },
            BudgetItem {
                name: "state machine".into(),
                detail: "state tag + latched headings".into(),
                bytes: FSM_BYTES,
            },
            BudgetItem {
                name: "counters".into(),
                detail: "frame counter + next field id".into(),
                bytes: 16,
            },
        ];
        BudgetReport {
            precision: self.config.precision,
            items,
            timing: TimingStats::from_samples(samples),
        }
    }
}

const FSM_BYTES: usize = 40;

/// Field slots reserved in the memory budget.
pub const FIELD_SANITY_BOUND: usize = 8;

fn attention_field_bytes(d: usize) -> usize {
    // id u64 + cx, cy f64 + history f64 * d + age u32 (padded)
    8 + 16 + 8 * d + 8
}

/// Upper bound on live fields for a given half-side.
pub fn max_field_count(r_af: usize) -> usize {
    let side = 2 * r_af + 1;
    PIXELS.div_ceil(side * side) + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetItem {
    pub name: String,
    pub detail: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimingStats {
    pub frames: usize,
    pub min_ms: f64,
    pub mean_ms: f64,
    pub max_ms: f64,
}

impl TimingStats {
    pub fn from_samples(samples: &[Duration]) -> Self {
        if samples.is_empty() {
            return TimingStats::default();
        }
        let ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        TimingStats {
            frames: ms.len(),
            min_ms: ms.iter().cloned().fold(f64::INFINITY, f64::min),
            mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
            max_ms: ms.iter().cloned().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub precision: Precision,
    pub items: Vec<BudgetItem>,
    pub timing: TimingStats,
}

/// Reference figure quoted for the embedded build, bytes.
pub const EMBEDDED_REFERENCE_BYTES: usize = 70 * 1024;
/// Real-time budget per frame at 30 fps, milliseconds.
pub const FRAME_BUDGET_MS: f64 = 33.33;

impl BudgetReport {
    pub fn total_bytes(&self) -> usize {
        self.items.iter().map(|i| i.bytes).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("item,detail,bytes\n");
        for i in &self.items {
            s.push_str(&format!("{},\"{}\",{}\n", i.name, i.detail, i.bytes));
        }
        s.push_str(&format!("total,,{}\n", self.total_bytes()));
        if self.timing.frames > 0 {
            s.push_str(&format!(
                "timing_frames,,{}\ntiming_min_ms,,{:.4}\ntiming_mean_ms,,{:.4}\ntiming_max_ms,,{:.4}\n",
                self.timing.frames, self.timing.min_ms, self.timing.mean_ms, self.timing.max_ms
            ));
        }
        s
    }
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = match self.precision {
            Precision::Float => "float",
            Precision::Compact => "compact",
        };
        writeln!(f, "persistent pipeline state ({prec} channels)")?;
        writeln!(f, "{:<18} {:<48} {:>10}", "item", "layout", "bytes")?;
        for i in &self.items {
            writeln!(f, "{:<18} {:<48} {:>10}", i.name, i.detail, i.bytes)?;
        }
        let total = self.total_bytes();
        writeln!(f, "{:<18} {:<48} {:>10}", "total", "", total)?;
        writeln!(
            f,
            "reference embedded footprint {} B; this layout is {:.1}% of it",
            EMBEDDED_REFERENCE_BYTES,
            100.0 * total as f64 / EMBEDDED_REFERENCE_BYTES as f64
        )?;
        if self.timing.frames > 0 {
            let t = &self.timing;
            writeln!(
                f,
                "latency over {} frames: min {:.3} ms, mean {:.3} ms, max {:.3} ms (budget {:.2} ms, margin {:.0}x on mean)",
                t.frames,
                t.min_ms,
                t.mean_ms,
                t.max_ms,
                FRAME_BUDGET_MS,
                FRAME_BUDGET_MS / t.mean_ms.max(1e-9)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus;

    fn pipeline() -> Pipeline {
        Pipeline::new(PipelineConfig::default()).unwrap()
    }

    #[test]
    fn first_frame_wanders_with_zero_response() {
        let mut p = pipeline();
        let out = p.process_frame(&Frame::filled(WIDTH, HEIGHT, 0, 120), 0.0).unwrap();
        assert_eq!(out.state, FsmState::Wander);
        assert_eq!(out.command, MotorCommand { linear: 10.0, angular: 0.0 });
        assert_eq!(out.summary, ThreatSummary::quiet());
        assert!(!out.warm);
    }

    #[test]
    fn static_scene_wanders_forever() {
        let mut p = pipeline();
        let f = stimulus::checkerboard(0, 9, 40, 200);
        for i in 0..50 {
            let mut g = f.clone();
            g.set_index(i);
            let out = p.process_frame(&g, 0.0).unwrap();
            assert_eq!(out.state, FsmState::Wander);
            assert_eq!(out.summary.raw_sum, 0.0);
        }
        assert!(p.fields().is_empty());
    }

    #[test]
    fn rejects_wrong_dimensions_without_state_change() {
        let mut p = pipeline();
        p.process_frame(&Frame::filled(WIDTH, HEIGHT, 0, 1), 0.0).unwrap();
        let before = p.frames_processed();
        assert!(p.process_frame(&Frame::filled(10, 10, 1, 1), 0.0).is_err());
        assert_eq!(p.frames_processed(), before);
    }

    #[test]
    fn looming_disc_triggers_takeoff() {
        let mut p = pipeline();
        let frames = stimulus::looming_disc(40, 49.0, 36.0, 3.0, 30.0, 30, 200);
        let mut took_off = false;
        for f in &frames {
            let out = p.process_frame(f, 0.0).unwrap();
            took_off |= out.state.is_takeoff() || matches!(out.state, FsmState::Escape { .. });
        }
        assert!(took_off);
    }

    #[test]
    fn trace_matches_standalone_stages() {
        let frames = stimulus::looming_disc(12, 40.0, 30.0, 4.0, 20.0, 30, 210);
        let mut p = pipeline();
        let mut prev: Option<&Frame> = None;
        let mut prev_channels: Option<ChannelPair> = None;
        for f in &frames {
            let (_, t) = p.process_frame_traced(f, 0.0).unwrap();
            if let Some(pf) = prev {
                let d = frontend::retina_diff(pf, f).unwrap();
                assert_eq!(t.diff, d);
                let c = frontend::rectify(&d, 0.25);
                assert_eq!(t.channels, c);
                let s = frontend::smooth_pair(&c);
                assert_eq!(t.smoothed, s);
                assert_eq!(t.saliency, attention::saliency(&s));
                if let Some(pc) = &prev_channels {
                    let lm = motion::motion_maps(&c, pc, 3, 1, Default::default());
                    assert_eq!(t.motion, lm);
                }
                prev_channels = Some(c);
            } else {
                prev_channels = Some(ChannelPair::zeros(WIDTH, HEIGHT));
            }
            prev = Some(f);
        }
    }

    #[test]
    fn reprocessing_is_bit_reproducible() {
        let frames = stimulus::looming_disc(25, 60.0, 40.0, 3.0, 25.0, 20, 220);
        let run = || {
            let mut p = pipeline();
            frames
                .iter()
                .map(|f| {
                    let o = p.process_frame(f, 0.0).unwrap();
                    (o.summary.raw_sum.to_bits(), o.state.name(), o.fields.len())
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn compact_and_float_agree_on_integer_frames() {
        let frames = stimulus::looming_disc(25, 49.0, 36.0, 3.0, 25.0, 20, 220);
        let mut cfg = PipelineConfig::default();
        let mut a = Pipeline::new(cfg).unwrap();
        cfg.precision = Precision::Compact;
        let mut b = Pipeline::new(cfg).unwrap();
        for f in &frames {
            let oa = a.process_frame(f, 0.0).unwrap();
            let ob = b.process_frame(f, 0.0).unwrap();
            assert_eq!(oa.summary, ob.summary);
        }
    }

    #[test]
    fn budget_report_examples() {
        let mut cfg = PipelineConfig::default();
        cfg.precision = Precision::Compact;
        let compact = Pipeline::new(cfg).unwrap().budget_report(&[]);
        assert!(compact.total_bytes() <= 100_000);
        assert_eq!(compact.items[0].bytes, 7128);
        assert_eq!(
            compact.total_bytes(),
            compact.items.iter().map(|i| i.bytes).sum::<usize>()
        );
        let float = pipeline().budget_report(&[]);
        assert!(float.total_bytes() > compact.total_bytes());
        let text = compact.to_string();
        assert!(text.contains("HRC delay line"));
        assert!(compact.to_csv().starts_with("item,detail,bytes\n"));
    }
}
