//! On-demand estimation trigger.
//!
//! Each frame is compared with its predecessor; it is dynamic (raw state 1)
//! when more than `rho` of its pixels changed by more than `tau_p`. Raw states
//! enter a backward window of `n_bf` entries and the filtered state is the
//! window maximum, so it only drops to static after `n_bf` consecutive static
//! frames. Estimation is triggered on the falling edge of the filtered state.
//!
//! The window starts filled with 1s and the first frame counts as dynamic, so
//! the first sustained static scene also triggers.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::GrayFrame;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TriggerError {
    #[error("frame is {actual_w}x{actual_h}, previous frame was {width}x{height}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        actual_w: usize,
        actual_h: usize,
    },
    #[error("invalid trigger config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TriggerConfig {
    /// Per-pixel absolute difference threshold.
    pub tau_p: u8,
    /// Changed-pixel fraction above which a frame is dynamic.
    pub rho: f64,
    /// Backward window length.
    pub n_bf: usize,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            tau_p: 15,
            rho: 0.02,
            n_bf: 30,
        }
    }
}

impl TriggerConfig {
    pub fn validate(&self) -> Result<(), TriggerError> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(TriggerError::InvalidConfig(format!(
                "rho must be in [0, 1], got {}",
                self.rho
            )));
        }
        if self.n_bf == 0 {
            return Err(TriggerError::InvalidConfig("n_bf must be >= 1".into()));
        }
        Ok(())
    }
}

/// Fraction of pixels whose absolute change exceeds `tau_p`.
pub fn frame_difference(prev: &GrayFrame, cur: &GrayFrame, tau_p: u8) -> Result<f64, TriggerError> {
    if prev.width() != cur.width() || prev.height() != cur.height() {
        return Err(TriggerError::DimensionMismatch {
            width: prev.width(),
            height: prev.height(),
            actual_w: cur.width(),
            actual_h: cur.height(),
        });
    }
    let changed = prev
        .data()
        .iter()
        .zip(cur.data())
        .filter(|(&a, &b)| a.abs_diff(b) > tau_p)
        .count();
    Ok(changed as f64 / prev.data().len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriggerEvent {
    Trigger,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub frame_index: usize,
    pub raw: bool,
    pub filtered: bool,
    pub event: Option<TriggerEvent>,
}

/// Sequential trigger state machine. One consumer feeds frames in order.
#[derive(Debug, Clone)]
pub struct TriggerState {
    window: VecDeque<bool>,
    n_bf: usize,
    s_hat_prev: bool,
    prev_frame: Option<GrayFrame>,
    frames_seen: usize,
}

impl TriggerState {
    pub fn new(n_bf: usize) -> Self {
        assert!(n_bf >= 1, "backward window must hold at least one state");
        Self {
            window: std::iter::repeat_n(true, n_bf).collect(),
            n_bf,
            s_hat_prev: true,
            prev_frame: None,
            frames_seen: 0,
        }
    }

    pub fn window(&self) -> &VecDeque<bool> {
        &self.window
    }

    pub fn filtered(&self) -> bool {
        self.s_hat_prev
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    /// Advances the window with an externally computed raw state.
    pub fn push_raw(&mut self, raw: bool) -> StepOutcome {
        self.window.pop_front();
        self.window.push_back(raw);
        debug_assert_eq!(self.window.len(), self.n_bf);
        let filtered = self.window.iter().any(|&s| s);
        let event = (!filtered && self.s_hat_prev).then_some(TriggerEvent::Trigger);
        self.s_hat_prev = filtered;
        let frame_index = self.frames_seen;
        self.frames_seen += 1;
        StepOutcome {
            frame_index,
            raw,
            filtered,
            event,
        }
    }

    pub fn step(&mut self, frame: &GrayFrame, config: &TriggerConfig) -> Result<StepOutcome, TriggerError> {
        let raw = match &self.prev_frame {
            None => true,
            Some(prev) => frame_difference(prev, frame, config.tau_p)? > config.rho,
        };
        self.prev_frame = Some(frame.clone());
        Ok(self.push_raw(raw))
    }
}

/// Runs a whole stream through a fresh state machine.
pub fn run_trigger<'a>(
    frames: impl IntoIterator<Item = &'a GrayFrame>,
    config: &TriggerConfig,
) -> Result<Vec<StepOutcome>, TriggerError> {
    config.validate()?;
    let mut state = TriggerState::new(config.n_bf);
    frames.into_iter().map(|f| state.step(f, config)).collect()
}

pub fn trigger_frames(outcomes: &[StepOutcome]) -> Vec<usize> {
    outcomes
        .iter()
        .filter(|o| o.event.is_some())
        .map(|o| o.frame_index)
        .collect()
}
