//! The event transformation ζ and its perturbation models.
//!
//! A pair of consecutive intensity frames is converted into a ternary event
//! frame: per pixel, the change in log intensity is compared against a
//! contrast threshold `C`, firing `+1` (brightening), `-1` (darkening) or `0`.
//! Before differencing, the previous frame is offset by one pixel
//! (clamp-to-edge) so static scene edges still fire, and optional per-pixel
//! Gaussian noise on the log difference models sensor imperfections.
//!
//! All operations here are pure functions of their inputs (plus an explicit
//! seeded noise source), so sequences can be converted frame-parallel with
//! per-frame seed streams.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// H×W×3 RGB frame, row-major, channels interleaved, values in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct RgbFrame {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl RgbFrame {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::shape(format!(
                "rgb frame data length {} != {}x{}x3",
                data.len(),
                height,
                width
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::validation("rgb values must be finite and in [0,1]"));
        }
        Ok(RgbFrame {
            height,
            width,
            data,
        })
    }

    pub fn pixel(&self, u: usize, v: usize) -> [f64; 3] {
        let i = (u * self.width + v) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// H×W scalar luminance grid in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityFrame {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl IntensityFrame {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "intensity frame data length {} != {}x{}",
                data.len(),
                height,
                width
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::validation(
                "intensity values must be finite and in [0,1]",
            ));
        }
        Ok(IntensityFrame {
            height,
            width,
            data,
        })
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.width + v]
    }
}

/// H×W natural-log intensity grid; values bounded below by `ln(log_floor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFrame {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl LogFrame {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.width + v]
    }
}

/// H×W ternary event grid; every value is exactly -1, 0 or +1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFrame {
    pub height: usize,
    pub width: usize,
    pub data: Vec<i8>,
}

impl EventFrame {
    pub fn new(height: usize, width: usize, data: Vec<i8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "event frame data length {} != {}x{}",
                data.len(),
                height,
                width
            )));
        }
        if data.iter().any(|v| !matches!(v, -1 | 0 | 1)) {
            return Err(Error::validation("event values must be in {-1,0,+1}"));
        }
        Ok(EventFrame {
            height,
            width,
            data,
        })
    }

    pub fn get(&self, u: usize, v: usize) -> i8 {
        self.data[u * self.width + v]
    }

    /// Count of nonzero (active) pixels.
    pub fn active_count(&self) -> usize {
        self.data.iter().filter(|v| **v != 0).count()
    }
}

/// Everything parameterizing the transformation ζ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCodecConfig {
    /// Contrast threshold C in log-intensity units.
    pub threshold_c: f64,
    /// (du, dv) offset applied to the previous frame before differencing.
    pub shift: (i32, i32),
    /// Intensities are clamped up to this before taking the log.
    pub log_floor: f64,
    /// Standard deviation of additive Gaussian noise on the log difference.
    pub noise_sigma: f64,
}

impl Default for EventCodecConfig {
    fn default() -> Self {
        EventCodecConfig {
            threshold_c: 0.2,
            shift: (1, 1),
            log_floor: 1.0 / 255.0,
            noise_sigma: 0.0,
        }
    }
}

impl EventCodecConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_c > 0.0) || !self.threshold_c.is_finite() {
            return Err(Error::validation("threshold_c must be positive"));
        }
        if !(self.log_floor > 0.0 && self.log_floor < 1.0) {
            return Err(Error::validation("log_floor must be in (0,1)"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::validation("noise_sigma must be nonnegative"));
        }
        Ok(())
    }
}

/// Brightness perturbation I' = clamp(αI + β + η, 0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinePerturbation {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

impl AffinePerturbation {
    pub fn identity() -> Self {
        AffinePerturbation {
            alpha: 1.0,
            beta: 0.0,
            eta: 0.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.alpha == 1.0 && self.beta == 0.0 && self.eta == 0.0
    }
}

/// BT.601 luminance reduction, clamped to [0,1].
pub fn rgb_to_luminance(rgb: &RgbFrame) -> Result<IntensityFrame> {
    if rgb.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite rgb input"));
    }
    let data = rgb
        .data
        .chunks_exact(3)
        .map(|p| (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).clamp(0.0, 1.0))
        .collect();
    IntensityFrame::new(rgb.height, rgb.width, data)
}

/// Per pixel, `L = ln(max(I, log_floor))`.
pub fn log_intensity(frame: &IntensityFrame, log_floor: f64) -> Result<LogFrame> {
    if !(log_floor > 0.0 && log_floor < 1.0) {
        return Err(Error::validation("log_floor must be in (0,1)"));
    }
    let data = frame.data.iter().map(|i| i.max(log_floor).ln()).collect();
    Ok(LogFrame {
        height: frame.height,
        width: frame.width,
        data,
    })
}

/// Resample `prev` at `(u+du, v+dv)` with clamp-to-edge borders.
pub fn shift_previous(prev: &LogFrame, shift: (i32, i32)) -> Result<LogFrame> {
    let (du, dv) = shift;
    let min_dim = prev.height.min(prev.width) as i32;
    if du.abs() >= min_dim || dv.abs() >= min_dim {
        return Err(Error::validation(format!(
            "shift ({du},{dv}) too large for {}x{} frame",
            prev.height, prev.width
        )));
    }
    let mut data = Vec::with_capacity(prev.data.len());
    for u in 0..prev.height as i32 {
        let su = (u + du).clamp(0, prev.height as i32 - 1) as usize;
        for v in 0..prev.width as i32 {
            let sv = (v + dv).clamp(0, prev.width as i32 - 1) as usize;
            data.push(prev.get(su, sv));
        }
    }
    Ok(LogFrame {
        height: prev.height,
        width: prev.width,
        data,
    })
}

/// Threshold the (optionally noisy) log difference into a ternary event frame.
///
/// Per pixel: Δ = L_t - L_{t-1} + n with n ~ N(0, σ²); fires +1 when Δ ≥ C,
/// -1 when Δ ≤ -C, 0 otherwise. Comparisons are inclusive. Deterministic for
/// a given noise source state.
pub fn event_transform<R: Rng>(
    curr: &LogFrame,
    prev_shifted: &LogFrame,
    threshold_c: f64,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<EventFrame> {
    if curr.height != prev_shifted.height || curr.width != prev_shifted.width {
        return Err(Error::shape(format!(
            "event_transform: {}x{} vs {}x{}",
            curr.height, curr.width, prev_shifted.height, prev_shifted.width
        )));
    }
    if !(threshold_c > 0.0) {
        return Err(Error::validation("threshold_c must be positive"));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::validation("noise_sigma must be nonnegative"));
    }
    let normal = if noise_sigma > 0.0 {
        Some(Normal::new(0.0, noise_sigma).expect("valid sigma"))
    } else {
        None
    };
    let data = curr
        .data
        .iter()
        .zip(&prev_shifted.data)
        .map(|(lt, lp)| {
            let mut delta = lt - lp;
            if let Some(n) = &normal {
                delta += n.sample(rng);
            }
            if delta >= threshold_c {
                1
            } else if delta <= -threshold_c {
                -1
            } else {
                0
            }
        })
        .collect();
    Ok(EventFrame {
        height: curr.height,
        width: curr.width,
        data,
    })
}

/// I' = clamp(αI + β + η, 0, 1) per pixel.
pub fn affine_perturb(frame: &IntensityFrame, p: &AffinePerturbation) -> Result<IntensityFrame> {
    if !(p.alpha > 0.0) {
        return Err(Error::validation("alpha must be positive"));
    }
    let data = frame
        .data
        .iter()
        .map(|i| (p.alpha * i + p.beta + p.eta).clamp(0.0, 1.0))
        .collect();
    IntensityFrame::new(frame.height, frame.width, data)
}

/// Apply the same affine map to every channel of an RGB frame.
pub fn affine_perturb_rgb(frame: &RgbFrame, p: &AffinePerturbation) -> Result<RgbFrame> {
    if !(p.alpha > 0.0) {
        return Err(Error::validation("alpha must be positive"));
    }
    let data = frame
        .data
        .iter()
        .map(|c| (p.alpha * c + p.beta + p.eta).clamp(0.0, 1.0))
        .collect();
    RgbFrame::new(frame.height, frame.width, data)
}

/// Split a ternary frame into two indicator channels (positive, negative),
/// returned as a flat `[2, H, W]` grid.
pub fn to_two_channel(ev: &EventFrame) -> Vec<f64> {
    let n = ev.height * ev.width;
    let mut out = vec![0.0; 2 * n];
    for (i, v) in ev.data.iter().enumerate() {
        match v {
            1 => out[i] = 1.0,
            -1 => out[n + i] = 1.0,
            _ => {}
        }
    }
    out
}

/// Convert the (current, previous) frame pair at `frame_index` of a stream.
///
/// The noise stream for each frame pair is derived from `(seed, frame_index)`
/// so conversions are order-independent and reproducible. With
/// `noise_sigma = 0` no random numbers are drawn at all.
pub fn convert_pair(
    curr: &IntensityFrame,
    prev: &IntensityFrame,
    cfg: &EventCodecConfig,
    seed: u64,
    frame_index: u64,
) -> Result<EventFrame> {
    cfg.validate()?;
    let lc = log_intensity(curr, cfg.log_floor)?;
    let lp = log_intensity(prev, cfg.log_floor)?;
    let lp = shift_previous(&lp, cfg.shift)?;
    let mut noise_rng = rng::stream(seed, "event-noise", frame_index);
    event_transform(&lc, &lp, cfg.threshold_c, cfg.noise_sigma, &mut noise_rng)
}

/// Convert an ordered RGB sequence into `len - 1` event frames.
pub fn convert_sequence(
    frames: &[RgbFrame],
    cfg: &EventCodecConfig,
    seed: u64,
) -> Result<Vec<EventFrame>> {
    if frames.len() < 2 {
        return Err(Error::validation("convert_sequence needs at least 2 frames"));
    }
    let (h, w) = (frames[0].height, frames[0].width);
    for (k, f) in frames.iter().enumerate() {
        if f.height != h || f.width != w {
            return Err(Error::shape(format!(
                "frame {k} is {}x{}, expected {h}x{w}",
                f.height, f.width
            )));
        }
    }
    let lum: Vec<IntensityFrame> = frames
        .iter()
        .map(rgb_to_luminance)
        .collect::<Result<_>>()?;
    (1..frames.len())
        .map(|k| convert_pair(&lum[k], &lum[k - 1], cfg, seed, (k - 1) as u64))
        .collect()
}
