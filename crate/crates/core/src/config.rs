//! Run configuration and its `key = value` text form.
//!
//! [`KEYS`] is the single table of keys, defaults and descriptions; the CLI
//! help and the README table are generated from it.

use alloc::format;
use alloc::string::{String, ToString};
use core::str::FromStr;

use crate::association::NmsOrder;
use crate::geometry::IouKind;
use crate::motion::KalmanConfig;
use crate::oracle::{SyntheticParams, DEFAULT_RESPONSE_GAIN};
use crate::{Error, Result};

/// Similarity used when matching results to ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSimilarity {
    Iou3d,
    IouBev,
    Iou2d,
}

impl EvalSimilarity {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalSimilarity::Iou3d => "3d",
            EvalSimilarity::IouBev => "bev",
            EvalSimilarity::Iou2d => "2d",
        }
    }
}

impl FromStr for EvalSimilarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3d" => Ok(EvalSimilarity::Iou3d),
            "bev" => Ok(EvalSimilarity::IouBev),
            "2d" => Ok(EvalSimilarity::Iou2d),
            _ => Err(Error::Config(format!("unknown similarity {s:?} (3d|bev|2d)"))),
        }
    }
}

/// When joint NMS lets a surviving detection continue a trajectory it
/// suppressed, instead of spawning a new track.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handover {
    /// Only with regressors whose trajectory confidence cannot exceed the
    /// overlapping detection's score (stored-detection replay).
    Auto,
    On,
    Off,
}

impl Handover {
    pub fn as_str(self) -> &'static str {
        match self {
            Handover::Auto => "auto",
            Handover::On => "on",
            Handover::Off => "off",
        }
    }

    /// Resolves `Auto` against the regressor in use.
    pub fn enabled(self, regressor_refines: bool) -> bool {
        match self {
            Handover::Auto => !regressor_refines,
            Handover::On => true,
            Handover::Off => false,
        }
    }
}

impl FromStr for Handover {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Handover::Auto),
            "on" | "true" => Ok(Handover::On),
            "off" | "false" => Ok(Handover::Off),
            _ => Err(Error::Config(format!("unknown handover mode {s:?} (auto|on|off)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n_hist: usize,
    pub use_features: bool,
    pub use_2d: bool,
    pub nms_order: NmsOrder,
    pub nms_iou_threshold: f64,
    pub nms_iou_kind: IouKind,
    pub nms_handover: Handover,
    pub det_score_threshold: f64,
    pub keep_threshold: f64,
    pub min_hits: u32,
    pub max_age: u32,
    pub postprocess_remote: bool,
    pub remote_threshold: f64,
    pub kalman: KalmanConfig,
    pub seed: u64,
    pub feature_dim: usize,
    pub feature_noise: f64,
    pub score_noise: f64,
    pub response_gain: f64,
    pub eval_iou_threshold: f64,
    pub eval_similarity: EvalSimilarity,
    pub trace: bool,
}

impl Default for Config {
    fn default() -> Self {
        let kalman = KalmanConfig::default();
        Config {
            n_hist: 1,
            use_features: true,
            use_2d: true,
            nms_order: NmsOrder::Descending,
            nms_iou_threshold: 0.1,
            nms_iou_kind: IouKind::Bev,
            nms_handover: Handover::Auto,
            det_score_threshold: 0.0,
            keep_threshold: 0.5,
            min_hits: 3,
            max_age: 2,
            postprocess_remote: true,
            remote_threshold: 0.5,
            kalman,
            seed: 0,
            feature_dim: 8,
            feature_noise: 0.02,
            score_noise: 0.02,
            response_gain: DEFAULT_RESPONSE_GAIN,
            eval_iou_threshold: 0.25,
            eval_similarity: EvalSimilarity::Iou3d,
            trace: false,
        }
    }
}

/// One documented configuration key.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub const KEYS: &[KeySpec] = &[
    KeySpec { name: "n_hist", default: "1", help: "history window (frames) shared by feature memory and confidence means; 0 disables history" },
    KeySpec { name: "use_features", default: "true", help: "blend historical features before scoring when the 3D oracle provides features" },
    KeySpec { name: "use_2d", default: "true", help: "enable the 2D confidence branch" },
    KeySpec { name: "nms_order", default: "descending", help: "joint NMS order: descending | ascending | unordered" },
    KeySpec { name: "nms_iou_threshold", default: "0.1", help: "IoU at or above which candidates suppress each other" },
    KeySpec { name: "nms_iou_kind", default: "bev", help: "IoU used by NMS: bev | 3d" },
    KeySpec { name: "nms_handover", default: "auto", help: "auto|on|off: a detection that suppresses a trajectory continues it instead of spawning; auto enables it for stored-detection replay" },
    KeySpec { name: "det_score_threshold", default: "0.0", help: "detections scoring below this are dropped before NMS" },
    KeySpec { name: "keep_threshold", default: "0.5", help: "fused 3D confidence at which a surviving trajectory counts as matched without a detection" },
    KeySpec { name: "min_hits", default: "3", help: "matched frames needed to confirm a track" },
    KeySpec { name: "max_age", default: "2", help: "a track dies once its consecutive misses exceed this" },
    KeySpec { name: "postprocess_remote", default: "true", help: "keep 3D-unmatched tracks alive when their current 2D confidence passes remote_threshold" },
    KeySpec { name: "remote_threshold", default: "0.5", help: "2D confidence threshold of the remote-object rule" },
    KeySpec { name: "kf_init_pose_var", default: "1.0", help: "initial variance of pose and size states" },
    KeySpec { name: "kf_init_vel_var", default: "10.0", help: "initial variance of velocity states" },
    KeySpec { name: "kf_process_pose_var", default: "0.01", help: "process noise on pose and size states" },
    KeySpec { name: "kf_process_vel_var", default: "0.01", help: "process noise on velocity states" },
    KeySpec { name: "kf_meas_var", default: "0.01", help: "measurement noise on every observed component" },
    KeySpec { name: "seed", default: "0", help: "seed for every random draw" },
    KeySpec { name: "feature_dim", default: "8", help: "synthetic oracle feature dimension" },
    KeySpec { name: "feature_noise", default: "0.02", help: "synthetic oracle feature noise (std dev)" },
    KeySpec { name: "score_noise", default: "0.02", help: "synthetic 2D confidence noise (std dev)" },
    KeySpec { name: "response_gain", default: "3.0", help: "synthetic detector response: confidence = clamp(gain * visible_fraction)" },
    KeySpec { name: "eval_iou_threshold", default: "0.25", help: "CLEAR matching similarity threshold" },
    KeySpec { name: "eval_similarity", default: "3d", help: "evaluation similarity: 3d | bev | 2d" },
    KeySpec { name: "trace", default: "false", help: "record the per-frame step trace" },
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key {key:?}: cannot parse {value:?}")))
}

fn parse_unit(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Config(format!("key {key:?}: {v} outside [0, 1]")));
    }
    Ok(v)
}

fn parse_nonneg(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("key {key:?}: {v} must be finite and >= 0")));
    }
    Ok(v)
}

fn parse_kind(key: &str, value: &str) -> Result<IouKind> {
    match value {
        "bev" => Ok(IouKind::Bev),
        "3d" => Ok(IouKind::ThreeD),
        _ => Err(Error::Config(format!("key {key:?}: expected bev or 3d, got {value:?}"))),
    }
}

impl Config {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_hist" => self.n_hist = parse(key, value)?,
            "use_features" => self.use_features = parse(key, value)?,
            "use_2d" => self.use_2d = parse(key, value)?,
            "nms_order" => self.nms_order = value.parse()?,
            "nms_iou_threshold" => self.nms_iou_threshold = parse_unit(key, value)?,
            "nms_iou_kind" => self.nms_iou_kind = parse_kind(key, value)?,
            "nms_handover" => self.nms_handover = value.parse()?,
            "det_score_threshold" => self.det_score_threshold = parse_unit(key, value)?,
            "keep_threshold" => self.keep_threshold = parse_unit(key, value)?,
            "min_hits" => self.min_hits = parse(key, value)?,
            "max_age" => self.max_age = parse(key, value)?,
            "postprocess_remote" => self.postprocess_remote = parse(key, value)?,
            "remote_threshold" => self.remote_threshold = parse_unit(key, value)?,
            "kf_init_pose_var" => self.kalman.init_pose_var = parse_nonneg(key, value)?,
            "kf_init_vel_var" => self.kalman.init_vel_var = parse_nonneg(key, value)?,
            "kf_process_pose_var" => self.kalman.process_pose_var = parse_nonneg(key, value)?,
            "kf_process_vel_var" => self.kalman.process_vel_var = parse_nonneg(key, value)?,
            "kf_meas_var" => self.kalman.meas_var = parse_nonneg(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "feature_dim" => self.feature_dim = parse(key, value)?,
            "feature_noise" => self.feature_noise = parse_nonneg(key, value)?,
            "score_noise" => self.score_noise = parse_nonneg(key, value)?,
            "response_gain" => self.response_gain = parse_nonneg(key, value)?,
            "eval_iou_threshold" => self.eval_iou_threshold = parse_unit(key, value)?,
            "eval_similarity" => self.eval_similarity = value.parse()?,
            "trace" => self.trace = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Current value of `key`, formatted the way [`Config::set`] reads it.
    pub fn get(&self, key: &str) -> Option<String> {
        let k = &self.kalman;
        Some(match key {
            "n_hist" => self.n_hist.to_string(),
            "use_features" => self.use_features.to_string(),
            "use_2d" => self.use_2d.to_string(),
            "nms_order" => self.nms_order.to_string(),
            "nms_iou_threshold" => self.nms_iou_threshold.to_string(),
            "nms_iou_kind" => match self.nms_iou_kind {
                IouKind::Bev => "bev".to_string(),
                IouKind::ThreeD => "3d".to_string(),
            },
            "nms_handover" => self.nms_handover.as_str().to_string(),
            "det_score_threshold" => self.det_score_threshold.to_string(),
            "keep_threshold" => self.keep_threshold.to_string(),
            "min_hits" => self.min_hits.to_string(),
            "max_age" => self.max_age.to_string(),
            "postprocess_remote" => self.postprocess_remote.to_string(),
            "remote_threshold" => self.remote_threshold.to_string(),
            "kf_init_pose_var" => k.init_pose_var.to_string(),
            "kf_init_vel_var" => k.init_vel_var.to_string(),
            "kf_process_pose_var" => k.process_pose_var.to_string(),
            "kf_process_vel_var" => k.process_vel_var.to_string(),
            "kf_meas_var" => k.meas_var.to_string(),
            "seed" => self.seed.to_string(),
            "feature_dim" => self.feature_dim.to_string(),
            "feature_noise" => self.feature_noise.to_string(),
            "score_noise" => self.score_noise.to_string(),
            "response_gain" => self.response_gain.to_string(),
            "eval_iou_threshold" => self.eval_iou_threshold.to_string(),
            "eval_similarity" => self.eval_similarity.as_str().to_string(),
            "trace" => self.trace.to_string(),
            _ => return None,
        })
    }

    /// Applies one `key = value` line. Blank lines and `#` comments are
    /// accepted and change nothing.
    pub fn apply_line(&mut self, raw: &str) -> Result<()> {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return Ok(());
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(String::from("expected `key = value`")))?;
        self.set(key.trim(), value.trim())
    }

    /// Parses `key = value` lines over the defaults. Errors carry the
    /// 1-based line number.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (no, raw) in text.lines().enumerate() {
            cfg.apply_line(raw).map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    /// `key = value` dump of every key, readable by [`Config::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            s.push_str(k.name);
            s.push_str(" = ");
            s.push_str(&self.get(k.name).unwrap_or_default());
            s.push('\n');
        }
        s
    }

    pub fn synthetic_params(&self) -> SyntheticParams {
        SyntheticParams {
            seed: self.seed,
            feature_dim: self.feature_dim,
            feature_noise: self.feature_noise,
            score_noise: self.score_noise,
            response_gain: self.response_gain,
        }
    }
}
