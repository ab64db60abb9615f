//! Stand-ins for the second stage of two-stage detectors.
//!
//! A 3D regressor takes trajectory proposals and returns, per proposal, a
//! refined box, a regression confidence and optionally a feature vector. A
//! 2D scorer returns one confidence per projected proposal. Two families are
//! provided: replay oracles answering from stored detections through an
//! IoU-weighted proxy rule, and synthetic oracles answering from simulated
//! ground truth.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::geometry::{iou_2d, iou_bev, Box2D, Box3D, CameraCalib, FrameId};
use crate::math::{self, clamp01};
use crate::motion::EgoPose;
use crate::rng::Rng;
use crate::{Error, Result};

/// Object category. Different categories never interact in NMS and are
/// evaluated separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Car,
    Van,
    Truck,
    Pedestrian,
    Cyclist,
    Other,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Car => "Car",
            Category::Van => "Van",
            Category::Truck => "Truck",
            Category::Pedestrian => "Pedestrian",
            Category::Cyclist => "Cyclist",
            Category::Other => "Misc",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Car" | "car" => Category::Car,
            "Van" | "van" => Category::Van,
            "Truck" | "truck" => Category::Truck,
            "Pedestrian" | "pedestrian" => Category::Pedestrian,
            "Cyclist" | "cyclist" => Category::Cyclist,
            "Misc" | "misc" | "Other" | "other" => Category::Other,
            _ => return Err(Error::Config(alloc::format!("unknown category {s:?}"))),
        })
    }
}

/// One 3D detector output for the current frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub box3d: Box3D,
    pub score: f64,
    pub category: Category,
    pub feature: Option<Vec<f64>>,
    pub source_frame: u32,
}

/// One stored 2D detection (replay mode).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection2D {
    pub box2d: Box2D,
    pub score: f64,
    pub category: Category,
}

/// Simulated ground truth for one object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthObject {
    pub id: u32,
    pub category: Category,
    /// Box in the ego frame.
    pub box3d: Box3D,
    /// Fraction visible to the LiDAR (occlusion, FOV and range falloff).
    pub visible_3d: f64,
    /// Fraction visible in the image plane (occlusion and FOV only).
    pub visible_2d: f64,
    /// Projected image box, when in view.
    pub box2d: Option<Box2D>,
    /// Fixed unit embedding of the object.
    pub embedding: Vec<f64>,
}

/// Everything the tracker sees for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePacket {
    pub frame_index: u32,
    pub ego_pose: EgoPose,
    pub calib: CameraCalib,
    pub detections: Vec<Detection>,
    pub detections_2d: Vec<Detection2D>,
    pub image_size: (u32, u32),
    pub truth: Option<Vec<TruthObject>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResponse {
    pub refined_box: Option<Box3D>,
    pub confidence: f64,
    pub feature: Option<Vec<f64>>,
}

pub trait Regressor3d {
    /// Feature dimension, or `None` when this regressor produces no features.
    fn feature_dim(&self) -> Option<usize>;

    /// One response per proposal, in proposal order.
    fn regress_3d(&self, proposals: &[Box3D], ctx: &FramePacket) -> Result<Vec<OracleResponse>>;

    /// Scores a (fused) feature vector.
    fn head(&self, feature: &[f64]) -> Result<f64>;

    /// Whether a trajectory's confidence can exceed the score of the
    /// detection it overlaps, so that joint NMS can keep trajectories alive
    /// on its own.
    fn refines_confidence(&self) -> bool {
        true
    }
}

pub trait Scorer2d {
    fn score_2d(&self, proposals: &[Box2D], ctx: &FramePacket) -> Result<Vec<f64>>;
}

/// `head(f) = clamp(‖f‖, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormHead {
    pub dim: usize,
}

impl NormHead {
    pub fn score(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: f.len(),
            });
        }
        Ok(clamp01(math::sqrt(f.iter().map(|x| x * x).sum())))
    }
}

/// IoU below which a proposal counts as unmatched.
pub const MATCH_IOU: f64 = 0.1;
/// Confidence reported for unmatched proposals.
pub const UNMATCHED_CONFIDENCE: f64 = 0.05;

fn ensure_ego(proposals: &[Box3D]) -> Result<()> {
    match proposals.iter().find(|b| b.frame != FrameId::Ego) {
        Some(b) => Err(Error::FrameMismatch {
            left: b.frame,
            right: FrameId::Ego,
        }),
        None => Ok(()),
    }
}

/// Index and IoU of the best-overlapping box, ties to the lower index.
fn best_match<'a, I>(proposal: &Box3D, candidates: I) -> Result<Option<(usize, f64)>>
where
    I: Iterator<Item = &'a Box3D>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in candidates.enumerate() {
        let iou = iou_bev(proposal, b)?;
        if best.is_none_or(|(_, v)| iou > v) {
            best = Some((i, iou));
        }
    }
    Ok(best)
}

/// Replays the frame's stored detections: a proposal takes the box of its
/// best-overlapping detection and confidence `score × IoU`.
#[derive(Debug, Clone, Default)]
pub struct ReplayRegressor {
    pub feature_dim: Option<usize>,
}

impl Regressor3d for ReplayRegressor {
    fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    // score × IoU never beats the score itself
    fn refines_confidence(&self) -> bool {
        false
    }

    fn regress_3d(&self, proposals: &[Box3D], ctx: &FramePacket) -> Result<Vec<OracleResponse>> {
        ensure_ego(proposals)?;
        proposals
            .iter()
            .map(|p| {
                let m = best_match(p, ctx.detections.iter().map(|d| &d.box3d))?;
                Ok(match m {
                    Some((i, iou)) if iou >= MATCH_IOU => {
                        let d = &ctx.detections[i];
                        OracleResponse {
                            refined_box: Some(d.box3d),
                            confidence: clamp01(d.score * iou),
                            feature: d.feature.clone(),
                        }
                    }
                    _ => OracleResponse {
                        refined_box: Some(*p),
                        confidence: UNMATCHED_CONFIDENCE,
                        feature: None,
                    },
                })
            })
            .collect()
    }

    fn head(&self, feature: &[f64]) -> Result<f64> {
        let dim = self.feature_dim.unwrap_or(feature.len());
        NormHead { dim }.score(feature)
    }
}

/// Replay 2D scorer: `score × IoU` against the best stored 2D detection,
/// zero when nothing overlaps by at least [`MATCH_IOU`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ReplayScorer2d;

impl Scorer2d for ReplayScorer2d {
    fn score_2d(&self, proposals: &[Box2D], ctx: &FramePacket) -> Result<Vec<f64>> {
        Ok(proposals
            .iter()
            .map(|p| {
                let best = ctx
                    .detections_2d
                    .iter()
                    .map(|d| (iou_2d(p, &d.box2d), d.score))
                    .fold(None, |acc: Option<(f64, f64)>, x| match acc {
                        Some(a) if a.0 >= x.0 => Some(a),
                        _ => Some(x),
                    });
                match best {
                    Some((iou, score)) if iou >= MATCH_IOU => clamp01(score * iou),
                    _ => 0.0,
                }
            })
            .collect())
    }
}

/// Detector response to a visible fraction: `clamp(gain · v, 0, 1)`.
pub fn response(visible: f64, gain: f64) -> f64 {
    clamp01(gain * visible)
}

/// Parameters shared by the synthetic oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    pub seed: u64,
    pub feature_dim: usize,
    /// Standard deviation of the Gaussian feature noise.
    pub feature_noise: f64,
    /// Standard deviation of the 2D confidence noise.
    pub score_noise: f64,
    pub response_gain: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            seed: 0,
            feature_dim: 8,
            feature_noise: 0.02,
            score_noise: 0.02,
            response_gain: DEFAULT_RESPONSE_GAIN,
        }
    }
}

/// Saturation gain of the simulated detectors' response to visibility.
pub const DEFAULT_RESPONSE_GAIN: f64 = 3.0;

const STREAM_FEATURE: u64 = 0x3d;
const STREAM_SCORE_2D: u64 = 0x2d;

/// Synthetic 3D regressor: the feature is `r(v)·e + η` for the matched
/// object's embedding `e`, and the confidence is the head of that feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticRegressor {
    pub params: SyntheticParams,
}

impl SyntheticRegressor {
    pub fn new(params: SyntheticParams) -> Self {
        SyntheticRegressor { params }
    }

    fn truth<'a>(&self, ctx: &'a FramePacket) -> Result<&'a [TruthObject]> {
        ctx.truth.as_deref().ok_or_else(|| Error::Oracle {
            frame: ctx.frame_index,
            reason: String::from("synthetic oracle needs ground truth in the frame packet"),
        })
    }

    /// Feature the simulated detector extracts for `obj` in frame `frame`.
    pub fn feature_of(&self, obj: &TruthObject, frame: u32) -> Vec<f64> {
        let p = &self.params;
        let r = response(obj.visible_3d, p.response_gain);
        let mut rng = Rng::derived(p.seed, &[u64::from(frame), u64::from(obj.id), STREAM_FEATURE]);
        obj.embedding
            .iter()
            .map(|e| r * e + rng.gaussian(p.feature_noise))
            .collect()
    }
}

impl Regressor3d for SyntheticRegressor {
    fn feature_dim(&self) -> Option<usize> {
        Some(self.params.feature_dim)
    }

    fn regress_3d(&self, proposals: &[Box3D], ctx: &FramePacket) -> Result<Vec<OracleResponse>> {
        ensure_ego(proposals)?;
        if proposals.is_empty() {
            return Ok(Vec::new());
        }
        let truth = self.truth(ctx)?;
        proposals
            .iter()
            .map(|p| {
                let m = best_match(p, truth.iter().map(|t| &t.box3d))?;
                match m {
                    Some((i, iou)) if iou >= MATCH_IOU => {
                        let obj = &truth[i];
                        let feature = self.feature_of(obj, ctx.frame_index);
                        let confidence = self.head(&feature)?;
                        Ok(OracleResponse {
                            refined_box: Some(obj.box3d),
                            confidence,
                            feature: Some(feature),
                        })
                    }
                    _ => Ok(OracleResponse {
                        refined_box: Some(*p),
                        confidence: UNMATCHED_CONFIDENCE,
                        feature: None,
                    }),
                }
            })
            .collect()
    }

    fn head(&self, feature: &[f64]) -> Result<f64> {
        NormHead {
            dim: self.params.feature_dim,
        }
        .score(feature)
    }
}

/// Synthetic 2D scorer: response to the image-plane visible fraction of the
/// object whose projected box best overlaps the proposal, scaled by that
/// overlap so that misaligned boxes score low.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticScorer2d {
    pub params: SyntheticParams,
}

impl Scorer2d for SyntheticScorer2d {
    fn score_2d(&self, proposals: &[Box2D], ctx: &FramePacket) -> Result<Vec<f64>> {
        if proposals.is_empty() {
            return Ok(Vec::new());
        }
        let truth = ctx.truth.as_deref().ok_or_else(|| Error::Oracle {
            frame: ctx.frame_index,
            reason: String::from("synthetic 2D oracle needs ground truth in the frame packet"),
        })?;
        let p = &self.params;
        Ok(proposals
            .iter()
            .map(|prop| {
                let mut best: Option<(f64, &TruthObject)> = None;
                for t in truth {
                    if let Some(b) = &t.box2d {
                        let iou = iou_2d(prop, b);
                        if best.is_none_or(|(v, _)| iou > v) {
                            best = Some((iou, t));
                        }
                    }
                }
                match best {
                    Some((iou, t)) if iou >= MATCH_IOU => {
                        let mut rng = Rng::derived(
                            p.seed,
                            &[u64::from(ctx.frame_index), u64::from(t.id), STREAM_SCORE_2D],
                        );
                        clamp01(response(t.visible_2d, p.response_gain) * iou + rng.gaussian(p.score_noise))
                    }
                    _ => 0.0,
                }
            })
            .collect())
    }
}
