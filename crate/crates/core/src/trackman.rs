//! Track lifecycle: birth, tentative → confirmed → dead, and the
//! remote-object rule that lets a confident 2D score stand in for missing
//! 3D evidence.

use alloc::vec::Vec;

use crate::fusion::{ConfidenceHistory, FeatureMemory};
use crate::geometry::{Box2D, Box3D};
use crate::motion::{kf_init, KalmanConfig, KalmanState};
use crate::oracle::{Category, Detection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lifecycle {
    Tentative,
    Confirmed,
    Dead,
}

/// One emitted `(frame, track)` result.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub frame: u32,
    pub track_id: u32,
    pub category: Category,
    pub box3d: Box3D,
    pub box2d: Option<Box2D>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u32,
    pub kstate: KalmanState,
    pub lifecycle: Lifecycle,
    pub hits: u32,
    pub misses: u32,
    pub feature_mem: FeatureMemory,
    pub conf_hist: ConfidenceHistory,
    pub last_regressed_box: Box3D,
    pub last_s_f: f64,
    pub category: Category,
    /// Rows produced while tentative, flushed on confirmation.
    pub pending: Vec<ResultRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LifecycleParams {
    pub min_hits: u32,
    pub max_age: u32,
}

impl Default for LifecycleParams {
    fn default() -> Self {
        LifecycleParams {
            min_hits: 3,
            max_age: 2,
        }
    }
}

impl Track {
    pub fn is_alive(&self) -> bool {
        self.lifecycle != Lifecycle::Dead
    }
}

/// One tentative track per detection with consecutive ids from `next_id`,
/// which is advanced past the last id handed out.
pub fn spawn_tracks(
    detections: &[Detection],
    next_id: &mut u32,
    n_hist: usize,
    kalman: &KalmanConfig,
    params: &LifecycleParams,
) -> Vec<Track> {
    detections
        .iter()
        .map(|d| {
            let id = *next_id;
            *next_id += 1;
            Track {
                id,
                kstate: kf_init(&d.box3d, kalman),
                lifecycle: if params.min_hits <= 1 {
                    Lifecycle::Confirmed
                } else {
                    Lifecycle::Tentative
                },
                hits: 1,
                misses: 0,
                feature_mem: FeatureMemory::new(n_hist),
                conf_hist: ConfidenceHistory::new(n_hist),
                last_regressed_box: d.box3d,
                last_s_f: d.score,
                category: d.category,
                pending: Vec::new(),
            }
        })
        .collect()
}

pub fn step_lifecycle(mut t: Track, matched: bool, params: &LifecycleParams) -> Track {
    if t.lifecycle == Lifecycle::Dead {
        return t;
    }
    if matched {
        t.hits += 1;
        t.misses = 0;
        if t.lifecycle == Lifecycle::Tentative && t.hits >= params.min_hits {
            t.lifecycle = Lifecycle::Confirmed;
        }
    } else {
        t.misses += 1;
        if t.misses > params.max_age {
            t.lifecycle = Lifecycle::Dead;
        }
    }
    t
}

/// Remote-object rule for a track without 3D evidence this frame.
///
/// Returns the track and whether the rule fired; when it fires the frame
/// counts as matched and the track is forced to confirmed.
pub fn postprocess_remote(mut t: Track, s_2d: Option<f64>, threshold: f64) -> (Track, bool) {
    match s_2d {
        Some(s) if s >= threshold && t.lifecycle != Lifecycle::Dead => {
            t.hits += 1;
            t.misses = 0;
            t.lifecycle = Lifecycle::Confirmed;
            (t, true)
        }
        _ => (t, false),
    }
}
