//! Per-frame orchestration.
//!
//! Steps, in order: predict and compensate, regress, fuse features, project
//! and score in 2D, fuse confidences, joint NMS, Kalman update, remote
//! post-processing, lifecycle and birth, history append.

use alloc::vec::Vec;

use crate::association::{joint_nms, CandidateRef, NmsCandidate};
use crate::config::Config;
use crate::fusion::{blend_and_score, fuse_conf_2d, fuse_conf_3d, fuse_final, historical_feature};
use crate::geometry::{project_box, Box2D, Box3D, FrameId};
use crate::motion::{ego_compensate, kf_predict, kf_update, EgoPose};
use crate::oracle::{Detection, FramePacket, OracleResponse, Regressor3d, Scorer2d};
use crate::trackman::{postprocess_remote, spawn_tracks, step_lifecycle, Lifecycle, LifecycleParams, ResultRow, Track};
use crate::{Error, Result};

/// The ten pipeline steps, as they appear in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    PredictCompensate,
    Regress3d,
    FeatureFusion,
    Project2d,
    ConfidenceFusion,
    JointNms,
    KalmanUpdate,
    RemotePostprocess,
    Lifecycle,
    HistoryAppend,
}

impl Step {
    pub const ALL: [Step; 10] = [
        Step::PredictCompensate,
        Step::Regress3d,
        Step::FeatureFusion,
        Step::Project2d,
        Step::ConfidenceFusion,
        Step::JointNms,
        Step::KalmanUpdate,
        Step::RemotePostprocess,
        Step::Lifecycle,
        Step::HistoryAppend,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Step::PredictCompensate => "predict_compensate",
            Step::Regress3d => "regress_3d",
            Step::FeatureFusion => "feature_fusion",
            Step::Project2d => "project_score_2d",
            Step::ConfidenceFusion => "confidence_fusion",
            Step::JointNms => "joint_nms",
            Step::KalmanUpdate => "kalman_update",
            Step::RemotePostprocess => "remote_postprocess",
            Step::Lifecycle => "lifecycle_spawn",
            Step::HistoryAppend => "history_append",
        }
    }
}

/// The regressors a run uses. `scorer_2d = None` runs 3D-only.
#[derive(Clone, Copy)]
pub struct Oracles<'a> {
    pub regressor: &'a dyn Regressor3d,
    pub scorer_2d: Option<&'a dyn Scorer2d>,
}

/// Confidence bookkeeping of one track in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackScore {
    pub track_id: u32,
    /// Raw 3D regression confidence of the proposal.
    pub raw_3d: f64,
    /// Confidence after historical feature fusion.
    pub feature_fused: f64,
    pub fused_3d: f64,
    pub fused_2d: Option<f64>,
    pub fused: f64,
    /// Score of the detection absorbed this frame, 0 when none.
    pub detection_score: f64,
    pub suppressed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameOutput {
    pub frame: u32,
    /// Rows emitted while processing this frame, including rows of tracks
    /// confirmed on this frame for their earlier tentative frames.
    pub rows: Vec<ResultRow>,
    pub scores: Vec<TrackScore>,
    pub trace: Vec<Step>,
    pub n_detections: usize,
    pub n_spawned: usize,
    pub n_suppressed: usize,
    pub n_remote_kept: usize,
}

/// Track table plus the state carried between frames.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: Config,
    tracks: Vec<Track>,
    next_id: u32,
    last_frame: Option<u32>,
    last_pose: Option<EgoPose>,
}

struct Working {
    response: OracleResponse,
    regressed: Box3D,
    feature_fused: f64,
    s2d_now: Option<f64>,
    fused_3d: f64,
    fused_2d: Option<f64>,
    fused: f64,
    absorbed: Option<usize>,
    survived: bool,
    matched_3d: bool,
    remote_kept: bool,
}

impl Tracker {
    pub fn new(config: Config) -> Self {
        Tracker {
            config,
            tracks: Vec::new(),
            next_id: 0,
            last_frame: None,
            last_pose: None,
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    fn lifecycle_params(&self) -> LifecycleParams {
        LifecycleParams {
            min_hits: self.config.min_hits,
            max_age: self.config.max_age,
        }
    }

    pub fn process_frame(&mut self, packet: &FramePacket, oracles: Oracles<'_>) -> Result<FrameOutput> {
        if let Some(last) = self.last_frame {
            if packet.frame_index != last + 1 {
                return Err(Error::FrameOrder {
                    expected: last + 1,
                    got: packet.frame_index,
                });
            }
        }
        let frame = packet.frame_index;
        let cfg = self.config.clone();
        let mut out = FrameOutput {
            frame,
            ..FrameOutput::default()
        };
        let trace = |s: Step, out: &mut FrameOutput| {
            if cfg.trace {
                out.trace.push(s);
            }
        };
        let with_frame = |e: Error| match e {
            Error::Oracle { .. } => e,
            other => Error::Oracle {
                frame,
                reason: alloc::format!("{other}"),
            },
        };

        // 1. predict into the current frame and compensate ego motion
        trace(Step::PredictCompensate, &mut out);
        for t in &mut self.tracks {
            let mut s = kf_predict(&t.kstate, &cfg.kalman);
            if let Some(prev) = &self.last_pose {
                s = ego_compensate(&s, prev, &packet.ego_pose);
            }
            t.kstate = s;
        }

        // 2. predicted boxes are the proposals
        trace(Step::Regress3d, &mut out);
        let proposals: Vec<Box3D> = self.tracks.iter().map(|t| t.kstate.to_box(FrameId::Ego)).collect();
        let responses = oracles.regressor.regress_3d(&proposals, packet).map_err(with_frame)?;
        if responses.len() != proposals.len() {
            return Err(Error::Oracle {
                frame,
                reason: alloc::format!("{} responses for {} proposals", responses.len(), proposals.len()),
            });
        }

        // 3. historical feature fusion
        trace(Step::FeatureFusion, &mut out);
        let mut work: Vec<Working> = Vec::with_capacity(self.tracks.len());
        for ((t, resp), prop) in self.tracks.iter().zip(responses).zip(&proposals) {
            let mut s_tilde = resp.confidence;
            if cfg.use_features && cfg.n_hist > 0 {
                if let (Some(f_t), Some(f_his)) = (&resp.feature, historical_feature(&t.feature_mem)) {
                    s_tilde = blend_and_score(&f_his, f_t, resp.confidence, |f| oracles.regressor.head(f))
                        .map_err(with_frame)?;
                }
            }
            let regressed = resp.refined_box.unwrap_or(*prop);
            work.push(Working {
                response: resp,
                regressed,
                feature_fused: s_tilde,
                s2d_now: None,
                fused_3d: 0.0,
                fused_2d: None,
                fused: 0.0,
                absorbed: None,
                survived: false,
                matched_3d: false,
                remote_kept: false,
            });
        }

        // 4. project regressed trajectories and score them in 2D
        trace(Step::Project2d, &mut out);
        if let (true, Some(scorer)) = (cfg.use_2d, oracles.scorer_2d) {
            let projected: Vec<(usize, Box2D)> = work
                .iter()
                .enumerate()
                .filter_map(|(i, w)| project_box(&w.regressed, &packet.calib).map(|b| (i, b)))
                .collect();
            let boxes: Vec<Box2D> = projected.iter().map(|(_, b)| *b).collect();
            let scores = scorer.score_2d(&boxes, packet).map_err(with_frame)?;
            if scores.len() != boxes.len() {
                return Err(Error::Oracle {
                    frame,
                    reason: alloc::format!("{} 2D scores for {} proposals", scores.len(), boxes.len()),
                });
            }
            for ((i, _), s) in projected.iter().zip(scores) {
                work[*i].s2d_now = Some(s);
            }
        }

        // 5. temporal and cross-modal confidence fusion
        trace(Step::ConfidenceFusion, &mut out);
        for (t, w) in self.tracks.iter().zip(work.iter_mut()) {
            w.fused_3d = fuse_conf_3d(&t.conf_hist, w.feature_fused);
            w.fused_2d = w.s2d_now.map(|s| fuse_conf_2d(&t.conf_hist, s));
            w.fused = fuse_final(w.fused_3d, w.fused_2d);
        }

        // 6. joint NMS over trajectories and detections
        trace(Step::JointNms, &mut out);
        let detections: Vec<&Detection> = packet
            .detections
            .iter()
            .filter(|d| d.score >= cfg.det_score_threshold)
            .collect();
        out.n_detections = detections.len();
        let mut candidates: Vec<NmsCandidate> = Vec::with_capacity(work.len() + detections.len());
        for (t, w) in self.tracks.iter().zip(&work) {
            candidates.push(NmsCandidate {
                box3d: w.regressed,
                score: w.fused,
                category: t.category,
                kind: CandidateRef::Trajectory(t.id),
            });
        }
        for (i, d) in detections.iter().enumerate() {
            candidates.push(NmsCandidate {
                box3d: d.box3d,
                score: d.score,
                category: d.category,
                kind: CandidateRef::Detection(i),
            });
        }
        let outcome = joint_nms(&candidates, cfg.nms_iou_threshold, cfg.nms_order, cfg.nms_iou_kind)
            .map_err(with_frame)?;
        for &(id, det) in &outcome.surviving_tracks {
            if let Some(i) = self.tracks.iter().position(|t| t.id == id) {
                work[i].survived = true;
                work[i].absorbed = det;
            }
        }
        out.n_suppressed = outcome.suppressed_tracks.len();
        let mut new_detections = outcome.new_detections.clone();
        if cfg.nms_handover.enabled(oracles.regressor.refines_confidence()) {
            for &(id, k) in &outcome.handovers {
                if let Some(i) = self.tracks.iter().position(|t| t.id == id) {
                    work[i].survived = true;
                    work[i].absorbed = Some(k);
                    new_detections.retain(|&d| d != k);
                }
            }
        }

        // 7. Kalman update: absorbed detection first, regressed box otherwise
        trace(Step::KalmanUpdate, &mut out);
        for (t, w) in self.tracks.iter_mut().zip(work.iter_mut()) {
            if !w.survived {
                continue;
            }
            w.matched_3d = w.absorbed.is_some() || w.fused_3d >= cfg.keep_threshold;
            let measurement = match w.absorbed {
                Some(i) => Some(detections[i].box3d),
                None if w.matched_3d => Some(w.regressed),
                None => None,
            };
            if let Some(z) = measurement {
                t.kstate = kf_update(&t.kstate, &z, &cfg.kalman).map_err(with_frame)?;
            }
            t.last_regressed_box = w.regressed;
        }

        // 8. remote objects: a confident 2D score keeps confirmed tracks that
        // lost 3D evidence
        trace(Step::RemotePostprocess, &mut out);
        if cfg.postprocess_remote {
            for (t, w) in self.tracks.iter_mut().zip(work.iter_mut()) {
                if !w.survived || w.matched_3d || t.lifecycle != Lifecycle::Confirmed {
                    continue;
                }
                let (kept, fired) = postprocess_remote(t.clone(), w.s2d_now, cfg.remote_threshold);
                *t = kept;
                if fired {
                    w.remote_kept = true;
                    out.n_remote_kept += 1;
                    t.kstate = kf_update(&t.kstate, &w.regressed, &cfg.kalman).map_err(with_frame)?;
                }
            }
        }

        // 9. lifecycle, emission and birth
        trace(Step::Lifecycle, &mut out);
        let params = self.lifecycle_params();
        for (t, w) in self.tracks.iter_mut().zip(&work) {
            if !w.remote_kept {
                *t = step_lifecycle(t.clone(), w.matched_3d, &params);
            }
            let evidence = w.matched_3d || w.remote_kept;
            if evidence && t.is_alive() {
                let b = t.kstate.to_box(FrameId::Ego);
                let row = ResultRow {
                    frame,
                    track_id: t.id,
                    category: t.category,
                    box3d: b,
                    box2d: project_box(&b, &packet.calib),
                    score: w.fused,
                };
                emit(t, row, &mut out.rows);
            }
            out.scores.push(TrackScore {
                track_id: t.id,
                raw_3d: w.response.confidence,
                feature_fused: w.feature_fused,
                fused_3d: w.fused_3d,
                fused_2d: w.fused_2d,
                fused: w.fused,
                detection_score: w.absorbed.map_or(0.0, |i| detections[i].score),
                suppressed: !w.survived,
            });
        }
        let born: Vec<Detection> = new_detections.iter().map(|&i| detections[i].clone()).collect();
        let mut spawned = spawn_tracks(&born, &mut self.next_id, cfg.n_hist, &cfg.kalman, &params);
        out.n_spawned = spawned.len();
        for t in &mut spawned {
            let b = t.kstate.to_box(FrameId::Ego);
            let row = ResultRow {
                frame,
                track_id: t.id,
                category: t.category,
                box3d: b,
                box2d: project_box(&b, &packet.calib),
                score: t.last_s_f,
            };
            emit(t, row, &mut out.rows);
        }

        // 10. append this frame to feature memory and confidence history
        trace(Step::HistoryAppend, &mut out);
        for (t, w) in self.tracks.iter_mut().zip(work) {
            let feature = if w.absorbed.is_some() { w.response.feature } else { None };
            t.feature_mem.push(frame, feature, w.feature_fused).map_err(with_frame)?;
            t.conf_hist.push(w.feature_fused, w.s2d_now);
            t.conf_hist.fused = w.fused;
            t.last_s_f = w.fused;
        }
        self.tracks.retain(Track::is_alive);
        self.tracks.extend(spawned);

        out.rows.sort_by_key(|r| (r.frame, r.track_id));
        self.last_frame = Some(frame);
        self.last_pose = Some(packet.ego_pose);
        Ok(out)
    }
}

fn emit(t: &mut Track, row: ResultRow, rows: &mut Vec<ResultRow>) {
    match t.lifecycle {
        Lifecycle::Confirmed => {
            rows.append(&mut t.pending);
            rows.push(row);
        }
        Lifecycle::Tentative => t.pending.push(row),
        Lifecycle::Dead => t.pending.clear(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStats {
    pub frame: u32,
    pub live_tracks: usize,
    pub detections: usize,
    pub emitted: usize,
    pub spawned: usize,
    pub suppressed: usize,
    pub remote_kept: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub seed: u64,
    pub config: Config,
    pub frames: Vec<FrameStats>,
    pub tracks_created: u32,
    pub rows: usize,
}

impl RunReport {
    pub fn total_seconds(&self) -> f64 {
        self.frames.iter().map(|f| f.seconds).sum()
    }
}

/// Result rows sorted by `(frame, track id)`, every frame's output, and the
/// run report.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub frames: Vec<FrameOutput>,
    pub report: RunReport,
}

/// Runs a whole sequence. `clock` returns seconds from any fixed origin and
/// only feeds the timing columns of the report.
pub fn run_sequence<'p, I>(packets: I, oracles: Oracles<'_>, config: &Config, clock: &mut dyn FnMut() -> f64) -> Result<RunOutput>
where
    I: IntoIterator<Item = &'p FramePacket>,
{
    let mut tracker = Tracker::new(config.clone());
    let mut rows = Vec::new();
    let mut frames = Vec::new();
    let mut stats = Vec::new();
    for p in packets {
        let t0 = clock();
        let out = tracker.process_frame(p, oracles)?;
        let seconds = clock() - t0;
        stats.push(FrameStats {
            frame: out.frame,
            live_tracks: tracker.tracks().len(),
            detections: out.n_detections,
            emitted: out.rows.len(),
            spawned: out.n_spawned,
            suppressed: out.n_suppressed,
            remote_kept: out.n_remote_kept,
            seconds,
        });
        rows.extend(out.rows.iter().cloned());
        frames.push(out);
    }
    rows.sort_by_key(|r| (r.frame, r.track_id));
    let report = RunReport {
        seed: config.seed,
        config: config.clone(),
        frames: stats,
        tracks_created: tracker.next_id(),
        rows: rows.len(),
    };
    Ok(RunOutput { rows, frames, report })
}
