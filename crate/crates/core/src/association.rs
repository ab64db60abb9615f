//! Confidence-ordered joint NMS over regressed trajectories and fresh
//! detections.
//!
//! Greedy suppression stands in for data association: a trajectory that
//! suppresses a detection absorbs it as this frame's measurement.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::geometry::{Box3D, IouKind};
use crate::oracle::Category;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateRef {
    Trajectory(u32),
    Detection(usize),
}

impl CandidateRef {
    fn rank(self) -> (u8, u64) {
        match self {
            CandidateRef::Trajectory(id) => (0, u64::from(id)),
            CandidateRef::Detection(i) => (1, i as u64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmsCandidate {
    pub box3d: Box3D,
    pub score: f64,
    pub category: Category,
    pub kind: CandidateRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NmsOrder {
    Descending,
    Ascending,
    /// Input order as given.
    Unordered,
}

impl NmsOrder {
    pub const ALL: [NmsOrder; 3] = [NmsOrder::Descending, NmsOrder::Ascending, NmsOrder::Unordered];

    pub fn as_str(self) -> &'static str {
        match self {
            NmsOrder::Descending => "descending",
            NmsOrder::Ascending => "ascending",
            NmsOrder::Unordered => "unordered",
        }
    }
}

impl fmt::Display for NmsOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NmsOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "descending" | "desc" => Ok(NmsOrder::Descending),
            "ascending" | "asc" => Ok(NmsOrder::Ascending),
            "unordered" | "none" => Ok(NmsOrder::Unordered),
            _ => Err(Error::Config(alloc::format!("unknown NMS order {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NmsOutcome {
    /// Surviving track ids, each with the detection it absorbed, if any.
    pub surviving_tracks: Vec<(u32, Option<usize>)>,
    /// Detections that survived without being suppressed.
    pub new_detections: Vec<usize>,
    pub suppressed_tracks: Vec<u32>,
    /// Suppressed tracks paired with the surviving detection that suppressed
    /// them. Each such detection appears once, with its highest-IoU track
    /// (lower id on ties).
    pub handovers: Vec<(u32, usize)>,
}

/// Tie rule: score, then trajectories before detections, then lower id/index.
fn compare(a: &NmsCandidate, b: &NmsCandidate, order: NmsOrder) -> Ordering {
    let by_score = match order {
        NmsOrder::Descending => b.score.total_cmp(&a.score),
        NmsOrder::Ascending => a.score.total_cmp(&b.score),
        NmsOrder::Unordered => Ordering::Equal,
    };
    by_score.then_with(|| a.kind.rank().cmp(&b.kind.rank()))
}

/// Processing order of `candidates` under `order`.
pub fn processing_order(candidates: &[NmsCandidate], order: NmsOrder) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    if order != NmsOrder::Unordered {
        idx.sort_by(|&i, &j| compare(&candidates[i], &candidates[j], order));
    }
    idx
}

pub fn joint_nms(
    candidates: &[NmsCandidate],
    iou_threshold: f64,
    order: NmsOrder,
    iou_kind: IouKind,
) -> Result<NmsOutcome> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::OutOfRange {
            name: "iou_threshold",
            value: iou_threshold,
        });
    }
    let mut survivors: Vec<usize> = Vec::new();
    // best absorbed detection per surviving trajectory: (candidate, iou)
    let mut absorbed: Vec<Option<(usize, f64)>> = alloc::vec![None; candidates.len()];
    let mut suppressed_tracks = Vec::new();
    // best suppressed trajectory per surviving detection: (track id, iou)
    let mut handover: Vec<Option<(u32, f64)>> = alloc::vec![None; candidates.len()];

    for i in processing_order(candidates, order) {
        let c = &candidates[i];
        let mut suppressor: Option<(usize, f64)> = None;
        for &s in &survivors {
            let other = &candidates[s];
            if other.category != c.category {
                continue;
            }
            let iou = iou_kind.iou(&c.box3d, &other.box3d)?;
            if iou >= iou_threshold && suppressor.is_none_or(|(_, best)| iou > best) {
                suppressor = Some((s, iou));
            }
        }
        match (suppressor, c.kind) {
            (None, _) => survivors.push(i),
            (Some((s, iou)), CandidateRef::Trajectory(id)) => {
                suppressed_tracks.push(id);
                if matches!(candidates[s].kind, CandidateRef::Detection(_)) {
                    let slot = &mut handover[s];
                    if slot.is_none_or(|(prev, prev_iou)| iou > prev_iou || (iou == prev_iou && id < prev)) {
                        *slot = Some((id, iou));
                    }
                }
            }
            (Some((s, iou)), CandidateRef::Detection(_)) => {
                if matches!(candidates[s].kind, CandidateRef::Trajectory(_)) {
                    let slot = &mut absorbed[s];
                    let better = match *slot {
                        None => true,
                        Some((prev, prev_iou)) => {
                            iou > prev_iou || (iou == prev_iou && c.kind.rank() < candidates[prev].kind.rank())
                        }
                    };
                    if better {
                        *slot = Some((i, iou));
                    }
                }
            }
        }
    }

    let mut out = NmsOutcome {
        suppressed_tracks,
        ..NmsOutcome::default()
    };
    for s in survivors {
        match candidates[s].kind {
            CandidateRef::Trajectory(id) => {
                let det = absorbed[s].and_then(|(d, _)| match candidates[d].kind {
                    CandidateRef::Detection(k) => Some(k),
                    CandidateRef::Trajectory(_) => None,
                });
                out.surviving_tracks.push((id, det));
            }
            CandidateRef::Detection(k) => {
                out.new_detections.push(k);
                if let Some((id, _)) = handover[s] {
                    out.handovers.push((id, k));
                }
            }
        }
    }
    out.handovers.sort_unstable();
    out.surviving_tracks.sort_unstable();
    out.new_detections.sort_unstable();
    out.suppressed_tracks.sort_unstable();
    Ok(out)
}
