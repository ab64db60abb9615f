//! Historical feature memory and trajectory confidence fusion.
//!
//! Per track and frame:
//!
//! ```text
//! f_his  = (1/n) Σ_k s̃_k · f_k                  over the last n frames
//! s̃_t    = head((1 − s_t) · f_his + s_t · f_t)
//! s̃_3d   = (Σ_k s̃_k + s̃_t) / (n + 1)
//! s_2d   = (Σ_k s2_k + s2_t) / (n + 1)
//! s_f    = (s̃_3d + s_2d) / 2                    or s̃_3d without a 2D score
//! ```
//!
//! `n` counts the history frames actually held, so young tracks use
//! whatever history they have.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub frame: u32,
    /// Cached only for frames where the track absorbed a detection.
    pub feature: Option<Vec<f64>>,
    pub confidence: f64,
}

/// Ring buffer over the last `capacity` frames of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMemory {
    capacity: usize,
    entries: VecDeque<MemoryEntry>,
}

impl FeatureMemory {
    pub fn new(capacity: usize) -> Self {
        FeatureMemory {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.entries.iter()
    }

    /// Records a frame. Frames must arrive in increasing order.
    pub fn push(&mut self, frame: u32, feature: Option<Vec<f64>>, confidence: f64) -> Result<()> {
        if let Some(last) = self.entries.back() {
            if frame <= last.frame {
                return Err(Error::FrameOrder {
                    expected: last.frame + 1,
                    got: frame,
                });
            }
        }
        if self.capacity == 0 {
            return Ok(());
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(MemoryEntry {
            frame,
            feature,
            confidence,
        });
        Ok(())
    }
}

/// Confidence-weighted mean of the cached features, or `None` when no frame
/// in the window carries one.
pub fn historical_feature(mem: &FeatureMemory) -> Option<Vec<f64>> {
    let mut acc: Option<Vec<f64>> = None;
    for e in mem.entries() {
        if let Some(f) = &e.feature {
            let a = acc.get_or_insert_with(|| alloc::vec![0.0; f.len()]);
            for (ai, fi) in a.iter_mut().zip(f) {
                *ai += e.confidence * fi;
            }
        }
    }
    let n = mem.len() as f64;
    acc.map(|mut a| {
        a.iter_mut().for_each(|x| *x /= n);
        a
    })
}

/// Blends the historical and current feature with weight `s_t` on the
/// current one and scores the blend with `head`.
pub fn blend_and_score<H>(f_his: &[f64], f_t: &[f64], s_t: f64, head: H) -> Result<f64>
where
    H: FnOnce(&[f64]) -> Result<f64>,
{
    let blended = blend(f_his, f_t, s_t)?;
    head(&blended)
}

pub fn blend(f_his: &[f64], f_t: &[f64], s_t: f64) -> Result<Vec<f64>> {
    if f_his.len() != f_t.len() {
        return Err(Error::DimensionMismatch {
            expected: f_t.len(),
            got: f_his.len(),
        });
    }
    Ok(f_his
        .iter()
        .zip(f_t)
        .map(|(h, c)| (1.0 - s_t) * h + s_t * c)
        .collect())
}

/// Per-frame `(s̃_3d, s_2d)` history over the last `capacity` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceHistory {
    capacity: usize,
    entries: VecDeque<(f64, Option<f64>)>,
    /// Most recent fused confidence.
    pub fused: f64,
}

impl ConfidenceHistory {
    pub fn new(capacity: usize) -> Self {
        ConfidenceHistory {
            capacity,
            entries: VecDeque::with_capacity(capacity),
            fused: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, s3: f64, s2: Option<f64>) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((s3, s2));
    }

    pub fn entries(&self) -> impl Iterator<Item = &(f64, Option<f64>)> {
        self.entries.iter()
    }
}

pub fn fuse_conf_3d(history: &ConfidenceHistory, current: f64) -> f64 {
    let n = history.len() as f64;
    let sum: f64 = history.entries().map(|(s, _)| *s).sum();
    (sum + current) / (n + 1.0)
}

/// Mean over the frames that had a 2D score, plus the current one.
pub fn fuse_conf_2d(history: &ConfidenceHistory, current: f64) -> f64 {
    let (sum, n) = history
        .entries()
        .filter_map(|(_, s)| *s)
        .fold((0.0, 0.0), |(s, n), x| (s + x, n + 1.0));
    (sum + current) / (n + 1.0)
}

pub fn fuse_final(s3: f64, s2: Option<f64>) -> f64 {
    match s2 {
        Some(s2) => (s3 + s2) / 2.0,
        None => s3,
    }
}
