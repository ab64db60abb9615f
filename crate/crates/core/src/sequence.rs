//! A loaded or generated sequence: frame packets plus optional labels.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::FrameId;
use crate::oracle::FramePacket;
use crate::trackman::ResultRow;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBundle {
    pub sequence_id: String,
    pub frames: Vec<FramePacket>,
    /// Ground-truth boxes, one row per `(frame, object)`; `score` is unused.
    pub labels: Option<Vec<ResultRow>>,
}

impl SequenceBundle {
    /// Frame indices must run contiguously from 0 and every box must be a
    /// valid ego-frame box.
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.frames.iter().enumerate() {
            if p.frame_index as usize != i {
                return Err(Error::FrameOrder {
                    expected: i as u32,
                    got: p.frame_index,
                });
            }
            for d in &p.detections {
                check_ego(&d.box3d)?;
            }
        }
        for r in self.labels.iter().flatten() {
            check_ego(&r.box3d)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

fn check_ego(b: &crate::geometry::Box3D) -> Result<()> {
    b.validate()?;
    if b.frame != FrameId::Ego {
        return Err(Error::FrameMismatch {
            left: FrameId::Ego,
            right: b.frame,
        });
    }
    Ok(())
}
