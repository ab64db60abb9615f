//! CLEAR and HOTA evaluation.
//!
//! Both work on per-frame similarity matrices ([`FrameSim`]); the box-level
//! entry points build those from result rows with 3D, BEV or image-plane
//! IoU. Objects of different categories never match. MOTP is reported as a
//! mean similarity, so higher is better.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::maximize;
use crate::config::EvalSimilarity;
use crate::geometry::{iou_2d, iou_3d, iou_bev};
use crate::math;
use crate::oracle::Category;
use crate::trackman::ResultRow;
use crate::Result;

const EPS: f64 = 1e-12;

/// One frame: ground-truth ids, predicted ids and the row-major
/// `gt × pred` similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSim {
    pub gt_ids: Vec<u32>,
    pub pred_ids: Vec<u32>,
    pub sim: Vec<f64>,
}

impl FrameSim {
    pub fn at(&self, g: usize, p: usize) -> f64 {
        self.sim[g * self.pred_ids.len() + p]
    }
}

/// CLEAR matching of one frame.
///
/// `carried` lists `(gt index, pred index)` pairs continued from the previous
/// frame; those still at or above `threshold` are kept, and the remaining
/// objects are assigned to maximise total similarity over pairs at or above
/// the threshold. Returns pairs sorted by gt index.
pub fn match_frame(f: &FrameSim, threshold: f64, carried: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let (ng, np) = (f.gt_ids.len(), f.pred_ids.len());
    let valid = |g: usize, p: usize| {
        let s = f.at(g, p);
        s >= threshold && s > 0.0
    };
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut gt_used = vec![false; ng];
    let mut pred_used = vec![false; np];
    for &(g, p) in carried {
        if g < ng && p < np && !gt_used[g] && !pred_used[p] && valid(g, p) {
            out.push((g, p));
            gt_used[g] = true;
            pred_used[p] = true;
        }
    }
    let rows: Vec<usize> = (0..ng).filter(|&g| !gt_used[g]).collect();
    let cols: Vec<usize> = (0..np).filter(|&p| !pred_used[p]).collect();
    let mut w = Vec::with_capacity(rows.len() * cols.len());
    for &g in &rows {
        for &p in &cols {
            w.push(if valid(g, p) { f.at(g, p) } else { 0.0 });
        }
    }
    for (r, c) in maximize(&w, rows.len(), cols.len()) {
        let (g, p) = (rows[r], cols[c]);
        if valid(g, p) {
            out.push((g, p));
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClearStats {
    pub num_gt: usize,
    pub num_pred: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub idsw: usize,
    pub mota: f64,
    pub motp: f64,
    pub sim_sum: f64,
}

pub fn clear_from_frames(frames: &[FrameSim], threshold: f64) -> ClearStats {
    let mut st = ClearStats::default();
    let mut last_match: BTreeMap<u32, u32> = BTreeMap::new();
    let mut prev_pairs: BTreeMap<u32, u32> = BTreeMap::new();
    for f in frames {
        st.num_gt += f.gt_ids.len();
        st.num_pred += f.pred_ids.len();
        let carried: Vec<(usize, usize)> = f
            .gt_ids
            .iter()
            .enumerate()
            .filter_map(|(g, id)| {
                let pid = prev_pairs.get(id)?;
                f.pred_ids.iter().position(|p| p == pid).map(|p| (g, p))
            })
            .collect();
        let m = match_frame(f, threshold, &carried);
        prev_pairs.clear();
        for &(g, p) in &m {
            let (gid, pid) = (f.gt_ids[g], f.pred_ids[p]);
            if last_match.get(&gid).is_some_and(|old| *old != pid) {
                st.idsw += 1;
            }
            last_match.insert(gid, pid);
            prev_pairs.insert(gid, pid);
            st.sim_sum += f.at(g, p);
        }
        st.tp += m.len();
    }
    st.fn_ = st.num_gt - st.tp;
    st.fp = st.num_pred - st.tp;
    st.mota = 1.0 - (st.fn_ + st.fp + st.idsw) as f64 / st.num_gt.max(1) as f64;
    st.motp = if st.tp > 0 { st.sim_sum / st.tp as f64 } else { 0.0 };
    st
}

/// Localisation thresholds 0.05, 0.10, …, 0.95.
pub fn alphas() -> [f64; 19] {
    core::array::from_fn(|i| (i as f64 + 1.0) * 0.05)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlphaRow {
    pub alpha: f64,
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HotaStats {
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub loca: f64,
    pub per_alpha: Vec<AlphaRow>,
}

pub fn hota_from_frames(frames: &[FrameSim]) -> HotaStats {
    let gt_index = index_ids(frames.iter().flat_map(|f| f.gt_ids.iter()));
    let pred_index = index_ids(frames.iter().flat_map(|f| f.pred_ids.iter()));
    let (ng, np) = (gt_index.len(), pred_index.len());
    let num_gt: usize = frames.iter().map(|f| f.gt_ids.len()).sum();
    let num_pred: usize = frames.iter().map(|f| f.pred_ids.len()).sum();
    let alphas = alphas();

    // global alignment between identities
    let mut potential = vec![0.0; ng * np];
    let mut gt_count = vec![0.0; ng];
    let mut pred_count = vec![0.0; np];
    for f in frames {
        let (fg, fp) = (f.gt_ids.len(), f.pred_ids.len());
        let row_sum: Vec<f64> = (0..fg).map(|g| (0..fp).map(|p| f.at(g, p)).sum()).collect();
        let col_sum: Vec<f64> = (0..fp).map(|p| (0..fg).map(|g| f.at(g, p)).sum()).collect();
        for g in 0..fg {
            for p in 0..fp {
                let s = f.at(g, p);
                let denom = row_sum[g] + col_sum[p] - s;
                if denom > EPS {
                    potential[gt_index[&f.gt_ids[g]] * np + pred_index[&f.pred_ids[p]]] += s / denom;
                }
            }
        }
        for id in &f.gt_ids {
            gt_count[gt_index[id]] += 1.0;
        }
        for id in &f.pred_ids {
            pred_count[pred_index[id]] += 1.0;
        }
    }
    let mut alignment = vec![0.0; ng * np];
    for g in 0..ng {
        for p in 0..np {
            let pc = potential[g * np + p];
            alignment[g * np + p] = pc / (gt_count[g] + pred_count[p] - pc);
        }
    }

    let na = alphas.len();
    let mut tp = vec![0usize; na];
    let mut loc_sum = vec![0.0; na];
    let mut matches = vec![vec![0.0; ng * np]; na];
    for f in frames {
        let (fg, fp) = (f.gt_ids.len(), f.pred_ids.len());
        if fg == 0 || fp == 0 {
            continue;
        }
        let gi: Vec<usize> = f.gt_ids.iter().map(|id| gt_index[id]).collect();
        let pi: Vec<usize> = f.pred_ids.iter().map(|id| pred_index[id]).collect();
        let mut score = Vec::with_capacity(fg * fp);
        for g in 0..fg {
            for p in 0..fp {
                score.push(alignment[gi[g] * np + pi[p]] * f.at(g, p));
            }
        }
        let assignment = maximize(&score, fg, fp);
        for (a, &alpha) in alphas.iter().enumerate() {
            for &(g, p) in &assignment {
                let s = f.at(g, p);
                if s >= alpha - EPS {
                    tp[a] += 1;
                    loc_sum[a] += s;
                    matches[a][gi[g] * np + pi[p]] += 1.0;
                }
            }
        }
    }

    let mut per_alpha = Vec::with_capacity(na);
    let mut loca = 0.0;
    for (a, &alpha) in alphas.iter().enumerate() {
        let fn_ = num_gt - tp[a];
        let fp = num_pred - tp[a];
        let deta = tp[a] as f64 / (tp[a] + fn_ + fp).max(1) as f64;
        let mut ass_sum = 0.0;
        for g in 0..ng {
            for p in 0..np {
                let m = matches[a][g * np + p];
                if m > 0.0 {
                    let denom = (gt_count[g] + pred_count[p] - m).max(1.0);
                    ass_sum += m * (m / denom);
                }
            }
        }
        let assa = ass_sum / tp[a].max(1) as f64;
        let hota = math::sqrt(deta * assa);
        loca += if tp[a] > 0 { loc_sum[a] / tp[a] as f64 } else { 0.0 };
        per_alpha.push(AlphaRow {
            alpha,
            hota,
            deta,
            assa,
            tp: tp[a],
            fn_,
            fp,
        });
    }
    let mean = |f: fn(&AlphaRow) -> f64| per_alpha.iter().map(f).sum::<f64>() / na as f64;
    HotaStats {
        hota: mean(|r| r.hota),
        deta: mean(|r| r.deta),
        assa: mean(|r| r.assa),
        loca: loca / na as f64,
        per_alpha,
    }
}

fn index_ids<'a, I: Iterator<Item = &'a u32>>(ids: I) -> BTreeMap<u32, usize> {
    let set: BTreeSet<u32> = ids.copied().collect();
    set.into_iter().enumerate().map(|(i, id)| (id, i)).collect()
}

pub fn similarity(kind: EvalSimilarity, gt: &ResultRow, pred: &ResultRow) -> Result<f64> {
    if gt.category != pred.category {
        return Ok(0.0);
    }
    match kind {
        EvalSimilarity::Iou3d => iou_3d(&gt.box3d, &pred.box3d),
        EvalSimilarity::IouBev => iou_bev(&gt.box3d, &pred.box3d),
        EvalSimilarity::Iou2d => Ok(match (&gt.box2d, &pred.box2d) {
            (Some(a), Some(b)) => iou_2d(a, b),
            _ => 0.0,
        }),
    }
}

/// Per-frame similarity matrices over every frame that has a row in either
/// set, in frame order.
pub fn build_frames(gt: &[ResultRow], pred: &[ResultRow], kind: EvalSimilarity) -> Result<Vec<FrameSim>> {
    let mut by_frame: BTreeMap<u32, (Vec<&ResultRow>, Vec<&ResultRow>)> = BTreeMap::new();
    for r in gt {
        by_frame.entry(r.frame).or_default().0.push(r);
    }
    for r in pred {
        by_frame.entry(r.frame).or_default().1.push(r);
    }
    let mut out = Vec::with_capacity(by_frame.len());
    for (_, (g, p)) in by_frame {
        let mut sim = Vec::with_capacity(g.len() * p.len());
        for a in &g {
            for b in &p {
                sim.push(similarity(kind, a, b)?);
            }
        }
        out.push(FrameSim {
            gt_ids: g.iter().map(|r| r.track_id).collect(),
            pred_ids: p.iter().map(|r| r.track_id).collect(),
            sim,
        });
    }
    Ok(out)
}

pub fn evaluate_clear(gt: &[ResultRow], pred: &[ResultRow], kind: EvalSimilarity, threshold: f64) -> Result<ClearStats> {
    Ok(clear_from_frames(&build_frames(gt, pred, kind)?, threshold))
}

pub fn evaluate_hota(gt: &[ResultRow], pred: &[ResultRow], kind: EvalSimilarity) -> Result<HotaStats> {
    Ok(hota_from_frames(&build_frames(gt, pred, kind)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub clear: ClearStats,
    pub hota: HotaStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub similarity: EvalSimilarity,
    pub threshold: f64,
    pub overall: ClassReport,
    /// Categories present in either set, in declaration order.
    pub per_class: Vec<(Category, ClassReport)>,
}

pub fn evaluate(gt: &[ResultRow], pred: &[ResultRow], kind: EvalSimilarity, threshold: f64) -> Result<EvalReport> {
    let report = |g: &[ResultRow], p: &[ResultRow]| -> Result<ClassReport> {
        let frames = build_frames(g, p, kind)?;
        Ok(ClassReport {
            clear: clear_from_frames(&frames, threshold),
            hota: hota_from_frames(&frames),
        })
    };
    let mut cats: Vec<Category> = gt.iter().chain(pred).map(|r| r.category).collect();
    cats.sort_by_key(|c| *c as u8);
    cats.dedup();
    let mut per_class = Vec::with_capacity(cats.len());
    for c in cats {
        let g: Vec<ResultRow> = gt.iter().filter(|r| r.category == c).cloned().collect();
        let p: Vec<ResultRow> = pred.iter().filter(|r| r.category == c).cloned().collect();
        per_class.push((c, report(&g, &p)?));
    }
    Ok(EvalReport {
        similarity: kind,
        threshold,
        overall: report(gt, pred)?,
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Box3D, FrameId};

    fn row(frame: u32, id: u32, x: f64) -> ResultRow {
        ResultRow {
            frame,
            track_id: id,
            category: Category::Car,
            box3d: Box3D::new(x, 0.0, 0.0, 4.0, 2.0, 1.5, 0.0, FrameId::Ego).unwrap(),
            box2d: None,
            score: 1.0,
        }
    }

    #[test]
    fn perfect_tracking() {
        let gt = [row(0, 1, 0.0), row(1, 1, 1.0)];
        let r = evaluate(&gt, &gt, EvalSimilarity::Iou3d, 0.25).unwrap();
        assert_eq!(r.overall.clear.mota, 1.0);
        assert_eq!(r.overall.clear.idsw, 0);
        assert!((r.overall.hota.hota - 1.0).abs() < 1e-12);
        assert!((r.overall.hota.deta - 1.0).abs() < 1e-12);
        assert!((r.overall.hota.assa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_switch_over_four_boxes() {
        let gt: Vec<ResultRow> = (0..4).map(|f| row(f, 1, 0.0)).collect();
        let pred: Vec<ResultRow> = (0..4).map(|f| row(f, if f < 2 { 7 } else { 8 }, 0.0)).collect();
        let c = evaluate_clear(&gt, &pred, EvalSimilarity::Iou3d, 0.25).unwrap();
        assert_eq!((c.fp, c.fn_, c.idsw), (0, 0, 1));
        assert!((c.mota - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_predictions() {
        let gt: Vec<ResultRow> = (0..10).map(|f| row(f, 1, 0.0)).collect();
        let r = evaluate(&gt, &[], EvalSimilarity::Iou3d, 0.25).unwrap();
        assert_eq!(r.overall.clear.fn_, 10);
        assert_eq!(r.overall.clear.mota, 0.0);
        assert_eq!(r.overall.hota.hota, 0.0);
    }

    #[test]
    fn identical_sets_match_fully() {
        let f = FrameSim {
            gt_ids: vec![0, 1],
            pred_ids: vec![5, 6],
            sim: vec![0.1, 0.9, 0.8, 0.2],
        };
        assert_eq!(match_frame(&f, 0.5, &[]), [(0, 1), (1, 0)]);
        let none = FrameSim {
            gt_ids: vec![0],
            pred_ids: vec![],
            sim: vec![],
        };
        assert!(match_frame(&none, 0.5, &[]).is_empty());
    }

    #[test]
    fn carried_pairs_win() {
        let f = FrameSim {
            gt_ids: vec![0, 1],
            pred_ids: vec![5, 6],
            sim: vec![0.6, 0.9, 0.9, 0.6],
        };
        assert_eq!(match_frame(&f, 0.5, &[(0, 0)]), [(0, 0), (1, 1)]);
    }

    #[test]
    fn categories_do_not_match() {
        let gt = [row(0, 1, 0.0)];
        let mut p = row(0, 2, 0.0);
        p.category = Category::Van;
        let r = evaluate(&gt, &[p], EvalSimilarity::Iou3d, 0.25).unwrap();
        assert_eq!((r.overall.clear.fp, r.overall.clear.fn_), (1, 1));
        assert_eq!(r.per_class.len(), 2);
    }
}
