//! Bird's-eye-view SVG of trajectories.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use regtrack_core::geometry::{apply_transform, FrameId};
use regtrack_core::motion::EgoPose;
use regtrack_core::trackman::ResultRow;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

/// A world-frame footprint track: `(frame, corners)` per row.
type Track = Vec<(u32, [[f64; 2]; 4])>;

fn world_tracks(rows: &[ResultRow], poses: Option<&[EgoPose]>) -> BTreeMap<u32, Track> {
    let mut out: BTreeMap<u32, Track> = BTreeMap::new();
    for r in rows {
        let b = match poses.and_then(|p| p.get(r.frame as usize)) {
            Some(p) => apply_transform(&r.box3d, &p.world_from_ego, FrameId::World),
            None => r.box3d,
        };
        out.entry(r.track_id).or_default().push((r.frame, b.footprint()));
    }
    for t in out.values_mut() {
        t.sort_by_key(|(f, _)| *f);
    }
    out
}

fn colour(id: u32) -> String {
    // golden-angle hue spacing keeps neighbouring ids apart
    let hue = (f64::from(id) * 137.508) % 360.0;
    format!("hsl({hue:.0},70%,45%)")
}

fn centre(c: &[[f64; 2]; 4]) -> [f64; 2] {
    let x = c.iter().map(|p| p[0]).sum::<f64>() / 4.0;
    let y = c.iter().map(|p| p[1]).sum::<f64>() / 4.0;
    [x, y]
}

/// Renders predicted tracks in colour over optional ground truth in grey.
/// Rows are placed in the world frame when poses are given; `x` points
/// right and `y` up.
pub fn bev_svg(pred: &[ResultRow], gt: Option<&[ResultRow]>, poses: Option<&[EgoPose]>) -> String {
    let pred_t = world_tracks(pred, poses);
    let gt_t = gt.map(|g| world_tracks(g, poses)).unwrap_or_default();
    let pts = || pred_t.values().chain(gt_t.values()).flatten().flat_map(|(_, c)| c.iter());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !lo[0].is_finite() {
        (lo, hi) = ([-1.0; 2], [1.0; 2]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let map = |p: &[f64; 2]| (MARGIN + (p[0] - lo[0]) * scale, SIZE - MARGIN - (p[1] - lo[1]) * scale);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="10" y="16" font-size="12" font-family="monospace">grid 10 m</text>"#);
    let mut g = (lo[0] / 10.0).floor() * 10.0;
    while g <= hi[0] {
        let (x, _) = map(&[g, lo[1]]);
        let _ = writeln!(out, r##"<line x1="{x:.1}" y1="0" x2="{x:.1}" y2="{SIZE}" stroke="#eee"/>"##);
        g += 10.0;
    }
    g = (lo[1] / 10.0).floor() * 10.0;
    while g <= hi[1] {
        let (_, y) = map(&[lo[0], g]);
        let _ = writeln!(out, r##"<line x1="0" y1="{y:.1}" x2="{SIZE}" y2="{y:.1}" stroke="#eee"/>"##);
        g += 10.0;
    }
    let mut path = |tracks: &BTreeMap<u32, Track>, gt: bool| {
        for (id, t) in tracks {
            let line: Vec<String> = t.iter().map(|(_, c)| map(&centre(c))).map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let (stroke, dash) = if gt { (String::from("#999"), r#" stroke-dasharray="4 3""#) } else { (colour(*id), "") };
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"{dash}/>"#, line.join(" "));
            if let Some((_, last)) = t.last() {
                let poly: Vec<String> = last.iter().map(map).map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(out, r#"<polygon points="{}" fill="none" stroke="{stroke}"/>"#, poly.join(" "));
                if !gt {
                    let (x, y) = map(&centre(last));
                    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10" fill="{stroke}">{id}</text>"#, x + 4.0, y - 4.0);
                }
            }
        }
    };
    path(&gt_t, true);
    path(&pred_t, false);
    out.push_str("</svg>\n");
    out
}
