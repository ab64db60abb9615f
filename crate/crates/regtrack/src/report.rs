//! Text and JSON renderings of run and evaluation reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use regtrack_core::config::KEYS;
use regtrack_core::metrics::{ClassReport, ClearStats, EvalReport, HotaStats};
use regtrack_core::pipeline::{FrameOutput, RunReport};
use regtrack_core::trackman::ResultRow;
use serde_json::{json, Value};

/// Run summary. Wall-clock columns only appear with `timings`, so default
/// reports are reproducible byte for byte.
pub fn run_json(report: &RunReport, timings: bool) -> Value {
    let config: BTreeMap<&str, String> = KEYS.iter().filter_map(|k| Some((k.name, report.config.get(k.name)?))).collect();
    let frames: Vec<Value> = report
        .frames
        .iter()
        .map(|f| {
            let mut v = json!({
                "frame": f.frame,
                "live_tracks": f.live_tracks,
                "detections": f.detections,
                "emitted": f.emitted,
                "spawned": f.spawned,
                "suppressed": f.suppressed,
                "remote_kept": f.remote_kept,
            });
            if timings {
                v["seconds"] = json!(f.seconds);
            }
            v
        })
        .collect();
    let mut v = json!({
        "seed": report.seed,
        "config": config,
        "tracks_created": report.tracks_created,
        "rows": report.rows,
        "frames": frames,
    });
    if timings {
        v["total_seconds"] = json!(report.total_seconds());
    }
    v
}

pub fn run_text(report: &RunReport, timings: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed {}  frames {}  tracks created {}  rows {}", report.seed, report.frames.len(), report.tracks_created, report.rows);
    let _ = write!(out, "{:>6} {:>5} {:>5} {:>5} {:>5} {:>5} {:>6}", "frame", "live", "dets", "rows", "new", "supp", "remote");
    out.push_str(if timings { "      ms\n" } else { "\n" });
    for f in &report.frames {
        let _ = write!(out, "{:>6} {:>5} {:>5} {:>5} {:>5} {:>5} {:>6}", f.frame, f.live_tracks, f.detections, f.emitted, f.spawned, f.suppressed, f.remote_kept);
        if timings {
            let _ = write!(out, " {:>7.3}", f.seconds * 1e3);
        }
        out.push('\n');
    }
    if timings {
        let _ = writeln!(out, "total {:.3} s", report.total_seconds());
    }
    out
}

fn clear_json(c: &ClearStats) -> Value {
    json!({
        "mota": c.mota, "motp": c.motp, "tp": c.tp, "fp": c.fp, "fn": c.fn_,
        "idsw": c.idsw, "num_gt": c.num_gt, "num_pred": c.num_pred,
    })
}

fn hota_json(h: &HotaStats) -> Value {
    json!({ "hota": h.hota, "deta": h.deta, "assa": h.assa, "loca": h.loca })
}

fn class_json(r: &ClassReport) -> Value {
    json!({ "clear": clear_json(&r.clear), "hota": hota_json(&r.hota) })
}

pub fn eval_json(r: &EvalReport) -> Value {
    let per_class: BTreeMap<String, Value> = r.per_class.iter().map(|(c, v)| (c.to_string(), class_json(v))).collect();
    json!({
        "similarity": r.similarity.as_str(),
        "threshold": r.threshold,
        "overall": class_json(&r.overall),
        "per_class": per_class,
    })
}

fn class_line(out: &mut String, name: &str, r: &ClassReport) {
    let (c, h) = (&r.clear, &r.hota);
    let _ = writeln!(
        out,
        "{name:<12} {:>7.2} {:>7.4} {:>6} {:>6} {:>6} {:>5} {:>7.2} {:>7.2} {:>7.2}",
        c.mota * 100.0,
        c.motp,
        c.tp,
        c.fp,
        c.fn_,
        c.idsw,
        h.hota * 100.0,
        h.deta * 100.0,
        h.assa * 100.0
    );
}

pub fn eval_text(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "similarity {}  threshold {}", r.similarity.as_str(), r.threshold);
    let _ = writeln!(out, "{:<12} {:>7} {:>7} {:>6} {:>6} {:>6} {:>5} {:>7} {:>7} {:>7}", "class", "MOTA", "MOTP", "TP", "FP", "FN", "IDSW", "HOTA", "DetA", "AssA");
    class_line(&mut out, "overall", &r.overall);
    for (c, v) in &r.per_class {
        class_line(&mut out, c.as_str(), v);
    }
    out
}

/// Per-frame confidence trace of every live track, as CSV.
pub fn conf_trace_csv(frames: &[FrameOutput]) -> String {
    let mut out = String::from("frame,track,raw_3d,feature_fused,fused_3d,fused_2d,fused,detection_score,suppressed\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for f in frames {
        for s in &f.scores {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{},{:.6},{:.6},{}",
                f.frame,
                s.track_id,
                s.raw_3d,
                s.feature_fused,
                s.fused_3d,
                opt(s.fused_2d),
                s.fused,
                s.detection_score,
                s.suppressed
            );
        }
    }
    out
}

/// One line per track: frame span, row count and mean score.
pub fn trajectory_table(rows: &[ResultRow]) -> String {
    let mut by_id: BTreeMap<u32, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        by_id.entry(r.track_id).or_default().push(r);
    }
    let mut out = format!("{:>5} {:<10} {:>6} {:>6} {:>5} {:>6}\n", "id", "type", "first", "last", "rows", "score");
    for (id, rs) in by_id {
        let first = rs.iter().map(|r| r.frame).min().unwrap_or(0);
        let last = rs.iter().map(|r| r.frame).max().unwrap_or(0);
        let mean = rs.iter().map(|r| r.score).sum::<f64>() / rs.len() as f64;
        let _ = writeln!(out, "{id:>5} {:<10} {first:>6} {last:>6} {:>5} {mean:>6.3}", rs[0].category.as_str(), rs.len());
    }
    out
}
