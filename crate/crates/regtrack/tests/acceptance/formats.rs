//! Result-file fidelity and byte-level reproducibility of the CLI.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use regtrack::kitti::{format_results, load_rows, parse_objects, rows_from_objects, write_results};
use regtrack::run::run_preset;
use regtrack_core::config::{Config, EvalSimilarity};
use regtrack_core::geometry::{Box2D, Box3D, FrameId};
use regtrack_core::metrics::{evaluate, EvalReport};
use regtrack_core::oracle::Category;
use regtrack_core::simworld::{default_calib, Preset};
use regtrack_core::trackman::ResultRow;

use crate::{ensure, Outcome};

const GOLDEN: &str = include_str!("../fixtures/golden_results.txt");

/// Two hand-placed rows: one with a stored image box, one projected.
pub fn golden_rows() -> Vec<ResultRow> {
    vec![
        ResultRow {
            frame: 0,
            track_id: 3,
            category: Category::Car,
            box3d: Box3D::new(12.0, 1.5, -0.8, 4.0, 1.8, 1.5, 0.25, FrameId::Ego).unwrap(),
            box2d: Some(Box2D::new(500.0, 160.0, 640.5, 220.25).unwrap()),
            score: 0.875,
        },
        ResultRow {
            frame: 1,
            track_id: 7,
            category: Category::Pedestrian,
            box3d: Box3D::new(8.0, -2.0, -0.9, 0.6, 0.7, 1.7, -1.0, FrameId::Ego).unwrap(),
            box2d: None,
            score: 0.5,
        },
    ]
}

fn same_report(a: &EvalReport, b: &EvalReport) -> Result<f64, String> {
    let counts = |r: &EvalReport| {
        let c = &r.overall.clear;
        (c.tp, c.fp, c.fn_, c.idsw, c.num_gt, c.num_pred)
    };
    ensure(counts(a) == counts(b), || format!("counts {:?} vs {:?}", counts(a), counts(b)))?;
    ensure(a.per_class.len() == b.per_class.len(), || String::from("class sets differ"))?;
    let scores = |r: &EvalReport| {
        let (c, h) = (&r.overall.clear, &r.overall.hota);
        [c.mota, c.motp, h.hota, h.deta, h.assa, h.loca]
    };
    let worst = scores(a).iter().zip(scores(b)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    // positions are written to six decimals
    ensure(worst <= 1e-6, || format!("scores differ by {worst:.2e}"))?;
    Ok(worst)
}

pub fn fidelity() -> Outcome {
    let calib = default_calib();
    let text = format_results(&golden_rows(), &calib);
    ensure(text == GOLDEN, || format!("golden bytes differ:\n{text}"))?;
    let parsed = rows_from_objects(&parse_objects(GOLDEN, Path::new("golden")).map_err(|e| e.to_string())?, &calib, Path::new("golden"))
        .map_err(|e| e.to_string())?;
    ensure(parsed.warnings.is_empty(), || parsed.warnings.join("; "))?;
    ensure(format_results(&parsed.items, &calib) == GOLDEN, || String::from("golden file does not re-write to itself"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = Config::default();
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for (preset, seed) in [(Preset::Random, 3), (Preset::Crossing, 1)] {
        let (out, report) = run_preset(preset, seed, &cfg).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{preset}.txt"));
        write_results(&out.rows, &calib, &path).map_err(|e| e.to_string())?;
        let back = load_rows(&path, &calib).map_err(|e| e.to_string())?;
        ensure(back.items.len() == out.rows.len(), || format!("{preset}: {} rows back of {}", back.items.len(), out.rows.len()))?;
        let first = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        ensure(format_results(&back.items, &calib) == first, || format!("{preset}: re-written file differs"))?;

        let gt = run_preset_labels(preset, seed)?;
        let again = evaluate(&gt, &back.items, cfg.eval_similarity, cfg.eval_iou_threshold).map_err(|e| e.to_string())?;
        worst = worst.max(same_report(&report, &again).map_err(|e| format!("{preset}: {e}"))?);
        for kind in [EvalSimilarity::IouBev, EvalSimilarity::Iou2d] {
            let a = evaluate(&gt, &out.rows, kind, 0.5).map_err(|e| e.to_string())?;
            let b = evaluate(&gt, &back.items, kind, 0.5).map_err(|e| e.to_string())?;
            worst = worst.max(same_report(&a, &b).map_err(|e| format!("{preset} {kind:?}: {e}"))?);
        }
        rows += out.rows.len();
    }
    Ok(format!("golden bytes equal; {rows} rows round-trip, identical counts, scores within {worst:.1e}"))
}

fn run_preset_labels(preset: Preset, seed: u64) -> Result<Vec<ResultRow>, String> {
    let g = regtrack_core::simworld::generate(&preset.scenario(seed)).map_err(|e| e.to_string())?;
    g.bundle.labels.ok_or_else(|| String::from("no labels"))
}

// ---------------------------------------------------------------- determinism

fn regtrack(args: &[&str], root: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_regtrack")).args(args).current_dir(root).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("regtrack {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(&p, root, out);
            } else if let Ok(bytes) = fs::read(&p) {
                out.insert(p.strip_prefix(root).unwrap_or(&p).to_path_buf(), bytes);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Every subcommand, run in a fresh directory.
fn session(root: &Path) -> Result<(), String> {
    let runs: [&[&str]; 7] = [
        &["simulate", "--preset", "random", "--seed", "5", "--out", "sim"],
        &["track", "--preset", "random", "--seed", "5", "--trace-conf", "--out", "track"],
        &["track", "--kitti", "sim", "--seq", "random_5", "--out", "replay"],
        &["track", "--scenario", "sim/scenario/random_5.txt", "--seed", "2", "--no-2d", "--out", "scenario"],
        &["eval", "--results", "track", "--kitti", "sim", "--seq", "random_5", "--out", "eval"],
        &["ablate", "--study", "n-hist", "--seeds", "1-2", "--out", "ablate"],
        &["plot-bev", "--results", "track/random_5.txt", "--kitti", "sim", "--seq", "random_5", "--out", "bev.svg"],
    ];
    for args in runs {
        regtrack(args, root)?;
    }
    Ok(())
}

pub fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    session(a.path())?;
    session(b.path())?;
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    ensure(ta.keys().eq(tb.keys()), || String::from("runs wrote different file sets"))?;
    let differing: Vec<String> = ta.iter().filter(|(k, v)| tb.get(*k) != Some(*v)).map(|(k, _)| k.display().to_string()).collect();
    ensure(differing.is_empty(), || format!("files differ: {}", differing.join(", ")))?;
    let bytes: usize = ta.values().map(Vec::len).sum();
    ensure(ta.len() >= 20, || format!("only {} files written", ta.len()))?;
    Ok(format!("{} files ({bytes} bytes) identical across two runs of 7 commands", ta.len()))
}
