//! Direction-level checks on the synthetic presets.

use regtrack::ablation::{run_study, Study, StudyResult};
use regtrack::run::{prepare, run_preset, track, Source};
use regtrack_core::config::Config;
use regtrack_core::simworld::{NoiseParams, Preset};

use crate::{ensure, Outcome};

fn fmt_seq(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ")
}

/// Largest single-frame decrease.
fn max_drop(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

pub fn ramp() -> Outcome {
    let p = prepare(&Source::Preset { preset: Preset::OcclusionRamp, seed: 1 }).map_err(|e| e.to_string())?;
    let g = p.generated.as_ref().ok_or("not generated")?;
    ensure(g.scenario.noise == NoiseParams::ZERO, || String::from("occlusion_ramp preset is not noise-free"))?;
    let out = track(&p, &Config::default(), &mut || 0.0).map_err(|e| e.to_string())?;

    // follow the track that is live when the ramp starts, for as long as it lives
    let id = out.frames[5].scores.first().map(|s| s.track_id).ok_or("no track at frame 5")?;
    let fused: Vec<(u32, f64)> = out
        .frames
        .iter()
        .filter_map(|f| f.scores.iter().find(|s| s.track_id == id).map(|s| (f.frame, s.fused)))
        .collect();
    let raw: Vec<f64> = p.bundle.frames.iter().map(|f| f.detections.iter().map(|d| d.score).fold(0.0, f64::max)).collect();
    ensure(fused.windows(2).all(|w| w[1].0 == w[0].0 + 1), || format!("track {id} has gaps"))?;
    ensure(fused.iter().any(|f| f.0 == 15), || format!("track {id} gone before the ramp ends"))?;

    // visibility falls over frames 5..=15
    let falling: Vec<f64> = fused.iter().filter(|f| (5..=15).contains(&f.0)).map(|f| f.1).collect();
    let fused: Vec<f64> = fused.iter().map(|f| f.1).collect();
    let rise = falling.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let drop_fused = max_drop(&fused);
    let drop_raw = max_drop(&raw);
    let detail = format!("fused rise {rise:.3}, fused drop {drop_fused:.3}, raw drop {drop_raw:.3}");
    ensure(rise <= 0.05, || format!("{detail}; fused [{}]", fmt_seq(&fused)))?;
    ensure(drop_fused < 0.4, || format!("{detail}; fused [{}]", fmt_seq(&fused)))?;
    ensure(drop_raw > 0.5, || format!("{detail}; raw [{}]", fmt_seq(&raw)))?;
    Ok(detail)
}

fn study(s: Study) -> Result<StudyResult, String> {
    run_study(s, &s.default_seeds(), &Config::default()).map_err(|e| e.to_string())
}

fn setting<'a>(r: &'a StudyResult, label: &str) -> Result<&'a regtrack::ablation::SettingResult, String> {
    r.setting(label).ok_or_else(|| format!("no setting {label}"))
}

pub fn nms_order() -> Outcome {
    let r = study(Study::NmsOrder)?;
    let m = |l: &str| setting(&r, l).map(|s| s.mean_mota() * 100.0);
    let (desc, unord, asc) = (m("descending")?, m("unordered")?, m("ascending")?);
    let detail = format!("MOTA descending {desc:.2} / unordered {unord:.2} / ascending {asc:.2} over 20 seeds");
    ensure(desc - unord >= 1.0 && unord - asc >= 1.0, || detail.clone())?;
    Ok(detail)
}

pub fn n_hist() -> Outcome {
    let r = study(Study::NHist)?;
    let (h0, h1) = (setting(&r, "n_hist=0")?.errors(), setting(&r, "n_hist=1")?.errors());
    let (t0, t1): (usize, usize) = (h0.iter().sum(), h1.iter().sum());
    let better = h0.iter().zip(&h1).filter(|(a, b)| b < a).count();
    let worse = h0.iter().zip(&h1).filter(|(a, b)| b > a).count();
    let detail = format!("FN+FP total {t1} at n_hist=1 vs {t0} at n_hist=0; per seed {h1:?} vs {h0:?}; {better} better, {worse} worse");
    ensure(t1 <= t0 && better >= 1 && worse == 0, || detail.clone())?;
    Ok(detail)
}

pub fn two_d() -> Outcome {
    let r = study(Study::TwoD)?;
    let with: usize = setting(&r, "with 2d")?.errors().iter().sum();
    let without: usize = setting(&r, "without 2d")?.errors().iter().sum();
    let detail = format!("FP+FN {without} without 2D vs {with} with 2D");
    ensure(without > with, || detail.clone())?;
    Ok(detail)
}

pub fn crossing() -> Outcome {
    let cfg = Config::default();
    let mut per_seed = Vec::new();
    for seed in 1..=20 {
        let (_, report) = run_preset(Preset::Crossing, seed, &cfg).map_err(|e| e.to_string())?;
        per_seed.push(report.overall.clear.idsw);
    }
    let total: usize = per_seed.iter().sum();
    ensure(total == 0, || format!("IDSW per seed {per_seed:?}"))?;
    Ok(String::from("0 IDSW on seeds 1-20"))
}
