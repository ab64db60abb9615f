//! Input selection and one-call tracking runs shared by the CLI and tests.

use std::path::PathBuf;

use regtrack_core::config::Config;
use regtrack_core::metrics::{evaluate, EvalReport};
use regtrack_core::oracle::{ReplayRegressor, ReplayScorer2d, SyntheticRegressor, SyntheticScorer2d};
use regtrack_core::pipeline::{run_sequence, Oracles, RunOutput};
use regtrack_core::sequence::SequenceBundle;
use regtrack_core::simworld::{generate, Generated, Preset, Scenario};

use crate::error::{Error, Result};
use crate::kitti::{load_sequence, SequencePaths};
use crate::scenario_file::load_scenario;

/// Where a sequence comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Preset { preset: Preset, seed: u64 },
    ScenarioFile(PathBuf),
    Kitti { root: PathBuf, seq: String, detections: PathBuf, image_size: (u32, u32) },
}

/// A loaded sequence plus what is needed to run it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub bundle: SequenceBundle,
    /// Generated scenes carry ground truth and run the synthetic oracles;
    /// loaded ones replay their stored detections.
    pub generated: Option<Generated>,
    pub warnings: Vec<String>,
}

pub fn scenario_of(source: &Source) -> Result<Option<Scenario>> {
    Ok(match source {
        Source::Preset { preset, seed } => Some(preset.scenario(*seed)),
        Source::ScenarioFile(p) => Some(load_scenario(p)?),
        Source::Kitti { .. } => None,
    })
}

pub fn prepare(source: &Source) -> Result<Prepared> {
    if let Some(sc) = scenario_of(source)? {
        let g = generate(&sc)?;
        return Ok(Prepared { bundle: g.bundle.clone(), generated: Some(g), warnings: Vec::new() });
    }
    let Source::Kitti { root, seq, detections, image_size } = source else { unreachable!() };
    let paths = SequencePaths::kitti(root, seq, detections);
    if !paths.detections.is_file() {
        return Err(Error::Usage(format!("no detection file at {}", paths.detections.display())));
    }
    let loaded = load_sequence(&paths, *image_size)?;
    Ok(Prepared { bundle: loaded.bundle, generated: None, warnings: loaded.warnings })
}

/// Runs the tracker over a prepared sequence with the matching oracles.
pub fn track(p: &Prepared, cfg: &Config, clock: &mut dyn FnMut() -> f64) -> Result<RunOutput> {
    let out = if p.generated.is_some() {
        let reg = SyntheticRegressor::new(cfg.synthetic_params());
        let sc = SyntheticScorer2d { params: cfg.synthetic_params() };
        run_sequence(&p.bundle.frames, Oracles { regressor: &reg, scorer_2d: Some(&sc) }, cfg, clock)?
    } else {
        let reg = ReplayRegressor::default();
        run_sequence(&p.bundle.frames, Oracles { regressor: &reg, scorer_2d: Some(&ReplayScorer2d) }, cfg, clock)?
    };
    Ok(out)
}

/// Evaluates a run against the bundle's labels, when there are any.
pub fn evaluate_run(p: &Prepared, out: &RunOutput, cfg: &Config) -> Result<Option<EvalReport>> {
    match &p.bundle.labels {
        Some(gt) => Ok(Some(evaluate(gt, &out.rows, cfg.eval_similarity, cfg.eval_iou_threshold)?)),
        None => Ok(None),
    }
}

/// Generates a preset, runs it with the synthetic oracles and evaluates it.
pub fn run_preset(preset: Preset, seed: u64, cfg: &Config) -> Result<(RunOutput, EvalReport)> {
    let p = prepare(&Source::Preset { preset, seed })?;
    let out = track(&p, cfg, &mut || 0.0)?;
    let report = evaluate_run(&p, &out, cfg)?.ok_or_else(|| Error::Usage(String::from("generated scene without labels")))?;
    Ok((out, report))
}
