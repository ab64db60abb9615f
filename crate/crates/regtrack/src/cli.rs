//! Command-line interface.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use regtrack_core::association::NmsOrder;
use regtrack_core::config::Config;
use regtrack_core::metrics::evaluate;
use regtrack_core::simworld::Preset;

use crate::ablation::{run_study, study_json, study_text, Study};
use crate::config::{keys_table, load_config};
use crate::error::{read_to_string, write, Error, Result};
use crate::kitti::{self, load_rows, parse_calib, SequencePaths, DEFAULT_IMAGE_SIZE};
use crate::plot::bev_svg;
use crate::report::{conf_trace_csv, eval_json, eval_text, run_json, run_text, trajectory_table};
use crate::run::{evaluate_run, prepare, scenario_of, track, Source};
use crate::scenario_file::format_scenario;

#[derive(Debug, Parser)]
#[command(name = "regtrack", version, about = "Detector-regression 3D multi-object tracking")]
#[command(after_help = after_help())]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn after_help() -> String {
    format!("Config file KEYS (`key = value`, `#` comments):\n{}", keys_table())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track a sequence and write KITTI results plus a run report.
    Track(TrackArgs),
    /// Score a results file against labels (CLEAR and HOTA).
    Eval(EvalArgs),
    /// Write a generated scene as a KITTI-style sequence.
    Simulate(SimulateArgs),
    /// Sweep one setting over a seeded preset suite.
    Ablate(AblateArgs),
    /// Draw results (and labels) as a bird's-eye-view SVG.
    PlotBev(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Generated scene: crossing | fov_exit | occlusion_ramp | occlusion | random.
    #[arg(long, conflicts_with_all = ["scenario", "kitti"])]
    pub preset: Option<Preset>,
    /// Scene description file.
    #[arg(long, conflicts_with = "kitti")]
    pub scenario: Option<PathBuf>,
    /// KITTI tracking root holding calib/, oxts/ (or pose/) and label_02/.
    #[arg(long, requires = "seq")]
    pub kitti: Option<PathBuf>,
    /// Sequence id inside the KITTI root.
    #[arg(long)]
    pub seq: Option<String>,
    /// Detection file, or a directory of `<seq>.txt` and `<seq>_2d.txt`.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Image size as WIDTHxHEIGHT for KITTI input.
    #[arg(long, value_parser = parse_size, default_value = "1242x375")]
    pub image_size: (u32, u32),
}

fn parse_size(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
    Ok((w.parse().map_err(|_| "bad width")?, h.parse().map_err(|_| "bad height")?))
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Config file of `key = value` lines (see KEYS below).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for the scene and every random draw.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disable the 2D confidence branch.
    #[arg(long)]
    pub no_2d: bool,
    /// Joint NMS order: descending | ascending | unordered.
    #[arg(long)]
    pub nms_order: Option<NmsOrder>,
    /// History window in frames.
    #[arg(long)]
    pub n_hist: Option<usize>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.no_2d {
            cfg.use_2d = false;
        }
        if let Some(o) = self.nms_order {
            cfg.nms_order = o;
        }
        if let Some(n) = self.n_hist {
            cfg.n_hist = n;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Also write the per-frame confidence trace of every track.
    #[arg(long)]
    pub trace_conf: bool,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    pub timings: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Results file, or a directory holding `<seq>.txt`.
    #[arg(long)]
    pub results: PathBuf,
    /// Label file; taken from the KITTI root when omitted.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Calibration file; taken from the KITTI root when omitted.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long)]
    pub kitti: Option<PathBuf>,
    #[arg(long)]
    pub seq: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write eval.txt and eval.json here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output KITTI-style root.
    #[arg(long, default_value = "sim")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// nms-order | n-hist | 2d | all.
    #[arg(long, default_value = "all")]
    pub study: String,
    /// Seeds as `a-b` or a comma list; each study has its own default.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "ablate")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Results file, or a directory holding `<seq>.txt`.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long)]
    pub kitti: Option<PathBuf>,
    #[arg(long)]
    pub seq: Option<String>,
    /// Output SVG file.
    #[arg(long, default_value = "bev.svg")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track(a) => cmd_track(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Ablate(a) => cmd_ablate(&a),
        Command::PlotBev(a) => cmd_plot(&a),
    }
}

fn source(input: &InputArgs, seed: u64) -> Result<Source> {
    if let Some(preset) = input.preset {
        return Ok(Source::Preset { preset, seed });
    }
    if let Some(p) = &input.scenario {
        return Ok(Source::ScenarioFile(p.clone()));
    }
    let (Some(root), Some(seq)) = (&input.kitti, &input.seq) else {
        return Err(Error::Usage(String::from("give --preset, --scenario or --kitti with --seq")));
    };
    let detections = input.detections.clone().unwrap_or_else(|| root.join("detections"));
    Ok(Source::Kitti { root: root.clone(), seq: seq.clone(), detections, image_size: input.image_size })
}

fn sequence_name(src: &Source) -> String {
    match src {
        Source::Preset { preset, seed } => format!("{preset}_{seed}"),
        Source::ScenarioFile(p) => p.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string(),
        Source::Kitti { seq, .. } => seq.clone(),
    }
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn cmd_track(a: &TrackArgs) -> Result<()> {
    let mut cfg = a.config.resolve()?;
    cfg.trace = cfg.trace || a.trace_conf;
    let src = source(&a.input, cfg.seed)?;
    let prepared = prepare(&src)?;
    for w in &prepared.warnings {
        eprintln!("warning: {w}");
    }
    let start = Instant::now();
    let mut clock = || start.elapsed().as_secs_f64();
    let out = track(&prepared, &cfg, &mut clock)?;
    let name = sequence_name(&src);
    let calib = prepared.bundle.frames.first().map(|p| p.calib.clone());
    let results = a.out.join(format!("{name}.txt"));
    match &calib {
        Some(c) => kitti::write_results(&out.rows, c, &results)?,
        None => write(&results, "")?,
    }
    write(&a.out.join("report.txt"), run_text(&out.report, a.timings))?;
    write(&a.out.join("report.json"), json_text(&run_json(&out.report, a.timings)))?;
    write(&a.out.join("trajectories.txt"), trajectory_table(&out.rows))?;
    if a.trace_conf {
        write(&a.out.join("trace_conf.csv"), conf_trace_csv(&out.frames))?;
    }
    if let Some(ev) = evaluate_run(&prepared, &out, &cfg)? {
        let text = eval_text(&ev);
        print!("{text}");
        write(&a.out.join("eval.txt"), text)?;
        write(&a.out.join("eval.json"), json_text(&eval_json(&ev)))?;
    }
    println!("{} rows from {} tracks -> {}", out.rows.len(), out.report.tracks_created, results.display());
    Ok(())
}

/// Resolves results, labels and calibration from explicit paths or a KITTI root.
fn eval_inputs(results: &Path, gt: Option<&Path>, calib: Option<&Path>, kitti: Option<&Path>, seq: Option<&str>) -> Result<(PathBuf, Option<PathBuf>, PathBuf)> {
    let from_root = |dir: &str| -> Option<PathBuf> { Some(kitti?.join(dir).join(format!("{}.txt", seq?))) };
    let results = if results.is_dir() {
        let seq = seq.ok_or_else(|| Error::Usage(String::from("--results is a directory; give --seq")))?;
        results.join(format!("{seq}.txt"))
    } else {
        results.to_path_buf()
    };
    let gt = gt.map(Path::to_path_buf).or_else(|| from_root("label_02"));
    let calib = calib
        .map(Path::to_path_buf)
        .or_else(|| from_root("calib"))
        .ok_or_else(|| Error::Usage(String::from("give --calib or --kitti with --seq")))?;
    Ok((results, gt, calib))
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => Config::default(),
    };
    let (results, gt, calib_path) = eval_inputs(&a.results, a.gt.as_deref(), a.calib.as_deref(), a.kitti.as_deref(), a.seq.as_deref())?;
    let gt = gt.ok_or_else(|| Error::Usage(String::from("give --gt or --kitti with --seq")))?;
    let calib = parse_calib(&read_to_string(&calib_path)?, &calib_path, DEFAULT_IMAGE_SIZE)?;
    let pred = load_rows(&results, &calib)?;
    let labels = load_rows(&gt, &calib)?;
    for w in pred.warnings.iter().chain(&labels.warnings) {
        eprintln!("warning: {w}");
    }
    let ev = evaluate(&labels.items, &pred.items, cfg.eval_similarity, cfg.eval_iou_threshold)?;
    let text = eval_text(&ev);
    print!("{text}");
    if let Some(dir) = &a.out {
        write(&dir.join("eval.txt"), text)?;
        write(&dir.join("eval.json"), json_text(&eval_json(&ev)))?;
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let input = InputArgs { preset: a.preset, scenario: a.scenario.clone(), kitti: None, seq: None, detections: None, image_size: DEFAULT_IMAGE_SIZE };
    let src = source(&input, a.seed)?;
    let scenario = scenario_of(&src)?.ok_or_else(|| Error::Usage(String::from("simulate needs --preset or --scenario")))?;
    let prepared = prepare(&src)?;
    let bundle = &prepared.bundle;
    let name = sequence_name(&src);
    let file = |dir: &str, suffix: &str| a.out.join(dir).join(format!("{name}{suffix}.txt"));
    write(&file("scenario", ""), format_scenario(&scenario))?;
    write(&file("calib", ""), kitti::format_calib(&scenario.calib))?;
    let poses: Vec<_> = bundle.frames.iter().map(|p| p.ego_pose).collect();
    write(&file("pose", ""), kitti::format_poses(&poses))?;
    write(&file("label_02", ""), kitti::format_labels(bundle.labels.as_deref().unwrap_or(&[]), &scenario.calib))?;
    write(&file("detections", ""), kitti::format_detections(&bundle.frames))?;
    write(&file("detections", "_2d"), kitti::format_detections_2d(&bundle.frames))?;
    println!("{} frames of {name} -> {}", bundle.frames.len(), a.out.display());
    Ok(())
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Usage(format!("bad seed list {s:?}"));
    if let Some((lo, hi)) = s.split_once('-') {
        let (lo, hi): (u64, u64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        return if lo <= hi { Ok((lo..=hi).collect()) } else { Err(bad()) };
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_ablate(a: &AblateArgs) -> Result<()> {
    let base = match &a.config {
        Some(p) => load_config(p)?,
        None => Config::default(),
    };
    let studies = if a.study == "all" { Study::ALL.to_vec() } else { vec![a.study.parse()?] };
    let seeds = a.seeds.as_deref().map(parse_seeds).transpose()?;
    for study in studies {
        let seeds = seeds.clone().unwrap_or_else(|| study.default_seeds());
        let r = run_study(study, &seeds, &base)?;
        let text = study_text(&r);
        print!("{text}");
        write(&a.out.join(format!("{study}.txt")), text)?;
        write(&a.out.join(format!("{study}.json")), json_text(&study_json(&r)))?;
    }
    Ok(())
}

fn cmd_plot(a: &PlotArgs) -> Result<()> {
    let (results, gt, calib_path) = eval_inputs(&a.results, a.gt.as_deref(), a.calib.as_deref(), a.kitti.as_deref(), a.seq.as_deref())?;
    let calib = parse_calib(&read_to_string(&calib_path)?, &calib_path, DEFAULT_IMAGE_SIZE)?;
    let pred = load_rows(&results, &calib)?.items;
    let gt = match gt.filter(|p| p.is_file()) {
        Some(p) => Some(load_rows(&p, &calib)?.items),
        None => None,
    };
    let poses = match (&a.kitti, &a.seq) {
        (Some(root), Some(seq)) => match SequencePaths::kitti(root, seq, root).poses {
            kitti::PoseSource::Oxts(p) => Some(kitti::parse_oxts(&read_to_string(&p)?, &p)?),
            kitti::PoseSource::Matrices(p) => Some(kitti::parse_poses(&read_to_string(&p)?, &p)?),
            kitti::PoseSource::None => None,
        },
        _ => None,
    };
    write(&a.out, bev_svg(&pred, gt.as_deref(), poses.as_deref()))?;
    print!("{}", trajectory_table(&pred));
    Ok(())
}
