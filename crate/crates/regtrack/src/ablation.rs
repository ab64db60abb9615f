//! Configuration sweeps over seeded preset suites.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use regtrack_core::association::NmsOrder;
use regtrack_core::config::Config;
use regtrack_core::metrics::ClearStats;
use regtrack_core::simworld::Preset;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::run::run_preset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    NmsOrder,
    NHist,
    TwoD,
}

impl Study {
    pub const ALL: [Study; 3] = [Study::NmsOrder, Study::NHist, Study::TwoD];

    pub fn as_str(self) -> &'static str {
        match self {
            Study::NmsOrder => "nms-order",
            Study::NHist => "n-hist",
            Study::TwoD => "2d",
        }
    }

    /// Preset the study runs on.
    pub fn preset(self) -> Preset {
        match self {
            Study::NmsOrder => Preset::Random,
            Study::NHist => Preset::Occlusion,
            Study::TwoD => Preset::FovExit,
        }
    }

    pub fn default_seeds(self) -> Vec<u64> {
        match self {
            Study::NmsOrder => (1..=20).collect(),
            Study::NHist | Study::TwoD => (1..=10).collect(),
        }
    }

    /// Named configurations swept over `base`.
    pub fn settings(self, base: &Config) -> Vec<(String, Config)> {
        match self {
            Study::NmsOrder => NmsOrder::ALL.iter().map(|&o| (o.to_string(), Config { nms_order: o, ..base.clone() })).collect(),
            Study::NHist => [0usize, 1, 2, 3, 5].iter().map(|&n| (format!("n_hist={n}"), Config { n_hist: n, ..base.clone() })).collect(),
            Study::TwoD => [true, false]
                .iter()
                .map(|&u| (String::from(if u { "with 2d" } else { "without 2d" }), Config { use_2d: u, ..base.clone() }))
                .collect(),
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown study {s:?} (nms-order | n-hist | 2d)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettingResult {
    pub label: String,
    /// Overall CLEAR statistics per seed, in seed order.
    pub per_seed: Vec<(u64, ClearStats)>,
}

impl SettingResult {
    pub fn mean_mota(&self) -> f64 {
        self.per_seed.iter().map(|(_, c)| c.mota).sum::<f64>() / self.per_seed.len().max(1) as f64
    }

    pub fn total(&self, f: impl Fn(&ClearStats) -> usize) -> usize {
        self.per_seed.iter().map(|(_, c)| f(c)).sum()
    }

    /// FP + FN per seed.
    pub fn errors(&self) -> Vec<usize> {
        self.per_seed.iter().map(|(_, c)| c.fp + c.fn_).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub study: Study,
    pub preset: Preset,
    pub settings: Vec<SettingResult>,
}

impl StudyResult {
    pub fn setting(&self, label: &str) -> Option<&SettingResult> {
        self.settings.iter().find(|s| s.label == label)
    }
}

/// Runs every setting of `study` on each seed. The scenario seed also seeds
/// the synthetic oracles.
pub fn run_study(study: Study, seeds: &[u64], base: &Config) -> Result<StudyResult> {
    let preset = study.preset();
    let mut settings = Vec::new();
    for (label, cfg) in study.settings(base) {
        let mut per_seed = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let cfg = Config { seed, ..cfg.clone() };
            let (_, report) = run_preset(preset, seed, &cfg)?;
            per_seed.push((seed, report.overall.clear));
        }
        settings.push(SettingResult { label, per_seed });
    }
    Ok(StudyResult { study, preset, settings })
}

pub fn study_text(r: &StudyResult) -> String {
    let mut out = String::new();
    let seeds: Vec<String> = r.settings.first().map(|s| s.per_seed.iter().map(|(k, _)| k.to_string()).collect()).unwrap_or_default();
    let _ = writeln!(out, "study {}  preset {}  seeds {}", r.study, r.preset, seeds.join(","));
    let _ = writeln!(out, "{:<12} {:>8} {:>6} {:>6} {:>5}  FP+FN per seed", "setting", "MOTA", "FP", "FN", "IDSW");
    for s in &r.settings {
        let per: Vec<String> = s.errors().iter().map(usize::to_string).collect();
        let _ = writeln!(
            out,
            "{:<12} {:>8.2} {:>6} {:>6} {:>5}  {}",
            s.label,
            s.mean_mota() * 100.0,
            s.total(|c| c.fp),
            s.total(|c| c.fn_),
            s.total(|c| c.idsw),
            per.join(" ")
        );
    }
    out
}

pub fn study_json(r: &StudyResult) -> Value {
    let settings: Vec<Value> = r
        .settings
        .iter()
        .map(|s| {
            let per: Vec<Value> = s
                .per_seed
                .iter()
                .map(|(seed, c)| json!({ "seed": seed, "mota": c.mota, "fp": c.fp, "fn": c.fn_, "idsw": c.idsw }))
                .collect();
            json!({
                "setting": s.label,
                "mean_mota": s.mean_mota(),
                "fp": s.total(|c| c.fp),
                "fn": s.total(|c| c.fn_),
                "idsw": s.total(|c| c.idsw),
                "per_seed": per,
            })
        })
        .collect();
    json!({ "study": r.study.as_str(), "preset": r.preset.as_str(), "settings": settings })
}
