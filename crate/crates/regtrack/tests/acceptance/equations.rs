//! Exact arithmetic cases of the five fusion formulas.

use regtrack_core::fusion::{
    blend, blend_and_score, fuse_conf_2d, fuse_conf_3d, fuse_final, historical_feature, ConfidenceHistory, FeatureMemory,
};

use crate::{ensure, Outcome};

const TOL: f64 = 1e-12;

fn norm_head(f: &[f64]) -> regtrack_core::Result<f64> {
    Ok(f.iter().map(|x| x * x).sum::<f64>().sqrt().clamp(0.0, 1.0))
}

fn memory(entries: &[(f64, &[f64])]) -> FeatureMemory {
    let mut m = FeatureMemory::new(entries.len().max(1));
    for (k, (s, f)) in entries.iter().enumerate() {
        m.push(k as u32, Some(f.to_vec()), *s).unwrap();
    }
    m
}

fn history(s3: &[f64], s2: &[Option<f64>]) -> ConfidenceHistory {
    let mut h = ConfidenceHistory::new(s3.len().max(1));
    for (a, b) in s3.iter().zip(s2) {
        h.push(*a, *b);
    }
    h
}

struct Cases {
    n: usize,
    worst: f64,
    failures: Vec<String>,
}

impl Cases {
    fn near(&mut self, name: &str, got: f64, want: f64) {
        self.n += 1;
        let err = (got - want).abs();
        self.worst = self.worst.max(err);
        if err > TOL || err.is_nan() {
            self.failures.push(format!("{name}: {got} vs {want}"));
        }
    }

    fn vec(&mut self, name: &str, got: &[f64], want: &[f64]) {
        if got.len() != want.len() {
            self.failures.push(format!("{name}: length {} vs {}", got.len(), want.len()));
            return;
        }
        for (g, w) in got.iter().zip(want) {
            self.near(name, *g, *w);
        }
    }
}

pub fn check() -> Outcome {
    let mut c = Cases { n: 0, worst: 0.0, failures: Vec::new() };

    // feature memory mean
    let f = historical_feature(&memory(&[(0.5, &[1.0, 0.0]), (1.0, &[0.0, 1.0])])).unwrap();
    c.vec("memory mean", &f, &[0.25, 0.5]);
    let f = historical_feature(&memory(&[(1.0, &[0.3, -0.7, 2.0])])).unwrap();
    c.vec("memory single entry", &f, &[0.3, -0.7, 2.0]);
    let f = historical_feature(&memory(&[(0.0, &[1.0, 2.0]), (0.0, &[3.0, 4.0])])).unwrap();
    c.vec("memory zero confidence", &f, &[0.0, 0.0]);

    // blend and score
    let (his, cur) = ([0.25, 0.5], [0.6, 0.1]);
    c.near("blend s=1", blend_and_score(&his, &cur, 1.0, norm_head).unwrap(), norm_head(&cur).unwrap());
    c.near("blend s=0", blend_and_score(&his, &cur, 0.0, norm_head).unwrap(), norm_head(&his).unwrap());
    let b = blend(&[0.25, 0.5], &[1.0, 1.0], 0.8).unwrap();
    c.vec("blend arithmetic", &b, &[0.85, 0.9]);
    let s = blend_and_score(&[0.25, 0.5], &[1.0, 1.0], 0.8, norm_head).unwrap();
    c.near("blend score", s, norm_head(&[0.85, 0.9]).unwrap());
    if blend(&[1.0], &[1.0, 2.0], 0.5).is_ok() {
        c.failures.push(String::from("blend accepted mismatched dimensions"));
    }

    // 3D and 2D confidence means
    c.near("3d mean", fuse_conf_3d(&history(&[0.6, 0.8], &[None, None]), 0.7), 0.7);
    c.near("3d empty", fuse_conf_3d(&ConfidenceHistory::new(3), 0.42), 0.42);
    c.near("3d constant", fuse_conf_3d(&history(&[0.3, 0.3, 0.3], &[None; 3]), 0.3), 0.3);
    c.near("2d mean", fuse_conf_2d(&history(&[0.0], &[Some(1.0)]), 0.5), 0.75);
    c.near("2d empty", fuse_conf_2d(&ConfidenceHistory::new(3), 0.42), 0.42);
    c.near("2d zeros", fuse_conf_2d(&history(&[0.0, 0.0], &[Some(0.0), Some(0.0)]), 0.0), 0.0);

    // final fusion
    c.near("final mean", fuse_final(0.8, Some(0.6)), 0.7);
    c.near("final without 2d", fuse_final(0.37, None), 0.37);
    c.near("final zeros", fuse_final(0.0, Some(0.0)), 0.0);

    ensure(c.failures.is_empty(), || c.failures.join("; "))?;
    Ok(format!("{} values, max error {:.1e}", c.n, c.worst))
}
