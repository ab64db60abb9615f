//! Independent oracles for IoU, the Kalman filter, joint NMS and the
//! CLEAR/HOTA metrics.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use regtrack_core::association::{joint_nms, processing_order, CandidateRef, NmsCandidate, NmsOrder, NmsOutcome};
use regtrack_core::geometry::{Box3D, FrameId, IouKind};
use regtrack_core::metrics::{alphas, clear_from_frames, hota_from_frames, FrameSim};
use regtrack_core::motion::{kf_init, kf_predict, kf_update, KalmanConfig, KalmanState, StateMatrix, StateVector};
use regtrack_core::oracle::Category;
use regtrack_core::rng::Rng;

use crate::{ensure, Outcome};

fn random_box(rng: &mut Rng, spread: f64) -> Box3D {
    Box3D::new(
        rng.range(-spread, spread),
        rng.range(-spread, spread),
        rng.range(-0.5, 0.5),
        rng.range(1.0, 5.0),
        rng.range(0.8, 2.5),
        rng.range(0.8, 2.0),
        rng.range(-PI, PI),
        FrameId::Ego,
    )
    .unwrap()
}

// ---------------------------------------------------------------- IoU

fn to_local(b: &Box3D, x: f64, y: f64) -> (f64, f64) {
    let (s, c) = b.yaw.sin_cos();
    let (dx, dy) = (x - b.cx, y - b.cy);
    (c * dx + s * dy, -s * dx + c * dy)
}

fn inside_footprint(b: &Box3D, x: f64, y: f64) -> bool {
    let (u, v) = to_local(b, x, y);
    u.abs() <= b.l / 2.0 && v.abs() <= b.w / 2.0
}

/// Jittered-stratified estimate of IoU: `n` samples per axis inside `a`
/// (`n²` for BEV, `n³` in 3D), counting the fraction that falls in `b`.
fn monte_carlo_iou(a: &Box3D, b: &Box3D, three_d: bool, rng: &mut Rng) -> f64 {
    let (s, c) = a.yaw.sin_cos();
    let n = if three_d { 100 } else { 1000 };
    let nz = if three_d { n } else { 1 };
    let (bz0, bz1) = (b.cz - b.h / 2.0, b.cz + b.h / 2.0);
    let mut hits = 0u64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..nz {
                let u = ((i as f64 + rng.uniform()) / n as f64 - 0.5) * a.l;
                let v = ((j as f64 + rng.uniform()) / n as f64 - 0.5) * a.w;
                let (x, y) = (a.cx + c * u - s * v, a.cy + s * u + c * v);
                if !inside_footprint(b, x, y) {
                    continue;
                }
                if three_d {
                    let z = a.cz + ((k as f64 + rng.uniform()) / nz as f64 - 0.5) * a.h;
                    if z < bz0 || z > bz1 {
                        continue;
                    }
                }
                hits += 1;
            }
        }
    }
    let total = (n * n * nz) as f64;
    let (va, vb) = if three_d { (a.l * a.w * a.h, b.l * b.w * b.h) } else { (a.l * a.w, b.l * b.w) };
    let inter = va * hits as f64 / total;
    inter / (va + vb - inter)
}

pub fn iou() -> Outcome {
    let mut rng = Rng::new(0x10);
    let mut worst: f64 = 0.0;
    let mut overlapping = 0;
    for pair in 0..100 {
        let a = random_box(&mut rng, 0.0);
        // offsets up to a box length keep most pairs overlapping
        let mut b = random_box(&mut rng, 2.0);
        if pair % 10 == 0 {
            b = Box3D { yaw: a.yaw, ..a };
            b.cx += 0.5;
        }
        for kind in [IouKind::Bev, IouKind::ThreeD] {
            let got = kind.iou(&a, &b).map_err(|e| e.to_string())?;
            let want = monte_carlo_iou(&a, &b, kind == IouKind::ThreeD, &mut rng);
            if got > 0.0 {
                overlapping += 1;
            }
            let err = (got - want).abs();
            worst = worst.max(err);
            ensure(err <= 1e-3, || format!("pair {pair} {kind:?}: {got:.6} vs sampled {want:.6}"))?;
        }
    }
    Ok(format!("200 comparisons ({overlapping} overlapping), max error {worst:.1e}"))
}

// ---------------------------------------------------------------- Kalman

type Mat = Vec<Vec<f64>>;

fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

fn eye(n: usize) -> Mat {
    let mut m = zeros(n, n);
    (0..n).for_each(|i| m[i][i] = 1.0);
    m
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = zeros(a.len(), b[0].len());
    for i in 0..a.len() {
        for k in 0..b.len() {
            for j in 0..b[0].len() {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn tr(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| (0..a.len()).map(|i| a[i][j]).collect()).collect()
}

fn add(a: &Mat, b: &Mat, sign: f64) -> Mat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + sign * y).collect()).collect()
}

/// Gauss-Jordan inverse with partial pivoting.
fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a.iter().zip(eye(n)).map(|(r, e)| r.iter().copied().chain(e).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        m[col].iter_mut().for_each(|x| *x /= d);
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                let pivot_row = m[col].clone();
                m[r].iter_mut().zip(&pivot_row).for_each(|(x, p)| *x -= f * p);
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn wrap(a: f64) -> f64 {
    a.sin().atan2(a.cos())
}

/// Model matrices written out from the definition: position and yaw,
/// size, then velocity; unit time step.
struct Model {
    f: Mat,
    h: Mat,
    q: Mat,
    r: Mat,
}

fn model(cfg: &KalmanConfig) -> Model {
    let mut f = eye(10);
    for i in 0..3 {
        f[i][7 + i] = 1.0;
    }
    let mut h = zeros(7, 10);
    (0..7).for_each(|i| h[i][i] = 1.0);
    let mut q = zeros(10, 10);
    (0..10).for_each(|i| q[i][i] = if i < 7 { cfg.process_pose_var } else { cfg.process_vel_var });
    let mut r = eye(7);
    r.iter_mut().enumerate().for_each(|(i, row)| row[i] = cfg.meas_var);
    Model { f, h, q, r }
}

fn col(v: &[f64]) -> Mat {
    v.iter().map(|x| vec![*x]).collect()
}

fn oracle_predict(m: &Model, x: &[f64], p: &Mat) -> (Vec<f64>, Mat) {
    let mut xn: Vec<f64> = mul(&m.f, &col(x)).into_iter().map(|r| r[0]).collect();
    xn[3] = wrap(xn[3]);
    (xn, add(&mul(&mul(&m.f, p), &tr(&m.f)), &m.q, 1.0))
}

fn oracle_update(m: &Model, x: &[f64], p: &Mat, z: &Box3D) -> (Vec<f64>, Mat) {
    let zv = [z.cx, z.cy, z.cz, z.yaw, z.l, z.w, z.h];
    let mut y: Vec<f64> = (0..7).map(|i| zv[i] - x[i]).collect();
    // a heading and its reverse are the same box
    let mut dyaw = wrap(z.yaw - x[3]);
    if dyaw > PI / 2.0 {
        dyaw -= PI;
    } else if dyaw < -PI / 2.0 {
        dyaw += PI;
    }
    y[3] = dyaw;
    let s = add(&mul(&mul(&m.h, p), &tr(&m.h)), &m.r, 1.0);
    let k = mul(&mul(p, &tr(&m.h)), &inverse(&s));
    let ky = mul(&k, &col(&y));
    let mut xn: Vec<f64> = (0..10).map(|i| x[i] + ky[i][0]).collect();
    xn[3] = wrap(xn[3]);
    let pn = mul(&add(&eye(10), &mul(&k, &m.h), -1.0), p);
    (xn, pn)
}

fn to_state(x: &[f64], p: &Mat) -> KalmanState {
    KalmanState {
        mean: StateVector::from_column_slice(x),
        covariance: StateMatrix::from_fn(|i, j| p[i][j]),
    }
}

fn max_diff(s: &KalmanState, x: &[f64], p: &Mat) -> f64 {
    let mean = x.iter().enumerate().map(|(i, v)| (s.mean[i] - v).abs());
    let cov = p.iter().enumerate().flat_map(|(i, row)| row.iter().enumerate().map(move |(j, v)| (s.covariance[(i, j)] - v).abs()));
    mean.chain(cov).fold(0.0, f64::max)
}

fn random_spd(rng: &mut Rng) -> Mat {
    let a: Mat = (0..10).map(|_| (0..10).map(|_| rng.range(-1.0, 1.0)).collect()).collect();
    add(&mul(&a, &tr(&a)), &eye(10), 0.1)
}

pub fn kalman() -> Outcome {
    let mut rng = Rng::new(0x20);
    let cfg = KalmanConfig::default();
    let m = model(&cfg);
    let mut worst: f64 = 0.0;
    for n in 0..100 {
        let b = random_box(&mut rng, 20.0);
        let x: Vec<f64> = [b.cx, b.cy, b.cz, b.yaw, b.l, b.w, b.h]
            .into_iter()
            .chain((0..3).map(|_| rng.range(-2.0, 2.0)))
            .collect();
        let p = random_spd(&mut rng);
        let s = to_state(&x, &p);

        let got = kf_predict(&s, &cfg);
        let (xp, pp) = oracle_predict(&m, &x, &p);
        let d = max_diff(&got, &xp, &pp);
        worst = worst.max(d);
        ensure(d <= 1e-10, || format!("predict state {n}: differs by {d:.2e}"))?;

        let z = random_box(&mut rng, 20.0);
        let got = kf_update(&got, &z, &cfg).map_err(|e| e.to_string())?;
        let (xu, pu) = oracle_update(&m, &xp, &pp, &z);
        let d = max_diff(&got, &xu, &pu);
        worst = worst.max(d);
        ensure(d <= 1e-10, || format!("update state {n}: differs by {d:.2e}"))?;
    }

    // long random walks with intermittent measurements
    for walk in 0..10 {
        let mut truth = random_box(&mut rng, 5.0);
        let mut s = kf_init(&truth, &cfg);
        for step in 0..1000 {
            s = kf_predict(&s, &cfg);
            truth.cx += rng.range(-1.0, 1.0);
            truth.cy += rng.range(-1.0, 1.0);
            truth.yaw = wrap(truth.yaw + rng.range(-0.3, 0.3));
            if rng.uniform() < 0.7 {
                s = kf_update(&s, &truth, &cfg).map_err(|e| format!("walk {walk} step {step}: {e}"))?;
            }
            ensure(s.is_positive_definite(), || format!("walk {walk} step {step}: covariance not SPD"))?;
        }
    }
    Ok(format!("100 states, max difference {worst:.1e}; 10 x 1000-step walks SPD"))
}

// ---------------------------------------------------------------- NMS

fn rank(k: CandidateRef) -> (u8, u64) {
    match k {
        CandidateRef::Trajectory(id) => (0, u64::from(id)),
        CandidateRef::Detection(i) => (1, i as u64),
    }
}

/// Processing order from the rule: score (per `order`), trajectories
/// before detections, then lower id or index; input order when unordered.
fn oracle_order(c: &[NmsCandidate], order: NmsOrder) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..c.len()).collect();
    let key = |i: usize| {
        let s = match order {
            NmsOrder::Descending => -c[i].score,
            NmsOrder::Ascending => c[i].score,
            NmsOrder::Unordered => 0.0,
        };
        (s, rank(c[i].kind))
    };
    if order != NmsOrder::Unordered {
        // insertion sort keeps this independent of the library's sort
        for a in 1..idx.len() {
            let mut b = a;
            while b > 0 && key(idx[b]).partial_cmp(&key(idx[b - 1])) == Some(std::cmp::Ordering::Less) {
                idx.swap(b, b - 1);
                b -= 1;
            }
        }
    }
    idx
}

/// Brute force. The kept set is the unique subset in which a candidate is
/// kept exactly when no earlier kept candidate of its category overlaps it
/// at or above the threshold; found by trying every subset.
fn oracle_nms(c: &[NmsCandidate], thr: f64, order: NmsOrder, kind: IouKind) -> Result<NmsOutcome, String> {
    let n = c.len();
    let ord = oracle_order(c, order);
    let mut pos = vec![0; n];
    for (p, &i) in ord.iter().enumerate() {
        pos[i] = p;
    }
    // iou[i][j]: candidate i tested against an earlier survivor j
    let mut iou = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && c[i].category == c[j].category {
                iou[i][j] = kind.iou(&c[i].box3d, &c[j].box3d).map_err(|e| e.to_string())?;
            }
        }
    }
    let overlaps = |i: usize, j: usize| i != j && c[i].category == c[j].category && pos[j] < pos[i] && iou[i][j] >= thr;
    let consistent = |mask: u32| {
        (0..n).all(|i| {
            let kept = mask >> i & 1 == 1;
            let blocked = (0..n).any(|j| mask >> j & 1 == 1 && overlaps(i, j));
            kept != blocked
        })
    };
    let masks: Vec<u32> = (0..1u32 << n).filter(|&m| consistent(m)).collect();
    ensure(masks.len() == 1, || format!("{} consistent kept sets", masks.len()))?;
    let kept = |i: usize| masks[0] >> i & 1 == 1;

    // each suppressed candidate goes to its best-overlapping earlier survivor
    let mut suppressor = vec![None; n];
    for i in (0..n).filter(|&i| !kept(i)) {
        let mut best: Option<usize> = None;
        for j in (0..n).filter(|&j| kept(j) && overlaps(i, j)) {
            best = match best {
                Some(b) if iou[i][b] > iou[i][j] || (iou[i][b] == iou[i][j] && pos[b] < pos[j]) => Some(b),
                _ => Some(j),
            };
        }
        suppressor[i] = best;
    }

    let mut out = NmsOutcome::default();
    for i in 0..n {
        match (c[i].kind, kept(i)) {
            (CandidateRef::Trajectory(id), true) => {
                let det = (0..n)
                    .filter(|&d| suppressor[d] == Some(i) && matches!(c[d].kind, CandidateRef::Detection(_)))
                    .min_by(|&a, &b| iou[b][i].total_cmp(&iou[a][i]).then(rank(c[a].kind).cmp(&rank(c[b].kind))));
                out.surviving_tracks.push((id, det.map(|d| match c[d].kind {
                    CandidateRef::Detection(k) => k,
                    CandidateRef::Trajectory(_) => unreachable!(),
                })));
            }
            (CandidateRef::Trajectory(id), false) => out.suppressed_tracks.push(id),
            (CandidateRef::Detection(k), true) => {
                out.new_detections.push(k);
                let heir = (0..n)
                    .filter(|&t| suppressor[t] == Some(i) && matches!(c[t].kind, CandidateRef::Trajectory(_)))
                    .min_by(|&a, &b| iou[b][i].total_cmp(&iou[a][i]).then(rank(c[a].kind).cmp(&rank(c[b].kind))));
                if let Some(t) = heir {
                    if let CandidateRef::Trajectory(id) = c[t].kind {
                        out.handovers.push((id, k));
                    }
                }
            }
            (CandidateRef::Detection(_), false) => {}
        }
    }
    out.surviving_tracks.sort_unstable();
    out.suppressed_tracks.sort_unstable();
    out.new_detections.sort_unstable();
    out.handovers.sort_unstable();
    Ok(out)
}

fn random_instance(rng: &mut Rng) -> Vec<NmsCandidate> {
    let n = rng.below(9) as usize;
    let mut ids: Vec<u32> = (0..20).collect();
    let mut out: Vec<NmsCandidate> = Vec::with_capacity(n);
    for k in 0..n {
        let box3d = match out.last() {
            // exact duplicates exercise the tie rules
            Some(prev) if rng.uniform() < 0.2 => prev.box3d,
            _ => random_box(rng, 2.0),
        };
        let mut score = rng.uniform();
        if rng.uniform() < 0.5 {
            score = (score * 10.0).round() / 10.0;
        }
        let kind = if rng.uniform() < 0.5 {
            let at = rng.below(ids.len() as u64) as usize;
            CandidateRef::Trajectory(ids.swap_remove(at))
        } else {
            CandidateRef::Detection(k)
        };
        let category = if rng.uniform() < 0.8 { Category::Car } else { Category::Pedestrian };
        out.push(NmsCandidate { box3d, score, category, kind });
    }
    out
}

pub fn nms() -> Outcome {
    let mut rng = Rng::new(0x30);
    let mut suppressed = 0;
    let mut handovers = 0;
    for inst in 0..1000 {
        let c = random_instance(&mut rng);
        let thr = [0.1, 0.3, 0.5, 0.7][inst % 4];
        let order = NmsOrder::ALL[inst % 3];
        let kind = if inst % 2 == 0 { IouKind::Bev } else { IouKind::ThreeD };
        ensure(processing_order(&c, order) == oracle_order(&c, order), || format!("instance {inst}: processing order"))?;
        let got = joint_nms(&c, thr, order, kind).map_err(|e| e.to_string())?;
        let want = oracle_nms(&c, thr, order, kind).map_err(|e| format!("instance {inst}: {e}"))?;
        ensure(got == want, || format!("instance {inst} ({order}, thr {thr}): {got:?} vs {want:?}"))?;
        suppressed += got.suppressed_tracks.len();
        handovers += got.handovers.len();
    }
    Ok(format!("1000 instances equal ({suppressed} suppressed trajectories, {handovers} hand-overs)"))
}

// ---------------------------------------------------------------- metrics

/// All partial one-to-one matchings between `ng` rows and `np` columns.
fn matchings(ng: usize, np: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(g: usize, ng: usize, np: usize, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if g == ng {
            out.push(cur.clone());
            return;
        }
        rec(g + 1, ng, np, used, cur, out);
        for p in 0..np {
            if !used[p] {
                used[p] = true;
                cur.push((g, p));
                rec(g + 1, ng, np, used, cur, out);
                cur.pop();
                used[p] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, ng, np, &mut vec![false; np], &mut Vec::new(), &mut out);
    out
}

fn best_matching(cands: &[Vec<(usize, usize)>], weight: impl Fn(usize, usize) -> f64, allowed: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let mut best: (f64, Vec<(usize, usize)>) = (-1.0, Vec::new());
    for m in cands {
        if m.iter().all(|&(g, p)| allowed(g, p)) {
            let w: f64 = m.iter().map(|&(g, p)| weight(g, p)).sum();
            if w > best.0 {
                best = (w, m.clone());
            }
        }
    }
    best.1
}

struct BruteClear {
    tp: usize,
    fp: usize,
    fn_: usize,
    idsw: usize,
    mota: f64,
    motp: f64,
}

fn brute_clear(frames: &[FrameSim], thr: f64) -> BruteClear {
    let (mut tp, mut idsw, mut ngt, mut npred, mut sim) = (0, 0, 0, 0, 0.0);
    let mut last: BTreeMap<u32, u32> = BTreeMap::new();
    let mut prev: BTreeMap<u32, u32> = BTreeMap::new();
    for f in frames {
        let (ng, np) = (f.gt_ids.len(), f.pred_ids.len());
        ngt += ng;
        npred += np;
        let ok = |g: usize, p: usize| f.at(g, p) >= thr && f.at(g, p) > 0.0;
        // continuing pairs are kept while they still qualify
        let kept: Vec<(usize, usize)> = (0..ng)
            .filter_map(|g| {
                let pid = prev.get(&f.gt_ids[g])?;
                let p = f.pred_ids.iter().position(|x| x == pid)?;
                ok(g, p).then_some((g, p))
            })
            .collect();
        let free = |g: usize, p: usize| ok(g, p) && !kept.iter().any(|&(kg, kp)| kg == g || kp == p);
        let mut m = best_matching(&matchings(ng, np), |g, p| f.at(g, p), free);
        m.extend(kept);
        prev.clear();
        for &(g, p) in &m {
            let (gid, pid) = (f.gt_ids[g], f.pred_ids[p]);
            if last.get(&gid).is_some_and(|&o| o != pid) {
                idsw += 1;
            }
            last.insert(gid, pid);
            prev.insert(gid, pid);
            sim += f.at(g, p);
        }
        tp += m.len();
    }
    let (fn_, fp) = (ngt - tp, npred - tp);
    BruteClear {
        tp,
        fp,
        fn_,
        idsw,
        mota: 1.0 - (fn_ + fp + idsw) as f64 / ngt.max(1) as f64,
        motp: if tp > 0 { sim / tp as f64 } else { 0.0 },
    }
}

/// HOTA from its definition: identity alignment from per-frame Jaccard
/// potentials, one alignment-weighted best matching per frame by
/// enumeration, then per-threshold detection and association accuracy.
fn brute_hota(frames: &[FrameSim]) -> (f64, f64, f64, f64) {
    let mut pot: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut gtn: BTreeMap<u32, f64> = BTreeMap::new();
    let mut prn: BTreeMap<u32, f64> = BTreeMap::new();
    for f in frames {
        for (g, gid) in f.gt_ids.iter().enumerate() {
            *gtn.entry(*gid).or_default() += 1.0;
            for (p, pid) in f.pred_ids.iter().enumerate() {
                let rs: f64 = (0..f.pred_ids.len()).map(|q| f.at(g, q)).sum();
                let cs: f64 = (0..f.gt_ids.len()).map(|h| f.at(h, p)).sum();
                let s = f.at(g, p);
                let d = rs + cs - s;
                if d > 1e-12 {
                    *pot.entry((*gid, *pid)).or_default() += s / d;
                }
            }
        }
        for pid in &f.pred_ids {
            *prn.entry(*pid).or_default() += 1.0;
        }
    }
    let align = |g: u32, p: u32| {
        let c = pot.get(&(g, p)).copied().unwrap_or(0.0);
        c / (gtn[&g] + prn[&p] - c)
    };
    let ngt: usize = frames.iter().map(|f| f.gt_ids.len()).sum();
    let npr: usize = frames.iter().map(|f| f.pred_ids.len()).sum();
    let per_frame: Vec<Vec<(usize, usize)>> = frames
        .iter()
        .map(|f| {
            let cands = matchings(f.gt_ids.len(), f.pred_ids.len());
            best_matching(&cands, |g, p| align(f.gt_ids[g], f.pred_ids[p]) * f.at(g, p), |_, _| true)
        })
        .collect();
    let (mut hota, mut deta, mut assa, mut loca) = (0.0, 0.0, 0.0, 0.0);
    let alphas = alphas();
    for &alpha in &alphas {
        let mut counts: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        let (mut tp, mut loc) = (0usize, 0.0);
        for (f, m) in frames.iter().zip(&per_frame) {
            for &(g, p) in m {
                let s = f.at(g, p);
                if s >= alpha - 1e-12 {
                    tp += 1;
                    loc += s;
                    *counts.entry((f.gt_ids[g], f.pred_ids[p])).or_default() += 1.0;
                }
            }
        }
        let d = tp as f64 / (ngt + npr - tp).max(1) as f64;
        let a = counts
            .iter()
            .map(|(&(g, p), &m)| m * m / (gtn[&g] + prn[&p] - m).max(1.0))
            .sum::<f64>()
            / tp.max(1) as f64;
        hota += (d * a).sqrt();
        deta += d;
        assa += a;
        loca += if tp > 0 { loc / tp as f64 } else { 0.0 };
    }
    let n = alphas.len() as f64;
    (hota / n, deta / n, assa / n, loca / n)
}

fn random_frames(rng: &mut Rng) -> Vec<FrameSim> {
    let nf = 1 + rng.below(6) as usize;
    let subset = |rng: &mut Rng, base: u32| -> Vec<u32> { (0..4).filter(|_| rng.uniform() < 0.6).map(|i| base + i).collect() };
    (0..nf)
        .map(|_| {
            let gt_ids = subset(rng, 0);
            let pred_ids = subset(rng, 10);
            let sim = (0..gt_ids.len() * pred_ids.len())
                .map(|_| if rng.uniform() < 0.3 { 0.0 } else { rng.range(0.01, 1.0) })
                .collect();
            FrameSim { gt_ids, pred_ids, sim }
        })
        .collect()
}

pub fn metrics() -> Outcome {
    let mut rng = Rng::new(0x40);
    let mut worst: f64 = 0.0;
    let mut idsw = 0;
    for inst in 0..200 {
        let frames = random_frames(&mut rng);
        let thr = [0.25, 0.5][inst % 2];
        let got = clear_from_frames(&frames, thr);
        let want = brute_clear(&frames, thr);
        ensure(
            (got.tp, got.fp, got.fn_, got.idsw) == (want.tp, want.fp, want.fn_, want.idsw),
            || format!("instance {inst}: CLEAR counts {:?} vs brute force {:?}", (got.tp, got.fp, got.fn_, got.idsw), (want.tp, want.fp, want.fn_, want.idsw)),
        )?;
        idsw += got.idsw;
        let h = hota_from_frames(&frames);
        let (bh, bd, ba, bl) = brute_hota(&frames);
        for (name, a, b) in [
            ("MOTA", got.mota, want.mota),
            ("MOTP", got.motp, want.motp),
            ("HOTA", h.hota, bh),
            ("DetA", h.deta, bd),
            ("AssA", h.assa, ba),
            ("LocA", h.loca, bl),
        ] {
            let e = (a - b).abs();
            worst = worst.max(e);
            ensure(e <= 1e-9, || format!("instance {inst}: {name} {a} vs brute force {b}"))?;
        }
    }
    Ok(format!("200 instances, max difference {worst:.1e}, {idsw} id switches exercised"))
}
