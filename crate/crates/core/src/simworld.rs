//! Synthetic scenarios: scripted objects, static occluders, an ego path, and
//! the detections a simulated sensor would report.
//!
//! Occlusion is BEV-only. A target's visible fraction is the share of rays,
//! spread evenly over its angular extent from the sensor, that reach it
//! before hitting an occluder and that fall inside the field of view.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3};

use crate::geometry::{apply_transform, project_box, Box2D, Box3D, CameraCalib, FrameId, RigidTransform};
use crate::math;
use crate::motion::EgoPose;
use crate::oracle::{response, Category, Detection, Detection2D, FramePacket, TruthObject, DEFAULT_RESPONSE_GAIN};
use crate::rng::Rng;
use crate::sequence::SequenceBundle;
use crate::trackman::ResultRow;
use crate::{Error, Result};

/// LiDAR mounting height above the ground.
pub const SENSOR_HEIGHT: f64 = 1.73;
pub const FRAME_PERIOD: f64 = 0.1;

const STREAM_EMBED: u64 = 1;
const STREAM_DET: u64 = 10;
const STREAM_DET_2D: u64 = 11;
const STREAM_CLUTTER: u64 = 12;
const STREAM_SITE: u64 = 13;
const STREAM_LAYOUT: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub frame: f64,
    pub x: f64,
    pub y: f64,
}

impl Waypoint {
    pub fn new(frame: f64, x: f64, y: f64) -> Self {
        Waypoint { frame, x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub id: u32,
    pub category: Category,
    /// `[l, w, h]`.
    pub size: [f64; 3],
    /// World-frame waypoints with increasing frames. The object exists from
    /// the first waypoint's frame to the last one's.
    pub waypoints: Vec<Waypoint>,
    /// Fixed heading; otherwise the heading follows the path.
    pub yaw: Option<f64>,
    /// Scripted per-frame visibility multiplier, applied on top of geometry.
    pub visibility: Option<Vec<f64>>,
}

/// A location that keeps producing false detections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterSite {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    /// Per-frame emission probability.
    pub rate: f64,
    pub score_lo: f64,
    pub score_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub pos_sigma: f64,
    pub yaw_sigma: f64,
    /// Relative size noise.
    pub size_sigma: f64,
    pub score_sigma: f64,
    pub pixel_sigma: f64,
    pub miss_rate: f64,
    /// Expected one-off false detections per frame.
    pub clutter_per_frame: f64,
}

impl NoiseParams {
    pub const ZERO: NoiseParams = NoiseParams {
        pos_sigma: 0.0,
        yaw_sigma: 0.0,
        size_sigma: 0.0,
        score_sigma: 0.0,
        pixel_sigma: 0.0,
        miss_rate: 0.0,
        clutter_per_frame: 0.0,
    };

    pub const MODERATE: NoiseParams = NoiseParams {
        pos_sigma: 0.08,
        yaw_sigma: 0.02,
        size_sigma: 0.03,
        score_sigma: 0.02,
        pixel_sigma: 1.5,
        miss_rate: 0.03,
        clutter_per_frame: 0.3,
    };
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams::MODERATE
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    pub fov_deg: f64,
    pub rays: usize,
    /// 3D visibility is full up to this range and falls linearly to zero at
    /// `max_range`.
    pub full_range: f64,
    pub max_range: f64,
    /// No detection is emitted below this visible fraction.
    pub drop_threshold: f64,
    /// Detection score at full response.
    pub det_ceiling: f64,
    pub response_gain: f64,
    /// Labels cover objects in the field of view up to this range.
    pub label_range: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams {
            fov_deg: 120.0,
            rays: 64,
            full_range: 35.0,
            max_range: 55.0,
            drop_threshold: 0.15,
            det_ceiling: 0.9,
            response_gain: DEFAULT_RESPONSE_GAIN,
            label_range: 80.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub frames: u32,
    pub objects: Vec<ObjectSpec>,
    /// Static world-frame boxes that block sight but are never labelled.
    pub occluders: Vec<Box3D>,
    /// Ego path; a single waypoint means a static ego.
    pub ego: Vec<Waypoint>,
    pub ego_yaw: Option<f64>,
    pub clutter_sites: Vec<ClutterSite>,
    pub noise: NoiseParams,
    pub sensor: SensorParams,
    pub calib: CameraCalib,
}

/// KITTI-style camera calibration of a forward-looking camera.
pub fn default_calib() -> CameraCalib {
    #[rustfmt::skip]
    let projection = Matrix3x4::new(
        7.215377e+02, 0.0, 6.095593e+02, 4.485728e+01,
        0.0, 7.215377e+02, 1.728540e+02, 2.163791e-01,
        0.0, 0.0, 1.0, 2.745884e-03,
    );
    #[rustfmt::skip]
    let lidar_to_cam = Matrix4::new(
        0.0, -1.0, 0.0, 0.0,
        0.0, 0.0, -1.0, -0.08,
        1.0, 0.0, 0.0, -0.27,
        0.0, 0.0, 0.0, 1.0,
    );
    CameraCalib {
        projection,
        rect: Matrix3::identity(),
        lidar_to_cam,
        image_width: 1242,
        image_height: 375,
    }
}

impl Scenario {
    pub fn empty(name: &str, seed: u64, frames: u32) -> Self {
        Scenario {
            name: String::from(name),
            seed,
            frames,
            objects: Vec::new(),
            occluders: Vec::new(),
            ego: alloc::vec![Waypoint::new(0.0, 0.0, 0.0)],
            ego_yaw: None,
            clutter_sites: Vec::new(),
            noise: NoiseParams::MODERATE,
            sensor: SensorParams::default(),
            calib: default_calib(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Scenario(String::from(m)));
        for (i, o) in self.objects.iter().enumerate() {
            if self.objects[..i].iter().any(|p| p.id == o.id) {
                return Err(Error::Scenario(alloc::format!("duplicate object id {}", o.id)));
            }
            check_path(&o.waypoints).map_err(|m| Error::Scenario(alloc::format!("object {}: {m}", o.id)))?;
            if o.size.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(Error::Scenario(alloc::format!("object {}: sizes must be positive", o.id)));
            }
            if let Some(v) = &o.visibility {
                if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::Scenario(alloc::format!("object {}: visibility outside [0, 1]", o.id)));
                }
            }
        }
        check_path(&self.ego).map_err(|m| Error::Scenario(alloc::format!("ego: {m}")))?;
        for b in &self.occluders {
            b.validate()?;
        }
        let s = &self.sensor;
        if s.rays == 0 {
            return bad("sensor rays must be positive");
        }
        if !(s.fov_deg > 0.0 && s.fov_deg <= 360.0) {
            return bad("sensor fov must be in (0, 360] degrees");
        }
        if !(s.full_range >= 0.0 && s.max_range > s.full_range) {
            return bad("sensor ranges must satisfy 0 <= full_range < max_range");
        }
        let n = &self.noise;
        let sigmas = [n.pos_sigma, n.yaw_sigma, n.size_sigma, n.score_sigma, n.pixel_sigma, n.clutter_per_frame];
        if sigmas.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || !(0.0..=1.0).contains(&n.miss_rate) {
            return bad("noise parameters must be finite and non-negative");
        }
        for c in &self.clutter_sites {
            if !(0.0..=1.0).contains(&c.rate) || c.score_lo > c.score_hi {
                return bad("clutter site rate must be in [0, 1] and score_lo <= score_hi");
            }
        }
        self.calib.validate()
    }

    fn ego_pose(&self, frame: u32) -> (f64, f64, f64) {
        let f = f64::from(frame);
        let (x, y, heading) = sample_path(&self.ego, f);
        (x, y, self.ego_yaw.unwrap_or(heading.unwrap_or(0.0)))
    }

    /// World-frame box of `o` at `frame`, if it exists then.
    pub fn object_box(&self, o: &ObjectSpec, frame: u32) -> Option<Box3D> {
        let f = f64::from(frame);
        let first = o.waypoints.first()?;
        let last = o.waypoints.last()?;
        if f < first.frame || f > last.frame {
            return None;
        }
        let (x, y, heading) = sample_path(&o.waypoints, f);
        let yaw = o.yaw.or(heading).unwrap_or(0.0);
        let [l, w, h] = o.size;
        Box3D::new(x, y, -SENSOR_HEIGHT + h / 2.0, l, w, h, yaw, FrameId::World).ok()
    }
}

fn check_path(wps: &[Waypoint]) -> core::result::Result<(), &'static str> {
    if wps.is_empty() {
        return Err("needs at least one waypoint");
    }
    if wps.iter().any(|w| !(w.frame.is_finite() && w.x.is_finite() && w.y.is_finite())) {
        return Err("waypoints must be finite");
    }
    if wps.windows(2).any(|p| p[1].frame <= p[0].frame) {
        return Err("waypoint frames must increase");
    }
    Ok(())
}

/// Position on a piecewise-linear path and the heading of the segment in
/// use, or of the nearest moving segment.
fn sample_path(wps: &[Waypoint], f: f64) -> (f64, f64, Option<f64>) {
    let heading = |a: &Waypoint, b: &Waypoint| {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        if dx * dx + dy * dy > 1e-12 {
            Some(math::atan2(dy, dx))
        } else {
            None
        }
    };
    if wps.len() == 1 || f <= wps[0].frame {
        let h = wps.windows(2).find_map(|p| heading(&p[0], &p[1]));
        return (wps[0].x, wps[0].y, h);
    }
    for k in 0..wps.len() - 1 {
        let (a, b) = (&wps[k], &wps[k + 1]);
        if f <= b.frame {
            let s = (f - a.frame) / (b.frame - a.frame);
            let h = heading(a, b).or_else(|| wps[..=k].windows(2).rev().find_map(|p| heading(&p[0], &p[1])));
            return (a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), h);
        }
    }
    let last = wps[wps.len() - 1];
    let h = wps.windows(2).rev().find_map(|p| heading(&p[0], &p[1]));
    (last.x, last.y, h)
}

/// Sensor position, heading and ray settings for visibility queries, all in
/// the frame of the boxes being queried.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewpoint {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Full field-of-view angle in radians.
    pub fov: f64,
    pub rays: usize,
}

impl Viewpoint {
    pub fn origin(fov_deg: f64, rays: usize) -> Self {
        Viewpoint {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            fov: fov_deg.to_radians(),
            rays,
        }
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Distance along the ray to the nearest edge of `poly`, if it is hit.
fn ray_hit(o: [f64; 2], d: [f64; 2], poly: &[[f64; 2]; 4]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..4 {
        let p = poly[i];
        let q = poly[(i + 1) % 4];
        let e = [q[0] - p[0], q[1] - p[1]];
        let den = cross(d, e);
        if math::abs(den) < 1e-15 {
            continue;
        }
        let w = [p[0] - o[0], p[1] - o[1]];
        let t = cross(w, e) / den;
        let s = cross(w, d) / den;
        if t > 0.0 && (0.0..=1.0).contains(&s) && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    }
    best
}

fn contains(poly: &[[f64; 2]; 4], p: [f64; 2]) -> bool {
    (0..4).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % 4];
        cross([b[0] - a[0], b[1] - a[1]], [p[0] - a[0], p[1] - a[1]]) >= 0.0
    })
}

/// `(rays inside the field of view, rays inside it and unblocked)`.
fn ray_counts(target: &Box3D, occluders: &[Box3D], view: &Viewpoint) -> (usize, usize) {
    let n = view.rays.max(1);
    let o = [view.x, view.y];
    let poly = target.footprint();
    if contains(&poly, o) {
        return (n, n);
    }
    let center_az = math::atan2(target.cy - o[1], target.cx - o[0]);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in &poly {
        let a = math::normalize_angle(math::atan2(c[1] - o[1], c[0] - o[0]) - center_az);
        lo = lo.min(a);
        hi = hi.max(a);
    }
    let occ: Vec<[[f64; 2]; 4]> = occluders.iter().map(|b| b.footprint()).collect();
    let half_fov = view.fov / 2.0;
    let (mut in_fov, mut visible) = (0, 0);
    for k in 0..n {
        let theta = center_az + lo + (k as f64 + 0.5) / n as f64 * (hi - lo);
        if math::abs(math::normalize_angle(theta - view.heading)) > half_fov {
            continue;
        }
        in_fov += 1;
        let d = [math::cos(theta), math::sin(theta)];
        let Some(t_target) = ray_hit(o, d, &poly) else {
            visible += 1;
            continue;
        };
        if !occ.iter().any(|p| ray_hit(o, d, p).is_some_and(|t| t < t_target)) {
            visible += 1;
        }
    }
    (in_fov, visible)
}

/// Visible share of `target`'s BEV silhouette from `view`.
///
/// Rays outside the field of view count as not visible.
pub fn visible_fraction(target: &Box3D, occluders: &[Box3D], view: &Viewpoint) -> f64 {
    let (_, visible) = ray_counts(target, occluders, view);
    visible as f64 / view.rays.max(1) as f64
}

/// Share of `target`'s silhouette inside the field of view, ignoring
/// occlusion.
pub fn fov_fraction(target: &Box3D, view: &Viewpoint) -> f64 {
    let (in_fov, _) = ray_counts(target, &[], view);
    in_fov as f64 / view.rays.max(1) as f64
}

fn range_falloff(range: f64, s: &SensorParams) -> f64 {
    if range <= s.full_range {
        1.0
    } else if range >= s.max_range {
        0.0
    } else {
        (s.max_range - range) / (s.max_range - s.full_range)
    }
}

/// Unit-norm appearance embedding of object `id`.
pub fn embedding(seed: u64, id: u32, dim: usize) -> Vec<f64> {
    let mut rng = Rng::derived(seed, &[u64::from(id), STREAM_EMBED]);
    let mut e: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let n = math::sqrt(e.iter().map(|x| x * x).sum::<f64>());
    if n > 0.0 {
        e.iter_mut().for_each(|x| *x /= n);
    } else if let Some(first) = e.first_mut() {
        *first = 1.0;
    }
    e
}

/// Per-object visibility of one generated frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    pub id: u32,
    pub occlusion: f64,
    pub visible_3d: f64,
    pub visible_2d: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub scenario: Scenario,
    pub bundle: SequenceBundle,
    pub visibility: Vec<Vec<Visibility>>,
}

/// Embedding dimension of generated truth objects.
pub const EMBED_DIM: usize = 8;

pub fn generate(scenario: &Scenario) -> Result<Generated> {
    scenario.validate()?;
    let s = &scenario.sensor;
    let noise = &scenario.noise;
    let mut frames = Vec::with_capacity(scenario.frames as usize);
    let mut labels = Vec::new();
    let mut visibility = Vec::with_capacity(scenario.frames as usize);

    for frame in 0..scenario.frames {
        let (ex, ey, eyaw) = scenario.ego_pose(frame);
        let world_from_ego = RigidTransform::from_yaw(eyaw, Vector3::new(ex, ey, 0.0));
        let ego_from_world = world_from_ego.inverse();
        let view = Viewpoint {
            x: ex,
            y: ey,
            heading: eyaw,
            fov: s.fov_deg.to_radians(),
            rays: s.rays,
        };
        let present: Vec<(&ObjectSpec, Box3D)> = scenario
            .objects
            .iter()
            .filter_map(|o| scenario.object_box(o, frame).map(|b| (o, b)))
            .collect();

        let mut truth = Vec::with_capacity(present.len());
        let mut vis_row = Vec::with_capacity(present.len());
        let mut detections = Vec::new();
        let mut detections_2d = Vec::new();
        for (i, (o, wb)) in present.iter().enumerate() {
            let mut blockers: Vec<Box3D> = scenario.occluders.clone();
            blockers.extend(present.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, (_, b))| *b));
            let script = o
                .visibility
                .as_ref()
                .map_or(1.0, |v| v.get(frame as usize).copied().unwrap_or(1.0));
            let occlusion = visible_fraction(wb, &blockers, &view) * script;
            let range = math::sqrt((wb.cx - ex) * (wb.cx - ex) + (wb.cy - ey) * (wb.cy - ey));
            let visible_3d = occlusion * range_falloff(range, s);
            let visible_2d = occlusion;
            let eb = apply_transform(wb, &ego_from_world, FrameId::Ego);
            let box2d = project_box(&eb, &scenario.calib);
            vis_row.push(Visibility {
                id: o.id,
                occlusion,
                visible_3d,
                visible_2d,
                range,
            });
            truth.push(TruthObject {
                id: o.id,
                category: o.category,
                box3d: eb,
                visible_3d,
                visible_2d,
                box2d,
                embedding: embedding(scenario.seed, o.id, EMBED_DIM),
            });
            if fov_fraction(wb, &view) > 0.0 && range <= s.label_range {
                labels.push(ResultRow {
                    frame,
                    track_id: o.id,
                    category: o.category,
                    box3d: eb,
                    box2d,
                    score: 1.0,
                });
            }

            let mut rng = Rng::derived(scenario.seed, &[u64::from(frame), u64::from(o.id), STREAM_DET]);
            let missed = rng.uniform() < noise.miss_rate;
            if visible_3d >= s.drop_threshold && !missed {
                let score = math::clamp01(
                    response(visible_3d, s.response_gain) * s.det_ceiling + rng.gaussian(noise.score_sigma),
                );
                detections.push(Detection {
                    box3d: jitter_box(&eb, noise, &mut rng)?,
                    score,
                    category: o.category,
                    feature: None,
                    source_frame: frame,
                });
            }
            let mut rng2 = Rng::derived(scenario.seed, &[u64::from(frame), u64::from(o.id), STREAM_DET_2D]);
            let missed_2d = rng2.uniform() < noise.miss_rate;
            if let (Some(b2), false) = (box2d, missed_2d) {
                if visible_2d >= s.drop_threshold {
                    let score = math::clamp01(
                        response(visible_2d, s.response_gain) * s.det_ceiling + rng2.gaussian(noise.score_sigma),
                    );
                    if let Some(jb) = jitter_box_2d(&b2, noise.pixel_sigma, &mut rng2) {
                        detections_2d.push(Detection2D {
                            box2d: jb,
                            score,
                            category: o.category,
                        });
                    }
                }
            }
        }

        for (k, site) in scenario.clutter_sites.iter().enumerate() {
            let mut rng = Rng::derived(scenario.seed, &[u64::from(frame), k as u64, STREAM_SITE]);
            if rng.uniform() >= site.rate {
                continue;
            }
            let score = rng.range(site.score_lo, site.score_hi);
            let wb = Box3D::new(site.x, site.y, -SENSOR_HEIGHT + 0.75, 4.0, 1.7, 1.5, site.yaw, FrameId::World)?;
            let range = math::sqrt((wb.cx - ex) * (wb.cx - ex) + (wb.cy - ey) * (wb.cy - ey));
            if fov_fraction(&wb, &view) < 1.0 || range > s.max_range {
                continue;
            }
            let eb = apply_transform(&wb, &ego_from_world, FrameId::Ego);
            detections.push(Detection {
                box3d: jitter_box(&eb, noise, &mut rng)?,
                score,
                category: Category::Car,
                feature: None,
                source_frame: frame,
            });
        }

        let mut rng = Rng::derived(scenario.seed, &[u64::from(frame), STREAM_CLUTTER]);
        let base = math::floor(noise.clutter_per_frame);
        let count = base as usize + usize::from(rng.uniform() < noise.clutter_per_frame - base);
        let half_fov = (s.fov_deg.to_radians() / 2.0).min(core::f64::consts::FRAC_PI_3);
        for _ in 0..count {
            let az = rng.range(-half_fov, half_fov);
            let r = rng.range(5.0, s.max_range);
            let score = rng.range(0.05, 0.45);
            let yaw = rng.range(-core::f64::consts::PI, core::f64::consts::PI);
            let eb = Box3D::new(
                r * math::cos(az),
                r * math::sin(az),
                -SENSOR_HEIGHT + 0.75,
                4.0,
                1.7,
                1.5,
                yaw,
                FrameId::Ego,
            )?;
            detections.push(Detection {
                box3d: eb,
                score,
                category: Category::Car,
                feature: None,
                source_frame: frame,
            });
        }

        frames.push(FramePacket {
            frame_index: frame,
            ego_pose: EgoPose {
                world_from_ego,
                timestamp: f64::from(frame) * FRAME_PERIOD,
            },
            calib: scenario.calib.clone(),
            detections,
            detections_2d,
            image_size: (scenario.calib.image_width, scenario.calib.image_height),
            truth: Some(truth),
        });
        visibility.push(vis_row);
    }

    labels.sort_by_key(|r| (r.frame, r.track_id));
    Ok(Generated {
        scenario: scenario.clone(),
        bundle: SequenceBundle {
            sequence_id: scenario.name.clone(),
            frames,
            labels: Some(labels),
        },
        visibility,
    })
}

fn jitter_box(b: &Box3D, n: &NoiseParams, rng: &mut Rng) -> Result<Box3D> {
    let dx = rng.gaussian(n.pos_sigma);
    let dy = rng.gaussian(n.pos_sigma);
    let dz = rng.gaussian(n.pos_sigma / 2.0);
    let size = |v: f64, rng: &mut Rng| v * (1.0 + rng.gaussian(n.size_sigma)).max(0.5);
    let l = size(b.l, rng);
    let w = size(b.w, rng);
    let h = size(b.h, rng);
    let dyaw = rng.gaussian(n.yaw_sigma);
    Box3D::new(b.cx + dx, b.cy + dy, b.cz + dz, l, w, h, b.yaw + dyaw, b.frame)
}

fn jitter_box_2d(b: &Box2D, sigma: f64, rng: &mut Rng) -> Option<Box2D> {
    let x0 = b.x_min + rng.gaussian(sigma);
    let y0 = b.y_min + rng.gaussian(sigma);
    let x1 = b.x_max + rng.gaussian(sigma);
    let y1 = b.y_max + rng.gaussian(sigma);
    Box2D::new(x0.min(x1), y0.min(y1), x0.max(x1), y0.max(y1)).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Crossing,
    FovExit,
    OcclusionRamp,
    Occlusion,
    Random,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Crossing,
        Preset::FovExit,
        Preset::OcclusionRamp,
        Preset::Occlusion,
        Preset::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Crossing => "crossing",
            Preset::FovExit => "fov_exit",
            Preset::OcclusionRamp => "occlusion_ramp",
            Preset::Occlusion => "occlusion",
            Preset::Random => "random",
        }
    }

    pub fn scenario(self, seed: u64) -> Scenario {
        match self {
            Preset::Crossing => crossing(seed),
            Preset::FovExit => fov_exit(seed),
            Preset::OcclusionRamp => occlusion_ramp(seed),
            Preset::Occlusion => occlusion(seed),
            Preset::Random => random(seed),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Scenario(alloc::format!("unknown preset {s:?}")))
    }
}

const CAR: [f64; 3] = [4.2, 1.7, 1.5];

fn car(id: u32, waypoints: Vec<Waypoint>) -> ObjectSpec {
    ObjectSpec {
        id,
        category: Category::Car,
        size: CAR,
        waypoints,
        yaw: None,
        visibility: None,
    }
}

/// Static ego; one parked car whose visibility falls linearly from 1 to 0
/// over ten frames, then recovers over the next ten. Noise-free.
pub fn occlusion_ramp(seed: u64) -> Scenario {
    let mut sc = Scenario::empty("occlusion_ramp", seed, 31);
    sc.noise = NoiseParams::ZERO;
    let ramp: Vec<f64> = (0..31)
        .map(|f| match f {
            0..=4 => 1.0,
            5..=15 => 1.0 - f64::from(f - 5) / 10.0,
            16..=25 => f64::from(f - 15) / 10.0,
            _ => 1.0,
        })
        .collect();
    let mut o = car(0, alloc::vec![Waypoint::new(0.0, 20.0, 0.0), Waypoint::new(30.0, 20.0, 0.0)]);
    o.yaw = Some(0.0);
    o.visibility = Some(ramp);
    sc.objects.push(o);
    sc
}

/// Static ego. Car 0 drives away along the sensor axis while car 1 crosses
/// it laterally further out; car 0 partly hides car 1 for about ten frames
/// and the two paths intersect once, about sixteen frames apart.
pub fn crossing(seed: u64) -> Scenario {
    let mut sc = Scenario::empty("crossing", seed, 40);
    sc.objects.push(car(0, alloc::vec![Waypoint::new(0.0, 8.0, 0.0), Waypoint::new(40.0, 32.0, 0.0)]));
    sc.objects.push(car(1, alloc::vec![Waypoint::new(0.0, 30.0, -15.0), Waypoint::new(40.0, 30.0, 15.0)]));
    sc
}

/// Static ego. Cars drive away past the 3D sensing range while staying in
/// the camera view, and an oncoming car leaves the field of view beside the
/// ego.
pub fn fov_exit(seed: u64) -> Scenario {
    let mut sc = Scenario::empty("fov_exit", seed, 50);
    let mut rng = Rng::derived(seed, &[STREAM_LAYOUT]);
    let y0 = rng.range(-2.5, 2.5);
    let v0 = rng.range(1.1, 1.3);
    sc.objects.push(car(0, alloc::vec![Waypoint::new(0.0, 18.0, y0), Waypoint::new(50.0, 18.0 + 50.0 * v0, y0)]));
    let y1 = rng.range(3.0, 4.5);
    let x1 = rng.range(35.0, 45.0);
    sc.objects.push(car(1, alloc::vec![Waypoint::new(0.0, x1, y1), Waypoint::new(40.0, x1 - 40.0, y1)]));
    let y2 = rng.range(-5.0, -3.5);
    let v2 = rng.range(0.9, 1.1);
    sc.objects.push(car(2, alloc::vec![Waypoint::new(5.0, 12.0, y2), Waypoint::new(50.0, 12.0 + 45.0 * v2, y2)]));
    sc
}

/// Static ego. Cars drive back and forth across the view behind parked
/// vans, so each is hidden for a few frames at a time, and never leave the
/// field of view.
pub fn occlusion(seed: u64) -> Scenario {
    let frames = 40u32;
    let mut sc = Scenario::empty("occlusion", seed, frames);
    let mut rng = Rng::derived(seed, &[STREAM_LAYOUT]);
    for k in 0..3 {
        let x = rng.range(10.0, 14.0);
        let y = -6.0 + 6.0 * f64::from(k) + rng.range(-1.0, 1.0);
        let w = rng.range(1.6, 2.4);
        if let Ok(b) = Box3D::new(x, y, -SENSOR_HEIGHT + 1.0, 1.8, w, 2.0, 0.0, FrameId::World) {
            sc.occluders.push(b);
        }
    }
    let end = f64::from(frames - 1);
    for id in 0..4u32 {
        let x = 22.0 + 5.0 * f64::from(id) + rng.range(-1.0, 1.0);
        let span = x * 0.6;
        let speed = rng.range(0.9, 1.4);
        let mut y = rng.range(-span, span);
        let mut dir = if id % 2 == 0 { 1.0 } else { -1.0 };
        let mut t = 0.0;
        let mut wps = alloc::vec![Waypoint::new(0.0, x, y)];
        while t < end {
            let target = dir * span;
            let dt = ((target - y) / (dir * speed)).min(end - t);
            t += dt;
            y += dir * speed * dt;
            wps.push(Waypoint::new(t, x, y));
            dir = -dir;
        }
        sc.objects.push(car(id, wps));
    }
    sc
}

/// Moving ego in multi-lane traffic with oncoming cars, cross traffic,
/// roadside occluders, and fixed spots that keep producing false
/// detections.
pub fn random(seed: u64) -> Scenario {
    let frames = 60u32;
    let f = f64::from(frames - 1);
    let mut sc = Scenario::empty("random", seed, frames);
    let mut rng = Rng::derived(seed, &[STREAM_LAYOUT]);
    let ego_speed = rng.range(0.6, 1.0);
    sc.ego = alloc::vec![Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(f, ego_speed * f, 0.0)];
    sc.ego_yaw = Some(0.0);
    sc.sensor.label_range = 60.0;

    let lanes = [-3.5, 3.5, 7.0];
    let mut id = 0u32;
    let lead = rng.range(12.0, 25.0);
    sc.objects.push(car(
        id,
        alloc::vec![Waypoint::new(0.0, lead, 0.0), Waypoint::new(f, lead + ego_speed * f, 0.0)],
    ));
    id += 1;
    let n_cars = 6 + rng.below(4) as u32;
    for _ in 0..n_cars {
        let lane = lanes[rng.below(lanes.len() as u64) as usize];
        let (start, speed) = if lane > 5.0 {
            (rng.range(40.0, 110.0), -rng.range(0.6, 1.2))
        } else {
            (rng.range(8.0, 70.0), rng.range(0.3, 1.3))
        };
        let y = lane + rng.range(-0.3, 0.3);
        let birth = rng.range(0.0, 20.0);
        let death = (birth + rng.range(25.0, 60.0)).min(f);
        sc.objects.push(car(
            id,
            alloc::vec![
                Waypoint::new(birth, start + speed * birth, y),
                Waypoint::new(death, start + speed * death, y),
            ],
        ));
        id += 1;
    }
    let n_cross = 1 + rng.below(3) as u32;
    for _ in 0..n_cross {
        let x = rng.range(25.0, 55.0);
        let dir = if rng.uniform() < 0.5 { 1.0 } else { -1.0 };
        let speed = rng.range(0.6, 1.1);
        let birth = rng.range(0.0, 30.0);
        let dur = 30.0 / speed;
        let death = (birth + dur).min(f);
        let y0 = -dir * 15.0;
        sc.objects.push(car(
            id,
            alloc::vec![
                Waypoint::new(birth, x, y0),
                Waypoint::new(death, x, y0 + dir * speed * (death - birth)),
            ],
        ));
        id += 1;
    }
    let n_occ = 2 + rng.below(3);
    for _ in 0..n_occ {
        let x = rng.range(10.0, 60.0);
        let y = if rng.uniform() < 0.5 { -7.0 } else { 10.5 } + rng.range(-0.5, 0.5);
        if let Ok(b) = Box3D::new(x, y, -SENSOR_HEIGHT + 1.0, rng.range(3.0, 8.0), 2.0, 2.0, 0.0, FrameId::World) {
            sc.occluders.push(b);
        }
    }
    let n_sites = 2 + rng.below(3);
    for _ in 0..n_sites {
        let lane = lanes[rng.below(lanes.len() as u64) as usize];
        sc.clutter_sites.push(ClutterSite {
            x: rng.range(15.0, 70.0),
            y: lane + rng.range(-1.5, 1.5),
            yaw: rng.range(-0.3, 0.3),
            rate: rng.range(0.6, 0.9),
            score_lo: 0.25,
            score_hi: 0.55,
        });
    }
    sc
}
