//! KITTI tracking files: calibration, oxts poses, object rows (labels,
//! detections, results) and a 2D detection sidecar.
//!
//! Everything handed to the core is in the LiDAR/ego frame. Camera-frame
//! object rows are converted once, on load, and back again on write.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3};
use regtrack_core::geometry::{project_box, Box2D, Box3D, CameraCalib, FrameId, RigidTransform};
use regtrack_core::math::normalize_angle;
use regtrack_core::motion::EgoPose;
use regtrack_core::oracle::{Category, Detection, Detection2D, FramePacket};
use regtrack_core::sequence::SequenceBundle;
use regtrack_core::trackman::ResultRow;

use crate::error::{read_to_string, write, Error, Result};

/// Image size assumed when none is given; KITTI's most common resolution.
pub const DEFAULT_IMAGE_SIZE: (u32, u32) = (1242, 375);

/// Frame period of KITTI tracking sequences.
pub const FRAME_PERIOD: f64 = 0.1;

const EARTH_RADIUS: f64 = 6_378_137.0;

fn numbers(tokens: &[&str], path: &Path, line: usize) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, line, format!("not a number: {t:?}")))
        })
        .collect()
}

/// Parses a calibration file with `P2`, `R0_rect`/`R_rect` and
/// `Tr_velo_to_cam`/`Tr_velo_cam` rows. Keys may carry a trailing colon.
pub fn parse_calib(text: &str, path: &Path, image_size: (u32, u32)) -> Result<CameraCalib> {
    let (mut p2, mut rect, mut velo) = (None, None, None);
    for (i, raw) in text.lines().enumerate() {
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some((key, rest)) = tokens.split_first() else { continue };
        let key = key.trim_end_matches(':');
        let slot = match key {
            "P2" => &mut p2,
            "R0_rect" | "R_rect" => &mut rect,
            "Tr_velo_to_cam" | "Tr_velo_cam" => &mut velo,
            _ => continue,
        };
        *slot = Some((i + 1, numbers(rest, path, i + 1)?));
    }
    let need = |v: Option<(usize, Vec<f64>)>, name: &str, len: usize| -> Result<Vec<f64>> {
        let (line, v) = v.ok_or_else(|| Error::parse(path, 0, format!("missing {name}")))?;
        if v.len() != len {
            return Err(Error::parse(path, line, format!("{name} needs {len} values, got {}", v.len())));
        }
        Ok(v)
    };
    let p2 = need(p2, "P2", 12)?;
    let rect = need(rect, "R0_rect", 9)?;
    let velo = need(velo, "Tr_velo_to_cam", 12)?;
    let mut lidar_to_cam = Matrix4::identity();
    lidar_to_cam.fixed_view_mut::<3, 4>(0, 0).copy_from(&Matrix3x4::from_row_slice(&velo));
    let calib = CameraCalib {
        projection: Matrix3x4::from_row_slice(&p2),
        rect: Matrix3::from_row_slice(&rect),
        lidar_to_cam,
        image_width: image_size.0,
        image_height: image_size.1,
    };
    calib.validate().map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(calib)
}

fn push_row(out: &mut String, key: &str, values: impl Iterator<Item = f64>) {
    out.push_str(key);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

/// Writes the three calibration rows the loader reads, at full precision.
pub fn format_calib(calib: &CameraCalib) -> String {
    let mut out = String::new();
    let p = &calib.projection;
    push_row(&mut out, "P2:", (0..3).flat_map(|r| (0..4).map(move |c| p[(r, c)])));
    let r = &calib.rect;
    push_row(&mut out, "R0_rect:", (0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)])));
    let t = &calib.lidar_to_cam;
    push_row(&mut out, "Tr_velo_to_cam:", (0..3).flat_map(|i| (0..4).map(move |j| t[(i, j)])));
    out
}

fn rotation_rpy(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
    let rz = Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

/// Mercator position of a latitude/longitude pair, with `scale` the cosine
/// of the reference latitude.
pub fn mercator(lat_deg: f64, lon_deg: f64, scale: f64) -> (f64, f64) {
    let x = scale * EARTH_RADIUS * lon_deg.to_radians();
    let y = scale * EARTH_RADIUS * ((90.0 + lat_deg) * PI / 360.0).tan().ln();
    (x, y)
}

/// Parses oxts rows (`lat lon alt roll pitch yaw ...`) into poses relative
/// to the first frame. The IMU frame stands in for the ego frame.
pub fn parse_oxts(text: &str, path: &Path) -> Result<Vec<EgoPose>> {
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < 6 {
            return Err(Error::parse(path, i + 1, "oxts rows need at least lat lon alt roll pitch yaw"));
        }
        raw.push(numbers(&tokens[..6], path, i + 1)?);
    }
    let Some(first) = raw.first() else { return Ok(Vec::new()) };
    let scale = first[0].to_radians().cos();
    let absolute = |v: &[f64]| {
        let (x, y) = mercator(v[0], v[1], scale);
        RigidTransform {
            rotation: rotation_rpy(v[3], v[4], v[5]),
            translation: Vector3::new(x, y, v[2]),
        }
    };
    let origin = absolute(first).inverse();
    Ok(raw
        .iter()
        .enumerate()
        .map(|(i, v)| EgoPose {
            world_from_ego: origin.compose(&absolute(v)),
            timestamp: i as f64 * FRAME_PERIOD,
        })
        .collect())
}

/// Parses pose rows of 12 numbers, the row-major 3x4 `world_from_ego`.
pub fn parse_poses(text: &str, path: &Path) -> Result<Vec<EgoPose>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 12 {
            return Err(Error::parse(path, i + 1, format!("pose rows need 12 values, got {}", tokens.len())));
        }
        let v = numbers(&tokens, path, i + 1)?;
        let m = Matrix3x4::from_row_slice(&v);
        let t = RigidTransform::new(m.fixed_view::<3, 3>(0, 0).into_owned(), m.column(3).into_owned())
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        out.push(EgoPose { world_from_ego: t, timestamp: out.len() as f64 * FRAME_PERIOD });
    }
    Ok(out)
}

pub fn format_poses(poses: &[EgoPose]) -> String {
    let mut out = String::new();
    for p in poses {
        let m = p.world_from_ego.to_matrix4();
        let vals: Vec<String> = (0..3).flat_map(|r| (0..4).map(move |c| m[(r, c)])).map(|v| v.to_string()).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    out
}

/// One object row in camera coordinates, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiObject {
    pub frame: u32,
    pub id: i64,
    pub type_name: String,
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    /// `[x1, y1, x2, y2]`; all `-1` when unknown.
    pub bbox: [f64; 4],
    /// `[h, w, l]`.
    pub dims: [f64; 3],
    /// Bottom centre in rectified camera coordinates.
    pub location: [f64; 3],
    pub rotation_y: f64,
    pub score: Option<f64>,
    /// Trailing columns after the score: a feature vector.
    pub extra: Vec<f64>,
}

/// Object category of a KITTI type name; `None` for `DontCare` and unknown names.
pub fn category_of(type_name: &str) -> Option<Category> {
    Some(match type_name {
        "Car" => Category::Car,
        "Van" => Category::Van,
        "Truck" => Category::Truck,
        "Pedestrian" | "Person_sitting" => Category::Pedestrian,
        "Cyclist" => Category::Cyclist,
        "Tram" | "Misc" => Category::Other,
        _ => return None,
    })
}

/// Parses whitespace-separated object rows: 17 columns for labels, 18 with a
/// score, more with a trailing feature vector.
pub fn parse_objects(text: &str, path: &Path) -> Result<Vec<KittiObject>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        if t.len() < 17 {
            return Err(Error::parse(path, n, format!("object rows need at least 17 columns, got {}", t.len())));
        }
        let frame = t[0].parse().map_err(|_| Error::parse(path, n, format!("bad frame {:?}", t[0])))?;
        let id = t[1].parse().map_err(|_| Error::parse(path, n, format!("bad track id {:?}", t[1])))?;
        let occluded = t[4].parse().map_err(|_| Error::parse(path, n, format!("bad occluded flag {:?}", t[4])))?;
        let v = numbers(&[&[t[3]], &t[5..]].concat(), path, n)?;
        out.push(KittiObject {
            frame,
            id,
            type_name: t[2].to_string(),
            truncated: v[0],
            occluded,
            alpha: v[1],
            bbox: [v[2], v[3], v[4], v[5]],
            dims: [v[6], v[7], v[8]],
            location: [v[9], v[10], v[11]],
            rotation_y: v[12],
            score: v.get(13).copied(),
            extra: v.get(14..).map(<[f64]>::to_vec).unwrap_or_default(),
        });
    }
    Ok(out)
}

impl KittiObject {
    /// The stored 2D box, or `None` when the row carries the `-1` placeholder.
    pub fn box2d(&self) -> Option<Box2D> {
        let [x1, y1, x2, y2] = self.bbox;
        if self.bbox.iter().all(|&v| v == -1.0) {
            return None;
        }
        Box2D::new(x1, y1, x2, y2).ok()
    }

    /// The row's 3D box in the LiDAR/ego frame.
    pub fn ego_box(&self, calib: &CameraCalib) -> regtrack_core::Result<Box3D> {
        let [h, w, l] = self.dims;
        let bottom = Vector3::from(self.location);
        let p = calib.cam_from_lidar().inverse().apply_point(&bottom);
        Box3D::new(p.x, p.y, p.z + h / 2.0, l, w, h, yaw_from_rotation_y(self.rotation_y), FrameId::Ego)
    }
}

/// LiDAR heading of a KITTI `rotation_y`, under the usual axis convention
/// (camera `x = -y_lidar`, `z = x_lidar`). Calibration tilt is ignored so
/// the pair of conversions is an exact inverse.
pub fn yaw_from_rotation_y(ry: f64) -> f64 {
    normalize_angle(-ry - PI / 2.0)
}

pub fn rotation_y_from_yaw(yaw: f64) -> f64 {
    normalize_angle(-yaw - PI / 2.0)
}

/// Camera-frame bottom centre and `rotation_y` of an ego-frame box.
pub fn camera_pose(b: &Box3D, calib: &CameraCalib) -> ([f64; 3], f64) {
    let c = calib.cam_from_lidar().apply_point(&Vector3::new(b.cx, b.cy, b.cz - b.h / 2.0));
    ([c.x, c.y, c.z], rotation_y_from_yaw(b.yaw))
}

/// Rows converted to ego-frame result rows, with warnings for rows that were
/// skipped. `DontCare` rows are skipped silently.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub items: Vec<T>,
    pub warnings: Vec<String>,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed { items: Vec::new(), warnings: Vec::new() }
    }
}

pub fn rows_from_objects(objs: &[KittiObject], calib: &CameraCalib, path: &Path) -> Result<Parsed<ResultRow>> {
    let mut out = Parsed::default();
    for o in objs {
        let Some(category) = category_of(&o.type_name) else {
            if o.type_name != "DontCare" {
                out.warnings.push(format!("{}: frame {}: unknown type {:?} skipped", path.display(), o.frame, o.type_name));
            }
            continue;
        };
        let track_id = u32::try_from(o.id)
            .map_err(|_| Error::parse(path, 0, format!("frame {}: negative track id {}", o.frame, o.id)))?;
        let box3d = o.ego_box(calib).map_err(|e| Error::parse(path, 0, format!("frame {}: {e}", o.frame)))?;
        out.items.push(ResultRow { frame: o.frame, track_id, category, box3d, box2d: o.box2d(), score: o.score.unwrap_or(1.0) });
    }
    Ok(out)
}

/// Detections grouped by frame; `frames` sets the minimum number of groups.
pub fn detections_from_objects(objs: &[KittiObject], calib: &CameraCalib, path: &Path, frames: usize) -> Result<Parsed<Vec<Detection>>> {
    let n = objs.iter().map(|o| o.frame as usize + 1).max().unwrap_or(0).max(frames);
    let mut out = Parsed { items: vec![Vec::new(); n], warnings: Vec::new() };
    for o in objs {
        let Some(category) = category_of(&o.type_name) else {
            if o.type_name != "DontCare" {
                out.warnings.push(format!("{}: frame {}: unknown type {:?} skipped", path.display(), o.frame, o.type_name));
            }
            continue;
        };
        let score = o.score.ok_or_else(|| Error::parse(path, 0, format!("frame {}: detection without a score", o.frame)))?;
        let box3d = o.ego_box(calib).map_err(|e| Error::parse(path, 0, format!("frame {}: {e}", o.frame)))?;
        let feature = (!o.extra.is_empty()).then(|| o.extra.clone());
        out.items[o.frame as usize].push(Detection { box3d, score, category, feature, source_frame: o.frame });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn object_line(out: &mut String, frame: u32, id: i64, category: Category, b: &Box3D, box2d: Option<Box2D>, tail: &str, calib: &CameraCalib) {
    let (loc, ry) = camera_pose(b, calib);
    // alpha from the printed values keeps load -> write a fixed point
    let printed = |v: f64| format!("{v:.6}").parse::<f64>().unwrap_or(v);
    let alpha = normalize_angle(printed(ry) - printed(loc[0]).atan2(printed(loc[2])));
    let bbox = match box2d.or_else(|| project_box(b, calib)) {
        Some(q) => format!("{:.6} {:.6} {:.6} {:.6}", q.x_min, q.y_min, q.x_max, q.y_max),
        None => String::from("-1 -1 -1 -1"),
    };
    let _ = writeln!(
        out,
        "{frame} {id} {category} -1 -1 {alpha:.6} {bbox} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {ry:.6}{tail}",
        b.h, b.w, b.l, loc[0], loc[1], loc[2]
    );
}

/// KITTI tracking result rows (`frame id type truncated occluded alpha x1 y1
/// x2 y2 h w l x y z rotation_y score`) sorted by frame then id. Missing 2D
/// boxes are projected from the 3D box.
pub fn format_results(rows: &[ResultRow], calib: &CameraCalib) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.track_id));
    let mut out = String::new();
    for r in sorted {
        object_line(&mut out, r.frame, r.track_id as i64, r.category, &r.box3d, r.box2d, &format!(" {:.6}", r.score), calib);
    }
    out
}

pub fn write_results(rows: &[ResultRow], calib: &CameraCalib, path: &Path) -> Result<()> {
    write(path, format_results(rows, calib))
}

/// Label rows (17 columns, no score) for generated ground truth.
pub fn format_labels(rows: &[ResultRow], calib: &CameraCalib) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.track_id));
    let mut out = String::new();
    for r in sorted {
        object_line(&mut out, r.frame, r.track_id as i64, r.category, &r.box3d, r.box2d, "", calib);
    }
    out
}

/// Detection rows with id `-1`, the score and any feature vector.
pub fn format_detections(frames: &[FramePacket]) -> String {
    let mut out = String::new();
    for p in frames {
        for d in &p.detections {
            let mut tail = format!(" {:.6}", d.score);
            for v in d.feature.iter().flatten() {
                let _ = write!(tail, " {v:.6}");
            }
            object_line(&mut out, p.frame_index, -1, d.category, &d.box3d, None, &tail, &p.calib);
        }
    }
    out
}

/// 2D sidecar rows: `frame type x1 y1 x2 y2 score`.
pub fn parse_detections_2d(text: &str, path: &Path) -> Result<Vec<(u32, Detection2D)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        if t.len() != 7 {
            return Err(Error::parse(path, i + 1, format!("2D rows need 7 columns, got {}", t.len())));
        }
        let frame = t[0].parse().map_err(|_| Error::parse(path, i + 1, format!("bad frame {:?}", t[0])))?;
        let category = category_of(t[1]).ok_or_else(|| Error::parse(path, i + 1, format!("unknown type {:?}", t[1])))?;
        let v = numbers(&t[2..], path, i + 1)?;
        let box2d = Box2D::new(v[0], v[1], v[2], v[3]).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        out.push((frame, Detection2D { box2d, score: v[4], category }));
    }
    Ok(out)
}

pub fn format_detections_2d(frames: &[FramePacket]) -> String {
    let mut out = String::new();
    for p in frames {
        for d in &p.detections_2d {
            let b = &d.box2d;
            let _ = writeln!(out, "{} {} {:.6} {:.6} {:.6} {:.6} {:.6}", p.frame_index, d.category, b.x_min, b.y_min, b.x_max, b.y_max, d.score);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PoseSource {
    Oxts(PathBuf),
    /// Rows of the 3x4 `world_from_ego` matrix.
    Matrices(PathBuf),
    None,
}

/// Where one sequence's files live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencePaths {
    pub sequence_id: String,
    pub calib: PathBuf,
    pub poses: PoseSource,
    pub labels: Option<PathBuf>,
    pub detections: PathBuf,
    pub detections_2d: Option<PathBuf>,
}

impl SequencePaths {
    /// Standard layout under `root`: `calib/`, `oxts/` (or `pose/`) and
    /// `label_02/`, each holding `<seq>.txt`. `detections` is a file or a
    /// directory holding `<seq>.txt` and optionally `<seq>_2d.txt`.
    pub fn kitti(root: &Path, seq: &str, detections: &Path) -> Self {
        let file = |dir: &str| root.join(dir).join(format!("{seq}.txt"));
        let poses = if file("oxts").is_file() {
            PoseSource::Oxts(file("oxts"))
        } else if file("pose").is_file() {
            PoseSource::Matrices(file("pose"))
        } else {
            PoseSource::None
        };
        let (det, det_2d) = if detections.is_dir() {
            (detections.join(format!("{seq}.txt")), detections.join(format!("{seq}_2d.txt")))
        } else {
            let stem = detections.file_stem().and_then(|s| s.to_str()).unwrap_or(seq);
            (detections.to_path_buf(), detections.with_file_name(format!("{stem}_2d.txt")))
        };
        SequencePaths {
            sequence_id: seq.to_string(),
            calib: file("calib"),
            poses,
            labels: Some(file("label_02")).filter(|p| p.is_file()),
            detections: det,
            detections_2d: Some(det_2d).filter(|p| p.is_file()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub bundle: SequenceBundle,
    pub warnings: Vec<String>,
}

/// Loads one sequence into ego-frame packets. A missing pose file falls back
/// to identity ego motion with a warning.
pub fn load_sequence(paths: &SequencePaths, image_size: (u32, u32)) -> Result<Loaded> {
    let calib = parse_calib(&read_to_string(&paths.calib)?, &paths.calib, image_size)?;
    let mut warnings = Vec::new();
    let poses = match &paths.poses {
        PoseSource::Oxts(p) => Some(parse_oxts(&read_to_string(p)?, p)?),
        PoseSource::Matrices(p) => Some(parse_poses(&read_to_string(p)?, p)?),
        PoseSource::None => {
            warnings.push(format!("sequence {}: no pose file, ego motion compensation disabled", paths.sequence_id));
            None
        }
    };
    let labels = match &paths.labels {
        Some(p) => {
            let parsed = rows_from_objects(&parse_objects(&read_to_string(p)?, p)?, &calib, p)?;
            warnings.extend(parsed.warnings);
            Some(parsed.items)
        }
        None => None,
    };
    let det_objs = parse_objects(&read_to_string(&paths.detections)?, &paths.detections)?;
    let pose_frames = poses.as_ref().map_or(0, Vec::len);
    let label_frames = labels.iter().flatten().map(|r| r.frame as usize + 1).max().unwrap_or(0);
    let dets = detections_from_objects(&det_objs, &calib, &paths.detections, pose_frames.max(label_frames))?;
    warnings.extend(dets.warnings);
    let n = dets.items.len();
    if let Some(p) = &poses {
        if p.len() < n {
            return Err(Error::Usage(format!("sequence {}: {} poses for {n} frames", paths.sequence_id, p.len())));
        }
    }
    let mut det_2d = vec![Vec::new(); n];
    if let Some(p) = &paths.detections_2d {
        for (f, d) in parse_detections_2d(&read_to_string(p)?, p)? {
            let slot = det_2d
                .get_mut(f as usize)
                .ok_or_else(|| Error::parse(p, 0, format!("frame {f} beyond the sequence's {n} frames")))?;
            slot.push(d);
        }
    }
    let frames = dets
        .items
        .into_iter()
        .zip(det_2d)
        .enumerate()
        .map(|(i, (detections, detections_2d))| FramePacket {
            frame_index: i as u32,
            ego_pose: poses.as_ref().map_or(EgoPose::identity(i as f64 * FRAME_PERIOD), |p| p[i]),
            calib: calib.clone(),
            detections,
            detections_2d,
            image_size,
            truth: None,
        })
        .collect();
    let bundle = SequenceBundle { sequence_id: paths.sequence_id.clone(), frames, labels };
    bundle.validate()?;
    Ok(Loaded { bundle, warnings })
}

/// Loads a results or label file into ego-frame rows.
pub fn load_rows(path: &Path, calib: &CameraCalib) -> Result<Parsed<ResultRow>> {
    rows_from_objects(&parse_objects(&read_to_string(path)?, path)?, calib, path)
}
