//! Oriented-box geometry: corners, BEV/3D/2D IoU, rigid transforms and
//! pinhole projection.
//!
//! Boxes live in a right-handed frame with `z` up (LiDAR convention). `yaw`
//! rotates the box's length axis away from `+x` towards `+y`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Point3, Vector3};

use crate::math::{self, normalize_angle};
use crate::{Error, Result};

/// Coordinate-frame tag carried by every [`Box3D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameId {
    Ego,
    World,
    Camera,
}

/// Oriented 3D box, yaw-only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub yaw: f64,
    pub frame: FrameId,
}

impl Box3D {
    /// Builds a validated box with `yaw` wrapped into `(-pi, pi]`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cx: f64,
        cy: f64,
        cz: f64,
        l: f64,
        w: f64,
        h: f64,
        yaw: f64,
        frame: FrameId,
    ) -> Result<Self> {
        let b = Box3D {
            cx,
            cy,
            cz,
            l,
            w,
            h,
            yaw: normalize_angle(yaw),
            frame,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0 && self.w > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidBox("dimensions must be positive"));
        }
        let finite = [self.cx, self.cy, self.cz, self.l, self.w, self.h, self.yaw]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidBox("non-finite field"));
        }
        if !(self.yaw > -PI && self.yaw <= PI) {
            return Err(Error::InvalidBox("yaw not normalized"));
        }
        Ok(())
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(self.cx, self.cy, self.cz)
    }

    pub fn volume(&self) -> f64 {
        self.l * self.w * self.h
    }

    pub fn footprint_area(&self) -> f64 {
        self.l * self.w
    }

    /// Footprint corners in counter-clockwise order, starting at the
    /// front-left corner `(+l/2, +w/2)` in box coordinates.
    pub fn footprint(&self) -> [[f64; 2]; 4] {
        let (s, c) = (math::sin(self.yaw), math::cos(self.yaw));
        let hl = self.l / 2.0;
        let hw = self.w / 2.0;
        let local = [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]];
        local.map(|[x, y]| [self.cx + c * x - s * y, self.cy + s * x + c * y])
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.cz - self.h / 2.0, self.cz + self.h / 2.0)
    }
}

/// The eight corners of `b`.
///
/// Indices `0..4` are the bottom face and `4..8` the top face; within each
/// face the order matches [`Box3D::footprint`] (front-left, rear-left,
/// rear-right, front-right).
pub fn corners(b: &Box3D) -> [Point3<f64>; 8] {
    let fp = b.footprint();
    let (z0, z1) = b.z_range();
    let mut out = [Point3::origin(); 8];
    for (i, [x, y]) in fp.iter().enumerate() {
        out[i] = Point3::new(*x, *y, z0);
        out[i + 4] = Point3::new(*x, *y, z1);
    }
    out
}

/// Axis-aligned image-plane box in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Box2D {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        if !(x_min <= x_max && y_min <= y_max) {
            return Err(Error::InvalidBox("2D box min exceeds max"));
        }
        Ok(Box2D {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0) * (self.y_max - self.y_min).max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }
}

pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        math::clamp01(inter / union)
    }
}

/// Signed area of a simple polygon (positive when counter-clockwise).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

/// Sutherland–Hodgman clip of `subject` against a convex CCW `clip` polygon.
pub fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output: Vec<[f64; 2]> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let inside = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0;
        let input = core::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let cur_in = inside(cur);
            let prev_in = inside(prev);
            if cur_in {
                if !prev_in {
                    output.push(line_intersect(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersect(prev, cur, a, b));
            }
        }
    }
    output
}

fn line_intersect(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d1 = [q[0] - p[0], q[1] - p[1]];
    let d2 = [b[0] - a[0], b[1] - a[1]];
    let denom = d1[0] * d2[1] - d1[1] * d2[0];
    if denom == 0.0 {
        return q;
    }
    let t = ((a[0] - p[0]) * d2[1] - (a[1] - p[1]) * d2[0]) / denom;
    [p[0] + t * d1[0], p[1] + t * d1[1]]
}

/// Area of the intersection of the two footprints.
pub fn bev_intersection(a: &Box3D, b: &Box3D) -> f64 {
    let pa = a.footprint();
    let pb = b.footprint();
    polygon_area(&clip_convex(&pa, &pb)).max(0.0)
}

fn check_frames(a: &Box3D, b: &Box3D) -> Result<()> {
    if a.frame != b.frame {
        return Err(Error::FrameMismatch {
            left: a.frame,
            right: b.frame,
        });
    }
    Ok(())
}

pub fn iou_bev(a: &Box3D, b: &Box3D) -> Result<f64> {
    check_frames(a, b)?;
    let inter = bev_intersection(a, b);
    let union = a.footprint_area() + b.footprint_area() - inter;
    Ok(if union <= 0.0 {
        0.0
    } else {
        math::clamp01(inter / union)
    })
}

pub fn iou_3d(a: &Box3D, b: &Box3D) -> Result<f64> {
    check_frames(a, b)?;
    let (a0, a1) = a.z_range();
    let (b0, b1) = b.z_range();
    let dz = (a1.min(b1) - a0.max(b0)).max(0.0);
    if dz == 0.0 {
        return Ok(0.0);
    }
    let inter = bev_intersection(a, b) * dz;
    let union = a.volume() + b.volume() - inter;
    Ok(if union <= 0.0 {
        0.0
    } else {
        math::clamp01(inter / union)
    })
}

/// Which IoU flavour to use where a box similarity is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IouKind {
    Bev,
    ThreeD,
}

impl IouKind {
    pub fn iou(self, a: &Box3D, b: &Box3D) -> Result<f64> {
        match self {
            IouKind::Bev => iou_bev(a, b),
            IouKind::ThreeD => iou_3d(a, b),
        }
    }
}

/// Proper rigid transform `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validates orthonormality and a positive determinant.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let t = RigidTransform {
            rotation,
            translation,
        };
        t.validate(1e-9)?;
        Ok(t)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let err = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        if err > tol || (self.rotation.determinant() - 1.0).abs() > tol {
            return Err(Error::InvalidBox("rotation is not orthonormal"));
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidBox("non-finite translation"));
        }
        Ok(())
    }

    /// Rotation of `yaw` about `+z` followed by `translation`.
    pub fn from_yaw(yaw: f64, translation: Vector3<f64>) -> Self {
        let (s, c) = (math::sin(yaw), math::cos(yaw));
        RigidTransform {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation,
        }
    }

    pub fn from_matrix4(m: &Matrix4<f64>) -> Self {
        RigidTransform {
            rotation: m.fixed_view::<3, 3>(0, 0).into_owned(),
            translation: m.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }

    pub fn to_matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Heading change induced on the `x-y` plane.
    pub fn heading(&self) -> f64 {
        math::atan2(self.rotation[(1, 0)], self.rotation[(0, 0)])
    }
}

pub fn apply_transform(b: &Box3D, t: &RigidTransform, new_frame: FrameId) -> Box3D {
    let c = t.apply_point(&b.center());
    Box3D {
        cx: c.x,
        cy: c.y,
        cz: c.z,
        l: b.l,
        w: b.w,
        h: b.h,
        yaw: normalize_angle(b.yaw + t.heading()),
        frame: new_frame,
    }
}

/// KITTI-style camera calibration, with `lidar_to_cam` mapping LiDAR points
/// into the unrectified reference camera.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraCalib {
    pub projection: Matrix3x4<f64>,
    pub rect: Matrix3<f64>,
    pub lidar_to_cam: Matrix4<f64>,
    pub image_width: u32,
    pub image_height: u32,
}

/// Points closer than this to the image plane count as behind the camera.
pub const NEAR_PLANE: f64 = 1e-3;

impl CameraCalib {
    pub fn validate(&self) -> Result<()> {
        let bottom = self.lidar_to_cam.fixed_view::<1, 4>(3, 0);
        if bottom[(0, 0)] != 0.0 || bottom[(0, 1)] != 0.0 || bottom[(0, 2)] != 0.0 || bottom[(0, 3)] != 1.0 {
            return Err(Error::InvalidBox("lidar_to_cam bottom row must be 0 0 0 1"));
        }
        let err = (self.rect.transpose() * self.rect - Matrix3::identity()).amax();
        if err > 1e-6 {
            return Err(Error::InvalidBox("rectification matrix not orthonormal"));
        }
        Ok(())
    }

    /// Transform from LiDAR coordinates into rectified camera coordinates.
    ///
    /// The rectification matrix is re-orthonormalized first, since file
    /// values are printed to about seven digits.
    pub fn cam_from_lidar(&self) -> RigidTransform {
        let rect = orthonormalize(&self.rect);
        let base = RigidTransform::from_matrix4(&self.lidar_to_cam);
        let base = RigidTransform {
            rotation: orthonormalize(&base.rotation),
            translation: base.translation,
        };
        let r = RigidTransform {
            rotation: rect,
            translation: Vector3::zeros(),
        };
        r.compose(&base)
    }

    /// Pixel coordinates of a rectified-camera point, or `None` when it lies
    /// behind the near plane.
    pub fn project_cam_point(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.z <= NEAR_PLANE {
            return None;
        }
        let h = self.projection * nalgebra::Vector4::new(p.x, p.y, p.z, 1.0);
        if h.z <= 0.0 {
            return None;
        }
        Some((h.x / h.z, h.y / h.z))
    }
}

/// Nearest rotation matrix (polar decomposition via SVD).
pub fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => {
            let mut r = u * v_t;
            if r.determinant() < 0.0 {
                let mut u2 = u;
                u2.column_mut(2).neg_mut();
                r = u2 * v_t;
            }
            r
        }
        _ => *m,
    }
}

const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Clipped image-plane hull of the box's projected corners.
///
/// Edges that cross the near plane are cut there, so boxes that straddle the
/// camera still produce their visible part. Returns `None` when nothing is in
/// front of the camera or the clipped hull has zero area.
pub fn project_box(b: &Box3D, calib: &CameraCalib) -> Option<Box2D> {
    let t = calib.cam_from_lidar();
    let pts: Vec<Vector3<f64>> = corners(b)
        .iter()
        .map(|p| t.apply_point(&p.coords))
        .collect();
    let mut front: Vec<Vector3<f64>> = pts.iter().filter(|p| p.z > NEAR_PLANE).copied().collect();
    if front.is_empty() {
        return None;
    }
    let z_cut = 2.0 * NEAR_PLANE;
    for (i, j) in EDGES {
        let (p, q) = (pts[i], pts[j]);
        if (p.z > NEAR_PLANE) != (q.z > NEAR_PLANE) {
            let s = (z_cut - p.z) / (q.z - p.z);
            front.push(p + (q - p) * s);
        }
    }
    let mut x_min = f64::INFINITY;
    let mut y_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for p in &front {
        if let Some((u, v)) = calib.project_cam_point(p) {
            x_min = x_min.min(u);
            y_min = y_min.min(v);
            x_max = x_max.max(u);
            y_max = y_max.max(v);
        }
    }
    let w = f64::from(calib.image_width);
    let h = f64::from(calib.image_height);
    let x_min = x_min.max(0.0);
    let y_min = y_min.max(0.0);
    let x_max = x_max.min(w);
    let y_max = y_max.min(h);
    if !(x_max > x_min && y_max > y_min) {
        return None;
    }
    Some(Box2D {
        x_min,
        y_min,
        x_max,
        y_max,
    })
}
