//! Constant-velocity Kalman filter over `[x, y, z, yaw, l, w, h, vx, vy, vz]`
//! and ego-motion compensation of track states.

use core::f64::consts::PI;

use nalgebra::{SMatrix, SVector, Vector3};

use crate::geometry::{Box3D, FrameId, RigidTransform};
use crate::math::normalize_angle;
use crate::{Error, Result};

pub const STATE_DIM: usize = 10;
pub const MEAS_DIM: usize = 7;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type MeasVector = SVector<f64, MEAS_DIM>;
pub type MeasMatrix = SMatrix<f64, MEAS_DIM, MEAS_DIM>;
pub type ObsMatrix = SMatrix<f64, MEAS_DIM, STATE_DIM>;

/// Noise parameters. Variances, units of m² / rad² (per frame for velocity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanConfig {
    pub init_pose_var: f64,
    pub init_vel_var: f64,
    pub process_pose_var: f64,
    pub process_vel_var: f64,
    pub meas_var: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        KalmanConfig {
            init_pose_var: 1.0,
            init_vel_var: 10.0,
            process_pose_var: 0.01,
            process_vel_var: 0.01,
            meas_var: 0.01,
        }
    }
}

impl KalmanConfig {
    pub fn initial_covariance(&self) -> StateMatrix {
        let mut p = StateMatrix::zeros();
        for i in 0..MEAS_DIM {
            p[(i, i)] = self.init_pose_var;
        }
        for i in MEAS_DIM..STATE_DIM {
            p[(i, i)] = self.init_vel_var;
        }
        p
    }

    pub fn process_noise(&self) -> StateMatrix {
        let mut q = StateMatrix::zeros();
        for i in 0..MEAS_DIM {
            q[(i, i)] = self.process_pose_var;
        }
        for i in MEAS_DIM..STATE_DIM {
            q[(i, i)] = self.process_vel_var;
        }
        q
    }

    pub fn measurement_noise(&self) -> MeasMatrix {
        MeasMatrix::identity() * self.meas_var
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateMatrix,
}

/// Unit-step constant-velocity transition.
pub fn transition() -> StateMatrix {
    let mut f = StateMatrix::identity();
    for i in 0..3 {
        f[(i, i + MEAS_DIM)] = 1.0;
    }
    f
}

pub fn observation() -> ObsMatrix {
    let mut h = ObsMatrix::zeros();
    for i in 0..MEAS_DIM {
        h[(i, i)] = 1.0;
    }
    h
}

pub fn box_to_measurement(b: &Box3D) -> MeasVector {
    MeasVector::from_column_slice(&[b.cx, b.cy, b.cz, b.yaw, b.l, b.w, b.h])
}

impl KalmanState {
    pub fn to_box(&self, frame: FrameId) -> Box3D {
        let m = &self.mean;
        Box3D {
            cx: m[0],
            cy: m[1],
            cz: m[2],
            l: m[4].max(1e-3),
            w: m[5].max(1e-3),
            h: m[6].max(1e-3),
            yaw: normalize_angle(m[3]),
            frame,
        }
    }

    pub fn velocity(&self) -> Vector3<f64> {
        Vector3::new(self.mean[7], self.mean[8], self.mean[9])
    }

    pub fn is_positive_definite(&self) -> bool {
        let sym = (self.covariance - self.covariance.transpose()).amax() <= 1e-9;
        sym && self.covariance.cholesky().is_some()
    }
}

pub fn kf_init(b: &Box3D, cfg: &KalmanConfig) -> KalmanState {
    let mut mean = StateVector::zeros();
    mean.fixed_rows_mut::<MEAS_DIM>(0).copy_from(&box_to_measurement(b));
    KalmanState {
        mean,
        covariance: cfg.initial_covariance(),
    }
}

pub fn kf_predict(s: &KalmanState, cfg: &KalmanConfig) -> KalmanState {
    let f = transition();
    let mut mean = f * s.mean;
    mean[3] = normalize_angle(mean[3]);
    let covariance = symmetrize(&(f * s.covariance * f.transpose() + cfg.process_noise()));
    KalmanState { mean, covariance }
}

/// Yaw innovation, flipped by pi when that brings it within pi/2: a box
/// heading and its reverse describe the same footprint.
pub fn yaw_innovation(measured: f64, predicted: f64) -> f64 {
    let mut d = normalize_angle(measured - predicted);
    if d > PI / 2.0 {
        d -= PI;
    } else if d < -PI / 2.0 {
        d += PI;
    }
    d
}

pub fn kf_update(s: &KalmanState, z: &Box3D, cfg: &KalmanConfig) -> Result<KalmanState> {
    let h = observation();
    let r = cfg.measurement_noise();
    let mut innov = box_to_measurement(z) - h * s.mean;
    innov[3] = yaw_innovation(z.yaw, s.mean[3]);
    let p = &s.covariance;
    let sm = symmetrize_meas(&(h * p * h.transpose() + r));
    let chol = sm.cholesky().ok_or(Error::NotPositiveDefinite)?;
    // K = P Hᵀ S⁻¹, solved as S Kᵀ = H P
    let k = chol.solve(&(h * p)).transpose();
    let mut mean = s.mean + k * innov;
    mean[3] = normalize_angle(mean[3]);
    let i_kh = StateMatrix::identity() - k * h;
    let covariance = symmetrize(&(i_kh * p * i_kh.transpose() + k * r * k.transpose()));
    Ok(KalmanState { mean, covariance })
}

fn symmetrize(m: &StateMatrix) -> StateMatrix {
    (m + m.transpose()) * 0.5
}

fn symmetrize_meas(m: &MeasMatrix) -> MeasMatrix {
    (m + m.transpose()) * 0.5
}

/// Pose of the ego vehicle at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoPose {
    pub world_from_ego: RigidTransform,
    pub timestamp: f64,
}

impl EgoPose {
    pub fn identity(timestamp: f64) -> Self {
        EgoPose {
            world_from_ego: RigidTransform::identity(),
            timestamp,
        }
    }
}

/// Transform taking previous-ego coordinates into current-ego coordinates.
pub fn ego_delta(prev: &EgoPose, curr: &EgoPose) -> RigidTransform {
    curr.world_from_ego.inverse().compose(&prev.world_from_ego)
}

/// Re-expresses a state held in the previous ego frame in the current one.
pub fn ego_compensate(s: &KalmanState, prev: &EgoPose, curr: &EgoPose) -> KalmanState {
    apply_rigid(s, &ego_delta(prev, curr))
}

pub fn apply_rigid(s: &KalmanState, t: &RigidTransform) -> KalmanState {
    let m = &s.mean;
    let pos = t.apply_point(&Vector3::new(m[0], m[1], m[2]));
    let vel = t.apply_vector(&Vector3::new(m[7], m[8], m[9]));
    let mut mean = *m;
    mean[0] = pos.x;
    mean[1] = pos.y;
    mean[2] = pos.z;
    mean[3] = normalize_angle(m[3] + t.heading());
    mean[7] = vel.x;
    mean[8] = vel.y;
    mean[9] = vel.z;
    let mut j = StateMatrix::identity();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&t.rotation);
    j.fixed_view_mut::<3, 3>(7, 7).copy_from(&t.rotation);
    let covariance = symmetrize(&(j * s.covariance * j.transpose()));
    KalmanState { mean, covariance }
}
