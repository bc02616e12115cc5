//! Constant-acceleration Kalman filter, trajectory state score, and the
//! confidence-scaled motion cost.
//!
//! State layout: `[x y z | vx vy vz | ax ay az | l w h yaw | extra...]`.

use nalgebra::{DMatrix, DVector};

use crate::association::CostMatrix;
use crate::detection::Detection;
use crate::error::{Error, Result};
use crate::geometry::{giou3d, wrap_angle, Box3D};

pub const POS: usize = 0;
pub const VEL: usize = 3;
pub const ACC: usize = 6;
pub const DIMS: usize = 9;
pub const YAW: usize = 12;
/// Kinematic blocks plus `(l, w, h, yaw)`.
pub const BASE_DIM: usize = 13;

/// Per-channel variances used to build diagonal noise matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseProfile {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub dims: f64,
    pub yaw: f64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        Self {
            position: 1.0,
            velocity: 10.0,
            acceleration: 10.0,
            dims: 0.01,
            yaw: 0.01,
        }
    }
}

impl NoiseProfile {
    pub fn scaled(self, k: f64) -> Self {
        Self {
            position: self.position * k,
            velocity: self.velocity * k,
            acceleration: self.acceleration * k,
            dims: self.dims * k,
            yaw: self.yaw * k,
        }
    }

    fn validate(&self, key: &str) -> Result<()> {
        let all = [self.position, self.velocity, self.acceleration, self.dims, self.yaw];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config(key, "variances must be finite and >= 0"));
        }
        Ok(())
    }

    fn state_diagonal(&self, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |i, _| match i {
            0..=2 => self.position,
            3..=5 => self.velocity,
            6..=8 => self.acceleration,
            YAW => self.yaw,
            _ => self.dims,
        })
    }
}

/// When the measurement includes the planar velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityMeasurement {
    /// Observe velocity whenever the detection carries one.
    #[default]
    IfPresent,
    /// Every detection must carry a velocity.
    Required,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionConfig {
    /// Interval between consecutive frames, seconds.
    pub dt: f64,
    pub process_noise: NoiseProfile,
    pub measurement_noise: NoiseProfile,
    /// Gain applied to the detection confidence when accumulating the track
    /// state score.
    pub theta: f64,
    pub gamma_init: f64,
    pub gamma_clamp: (f64, f64),
    pub velocity_measurement: VelocityMeasurement,
    /// Covariance multiplier on the velocity and acceleration blocks of a
    /// newborn track.
    pub birth_inflation: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            process_noise: NoiseProfile::default(),
            measurement_noise: NoiseProfile::default(),
            theta: 0.1,
            gamma_init: 1.0,
            gamma_clamp: (0.1, 10.0),
            velocity_measurement: VelocityMeasurement::IfPresent,
            birth_inflation: 100.0,
        }
    }
}

impl MotionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "must be positive"));
        }
        self.process_noise.validate("process_noise")?;
        self.measurement_noise.validate("measurement_noise")?;
        if !self.theta.is_finite() {
            return Err(Error::config("theta", "must be finite"));
        }
        let (lo, hi) = self.gamma_clamp;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::config("gamma_clamp", "need 0 < min <= max"));
        }
        if !(self.gamma_init >= lo && self.gamma_init <= hi) {
            return Err(Error::config("gamma_init", "must lie within gamma_clamp"));
        }
        if !(self.birth_inflation >= 1.0 && self.birth_inflation.is_finite()) {
            return Err(Error::config("birth_inflation", "must be >= 1"));
        }
        Ok(())
    }

    pub fn process_covariance(&self, dim: usize) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.process_noise.state_diagonal(dim))
    }
}

/// Block transition matrix: position integrates velocity and half the
/// acceleration, velocity integrates acceleration, everything else holds.
pub fn transition_matrix(dt: f64, dim: usize) -> DMatrix<f64> {
    let mut a = DMatrix::identity(dim, dim);
    for k in 0..3 {
        a[(POS + k, VEL + k)] = dt;
        a[(POS + k, ACC + k)] = 0.5 * dt * dt;
        a[(VEL + k, ACC + k)] = dt;
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl KalmanState {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d < BASE_DIM {
            return Err(Error::DimensionMismatch {
                expected: BASE_DIM,
                found: d,
            });
        }
        if covariance.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: covariance.nrows(),
            });
        }
        Ok(Self { mean, covariance })
    }

    /// Newborn state: zero acceleration, velocity from the box when present,
    /// kinematic covariance inflated.
    pub fn from_box(b: &Box3D, cfg: &MotionConfig) -> Self {
        let mut mean = DVector::zeros(BASE_DIM);
        mean[POS] = b.x;
        mean[POS + 1] = b.y;
        mean[POS + 2] = b.z;
        mean[DIMS] = b.l;
        mean[DIMS + 1] = b.w;
        mean[DIMS + 2] = b.h;
        mean[YAW] = b.yaw;

        let r = &cfg.measurement_noise;
        let q = &cfg.process_noise;
        let mut var = DVector::zeros(BASE_DIM);
        let velocity_known = b.velocity.is_some()
            && cfg.velocity_measurement != VelocityMeasurement::Ignored;
        for k in 0..3 {
            var[POS + k] = r.position;
            var[VEL + k] = q.velocity * cfg.birth_inflation;
            var[ACC + k] = q.acceleration * cfg.birth_inflation;
        }
        if let (true, Some([vx, vy])) = (velocity_known, b.velocity) {
            mean[VEL] = vx;
            mean[VEL + 1] = vy;
            var[VEL] = r.velocity;
            var[VEL + 1] = r.velocity;
        }
        for k in 0..3 {
            var[DIMS + k] = r.dims;
        }
        var[YAW] = r.yaw;

        Self {
            mean,
            covariance: DMatrix::from_diagonal(&var),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn position(&self) -> [f64; 3] {
        [self.mean[POS], self.mean[POS + 1], self.mean[POS + 2]]
    }

    pub fn velocity(&self) -> [f64; 3] {
        [self.mean[VEL], self.mean[VEL + 1], self.mean[VEL + 2]]
    }

    pub fn acceleration(&self) -> [f64; 3] {
        [self.mean[ACC], self.mean[ACC + 1], self.mean[ACC + 2]]
    }

    /// Box of the current mean. Dimensions are floored at 1 mm so the result
    /// is always a valid box.
    pub fn to_box(&self, with_velocity: bool) -> Box3D {
        let m = &self.mean;
        Box3D {
            x: m[POS],
            y: m[POS + 1],
            z: m[POS + 2],
            l: m[DIMS].max(1e-3),
            w: m[DIMS + 1].max(1e-3),
            h: m[DIMS + 2].max(1e-3),
            yaw: wrap_angle(m[YAW]),
            velocity: with_velocity.then(|| [m[VEL], m[VEL + 1]]),
        }
    }
}

pub fn predict(state: &KalmanState, cfg: &MotionConfig) -> KalmanState {
    let d = state.dim();
    let a = transition_matrix(cfg.dt, d);
    let mean = &a * &state.mean;
    let mut covariance = &a * &state.covariance * a.transpose() + cfg.process_covariance(d);
    symmetrize(&mut covariance);
    KalmanState { mean, covariance }
}

/// Rows of the state observed by `det`: position, `(l, w, h, yaw)`, and the
/// planar velocity when configured.
fn observed_channels(det: &Detection, cfg: &MotionConfig) -> Result<Vec<(usize, f64, f64)>> {
    let b = &det.bbox;
    let r = &cfg.measurement_noise;
    let mut ch = vec![
        (POS, b.x, r.position),
        (POS + 1, b.y, r.position),
        (POS + 2, b.z, r.position),
        (DIMS, b.l, r.dims),
        (DIMS + 1, b.w, r.dims),
        (DIMS + 2, b.h, r.dims),
        (YAW, b.yaw, r.yaw),
    ];
    match (cfg.velocity_measurement, b.velocity) {
        (VelocityMeasurement::Ignored, _) => {}
        (_, Some([vx, vy])) => {
            ch.push((VEL, vx, r.velocity));
            ch.push((VEL + 1, vy, r.velocity));
        }
        (VelocityMeasurement::Required, None) => {
            return Err(Error::DimensionMismatch {
                expected: 9,
                found: 7,
            })
        }
        (VelocityMeasurement::IfPresent, None) => {}
    }
    Ok(ch)
}

/// Linear Kalman correction with the yaw innovation wrapped into
/// `(-pi, pi]`. Uses the Joseph form so the posterior stays symmetric PSD.
pub fn update(state: &KalmanState, det: &Detection, cfg: &MotionConfig) -> Result<KalmanState> {
    let d = state.dim();
    if d < BASE_DIM {
        return Err(Error::DimensionMismatch {
            expected: BASE_DIM,
            found: d,
        });
    }
    let channels = observed_channels(det, cfg)?;
    let m = channels.len();

    let mut h = DMatrix::zeros(m, d);
    let mut z = DVector::zeros(m);
    let mut r = DMatrix::zeros(m, m);
    for (row, &(col, value, var)) in channels.iter().enumerate() {
        h[(row, col)] = 1.0;
        z[row] = value;
        r[(row, row)] = var;
    }

    let mut innovation = &z - &h * &state.mean;
    for (row, &(col, _, _)) in channels.iter().enumerate() {
        if col == YAW {
            innovation[row] = wrap_angle(innovation[row]);
        }
    }

    let p = &state.covariance;
    let pht = p * h.transpose();
    let mut s = &h * &pht + &r;
    symmetrize(&mut s);
    let s_inv = match s.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => s
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Numerical(format!("innovation covariance: {e}")))?,
    };
    let gain = &pht * s_inv;

    let mut mean = &state.mean + &gain * innovation;
    mean[YAW] = wrap_angle(mean[YAW]);

    let ikh = DMatrix::identity(d, d) - &gain * &h;
    let mut covariance = &ikh * p * ikh.transpose() + &gain * r * gain.transpose();
    symmetrize(&mut covariance);
    Ok(KalmanState { mean, covariance })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Reliability score of a trajectory and the confidence it last received.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackScore {
    pub gamma: f64,
    pub last_confidence: f64,
}

impl TrackScore {
    pub fn new(cfg: &MotionConfig) -> Self {
        Self {
            gamma: cfg.gamma_init,
            last_confidence: 0.0,
        }
    }
}

/// Resets to `gamma_init` when a trajectory regains a detection after a
/// zero-confidence frame, otherwise accumulates `theta * c`; always clamped.
pub fn update_score(score: TrackScore, confidence: f64, cfg: &MotionConfig) -> TrackScore {
    let gamma = if score.last_confidence == 0.0 && confidence != 0.0 {
        cfg.gamma_init
    } else {
        score.gamma + cfg.theta * confidence
    };
    let (lo, hi) = cfg.gamma_clamp;
    TrackScore {
        gamma: gamma.clamp(lo, hi),
        last_confidence: confidence,
    }
}

/// `(1 - gIoU(det_i, track_j)) / gamma_j` for predicted track boxes.
pub fn motion_cost_matrix(dets: &[Box3D], tracks: &[(Box3D, f64)]) -> CostMatrix {
    CostMatrix::from_fn(dets.len(), tracks.len(), |i, j| {
        let (bbox, gamma) = &tracks[j];
        (1.0 - giou3d(&dets[i], bbox)) / gamma
    })
}
