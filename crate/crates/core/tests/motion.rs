use fusetrack::motion::{
    motion_cost_matrix, predict, transition_matrix, update, update_score, NoiseProfile, BASE_DIM,
};
use fusetrack::{Box3D, CategoryId, Detection, KalmanState, MotionConfig, TrackScore};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn zero_noise() -> NoiseProfile {
    NoiseProfile::default().scaled(0.0)
}

fn state(p: [f64; 3], v: [f64; 3], a: [f64; 3]) -> KalmanState {
    let mut mean = DVector::zeros(BASE_DIM);
    for k in 0..3 {
        mean[k] = p[k];
        mean[3 + k] = v[k];
        mean[6 + k] = a[k];
    }
    mean[9] = 4.0;
    mean[10] = 1.8;
    mean[11] = 1.5;
    KalmanState::new(mean, DMatrix::identity(BASE_DIM, BASE_DIM)).unwrap()
}

fn analytic(p: [f64; 3], v: [f64; 3], a: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|k| p[k] + v[k] * t + 0.5 * a[k] * t * t)
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

#[test]
fn noiseless_filter_follows_the_trajectory() {
    let cfg = MotionConfig {
        process_noise: zero_noise(),
        measurement_noise: zero_noise(),
        ..MotionConfig::default()
    };
    let (p, v, a) = ([1.0, -2.0, 0.5], [3.0, 1.5, 0.0], [0.4, -0.2, 0.0]);
    let mut s = state(p, v, a);
    for f in 1..=50 {
        s = predict(&s, &cfg);
        let t = f as f64 * cfg.dt;
        let want = analytic(p, v, a, t);
        for (k, (got, want)) in s.position().iter().zip(want).enumerate() {
            assert!((got - want).abs() < 1e-6, "frame {f} axis {k}");
        }
        let bbox = Box3D::new(want, [1.8, 4.0, 1.5], 0.0).unwrap();
        s = update(&s, &Detection::new(bbox, 1.0, CategoryId(0)), &cfg).unwrap();
    }
}

#[test]
fn transition_integrates_acceleration() {
    let a = transition_matrix(0.5, BASE_DIM);
    let s = state([0.0; 3], [2.0, 0.0, 0.0], [4.0, 0.0, 0.0]);
    let next = &a * &s.mean;
    assert!((next[0] - (2.0 * 0.5 + 0.5 * 4.0 * 0.25)).abs() < 1e-12);
    assert!((next[3] - (2.0 + 4.0 * 0.5)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn covariance_stays_symmetric_psd(
        steps in prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64, -3.2..3.2f64, any::<bool>()), 1..20),
    ) {
        let cfg = MotionConfig::default();
        let b = Box3D::new([0.0, 0.0, 0.0], [1.8, 4.0, 1.5], 0.0).unwrap();
        let mut s = KalmanState::from_box(&b, &cfg);
        for (x, y, yaw, observe) in steps {
            s = predict(&s, &cfg);
            if observe {
                let d = Detection::new(Box3D::new([x, y, 0.0], [1.8, 4.0, 1.5], yaw).unwrap(), 1.0, CategoryId(0));
                s = update(&s, &d, &cfg).unwrap();
            }
            let p = &s.covariance;
            prop_assert!((p - p.transpose()).abs().max() < 1e-9);
            prop_assert!(min_eigenvalue(p) > -1e-9 * p.abs().max().max(1.0));
            prop_assert!(s.mean[12].abs() <= std::f64::consts::PI + 1e-12);
        }
    }

    #[test]
    fn track_score_stays_clamped(confs in prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], 1..40)) {
        let cfg = MotionConfig { theta: 2.0, ..MotionConfig::default() };
        let mut s = TrackScore::new(&cfg);
        for c in confs {
            s = update_score(s, c, &cfg);
            prop_assert!(s.gamma >= cfg.gamma_clamp.0 && s.gamma <= cfg.gamma_clamp.1);
        }
    }

    #[test]
    fn motion_cost_falls_as_gamma_rises(
        x in -3.0..3.0f64, y in -3.0..3.0f64, g1 in 0.1..10.0f64, g2 in 0.1..10.0f64,
    ) {
        let det = Box3D::new([0.0, 0.0, 0.0], [1.8, 4.0, 1.5], 0.0).unwrap();
        let trk = Box3D::new([x, y, 0.0], [1.8, 4.0, 1.5], 0.2).unwrap();
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let c = motion_cost_matrix(&[det], &[(trk, lo), (trk, hi)]);
        prop_assert!(c.get(0, 0) >= c.get(0, 1) - 1e-12);
        prop_assert!(c.get(0, 1) >= 0.0);
    }
}

#[test]
fn first_hit_after_a_miss_resets_gamma() {
    let cfg = MotionConfig::default();
    let mut s = TrackScore::new(&cfg);
    s = update_score(s, 0.9, &cfg);
    s = update_score(s, 0.9, &cfg);
    assert!(s.gamma > cfg.gamma_init);
    s = update_score(s, 0.0, &cfg);
    s = update_score(s, 0.5, &cfg);
    assert_eq!(s.gamma, cfg.gamma_init);
}
