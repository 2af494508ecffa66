//! SE(2) poses and the odometry motion model.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("odometry covariance is not symmetric positive semi-definite: {0}")]
    InvalidCovariance(String),
}

impl MotionError {
    pub fn name(&self) -> &'static str {
        match self {
            MotionError::InvalidCovariance(_) => "InvalidCovariance",
        }
    }
}

/// Wrap an angle into (-π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// Robot pose in the map frame. `theta` is kept wrapped to (-π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Pose2::default()
    }

    /// Apply a frame-local displacement.
    pub fn compose(&self, d: &OdometryDelta) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.x + c * d.dx - s * d.dy,
            self.y + s * d.dx + c * d.dy,
            self.theta + d.dtheta,
        )
    }

    /// Compose two poses, treating `other` as expressed in this frame.
    pub fn then(&self, other: &Pose2) -> Pose2 {
        self.compose(&OdometryDelta::from(*other))
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)
    }

    /// Relative motion from `self` to `to`, expressed in `self`'s frame.
    pub fn delta_to(&self, to: &Pose2) -> OdometryDelta {
        let rel = self.inverse().then(to);
        OdometryDelta::new(rel.x, rel.y, rel.theta)
    }

    /// Map a point from this frame into the parent frame.
    pub fn transform_point(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (self.x + c * px - s * py, self.y + s * px + c * py)
    }

    pub fn translation_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Odometry increment in the previous pose's frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdometryDelta {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl OdometryDelta {
    pub fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        OdometryDelta { dx, dy, dtheta }
    }

    pub fn zero() -> Self {
        OdometryDelta::default()
    }

    pub fn inverse(&self) -> OdometryDelta {
        let (s, c) = self.dtheta.sin_cos();
        OdometryDelta::new(-c * self.dx - s * self.dy, s * self.dx - c * self.dy, -self.dtheta)
    }

    pub fn is_finite(&self) -> bool {
        self.dx.is_finite() && self.dy.is_finite() && self.dtheta.is_finite()
    }
}

impl From<Pose2> for OdometryDelta {
    fn from(p: Pose2) -> Self {
        OdometryDelta::new(p.x, p.y, p.theta)
    }
}

/// Gaussian noise on odometry increments, sampled in the increment's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionNoise {
    covariance: Matrix3<f64>,
    /// Square-root factor `L` with `L·Lᵀ = covariance`.
    factor: Matrix3<f64>,
}

impl MotionNoise {
    pub fn new(covariance: [[f64; 3]; 3]) -> Result<Self, MotionError> {
        let cov = Matrix3::from_fn(|r, c| covariance[r][c]);
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(MotionError::InvalidCovariance("non-finite entry".into()));
        }
        let scale = cov.abs().max().max(1e-300);
        if (cov - cov.transpose()).abs().max() > 1e-12 * scale {
            return Err(MotionError::InvalidCovariance("not symmetric".into()));
        }
        let factor = match cov.cholesky() {
            Some(ch) => ch.l(),
            None => {
                let eig = SymmetricEigen::new(cov);
                let min = eig.eigenvalues.min();
                if min < -1e-9 * scale {
                    return Err(MotionError::InvalidCovariance(format!(
                        "negative eigenvalue {min}"
                    )));
                }
                let sqrt = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
                eig.eigenvectors * Matrix3::from_diagonal(&sqrt)
            }
        };
        Ok(MotionNoise {
            covariance: cov,
            factor,
        })
    }

    pub fn diagonal(sigma_x: f64, sigma_y: f64, sigma_theta: f64) -> Result<Self, MotionError> {
        MotionNoise::new([
            [sigma_x * sigma_x, 0.0, 0.0],
            [0.0, sigma_y * sigma_y, 0.0],
            [0.0, 0.0, sigma_theta * sigma_theta],
        ])
    }

    pub fn zero() -> Self {
        MotionNoise {
            covariance: Matrix3::zeros(),
            factor: Matrix3::zeros(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.covariance.iter().all(|v| *v == 0.0)
    }

    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let c = &self.covariance;
        [
            [c[(0, 0)], c[(0, 1)], c[(0, 2)]],
            [c[(1, 0)], c[(1, 1)], c[(1, 2)]],
            [c[(2, 0)], c[(2, 1)], c[(2, 2)]],
        ]
    }

    /// Draw a noisy increment `δ ~ N(d, Υ)`.
    pub fn sample(&self, d: &OdometryDelta, rng: &mut Rng) -> OdometryDelta {
        if self.is_zero() {
            return *d;
        }
        let z = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let e = self.factor * z;
        OdometryDelta::new(d.dx + e[0], d.dy + e[1], d.dtheta + e[2])
    }
}

impl Default for MotionNoise {
    fn default() -> Self {
        MotionNoise::zero()
    }
}

impl Serialize for MotionNoise {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.covariance().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MotionNoise {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let cov = <[[f64; 3]; 3]>::deserialize(d)?;
        MotionNoise::new(cov).map_err(serde::de::Error::custom)
    }
}

/// Propagate `p` through a noisy odometry increment. Deterministic per seed.
pub fn propagate(p: &Pose2, d: &OdometryDelta, noise: &MotionNoise, seed: u64) -> Pose2 {
    let mut rng = rng_from_seed(seed);
    p.compose(&noise.sample(d, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &Pose2, b: &Pose2, tol: f64) -> bool {
        (a.x - b.x).abs() < tol && (a.y - b.y).abs() < tol && wrap_angle(a.theta - b.theta).abs() < tol
    }

    #[test]
    fn compose_examples() {
        let p = Pose2::new(0.0, 0.0, 0.0).compose(&OdometryDelta::new(1.0, 0.0, 0.0));
        assert_eq!(p, Pose2::new(1.0, 0.0, 0.0));
        let q = Pose2::new(0.0, 0.0, FRAC_PI_2).compose(&OdometryDelta::new(1.0, 0.0, 0.0));
        assert!(close(&q, &Pose2::new(0.0, 1.0, FRAC_PI_2), 1e-15));
        let r = Pose2::new(1.0, 2.0, 0.3);
        assert_eq!(r.compose(&OdometryDelta::zero()), r);
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn inverse_delta_restores_pose(
            x in -10.0f64..10.0, y in -10.0f64..10.0, t in -4.0f64..4.0,
            dx in -2.0f64..2.0, dy in -2.0f64..2.0, dt in -4.0f64..4.0,
        ) {
            let p = Pose2::new(x, y, t);
            let d = OdometryDelta::new(dx, dy, dt);
            let back = p.compose(&d).compose(&d.inverse());
            prop_assert!(close(&back, &p, 1e-12));
            prop_assert!(back.theta > -PI && back.theta <= PI);
        }

        #[test]
        fn composition_is_associative(
            a in proptest::array::uniform3(-3.0f64..3.0),
            b in proptest::array::uniform3(-3.0f64..3.0),
            c in proptest::array::uniform3(-3.0f64..3.0),
        ) {
            let pa = Pose2::new(a[0], a[1], a[2]);
            let pb = Pose2::new(b[0], b[1], b[2]);
            let pc = Pose2::new(c[0], c[1], c[2]);
            prop_assert!(close(&pa.then(&pb).then(&pc), &pa.then(&pb.then(&pc)), 1e-12));
        }

        #[test]
        fn delta_to_roundtrip(
            a in proptest::array::uniform3(-3.0f64..3.0),
            b in proptest::array::uniform3(-3.0f64..3.0),
        ) {
            let pa = Pose2::new(a[0], a[1], a[2]);
            let pb = Pose2::new(b[0], b[1], b[2]);
            prop_assert!(close(&pa.compose(&pa.delta_to(&pb)), &pb, 1e-12));
        }
    }

    #[test]
    fn zero_noise_propagate_is_compose() {
        let p = Pose2::new(0.4, -1.0, 2.0);
        let d = OdometryDelta::new(0.2, 0.05, -0.3);
        assert_eq!(propagate(&p, &d, &MotionNoise::zero(), 5), p.compose(&d));
        let zero_cov = MotionNoise::new([[0.0; 3]; 3]).unwrap();
        assert_eq!(propagate(&p, &d, &zero_cov, 5), p.compose(&d));
    }

    #[test]
    fn propagate_is_deterministic() {
        let p = Pose2::new(0.0, 0.0, 0.0);
        let d = OdometryDelta::new(1.0, 0.0, 0.1);
        let n = MotionNoise::diagonal(0.1, 0.1, 0.05).unwrap();
        assert_eq!(propagate(&p, &d, &n, 42), propagate(&p, &d, &n, 42));
        assert_ne!(propagate(&p, &d, &n, 42), propagate(&p, &d, &n, 43));
    }

    #[test]
    fn rejects_bad_covariance() {
        assert!(MotionNoise::new([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
        assert!(MotionNoise::new([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
        // semi-definite: axis locked
        assert!(MotionNoise::new([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]).is_ok());
    }

    #[test]
    fn sample_moments() {
        let n = 100_000;
        let sigma = 0.1;
        let p = Pose2::new(1.0, 2.0, 0.3);
        let d = OdometryDelta::new(0.5, -0.2, 0.1);
        let noise = MotionNoise::diagonal(sigma, sigma, sigma).unwrap();
        let target = p.compose(&d);
        let mut rng = rng_from_seed(17);
        let (mut sx, mut sy, mut st) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let q = p.compose(&noise.sample(&d, &mut rng));
            sx += q.x;
            sy += q.y;
            st += wrap_angle(q.theta - target.theta);
        }
        let nf = n as f64;
        let tol = 4.0 * sigma / nf.sqrt();
        assert!((sx / nf - target.x).abs() < tol);
        assert!((sy / nf - target.y).abs() < tol);
        assert!((st / nf).abs() < tol);
    }

    #[test]
    fn sample_covariance_matches() {
        let cov = [[0.04, 0.01, 0.0], [0.01, 0.02, 0.005], [0.0, 0.005, 0.01]];
        let noise = MotionNoise::new(cov).unwrap();
        let d = OdometryDelta::zero();
        let mut rng = rng_from_seed(3);
        let n = 100_000;
        let samples: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let s = noise.sample(&d, &mut rng);
                [s.dx, s.dy, s.dtheta]
            })
            .collect();
        let mean: Vec<f64> = (0..3).map(|k| samples.iter().map(|s| s[k]).sum::<f64>() / n as f64).collect();
        for r in 0..3 {
            for c in 0..3 {
                let est = samples.iter().map(|s| (s[r] - mean[r]) * (s[c] - mean[c])).sum::<f64>() / (n as f64 - 1.0);
                if cov[r][c] != 0.0 {
                    assert!(((est - cov[r][c]) / cov[r][c]).abs() < 0.05, "({r},{c}) {est}");
                } else {
                    assert!(est.abs() < 1e-3);
                }
            }
        }
    }
}
