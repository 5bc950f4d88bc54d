//! Built-in synthetic volumes, so every test runs without external data.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::math::Vec3;
use crate::volume::ScalarVolume;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Synthetic {
    /// Two concentric spherical shells of different value.
    TwoShell { size: usize },
    /// Linear ramp along one axis (0 = x, 1 = y, 2 = z).
    Gradient { size: usize, axis: usize },
    /// Random Gaussian blobs.
    Blobs { size: usize, count: usize, seed: u64 },
    /// One small blob in the centre; only a handful of samples per ray carry content.
    Sparse { size: usize, radius: f64 },
}

impl Synthetic {
    pub fn size(&self) -> usize {
        match *self {
            Synthetic::TwoShell { size }
            | Synthetic::Gradient { size, .. }
            | Synthetic::Blobs { size, .. }
            | Synthetic::Sparse { size, .. } => size,
        }
    }

    pub fn build(&self) -> ScalarVolume {
        match *self {
            Synthetic::TwoShell { size } => two_shell(size),
            Synthetic::Gradient { size, axis } => gradient(size, axis),
            Synthetic::Blobs { size, count, seed } => blobs(size, count, seed),
            Synthetic::Sparse { size, radius } => sparse(size, radius),
        }
    }
}

fn from_fn(n: usize, f: impl Fn(Vec3) -> f64) -> ScalarVolume {
    assert!(n >= 2, "synthetic volumes need at least 2 voxels per axis");
    let c = (n as f64 - 1.0) / 2.0;
    let mut data = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                // normalized coordinates in [-1, 1]
                let p = Vec3::new(i as f64 - c, j as f64 - c, k as f64 - c) / c;
                data.push((f(p).clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    ScalarVolume::from_u8([n; 3], Vec3::splat(1.0), Vec3::ZERO, data).expect("consistent synthetic volume")
}

pub fn two_shell(n: usize) -> ScalarVolume {
    from_fn(n, |p| {
        let r = p.length();
        let shell = |r0: f64, w: f64| (-((r - r0) / w).powi(2)).exp();
        0.45 * shell(0.4, 0.08) + 0.9 * shell(0.8, 0.06)
    })
}

pub fn gradient(n: usize, axis: usize) -> ScalarVolume {
    assert!(axis < 3);
    from_fn(n, |p| {
        let v = [p.x, p.y, p.z][axis];
        0.5 * (v + 1.0)
    })
}

pub fn blobs(n: usize, count: usize, seed: u64) -> ScalarVolume {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(Vec3, f64, f64)> = (0..count)
        .map(|_| {
            let c = Vec3::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
            (c, rng.random_range(0.1..0.35), rng.random_range(0.3..1.0))
        })
        .collect();
    from_fn(n, |p| blobs.iter().map(|&(c, r, a)| a * (-((p - c).length() / r).powi(2)).exp()).sum())
}

pub fn sparse(n: usize, radius: f64) -> ScalarVolume {
    from_fn(n, |p| if p.length() <= radius { 1.0 - 0.5 * p.length() / radius } else { 0.0 })
}

/// Camera looking at the volume centre along +z from `distance` box
/// diagonals away, with `vfov` degrees.
pub fn default_camera(vol: &ScalarVolume, vfov: f64, viewport: (u32, u32), distance: f64) -> Camera {
    let b = vol.bounds();
    let c = b.center();
    let d = (b.max - b.min).length();
    Camera::look_at(c - Vec3::new(0.0, 0.0, distance * d), c, Vec3::new(0.0, 1.0, 0.0), vfov, viewport)
}
