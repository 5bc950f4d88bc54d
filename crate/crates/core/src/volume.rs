//! Scalar volumes, transfer functions and raw-file loading.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::math::{Aabb, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum VolumeError {
    #[error("raw file size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("invalid volume dimensions {0:?}")]
    BadDims([usize; 3]),
    #[error("spacing components must be positive, got {0:?}")]
    BadSpacing([f64; 3]),
    #[error("invalid transfer function: {0}")]
    BadTransferFunction(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoxelFormat {
    U8,
    U16,
}

impl VoxelFormat {
    pub fn bytes_per_voxel(self) -> usize {
        match self {
            VoxelFormat::U8 => 1,
            VoxelFormat::U16 => 2,
        }
    }
}

#[derive(Clone, Debug)]
enum Voxels {
    U8(Vec<u8>),
    U16(Vec<u16>),
}

/// A regular scalar grid. Voxel `(i, j, k)` sits at
/// `origin + (i, j, k) * spacing`; each voxel owns the cell of half a
/// spacing around it, so the grid covers `[-0.5, dims - 0.5]` in index space.
#[derive(Clone, Debug)]
pub struct ScalarVolume {
    dims: [usize; 3],
    spacing: Vec3,
    origin: Vec3,
    voxels: Voxels,
}

impl ScalarVolume {
    pub fn from_u8(dims: [usize; 3], spacing: Vec3, origin: Vec3, data: Vec<u8>) -> Result<Self, VolumeError> {
        Self::validate(dims, spacing, data.len())?;
        Ok(Self { dims, spacing, origin, voxels: Voxels::U8(data) })
    }

    pub fn from_u16(dims: [usize; 3], spacing: Vec3, origin: Vec3, data: Vec<u16>) -> Result<Self, VolumeError> {
        Self::validate(dims, spacing, data.len())?;
        Ok(Self { dims, spacing, origin, voxels: Voxels::U16(data) })
    }

    fn validate(dims: [usize; 3], spacing: Vec3, len: usize) -> Result<(), VolumeError> {
        if dims.contains(&0) {
            return Err(VolumeError::BadDims(dims));
        }
        if !(spacing.x > 0.0 && spacing.y > 0.0 && spacing.z > 0.0) {
            return Err(VolumeError::BadSpacing(spacing.to_array()));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if len != expected {
            return Err(VolumeError::SizeMismatch { expected: expected as u64, actual: len as u64 });
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> Vec3 {
        self.spacing
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn format(&self) -> VoxelFormat {
        match self.voxels {
            Voxels::U8(_) => VoxelFormat::U8,
            Voxels::U16(_) => VoxelFormat::U16,
        }
    }

    /// Length of one voxel diagonal, the reference length for opacity correction.
    pub fn voxel_diagonal(&self) -> f64 {
        self.spacing.length()
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Normalized value of a voxel.
    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f32 {
        let idx = self.index(i, j, k);
        match &self.voxels {
            Voxels::U8(v) => v[idx] as f32 / u8::MAX as f32,
            Voxels::U16(v) => v[idx] as f32 / u16::MAX as f32,
        }
    }

    /// World-space box of the voxel-index brick `[lo, hi)`.
    pub fn brick_bounds(&self, lo: [usize; 3], hi: [usize; 3]) -> Aabb {
        let corner = |idx: [usize; 3]| {
            self.origin
                + Vec3::new(idx[0] as f64 - 0.5, idx[1] as f64 - 0.5, idx[2] as f64 - 0.5).component_mul(self.spacing)
        };
        Aabb { min: corner(lo), max: corner(hi) }
    }

    pub fn bounds(&self) -> Aabb {
        self.brick_bounds([0; 3], self.dims)
    }

    /// Trilinear interpolation of the eight voxels around `p`. Points outside
    /// the grid read as 0; inside the outer half-voxel the edge value is held.
    pub fn sample_trilinear(&self, p: Vec3) -> f32 {
        let c = (p - self.origin).component_div(self.spacing);
        let coords = [c.x, c.y, c.z];
        let mut base = [0usize; 3];
        let mut frac = [0f32; 3];
        for a in 0..3 {
            let max = self.dims[a] as f64 - 0.5;
            if !(coords[a] >= -0.5 && coords[a] <= max) {
                return 0.0;
            }
            let x = coords[a].clamp(0.0, (self.dims[a] - 1) as f64);
            let b = (x.floor() as usize).min(self.dims[a].saturating_sub(2));
            base[a] = b;
            frac[a] = (x - b as f64) as f32;
        }
        let next = |a: usize| (base[a] + 1).min(self.dims[a] - 1);
        let (i0, j0, k0) = (base[0], base[1], base[2]);
        let (i1, j1, k1) = (next(0), next(1), next(2));
        let [fx, fy, fz] = frac;
        let lerp = |a: f32, b: f32, t: f32| a + (b - a) * t;
        let c00 = lerp(self.value(i0, j0, k0), self.value(i1, j0, k0), fx);
        let c10 = lerp(self.value(i0, j1, k0), self.value(i1, j1, k0), fx);
        let c01 = lerp(self.value(i0, j0, k1), self.value(i1, j0, k1), fx);
        let c11 = lerp(self.value(i0, j1, k1), self.value(i1, j1, k1), fx);
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }

    /// SHA-256 over dims, spacing, origin, format and voxel bytes.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for d in self.dims {
            h.update((d as u64).to_le_bytes());
        }
        for v in self.spacing.to_array().into_iter().chain(self.origin.to_array()) {
            h.update(v.to_le_bytes());
        }
        match &self.voxels {
            Voxels::U8(v) => {
                h.update([1u8]);
                h.update(v);
            }
            Voxels::U16(v) => {
                h.update([2u8]);
                for x in v {
                    h.update(x.to_le_bytes());
                }
            }
        }
        h.finalize().into()
    }
}

/// Loads a headerless little-endian voxel stream in x-fastest order.
pub fn load_raw(
    path: impl AsRef<Path>,
    dims: [usize; 3],
    format: VoxelFormat,
    spacing: Vec3,
) -> Result<ScalarVolume, VolumeError> {
    let path = path.as_ref();
    let io_err = |source| VolumeError::Io { path: path.display().to_string(), source };
    let expected = dims.iter().map(|&d| d as u64).product::<u64>() * format.bytes_per_voxel() as u64;
    let actual = std::fs::metadata(path).map_err(io_err)?.len();
    if actual != expected {
        return Err(VolumeError::SizeMismatch { expected, actual });
    }
    let bytes = std::fs::read(path).map_err(io_err)?;
    match format {
        VoxelFormat::U8 => ScalarVolume::from_u8(dims, spacing, Vec3::ZERO, bytes),
        VoxelFormat::U16 => {
            let data = bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
            ScalarVolume::from_u16(dims, spacing, Vec3::ZERO, data)
        }
    }
}

/// One control point of a [`TransferFunction`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlPoint {
    pub scalar: f32,
    pub color: [f32; 3],
    pub opacity: f32,
}

pub const TF_TABLE_SIZE: usize = 256;

/// Piecewise-linear color/opacity map, baked into a 256-entry table.
#[derive(Clone, Debug)]
pub struct TransferFunction {
    points: Vec<ControlPoint>,
    /// Straight (non-premultiplied) RGBA per entry.
    table: Vec<[f32; 4]>,
}

impl TransferFunction {
    pub fn new(points: Vec<ControlPoint>) -> Result<Self, VolumeError> {
        let bad = |m: &str| Err(VolumeError::BadTransferFunction(m.to_string()));
        if points.len() < 2 {
            return bad("need at least two control points");
        }
        if points[0].scalar != 0.0 || points[points.len() - 1].scalar != 1.0 {
            return bad("first scalar must be 0 and last must be 1");
        }
        if points.windows(2).any(|w| w[1].scalar <= w[0].scalar) {
            return bad("scalars must be strictly increasing");
        }
        let in_unit = |v: f32| (0.0..=1.0).contains(&v);
        if points.iter().any(|p| !in_unit(p.opacity) || !p.color.iter().copied().all(in_unit)) {
            return bad("colors and opacities must lie in [0, 1]");
        }
        let table = (0..TF_TABLE_SIZE)
            .map(|i| {
                let s = i as f32 / (TF_TABLE_SIZE - 1) as f32;
                let seg = points.windows(2).find(|w| s <= w[1].scalar).unwrap_or(&points[points.len() - 2..]);
                let (a, b) = (seg[0], seg[1]);
                let t = ((s - a.scalar) / (b.scalar - a.scalar)).clamp(0.0, 1.0);
                let l = |x: f32, y: f32| x + (y - x) * t;
                [
                    l(a.color[0], b.color[0]),
                    l(a.color[1], b.color[1]),
                    l(a.color[2], b.color[2]),
                    l(a.opacity, b.opacity),
                ]
            })
            .collect();
        Ok(Self { points, table })
    }

    /// Single color, opacity ramping linearly from 0 at scalar 0 to `max_opacity`.
    pub fn ramp(color: [f32; 3], max_opacity: f32) -> Self {
        Self::new(vec![
            ControlPoint { scalar: 0.0, color, opacity: 0.0 },
            ControlPoint { scalar: 1.0, color, opacity: max_opacity },
        ])
        .expect("valid ramp")
    }

    pub fn control_points(&self) -> &[ControlPoint] {
        &self.points
    }

    /// Straight RGBA for a scalar in [0, 1], linearly interpolated in the table.
    #[inline]
    pub fn lookup(&self, scalar: f32) -> [f32; 4] {
        let x = scalar.clamp(0.0, 1.0) * (TF_TABLE_SIZE - 1) as f32;
        let i = (x as usize).min(TF_TABLE_SIZE - 2);
        let t = x - i as f32;
        let (a, b) = (self.table[i], self.table[i + 1]);
        [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t, a[3] + (b[3] - a[3]) * t]
    }

    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for e in &self.table {
            for c in e {
                h.update(c.to_le_bytes());
            }
        }
        h.finalize().into()
    }
}
