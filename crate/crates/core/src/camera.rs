//! Pinhole cameras and primary rays.

use serde::{Deserialize, Serialize};

use crate::math::Vec3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CameraError {
    #[error("near/far must satisfy 0 < near < far (got {near}, {far})")]
    BadClipping { near: f64, far: f64 },
    #[error("viewport must be at least 1x1 (got {0}x{1})")]
    BadViewport(u32, u32),
    #[error("forward and up must be orthonormal")]
    NotOrthonormal,
    #[error("vertical field of view must lie in (0, 180) degrees, got {0}")]
    BadFov(f64),
    #[error("pixel ({x}, {y}) outside {w}x{h} viewport")]
    PixelOutOfRange { x: u32, y: u32, w: u32, h: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub forward: Vec3,
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub vfov: f64,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit length.
    pub direction: Vec3,
    pub pixel: (u32, u32),
}

impl Ray {
    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

impl Camera {
    /// Camera at `position` looking at `target`; `up` is orthogonalized.
    pub fn look_at(position: Vec3, target: Vec3, up: Vec3, vfov: f64, (width, height): (u32, u32)) -> Self {
        let forward = (target - position).normalized();
        let right = forward.cross(up).normalized();
        let up = right.cross(forward).normalized();
        let dist = (target - position).length();
        Self { position, forward, up, vfov, width, height, near: dist * 1e-3, far: dist * 100.0 }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(CameraError::BadClipping { near: self.near, far: self.far });
        }
        if self.width == 0 || self.height == 0 {
            return Err(CameraError::BadViewport(self.width, self.height));
        }
        if !(self.vfov > 0.0 && self.vfov < 180.0) {
            return Err(CameraError::BadFov(self.vfov));
        }
        let unit = |v: Vec3| (v.length() - 1.0).abs() <= 1e-6;
        if !unit(self.forward) || !unit(self.up) || self.forward.dot(self.up).abs() > 1e-6 {
            return Err(CameraError::NotOrthonormal);
        }
        Ok(())
    }

    pub fn right(&self) -> Vec3 {
        self.forward.cross(self.up)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    fn tan_half_fov(&self) -> f64 {
        (self.vfov.to_radians() * 0.5).tan()
    }

    fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    /// Ray through the center of pixel `(x, y)`; `y` grows downward.
    pub fn ray_for_pixel(&self, x: u32, y: u32) -> Result<Ray, CameraError> {
        if x >= self.width || y >= self.height {
            return Err(CameraError::PixelOutOfRange { x, y, w: self.width, h: self.height });
        }
        Ok(self.ray_unchecked(x, y))
    }

    pub(crate) fn ray_unchecked(&self, x: u32, y: u32) -> Ray {
        let t = self.tan_half_fov();
        let sx = ((x as f64 + 0.5) / self.width as f64 * 2.0 - 1.0) * t * self.aspect();
        let sy = (1.0 - (y as f64 + 0.5) / self.height as f64 * 2.0) * t;
        let direction = (self.forward + self.right() * sx + self.up * sy).normalized();
        Ray { origin: self.position, direction, pixel: (x, y) }
    }

    /// Ray for row-major list index `i`.
    pub fn ray_for_index(&self, i: usize) -> Ray {
        let w = self.width as usize;
        self.ray_unchecked((i % w) as u32, (i / w) as u32)
    }

    /// Continuous pixel coordinates and ray depth of a world point; `None`
    /// behind the camera. Pixel centers sit at half-integers.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        let v = p - self.position;
        let z = v.dot(self.forward);
        if z <= 0.0 {
            return None;
        }
        let t = self.tan_half_fov();
        let sx = v.dot(self.right()) / (z * t * self.aspect());
        let sy = v.dot(self.up) / (z * t);
        let px = (sx + 1.0) * 0.5 * self.width as f64;
        let py = (1.0 - sy) * 0.5 * self.height as f64;
        Some((px, py, v.length()))
    }

    /// Inverse of [`Camera::project`].
    pub fn unproject(&self, px: f64, py: f64, depth: f64) -> Vec3 {
        let t = self.tan_half_fov();
        let sx = (px / self.width as f64 * 2.0 - 1.0) * t * self.aspect();
        let sy = (1.0 - py / self.height as f64 * 2.0) * t;
        let dir = (self.forward + self.right() * sx + self.up * sy).normalized();
        self.position + dir * depth
    }

    /// Orbits the camera about `center` around its own up axis by `degrees`,
    /// keeping the distance and re-aiming at `center`'s offset.
    pub fn orbit(&self, center: Vec3, degrees: f64) -> Camera {
        let a = degrees.to_radians();
        let axis = self.up;
        Camera {
            position: center + (self.position - center).rotated(axis, a),
            forward: self.forward.rotated(axis, a).normalized(),
            up: self.up,
            ..*self
        }
    }

    /// Angle in degrees between this camera's view of `center` and `other`'s.
    pub fn deviation_from(&self, other: &Camera, center: Vec3) -> f64 {
        let a = (self.position - center).normalized();
        let b = (other.position - center).normalized();
        a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
    }

    /// Same camera with a different viewport.
    pub fn with_viewport(&self, width: u32, height: u32) -> Camera {
        Camera { width, height, ..*self }
    }
}
