//! Reference front-to-back raycaster. This is the ground truth every VDI
//! path is checked against, so it deliberately shares no sampling code with
//! the VDI generator beyond the transfer-function lookup and `over`.

use crate::camera::Camera;
use crate::image::Image;
use crate::par;
use crate::volume::{ScalarVolume, TransferFunction};

/// Premultiplied RGBA.
pub type Rgba = [f32; 4];

pub const DEFAULT_EARLY_TERMINATION: f32 = 0.99;

/// Front-to-back `over`: `front` composited over `back`, both premultiplied.
#[inline]
pub fn over(front: Rgba, back: Rgba) -> Rgba {
    let t = 1.0 - front[3];
    [front[0] + t * back[0], front[1] + t * back[1], front[2] + t * back[2], front[3] + t * back[3]]
}

/// Opacity of a sample taken over `step` when the transfer function's
/// opacity refers to `reference` length.
#[inline]
pub fn correct_opacity(alpha: f32, step: f64, reference: f64) -> f32 {
    1.0 - (1.0 - alpha).powf((step / reference) as f32)
}

/// Classifies a scalar and returns the premultiplied, length-corrected sample.
#[inline]
pub fn classify(tf: &TransferFunction, scalar: f32, exponent: f32) -> Rgba {
    let c = tf.lookup(scalar);
    let a = 1.0 - (1.0 - c[3]).powf(exponent);
    [c[0] * a, c[1] * a, c[2] * a, a]
}

#[derive(Clone, Copy, Debug)]
pub struct DvrParams {
    /// World-space sampling distance.
    pub step: f64,
    /// Stop once accumulated opacity reaches this value.
    pub early_termination: f32,
}

impl DvrParams {
    pub fn new(step: f64) -> Self {
        Self { step, early_termination: DEFAULT_EARLY_TERMINATION }
    }

    /// No early termination; what exact comparisons against VDIs use.
    pub fn exact(step: f64) -> Self {
        Self { step, early_termination: 1.0 }
    }
}

/// Samples sit at the midpoints of `step`-long cells laid out from the
/// ray's entry into the volume box; a sample is taken when its midpoint lies
/// inside `[max(entry, near), min(exit, far))`.
pub fn render_dvr(vol: &ScalarVolume, tf: &TransferFunction, camera: &Camera, params: DvrParams) -> Image {
    assert!(params.step > 0.0, "step must be positive");
    let bounds = vol.bounds();
    let exponent = (params.step / vol.voxel_diagonal()) as f32;
    let pixels = par::map_indices(camera.pixel_count(), |i| {
        let ray = camera.ray_for_index(i);
        let Some((t_in, t_out)) = bounds.intersect(ray.origin, ray.direction) else {
            return [0.0; 4];
        };
        let anchor = t_in.max(0.0);
        let lo = anchor.max(camera.near);
        let hi = t_out.min(camera.far);
        let mut acc: Rgba = [0.0; 4];
        let mut k = ((lo - anchor) / params.step - 0.5).floor().max(0.0) as u64;
        loop {
            let mid = anchor + (k as f64 + 0.5) * params.step;
            if mid >= hi {
                break;
            }
            k += 1;
            if mid < lo {
                continue;
            }
            let s = classify(tf, vol.sample_trilinear(ray.at(mid)), exponent);
            acc = over(acc, s);
            if acc[3] >= params.early_termination {
                break;
            }
        }
        acc
    });
    Image::from_pixels(camera.width, camera.height, pixels)
}
