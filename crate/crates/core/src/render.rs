//! Rendering a VDI: exactly from its generation viewpoint, approximately
//! from any other.

use crate::camera::Camera;
use crate::dvr::{over, Rgba, DEFAULT_EARLY_TERMINATION};
use crate::image::Image;
use crate::math::{Aabb, Vec3};
use crate::par;
use crate::vdi::segment::accumulate;
use crate::vdi::{Supersegment, VdiFull};

/// Opacity of a fraction `l_covered / l_stored` of a segment whose total
/// opacity is `alpha_stored`. With `l_stored = 1` this is `1 - (1 - a)^l`.
#[inline]
pub fn adjusted_opacity(alpha_stored: f32, l_stored: f32, l_covered: f32) -> f32 {
    if alpha_stored <= 0.0 {
        return 0.0;
    }
    1.0 - (1.0 - alpha_stored.min(1.0)).powf(l_covered / l_stored)
}

/// Plain front-to-back `over` of each list. Exact at the generation viewpoint.
pub fn render_original(vdi: &VdiFull) -> Image {
    let pixels = par::map_indices(vdi.list_count(), |i| accumulate(vdi.list(i).iter().map(|s| &s.rgba)));
    Image::from_pixels(vdi.width, vdi.height, pixels)
}

/// World <-> generation-frustum `(pixel x, pixel y, ray depth)` mapping.
#[derive(Clone, Copy, Debug)]
pub struct GenFrustumCoords {
    pub camera: Camera,
}

impl GenFrustumCoords {
    pub fn to_frustum(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        self.camera.project(p)
    }

    pub fn to_world(&self, x: f64, y: f64, t: f64) -> Vec3 {
        self.camera.unproject(x, y, t)
    }
}

/// World-space box around all supersegments, padded by a pixel footprint.
pub fn content_bounds(vdi: &VdiFull, camera: &Camera) -> Option<Aabb> {
    let mut lo = Vec3::splat(f64::INFINITY);
    let mut hi = Vec3::splat(f64::NEG_INFINITY);
    let mut max_t = 0.0f64;
    for i in 0..vdi.list_count() {
        let list = vdi.list(i);
        let (Some(first), Some(last)) = (list.first(), list.last()) else { continue };
        let ray = camera.ray_for_index(i);
        for t in [first.t_front as f64, last.t_back as f64] {
            let p = ray.at(t);
            lo = lo.min(p);
            hi = hi.max(p);
            max_t = max_t.max(t);
        }
    }
    if lo.x > hi.x {
        return None;
    }
    let pixel = 2.0 * max_t * (camera.vfov.to_radians() * 0.5).tan() / camera.height as f64;
    let pad = Vec3::splat(pixel * 2.0);
    Some(Aabb { min: lo - pad, max: hi + pad })
}

#[derive(Clone, Copy, Debug)]
pub struct NovelParams {
    /// World-space march distance along view rays.
    pub march_step: f64,
    pub early_termination: f32,
}

impl NovelParams {
    pub fn new(march_step: f64) -> Self {
        Self { march_step, early_termination: DEFAULT_EARLY_TERMINATION }
    }
}

#[inline]
fn find_segment(list: &[Supersegment], t: f32) -> Option<&Supersegment> {
    let i = list.partition_point(|s| s.t_back <= t);
    list.get(i).filter(|s| s.t_front <= t)
}

/// Marches each view ray in world space, maps every sample into the
/// generation frustum, and lets the supersegment found there (nearest list,
/// by depth) contribute its color density with length-adjusted opacity.
pub fn render_novel(vdi: &VdiFull, gen_camera: &Camera, view: &Camera, params: NovelParams) -> Image {
    assert!(params.march_step > 0.0, "march step must be positive");
    let Some(bounds) = content_bounds(vdi, gen_camera) else {
        return Image::new(view.width, view.height);
    };
    let frustum = GenFrustumCoords { camera: *gen_camera };
    let ds = params.march_step;
    let (w, h) = (vdi.width as i64, vdi.height as i64);
    let pixels = par::map_indices(view.pixel_count(), |i| {
        let ray = view.ray_for_index(i);
        let Some((t0, t1)) = bounds.intersect(ray.origin, ray.direction) else {
            return [0.0; 4];
        };
        let t0 = t0.max(view.near);
        let t1 = t1.min(view.far);
        let mut acc: Rgba = [0.0; 4];
        let mut k = 0u64;
        loop {
            let mid = t0 + (k as f64 + 0.5) * ds;
            if mid >= t1 {
                break;
            }
            k += 1;
            let Some((px, py, depth)) = frustum.to_frustum(ray.at(mid)) else { continue };
            let (x, y) = (px.floor() as i64, py.floor() as i64);
            if x < 0 || y < 0 || x >= w || y >= h {
                continue;
            }
            let list = vdi.list((y * w + x) as usize);
            let Some(seg) = find_segment(list, depth as f32) else { continue };
            let a = adjusted_opacity(seg.rgba[3], seg.length(), ds as f32);
            let scale = a / seg.rgba[3];
            acc = over(acc, [seg.rgba[0] * scale, seg.rgba[1] * scale, seg.rgba[2] * scale, a]);
            if acc[3] >= params.early_termination {
                break;
            }
        }
        acc
    });
    Image::from_pixels(view.width, view.height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjusted_opacity_identities() {
        assert_eq!(adjusted_opacity(0.0, 2.0, 5.0), 0.0);
        for a in [0.1f32, 0.5, 0.9] {
            assert!((adjusted_opacity(a, 3.0, 3.0) - a).abs() < 1e-6);
        }
        assert!((adjusted_opacity(0.75, 2.0, 1.0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn adjusted_opacity_monotone_and_literal_form() {
        for a in [0.05f32, 0.3, 0.8, 0.99] {
            let mut prev = 0.0;
            for i in 0..50 {
                let l = i as f32 * 0.1;
                let v = adjusted_opacity(a, 1.0, l);
                assert!(v >= prev);
                assert!((v - (1.0 - (1.0 - a).powf(l))).abs() < 1e-6);
                prev = v;
            }
        }
    }

    fn gen_camera() -> Camera {
        Camera::look_at(Vec3::new(0.0, 0.0, -10.0), Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0), 30.0, (4, 3))
    }

    #[test]
    fn empty_vdi_renders_black() {
        let vdi = VdiFull::empty(4, 3, 2);
        assert!(render_original(&vdi).pixels.iter().all(|p| *p == [0.0; 4]));
        let img = render_novel(&vdi, &gen_camera(), &gen_camera(), NovelParams::new(0.1));
        assert!(img.pixels.iter().all(|p| *p == [0.0; 4]));
    }

    #[test]
    fn single_supersegment_lists_render_their_values() {
        let mut vdi = VdiFull::empty(4, 3, 2);
        for i in 0..12 {
            let c = i as f32 / 24.0;
            vdi.set_list(i, &[Supersegment { t_front: 9.0, t_back: 11.0, rgba: [c, 0.0, c, 0.5] }]);
        }
        let img = render_original(&vdi);
        for i in 0..12 {
            assert_eq!(img.pixels[i], vdi.list(i)[0].rgba);
        }
    }

    #[test]
    fn frustum_round_trip() {
        let f = GenFrustumCoords { camera: gen_camera() };
        for p in [Vec3::new(0.3, -0.2, 1.0), Vec3::new(-1.0, 0.5, -3.0)] {
            let (x, y, t) = f.to_frustum(p).unwrap();
            assert!((f.to_world(x, y, t) - p).length() < 1e-4);
        }
    }

    #[test]
    fn novel_at_generation_view_matches_original() {
        let mut vdi = VdiFull::empty(4, 3, 2);
        for i in 0..12 {
            vdi.set_list(
                i,
                &[
                    Supersegment { t_front: 9.0, t_back: 9.8, rgba: [0.3, 0.1, 0.0, 0.4] },
                    Supersegment { t_front: 10.2, t_back: 11.0, rgba: [0.0, 0.2, 0.5, 0.6] },
                ],
            );
        }
        let mut p = NovelParams::new(0.01);
        p.early_termination = 1.0;
        let novel = render_novel(&vdi, &gen_camera(), &gen_camera(), p);
        let orig = render_original(&vdi);
        assert!(novel.max_abs_diff(&orig).unwrap() < 2e-2);
    }
}
