//! Single-domain VDI generation.

use crate::camera::{Camera, Ray};
use crate::decomposition::{clip_intervals, intersect_domain, volume_interval, Brick, Interval};
use crate::dvr::classify;
use crate::par;
use crate::volume::{ScalarVolume, TransferFunction};

use super::repr::{exclusive_prefix_sum, VdiDense, VdiFull};
use super::segment::{build_list, gamma_search, Sample, Supersegment, DEFAULT_MAX_ITERS};
use super::VdiMeta;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenParams {
    /// Supersegment budget per list.
    pub n_sup: usize,
    /// World-space sampling distance.
    pub step: f64,
    /// Bisection iterations of the threshold search.
    pub max_iters: u32,
}

impl GenParams {
    pub fn new(n_sup: usize, step: f64) -> Self {
        Self { n_sup, step, max_iters: DEFAULT_MAX_ITERS }
    }
}

/// Which part of each ray a generator may sample.
#[derive(Clone, Copy, Debug)]
pub enum RayDomain<'a> {
    /// The whole volume.
    Full,
    /// The union of these bricks (one PE's domain).
    Bricks(&'a [Brick]),
}

impl RayDomain<'_> {
    pub fn intervals(&self, ray: &Ray, vol: &ScalarVolume, camera: &Camera) -> Vec<Interval> {
        match self {
            RayDomain::Full => volume_interval(ray, vol, camera.near, camera.far).into_iter().collect(),
            RayDomain::Bricks(b) => clip_intervals(&intersect_domain(ray, b, vol), camera.near, camera.far),
        }
    }
}

/// Fixed-step samples of `ray` restricted to `intervals`.
///
/// Samples lie on one global grid per ray: cell `k` spans
/// `[anchor + k*step, anchor + (k+1)*step]` with `anchor` the ray's entry into
/// the volume box, and is sampled at its midpoint. A cell belongs to the
/// interval holding its midpoint; its recorded extent is clipped to that
/// interval so samples from different domains never overlap.
pub fn sample_ray(
    vol: &ScalarVolume,
    tf: &TransferFunction,
    ray: &Ray,
    step: f64,
    intervals: &[Interval],
) -> Vec<Sample> {
    let Some((t_in, _)) = vol.bounds().intersect(ray.origin, ray.direction) else {
        return Vec::new();
    };
    let anchor = t_in.max(0.0);
    let exponent = (step / vol.voxel_diagonal()) as f32;
    let mut out = Vec::new();
    for &(a, b) in intervals {
        let mut k = ((a - anchor) / step - 0.5).floor().max(0.0) as u64;
        loop {
            let mid = anchor + (k as f64 + 0.5) * step;
            if mid >= b {
                break;
            }
            let front = anchor + k as f64 * step;
            let back = anchor + (k + 1) as f64 * step;
            k += 1;
            if mid < a {
                continue;
            }
            let rgba = classify(tf, vol.sample_trilinear(ray.at(mid)), exponent);
            out.push(Sample { t_front: front.max(a) as f32, t_back: back.min(b) as f32, rgba, weight: 1.0 });
        }
    }
    out
}

fn meta(vol: &ScalarVolume, tf: &TransferFunction, camera: &Camera, params: &GenParams) -> VdiMeta {
    VdiMeta {
        camera: *camera,
        tf_digest: tf.digest(),
        volume_digest: vol.digest(),
        n_sup: params.n_sup,
        step: params.step,
    }
}

fn ray_list(
    vol: &ScalarVolume,
    tf: &TransferFunction,
    camera: &Camera,
    params: &GenParams,
    domain: RayDomain<'_>,
    i: usize,
    gamma: Option<f32>,
) -> (f32, Vec<Supersegment>) {
    let ray = camera.ray_for_index(i);
    let intervals = domain.intervals(&ray, vol, camera);
    let samples = sample_ray(vol, tf, &ray, params.step, &intervals);
    let gamma = gamma.unwrap_or_else(|| gamma_search(&samples, params.n_sup, params.max_iters));
    (gamma, build_list(&samples, gamma, params.n_sup).0)
}

/// Per-ray search and list construction written straight into the grid.
pub fn generate_full(
    vol: &ScalarVolume,
    tf: &TransferFunction,
    camera: &Camera,
    params: GenParams,
) -> (VdiFull, VdiMeta) {
    assert!(params.n_sup >= 1 && params.step > 0.0);
    let lists =
        par::map_indices(camera.pixel_count(), |i| ray_list(vol, tf, camera, &params, RayDomain::Full, i, None).1);
    let mut full = VdiFull::empty(camera.width, camera.height, params.n_sup);
    for (i, l) in lists.iter().enumerate() {
        full.set_list(i, l);
    }
    (full, meta(vol, tf, camera, &params))
}

/// Two-pass dense generation: pass 1 stores each ray's threshold and
/// supersegment count, an exclusive scan turns counts into offsets, and
/// pass 2 regenerates every list with its stored threshold straight into
/// the packed payload.
pub fn generate_dense(
    vol: &ScalarVolume,
    tf: &TransferFunction,
    camera: &Camera,
    params: GenParams,
    domain: RayDomain<'_>,
) -> (VdiDense, VdiMeta) {
    assert!(params.n_sup >= 1 && params.step > 0.0);
    let n = camera.pixel_count();
    let pass1: Vec<(f32, u32)> = par::map_indices(n, |i| {
        let (g, list) = ray_list(vol, tf, camera, &params, domain, i, None);
        (g, list.len() as u32)
    });
    let counts: Vec<u32> = pass1.iter().map(|p| p.1).collect();
    let offsets = exclusive_prefix_sum(&counts);
    let total = offsets.last().map_or(0, |o| o + *counts.last().unwrap() as usize);
    let lists = par::map_indices(n, |i| ray_list(vol, tf, camera, &params, domain, i, Some(pass1[i].0)).1);
    let mut payload = vec![Supersegment::EMPTY; total];
    for (i, list) in lists.iter().enumerate() {
        assert_eq!(list.len(), counts[i] as usize, "pass 2 must reproduce pass 1 counts");
        payload[offsets[i]..offsets[i] + list.len()].copy_from_slice(list);
    }
    let dense = VdiDense { width: camera.width, height: camera.height, n_sup: params.n_sup, counts, offsets, payload };
    debug_assert!(dense.validate().is_ok());
    (dense, meta(vol, tf, camera, &params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;

    fn vol() -> ScalarVolume {
        ScalarVolume::from_u8([4, 4, 20], Vec3::splat(1.0), Vec3::ZERO, vec![255; 320]).unwrap()
    }

    fn z_ray() -> Ray {
        Ray { origin: Vec3::new(1.5, 1.5, -10.0), direction: Vec3::new(0.0, 0.0, 1.0), pixel: (0, 0) }
    }

    #[test]
    fn no_intervals_no_samples() {
        let tf = TransferFunction::ramp([1.0; 3], 0.5);
        assert!(sample_ray(&vol(), &tf, &z_ray(), 0.5, &[]).is_empty());
    }

    #[test]
    fn ten_steps_ten_samples() {
        let tf = TransferFunction::ramp([1.0; 3], 0.5);
        // volume entry is at t = 9.5; interval of exactly 10 cells
        let s = sample_ray(&vol(), &tf, &z_ray(), 0.5, &[(9.5, 14.5)]);
        assert_eq!(s.len(), 10);
        assert!(s.windows(2).all(|w| w[0].t_front < w[1].t_front && w[0].t_back == w[1].t_front));
    }

    #[test]
    fn samples_avoid_gaps() {
        let tf = TransferFunction::ramp([1.0; 3], 0.5);
        let iv = [(9.5, 12.0), (15.0, 18.0)];
        let s = sample_ray(&vol(), &tf, &z_ray(), 0.5, &iv);
        assert!(!s.is_empty());
        for x in &s {
            let inside = iv.iter().any(|&(a, b)| x.t_front as f64 >= a && x.t_back as f64 <= b);
            assert!(inside, "{x:?}");
            assert!(!(x.t_front > 12.0 && x.t_back < 15.0));
        }
    }
}
