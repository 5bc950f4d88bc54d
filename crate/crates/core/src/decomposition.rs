//! Domain decompositions of a volume into per-PE sets of bricks, and
//! ray/domain intersection.

use serde::{Deserialize, Serialize};

use crate::camera::Ray;
use crate::volume::ScalarVolume;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DecompositionError {
    #[error("PE count must be at least {min}, got {k}")]
    TooFewPes { k: usize, min: usize },
    #[error("cannot split {depth} z-slices among {k} PEs")]
    TooManyPes { k: usize, depth: usize },
    #[error("period {period} must be positive and smaller than the z extent {depth}")]
    BadPeriod { period: usize, depth: usize },
    #[error("bricks {a:?} and {b:?} overlap")]
    Overlap { a: Brick, b: Brick },
    #[error("bricks cover {covered} voxels, volume has {total}")]
    NotCovering { covered: usize, total: usize },
    #[error("brick {0:?} is empty or exceeds the volume")]
    BadBrick(Brick),
}

/// Half-open voxel-index box `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Brick {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Brick {
    pub fn voxel_count(&self) -> usize {
        (0..3).map(|a| self.hi[a].saturating_sub(self.lo[a])).product()
    }

    pub fn contains(&self, v: [usize; 3]) -> bool {
        (0..3).all(|a| self.lo[a] <= v[a] && v[a] < self.hi[a])
    }

    pub fn overlaps(&self, o: &Brick) -> bool {
        (0..3).all(|a| self.lo[a] < o.hi[a] && o.lo[a] < self.hi[a])
    }
}

/// Parametric ray interval `[enter, exit)`.
pub type Interval = (f64, f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDecomposition {
    pub dims: [usize; 3],
    pub bricks_per_pe: Vec<Vec<Brick>>,
}

impl DomainDecomposition {
    /// Checks disjointness and coverage.
    pub fn new(dims: [usize; 3], bricks_per_pe: Vec<Vec<Brick>>) -> Result<Self, DecompositionError> {
        if bricks_per_pe.is_empty() {
            return Err(DecompositionError::TooFewPes { k: 0, min: 1 });
        }
        let all: Vec<Brick> = bricks_per_pe.iter().flatten().copied().collect();
        for b in &all {
            if b.voxel_count() == 0 || (0..3).any(|a| b.hi[a] > dims[a]) {
                return Err(DecompositionError::BadBrick(*b));
            }
        }
        for (i, a) in all.iter().enumerate() {
            if let Some(b) = all[i + 1..].iter().find(|b| a.overlaps(b)) {
                return Err(DecompositionError::Overlap { a: *a, b: *b });
            }
        }
        let covered: usize = all.iter().map(Brick::voxel_count).sum();
        let total = dims.iter().product();
        if covered != total {
            return Err(DecompositionError::NotCovering { covered, total });
        }
        Ok(Self { dims, bricks_per_pe })
    }

    pub fn pe_count(&self) -> usize {
        self.bricks_per_pe.len()
    }

    pub fn bricks(&self, pe: usize) -> &[Brick] {
        &self.bricks_per_pe[pe]
    }

    pub fn owner_of(&self, voxel: [usize; 3]) -> Option<usize> {
        self.bricks_per_pe.iter().position(|bs| bs.iter().any(|b| b.contains(voxel)))
    }
}

/// `k` contiguous z-slabs whose thicknesses differ by at most one voxel.
pub fn make_slab_decomposition(dims: [usize; 3], k: usize) -> Result<DomainDecomposition, DecompositionError> {
    if k == 0 {
        return Err(DecompositionError::TooFewPes { k, min: 1 });
    }
    let depth = dims[2];
    if k > depth {
        return Err(DecompositionError::TooManyPes { k, depth });
    }
    let (base, extra) = (depth / k, depth % k);
    let mut z = 0;
    let bricks = (0..k)
        .map(|pe| {
            let thick = base + usize::from(pe < extra);
            let b = Brick { lo: [0, 0, z], hi: [dims[0], dims[1], z + thick] };
            z += thick;
            vec![b]
        })
        .collect();
    DomainDecomposition::new(dims, bricks)
}

/// z-slabs of `period` voxels dealt round-robin to `k` PEs, so every PE owns
/// a non-convex union along z. With `k = 1` the single PE owns every slab.
pub fn make_interleaved_decomposition(
    dims: [usize; 3],
    k: usize,
    period: usize,
) -> Result<DomainDecomposition, DecompositionError> {
    if k == 0 {
        return Err(DecompositionError::TooFewPes { k, min: 1 });
    }
    let depth = dims[2];
    if period == 0 || period >= depth {
        return Err(DecompositionError::BadPeriod { period, depth });
    }
    let mut bricks = vec![Vec::new(); k];
    for (slab, z) in (0..depth).step_by(period).enumerate() {
        let hi = (z + period).min(depth);
        bricks[slab % k].push(Brick { lo: [0, 0, z], hi: [dims[0], dims[1], hi] });
    }
    if bricks.iter().any(Vec::is_empty) {
        return Err(DecompositionError::TooManyPes { k, depth: depth.div_ceil(period) });
    }
    DomainDecomposition::new(dims, bricks)
}

/// Sorted, disjoint parametric intervals (t >= 0) where `ray` is inside the
/// union of `bricks`. Intervals of face-sharing bricks are merged.
pub fn intersect_domain(ray: &Ray, bricks: &[Brick], vol: &ScalarVolume) -> Vec<Interval> {
    let mut hits: Vec<Interval> = bricks
        .iter()
        .filter_map(|b| vol.brick_bounds(b.lo, b.hi).intersect(ray.origin, ray.direction))
        .map(|(a, b)| (a.max(0.0), b))
        .filter(|(a, b)| a < b)
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<Interval> = Vec::with_capacity(hits.len());
    for (a, b) in hits {
        match merged.last_mut() {
            Some(last) if a <= last.1 + MERGE_EPS * last.1.abs().max(1.0) => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

const MERGE_EPS: f64 = 1e-12;

/// Parametric interval of the whole volume restricted to `[near, far]`.
pub fn volume_interval(ray: &Ray, vol: &ScalarVolume, near: f64, far: f64) -> Option<Interval> {
    let (a, b) = vol.bounds().intersect(ray.origin, ray.direction)?;
    let (a, b) = (a.max(near).max(0.0), b.min(far));
    (a < b).then_some((a, b))
}

/// Restricts sorted intervals to `[lo, hi]`.
pub fn clip_intervals(intervals: &[Interval], lo: f64, hi: f64) -> Vec<Interval> {
    intervals.iter().map(|&(a, b)| (a.max(lo), b.min(hi))).filter(|(a, b)| a < b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use proptest::prelude::*;

    fn vol(dims: [usize; 3]) -> ScalarVolume {
        ScalarVolume::from_u8(dims, Vec3::splat(1.0), Vec3::ZERO, vec![0; dims.iter().product()]).unwrap()
    }

    fn z_ray() -> Ray {
        Ray { origin: Vec3::new(1.2, 1.3, -5.0), direction: Vec3::new(0.0, 0.0, 1.0), pixel: (0, 0) }
    }

    #[test]
    fn slab_equal_split() {
        let d = make_slab_decomposition([4, 4, 8], 2).unwrap();
        assert_eq!(d.bricks(0), &[Brick { lo: [0, 0, 0], hi: [4, 4, 4] }]);
        assert_eq!(d.bricks(1), &[Brick { lo: [0, 0, 4], hi: [4, 4, 8] }]);
    }

    #[test]
    fn slab_single_pe_is_whole_volume() {
        let d = make_slab_decomposition([3, 5, 7], 1).unwrap();
        assert_eq!(d.bricks(0), &[Brick { lo: [0; 3], hi: [3, 5, 7] }]);
    }

    #[test]
    fn slab_balanced_thickness() {
        let d = make_slab_decomposition([2, 2, 10], 4).unwrap();
        let t: Vec<usize> = (0..4).map(|p| d.bricks(p)[0].hi[2] - d.bricks(p)[0].lo[2]).collect();
        assert_eq!(t, vec![3, 3, 2, 2]);
        assert!(matches!(make_slab_decomposition([2, 2, 3], 4), Err(DecompositionError::TooManyPes { .. })));
    }

    #[test]
    fn interleaved_round_robin() {
        let d = make_interleaved_decomposition([4, 4, 8], 2, 2).unwrap();
        let z = |pe: usize| d.bricks(pe).iter().map(|b| (b.lo[2], b.hi[2])).collect::<Vec<_>>();
        assert_eq!(z(0), vec![(0, 2), (4, 6)]);
        assert_eq!(z(1), vec![(2, 4), (6, 8)]);
        assert!(make_interleaved_decomposition([4, 4, 8], 2, 8).is_err());
        assert!(make_interleaved_decomposition([4, 4, 8], 0, 2).is_err());
        assert_eq!(make_interleaved_decomposition([4, 4, 8], 1, 2).unwrap().bricks(0).len(), 4);
    }

    #[test]
    fn interleaved_ray_crosses_boundary_four_times() {
        let v = vol([4, 4, 8]);
        let d = make_interleaved_decomposition([4, 4, 8], 2, 2).unwrap();
        let iv = intersect_domain(&z_ray(), d.bricks(0), &v);
        assert_eq!(iv.len(), 2);
        assert_eq!(iv.len() * 2, 4);
        // z boundaries at -0.5, 1.5 and 3.5, 5.5 in world space
        assert!((iv[0].0 - 4.5).abs() < 1e-12 && (iv[0].1 - 6.5).abs() < 1e-12);
        assert!((iv[1].0 - 8.5).abs() < 1e-12 && (iv[1].1 - 10.5).abs() < 1e-12);
    }

    #[test]
    fn missing_ray_has_no_intervals() {
        let v = vol([4, 4, 8]);
        let r = Ray { origin: Vec3::new(50.0, 0.0, 0.0), direction: Vec3::new(0.0, 0.0, 1.0), pixel: (0, 0) };
        assert!(intersect_domain(&r, &[Brick { lo: [0; 3], hi: [4, 4, 8] }], &v).is_empty());
    }

    #[test]
    fn abutting_bricks_merge() {
        let v = vol([4, 4, 8]);
        let bricks = [Brick { lo: [0; 3], hi: [4, 4, 3] }, Brick { lo: [0, 0, 3], hi: [4, 4, 8] }];
        let iv = intersect_domain(&z_ray(), &bricks, &v);
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 - 4.5).abs() < 1e-12 && (iv[0].1 - 12.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_overlap_and_gaps() {
        let a = Brick { lo: [0; 3], hi: [2, 2, 2] };
        let b = Brick { lo: [1, 0, 0], hi: [2, 2, 2] };
        assert!(matches!(
            DomainDecomposition::new([2, 2, 2], vec![vec![a], vec![b]]),
            Err(DecompositionError::Overlap { .. })
        ));
        let c = Brick { lo: [0; 3], hi: [2, 2, 1] };
        assert!(matches!(
            DomainDecomposition::new([2, 2, 2], vec![vec![c]]),
            Err(DecompositionError::NotCovering { .. })
        ));
    }

    fn arb_decomposition() -> impl Strategy<Value = DomainDecomposition> {
        (1usize..9, 1usize..9, 2usize..24, 1usize..6, 1usize..5, any::<bool>()).prop_filter_map(
            "valid parameters",
            |(x, y, z, k, period, interleave)| {
                if interleave {
                    make_interleaved_decomposition([x, y, z], k + 1, period).ok()
                } else {
                    make_slab_decomposition([x, y, z], k).ok()
                }
            },
        )
    }

    proptest! {
        #[test]
        fn every_voxel_has_one_owner(d in arb_decomposition()) {
            for k in 0..d.dims[2] {
                for j in 0..d.dims[1] {
                    for i in 0..d.dims[0] {
                        let owners = d.bricks_per_pe.iter()
                            .filter(|bs| bs.iter().any(|b| b.contains([i, j, k])))
                            .count();
                        prop_assert_eq!(owners, 1);
                    }
                }
            }
        }

        #[test]
        fn pe_intervals_tile_the_volume(
            d in arb_decomposition(),
            o in prop::array::uniform3(-30.0f64..30.0),
            t in prop::array::uniform3(0.0f64..1.0),
        ) {
            let v = vol(d.dims);
            let target = Vec3::new(t[0] * d.dims[0] as f64, t[1] * d.dims[1] as f64, t[2] * d.dims[2] as f64);
            let origin = Vec3::from(o);
            prop_assume!((target - origin).length() > 1e-3);
            let ray = Ray { origin, direction: (target - origin).normalized(), pixel: (0, 0) };
            let mut all: Vec<Interval> = Vec::new();
            for pe in 0..d.pe_count() {
                let iv = intersect_domain(&ray, d.bricks(pe), &v);
                for w in iv.windows(2) {
                    prop_assert!(w[0].1 < w[1].0, "per-PE intervals must be sorted and disjoint");
                }
                all.extend(iv);
            }
            all.sort_by(|a, b| a.0.total_cmp(&b.0));
            let whole = intersect_domain(&ray, &[Brick { lo: [0; 3], hi: d.dims }], &v);
            if whole.is_empty() {
                prop_assert!(all.is_empty());
            } else {
                let (a, b) = whole[0];
                prop_assert!((all[0].0 - a).abs() < 1e-6);
                prop_assert!((all[all.len() - 1].1 - b).abs() < 1e-6);
                for w in all.windows(2) {
                    prop_assert!((w[0].1 - w[1].0).abs() < 1e-6, "gap or overlap {:?}", w);
                }
            }
        }
    }

    #[test]
    fn ten_thousand_random_rays_sorted_disjoint() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let dims = [16, 16, 32];
        let v = vol(dims);
        let d = make_interleaved_decomposition(dims, 3, 3).unwrap();
        for _ in 0..10_000 {
            let o =
                Vec3::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0));
            let t = Vec3::new(rng.random_range(0.0..16.0), rng.random_range(0.0..16.0), rng.random_range(0.0..32.0));
            let ray = Ray { origin: o, direction: (t - o).normalized(), pixel: (0, 0) };
            for pe in 0..3 {
                let iv = intersect_domain(&ray, d.bricks(pe), &v);
                assert!(iv.iter().all(|(a, b)| a < b));
                assert!(iv.windows(2).all(|w| w[0].1 < w[1].0));
            }
        }
    }
}
