//! Volumetric depth images: segmentation, representations, generation and
//! the on-disk format.

pub mod format;
pub mod generate;
pub mod repr;
pub mod segment;

use crate::camera::Camera;

pub use generate::{generate_dense, generate_full, sample_ray, GenParams, RayDomain};
pub use repr::{exclusive_prefix_sum, ReprError, VdiDense, VdiFull};
pub use segment::{build_list, count_supersegments, gamma_search, should_split, Sample, Supersegment};

/// On-disk and on-wire size of one supersegment: two f32 depths and RGBA f32.
pub const SUPERSEGMENT_BYTES: usize = 24;

/// Reproducibility header carried with every VDI.
#[derive(Clone, Debug, PartialEq)]
pub struct VdiMeta {
    pub camera: Camera,
    pub tf_digest: [u8; 32],
    pub volume_digest: [u8; 32],
    pub n_sup: usize,
    pub step: f64,
}

/// Either representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Vdi {
    Full(VdiFull),
    Dense(VdiDense),
}

impl Vdi {
    pub fn to_full(&self) -> Result<VdiFull, ReprError> {
        match self {
            Vdi::Full(f) => Ok(f.clone()),
            Vdi::Dense(d) => d.inflate(),
        }
    }

    pub fn counts(&self) -> Vec<u32> {
        match self {
            Vdi::Full(f) => f.counts(),
            Vdi::Dense(d) => d.counts.clone(),
        }
    }
}
