//! Volumetric depth images (VDIs) generated and composited sort-last over a
//! simulated cluster of processing elements, with a reference raycaster as
//! ground truth.

pub mod camera;
pub mod decomposition;
pub mod distributed;
pub mod dvr;
pub mod image;
pub mod math;
pub mod metrics;
pub mod par;
pub mod render;
pub mod scene;
pub mod synth;
pub mod vdi;
pub mod volume;

pub use camera::{Camera, Ray};
pub use decomposition::{Brick, DomainDecomposition};
pub use dvr::{over, render_dvr, DvrParams, Rgba};
pub use image::Image;
pub use math::Vec3;
pub use vdi::{Vdi, VdiDense, VdiFull, VdiMeta};
pub use volume::{ScalarVolume, TransferFunction};
