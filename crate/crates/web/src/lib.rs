//! WebAssembly front end: build a scene, composite it across simulated PEs,
//! then orbit the result and compare against the reference raycaster.

use vdi::camera::Camera;
use vdi::decomposition::{make_interleaved_decomposition, make_slab_decomposition};
use vdi::distributed::{composite, Harness, Schedule};
use vdi::metrics::ssim;
use vdi::render::{content_bounds, render_novel, render_original, NovelParams};
use vdi::synth::{default_camera, Synthetic};
use vdi::vdi::GenParams;
use vdi::volume::ControlPoint;
use vdi::{render_dvr, DvrParams, Image, ScalarVolume, TransferFunction, Vdi, VdiFull};
use wasm_bindgen::prelude::*;

const BACKGROUND: [f32; 3] = [0.06, 0.06, 0.08];

fn transfer_function() -> TransferFunction {
    TransferFunction::new(vec![
        ControlPoint { scalar: 0.0, color: [0.1, 0.2, 0.9], opacity: 0.0 },
        ControlPoint { scalar: 0.4, color: [0.9, 0.8, 0.2], opacity: 0.25 },
        ControlPoint { scalar: 1.0, color: [1.0, 0.2, 0.1], opacity: 0.8 },
    ])
    .expect("valid transfer function")
}

fn synthetic(kind: &str, size: usize, seed: u64) -> Result<Synthetic, String> {
    Ok(match kind {
        "two_shell" => Synthetic::TwoShell { size },
        "gradient" => Synthetic::Gradient { size, axis: 2 },
        "blobs" => Synthetic::Blobs { size, count: 8, seed },
        "sparse" => Synthetic::Sparse { size, radius: 0.35 },
        other => return Err(format!("unknown scene {other}")),
    })
}

/// A composited VDI plus everything needed to view it.
#[wasm_bindgen]
pub struct Demo {
    volume: ScalarVolume,
    tf: TransferFunction,
    camera: Camera,
    vdi: VdiFull,
    step: f64,
    metrics: String,
    file_bytes: usize,
}

#[wasm_bindgen]
impl Demo {
    /// Generates and composites `kind` over `k` PEs. `interleaved` selects
    /// round-robin z-slabs of 4 voxels instead of contiguous slabs.
    #[wasm_bindgen(constructor)]
    pub fn new(
        kind: &str,
        size: usize,
        viewport: u32,
        n_sup: usize,
        k: usize,
        interleaved: bool,
        seed: u32,
    ) -> Result<Demo, JsError> {
        let err = |e: String| JsError::new(&e);
        if !(8..=128).contains(&size) || !(8..=512).contains(&viewport) || n_sup == 0 || k == 0 {
            return Err(err("size 8..128, viewport 8..512, n_sup and k at least 1".into()));
        }
        let volume = synthetic(kind, size, seed as u64).map_err(err)?.build();
        let tf = transfer_function();
        let camera = default_camera(&volume, 40.0, (viewport, viewport), 1.2);
        let decomposition = if interleaved {
            make_interleaved_decomposition(volume.dims(), k, 4)
        } else {
            make_slab_decomposition(volume.dims(), k)
        }
        .map_err(|e| err(e.to_string()))?;
        let step = 0.5;
        let mut harness = Harness::with_schedule(k, Schedule::Sequential);
        let out = composite(&mut harness, &decomposition, &volume, &tf, &camera, GenParams::new(n_sup, step))
            .map_err(|e| err(e.to_string()))?;
        let file_bytes = vdi::vdi::format::encode_vdi(&Vdi::Dense(out.vdi.densify()), &out.meta, false)
            .map_err(|e| err(e.to_string()))?
            .len();
        let metrics = serde_json::to_string(&out.metrics).expect("metrics serialize");
        Ok(Demo { volume, tf, camera, vdi: out.vdi, step, metrics, file_bytes })
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.camera.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.camera.height
    }

    /// Run metrics (stage timings, per-PE bytes) as JSON.
    #[wasm_bindgen(getter)]
    pub fn metrics(&self) -> String {
        self.metrics.clone()
    }

    /// Size of the composited VDI in the uncompressed dense file format.
    #[wasm_bindgen(getter, js_name = fileBytes)]
    pub fn file_bytes(&self) -> usize {
        self.file_bytes
    }

    fn view(&self, deviation: f64) -> Camera {
        let center = content_bounds(&self.vdi, &self.camera).map_or(self.volume.bounds().center(), |b| b.center());
        self.camera.orbit(center, deviation)
    }

    fn vdi_image(&self, deviation: f64) -> Image {
        if deviation == 0.0 {
            render_original(&self.vdi)
        } else {
            render_novel(&self.vdi, &self.camera, &self.view(deviation), NovelParams::new(self.step * 0.5))
        }
    }

    fn dvr_image(&self, deviation: f64) -> Image {
        render_dvr(&self.volume, &self.tf, &self.view(deviation), DvrParams::exact(self.step))
    }

    /// RGBA8 pixels of the VDI seen `deviation` degrees off the generation view.
    pub fn render(&self, deviation: f64) -> Vec<u8> {
        self.vdi_image(deviation).to_rgba8(BACKGROUND)
    }

    /// RGBA8 pixels of the reference raycast at the same view.
    pub fn reference(&self, deviation: f64) -> Vec<u8> {
        self.dvr_image(deviation).to_rgba8(BACKGROUND)
    }

    /// SSIM between the VDI render and the reference raycast.
    pub fn ssim(&self, deviation: f64) -> f64 {
        ssim(&self.vdi_image(deviation), &self.dvr_image(deviation)).unwrap_or(f64::NAN)
    }
}
