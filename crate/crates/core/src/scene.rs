//! Scene description: one JSON document naming the volume, transfer
//! function, camera, decomposition and sampling parameters. Angles are in
//! degrees and distances in world units. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{Camera, CameraError};
use crate::decomposition::{
    make_interleaved_decomposition, make_slab_decomposition, DecompositionError, DomainDecomposition,
};
use crate::math::Vec3;
use crate::synth::Synthetic;
use crate::vdi::segment::DEFAULT_MAX_ITERS;
use crate::vdi::GenParams;
use crate::volume::{load_raw, ControlPoint, ScalarVolume, TransferFunction, VolumeError, VoxelFormat};

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("cannot read scene {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid scene JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VolumeSource {
    Synthetic(Synthetic),
    Raw(RawVolume),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVolume {
    /// Relative paths resolve against the scene file's directory.
    pub path: PathBuf,
    pub dims: [usize; 3],
    pub format: VoxelFormat,
    #[serde(default = "unit_spacing")]
    pub spacing: [f64; 3],
}

fn unit_spacing() -> [f64; 3] {
    [1.0; 3]
}

/// Either `target` or `forward` orients the camera; with neither it looks at
/// the volume centre. Without `position` it sits `distance` box diagonals in
/// front of the volume along -z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub position: Option<Vec3>,
    pub target: Option<Vec3>,
    pub forward: Option<Vec3>,
    #[serde(default = "default_up")]
    pub up: Vec3,
    #[serde(default = "default_vfov")]
    pub vfov: f64,
    pub viewport: [u32; 2],
    pub near: Option<f64>,
    pub far: Option<f64>,
    #[serde(default = "default_distance")]
    pub distance: f64,
}

fn default_up() -> Vec3 {
    Vec3::new(0.0, 1.0, 0.0)
}

fn default_vfov() -> f64 {
    40.0
}

fn default_distance() -> f64 {
    1.2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecompositionSpec {
    Slab { k: usize },
    Interleaved { k: usize, period: usize },
}

impl DecompositionSpec {
    pub fn k(&self) -> usize {
        match *self {
            DecompositionSpec::Slab { k } | DecompositionSpec::Interleaved { k, .. } => k,
        }
    }

    pub fn with_k(self, k: usize) -> Self {
        match self {
            DecompositionSpec::Slab { .. } => DecompositionSpec::Slab { k },
            DecompositionSpec::Interleaved { period, .. } => DecompositionSpec::Interleaved { k, period },
        }
    }

    pub fn build(&self, dims: [usize; 3]) -> Result<DomainDecomposition, DecompositionError> {
        match *self {
            DecompositionSpec::Slab { k } => make_slab_decomposition(dims, k),
            DecompositionSpec::Interleaved { k, period } => make_interleaved_decomposition(dims, k, period),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub step: f64,
    pub n_sup: usize,
    #[serde(default = "default_iters")]
    pub max_iters: u32,
}

fn default_iters() -> u32 {
    DEFAULT_MAX_ITERS
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self { step: 0.5, n_sup: 16, max_iters: DEFAULT_MAX_ITERS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub volume: VolumeSource,
    pub transfer_function: Vec<ControlPoint>,
    pub camera: CameraSpec,
    #[serde(default)]
    pub decomposition: Option<DecompositionSpec>,
    #[serde(default)]
    pub sampling: SamplingSpec,
}

/// A validated scene with its volume in memory.
pub struct Scene {
    pub spec: SceneSpec,
    pub volume: ScalarVolume,
    pub tf: TransferFunction,
    pub camera: Camera,
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(&self, base_dir: &Path) -> Result<Scene, SceneError> {
        let s = &self.sampling;
        if !(s.step > 0.0 && s.step.is_finite()) {
            return Err(SceneError::Invalid(format!("sampling.step must be positive, got {}", s.step)));
        }
        if s.n_sup == 0 {
            return Err(SceneError::Invalid("sampling.n_sup must be at least 1".into()));
        }
        let volume = match &self.volume {
            VolumeSource::Synthetic(syn) => {
                if syn.size() < 2 {
                    return Err(SceneError::Invalid("synthetic size must be at least 2".into()));
                }
                syn.build()
            }
            VolumeSource::Raw(r) => {
                let path = if r.path.is_absolute() { r.path.clone() } else { base_dir.join(&r.path) };
                let [sx, sy, sz] = r.spacing;
                load_raw(path, r.dims, r.format, Vec3::new(sx, sy, sz))?
            }
        };
        let tf = TransferFunction::new(self.transfer_function.clone())?;
        let camera = self.build_camera(&volume)?;
        if let Some(d) = &self.decomposition {
            d.build(volume.dims())?;
        }
        Ok(Scene { spec: self.clone(), volume, tf, camera })
    }

    fn build_camera(&self, vol: &ScalarVolume) -> Result<Camera, SceneError> {
        let c = &self.camera;
        let [w, h] = c.viewport;
        let bounds = vol.bounds();
        let center = bounds.center();
        let position =
            c.position.unwrap_or_else(|| center - Vec3::new(0.0, 0.0, c.distance * (bounds.max - bounds.min).length()));
        let target = match (c.target, c.forward) {
            (Some(_), Some(_)) => return Err(SceneError::Invalid("camera takes target or forward, not both".into())),
            (Some(t), None) => t,
            (None, Some(f)) => position + f,
            (None, None) => center,
        };
        if (target - position).length() == 0.0 {
            return Err(SceneError::Invalid("camera target coincides with its position".into()));
        }
        let mut cam = Camera::look_at(position, target, c.up, c.vfov, (w, h));
        if cam.right().length().is_nan() || (target - position).normalized().cross(c.up).length() < 1e-9 {
            return Err(SceneError::Invalid("camera up is parallel to the view direction".into()));
        }
        // keep the whole volume inside near/far unless overridden
        let span = (bounds.max - bounds.min).length();
        let to_center = (center - position).length();
        cam.near = c.near.unwrap_or(((to_center - span) * 0.5).max(1e-3 * span));
        cam.far = c.far.unwrap_or(to_center + 2.0 * span);
        cam.validate()?;
        Ok(cam)
    }
}

impl Scene {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| SceneError::Io { path: path.display().to_string(), source })?;
        let spec = SceneSpec::from_json(&text)?;
        spec.load(path.parent().unwrap_or(Path::new(".")))
    }

    pub fn gen_params(&self) -> GenParams {
        let s = self.spec.sampling;
        GenParams { n_sup: s.n_sup, step: s.step, max_iters: s.max_iters }
    }

    /// The scene's decomposition, with `k` overriding its PE count. Without
    /// one in the scene, slabs are used.
    pub fn decomposition(&self, k: Option<usize>) -> Result<DomainDecomposition, SceneError> {
        let spec = self.spec.decomposition.unwrap_or(DecompositionSpec::Slab { k: 1 });
        let spec = k.map_or(spec, |k| spec.with_k(k));
        Ok(spec.build(self.volume.dims())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENE: &str = r#"{
        "volume": {"synthetic": {"kind": "two_shell", "size": 16}},
        "transfer_function": [
            {"scalar": 0.0, "color": [1, 1, 1], "opacity": 0.0},
            {"scalar": 1.0, "color": [1, 0.5, 0.2], "opacity": 0.6}
        ],
        "camera": {"viewport": [24, 16]},
        "decomposition": {"kind": "interleaved", "k": 3, "period": 2},
        "sampling": {"step": 0.5, "n_sup": 8}
    }"#;

    #[test]
    fn minimal_scene_loads() {
        let scene = SceneSpec::from_json(SCENE).unwrap().load(Path::new(".")).unwrap();
        assert_eq!((scene.camera.width, scene.camera.height), (24, 16));
        assert_eq!(scene.decomposition(None).unwrap().pe_count(), 3);
        assert_eq!(scene.decomposition(Some(4)).unwrap().pe_count(), 4);
        assert_eq!(scene.gen_params().max_iters, DEFAULT_MAX_ITERS);
        // the whole volume sits between the clip planes
        let b = scene.volume.bounds();
        for corner in [b.min, b.max] {
            let (_, _, d) = scene.camera.project(corner).unwrap_or((0.0, 0.0, scene.camera.near + 1.0));
            assert!(d > scene.camera.near && d < scene.camera.far);
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SCENE.replace("\"viewport\"", "\"zoom\": 2, \"viewport\"");
        assert!(matches!(SceneSpec::from_json(&bad), Err(SceneError::Json(_))));
        let bad = SCENE.replace("\"n_sup\": 8", "\"n_sup\": 8, \"gamma\": 0.1");
        assert!(SceneSpec::from_json(&bad).is_err());
    }

    #[test]
    fn validation_errors() {
        let bad = SCENE.replace("\"n_sup\": 8", "\"n_sup\": 0");
        assert!(matches!(SceneSpec::from_json(&bad).unwrap().load(Path::new(".")), Err(SceneError::Invalid(_))));
        let bad = SCENE
            .replace("\"viewport\": [24, 16]", "\"viewport\": [24, 16], \"target\": [0,0,0], \"forward\": [0,0,1]");
        assert!(SceneSpec::from_json(&bad).unwrap().load(Path::new(".")).is_err());
        let bad = SCENE.replace("\"period\": 2", "\"period\": 40");
        assert!(matches!(SceneSpec::from_json(&bad).unwrap().load(Path::new(".")), Err(SceneError::Decomposition(_))));
    }

    #[test]
    fn raw_volume_relative_to_scene() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("v.raw"), vec![7u8; 4 * 4 * 4]).unwrap();
        let text = SCENE
            .replace(
                r#"{"synthetic": {"kind": "two_shell", "size": 16}}"#,
                r#"{"raw": {"path": "v.raw", "dims": [4, 4, 4], "format": "u8"}}"#,
            )
            .replace("\"period\": 2", "\"period\": 1");
        std::fs::write(dir.path().join("scene.json"), text).unwrap();
        let scene = Scene::from_file(dir.path().join("scene.json")).unwrap();
        assert_eq!(scene.volume.dims(), [4; 3]);
    }
}
