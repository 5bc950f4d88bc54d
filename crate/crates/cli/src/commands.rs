use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use vdi::distributed::{composite, Harness, Schedule};
use vdi::image::Image;
use vdi::math::Vec3;
use vdi::metrics::{mse, psnr, ssim, ssim_difference_image};
use vdi::render::{content_bounds, render_novel, render_original, NovelParams};
use vdi::scene::{Scene, SceneSpec};
use vdi::vdi::format::{decode_header, decode_vdi, write_vdi, VdiHeader};
use vdi::vdi::{generate_dense, generate_full, RayDomain, VdiFull, SUPERSEGMENT_BYTES};
use vdi::{render_dvr, Camera, DvrParams, Vdi};

use crate::args::{
    CompareArgs, DvrArgs, GenerateArgs, InspectArgs, OutputRepr, RenderArgs, SamplingOverrides, ScheduleArg,
    SimulateArgs, ViewArgs,
};
use crate::{io_err, CliError};

pub fn load_scene(path: &Path, overrides: &SamplingOverrides) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut spec = SceneSpec::from_json(&text)?;
    if let Some(n) = overrides.n_sup {
        spec.sampling.n_sup = n;
    }
    if let Some(s) = overrides.step {
        spec.sampling.step = s;
    }
    Ok(spec.load(path.parent().unwrap_or(Path::new(".")))?)
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// Counts and payload sizes of both representations.
pub fn vdi_summary(counts: &[u32], n_sup: usize) -> Value {
    let lists = counts.len();
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    let dense = 4 * lists as u64 + SUPERSEGMENT_BYTES as u64 * total;
    let full = (lists * n_sup * SUPERSEGMENT_BYTES) as u64;
    json!({
        "lists": lists,
        "supersegments": total,
        "nonempty_lists": counts.iter().filter(|&&c| c > 0).count(),
        "max_list": counts.iter().copied().max().unwrap_or(0),
        "dense_payload_bytes": dense,
        "full_payload_bytes": full,
        "dense_full_ratio": dense as f64 / full as f64,
    })
}

fn write_output(full: VdiFull, meta: &vdi::VdiMeta, repr: &OutputRepr, out: &Path) -> Result<Value, CliError> {
    let counts = full.counts();
    let vdi = if repr.full { Vdi::Full(full) } else { Vdi::Dense(full.densify()) };
    write_vdi(&vdi, meta, out, repr.compress)?;
    let bytes = std::fs::metadata(out).map_err(io_err(out))?.len();
    let mut summary = vdi_summary(&counts, meta.n_sup);
    summary["file"] = json!(out);
    summary["file_bytes"] = json!(bytes);
    summary["representation"] = json!(if repr.full { "full" } else { "dense" });
    summary["compressed"] = json!(repr.compress);
    Ok(summary)
}

pub fn generate(a: &GenerateArgs) -> Result<Value, CliError> {
    let scene = load_scene(&a.scene, &a.sampling)?;
    let params = scene.gen_params();
    let (full, meta) = if a.repr.full {
        generate_full(&scene.volume, &scene.tf, &scene.camera, params)
    } else {
        let (dense, meta) = generate_dense(&scene.volume, &scene.tf, &scene.camera, params, RayDomain::Full);
        (dense.inflate()?, meta)
    };
    write_output(full, &meta, &a.repr, &a.out)
}

pub fn simulate(a: &SimulateArgs) -> Result<Value, CliError> {
    let scene = load_scene(&a.scene, &a.sampling)?;
    let decomposition = scene.decomposition(a.k)?;
    let k = decomposition.pe_count();
    let schedule = match a.schedule {
        ScheduleArg::Threads => Schedule::Threads,
        ScheduleArg::Sequential => Schedule::Sequential,
        ScheduleArg::Shuffled => Schedule::Shuffled(a.seed),
    };
    let mut harness = Harness::with_schedule(k, schedule);
    let out = composite(&mut harness, &decomposition, &scene.volume, &scene.tf, &scene.camera, scene.gen_params())?;
    let metrics = serde_json::to_value(&out.metrics).expect("metrics serialize");
    if let Some(p) = &a.metrics {
        write_json(p, &metrics)?;
    }
    let mut summary = write_output(out.vdi, &out.meta, &a.repr, &a.out)?;
    summary["k"] = json!(k);
    summary["metrics"] = metrics;
    Ok(summary)
}

fn angle_label(deg: f64) -> String {
    format!("{deg}").replace('-', "m")
}

fn write_views(view: &ViewArgs, images: Vec<(f64, Image)>) -> Result<Value, CliError> {
    let bg: [f32; 3] =
        view.background.clone().try_into().map_err(|_| CliError::Invalid("background takes r,g,b".into()))?;
    let mut files = Vec::new();
    for (deg, img) in images {
        let stem = format!("{}_{}deg", view.out.display(), angle_label(deg));
        let png = PathBuf::from(format!("{stem}.png"));
        let dump = PathBuf::from(format!("{stem}.vimg"));
        if let Some(dir) = png.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        img.write_png(&png, bg)?;
        img.save_float_dump(&dump)?;
        files.push(json!({ "deviation_deg": deg, "png": png, "float_dump": dump }));
    }
    Ok(json!({ "images": files }))
}

fn orbit_center(full: &VdiFull, camera: &Camera) -> Vec3 {
    content_bounds(full, camera).map_or(camera.position + camera.forward, |b| b.center())
}

fn check_angles(view: &ViewArgs) -> Result<(), CliError> {
    match view.deviation.iter().find(|d| !d.is_finite()) {
        Some(d) => Err(CliError::Invalid(format!("deviation must be finite, got {d}"))),
        None => Ok(()),
    }
}

pub fn render(a: &RenderArgs) -> Result<Value, CliError> {
    check_angles(&a.view)?;
    let bytes = std::fs::read(&a.vdi).map_err(io_err(&a.vdi))?;
    let (vdi, meta) = decode_vdi(&bytes)?;
    let full = vdi.to_full()?;
    let march = a.march_step.unwrap_or(meta.step);
    if march.is_nan() || march <= 0.0 {
        return Err(CliError::Invalid(format!("march step must be positive, got {march}")));
    }
    let center = orbit_center(&full, &meta.camera);
    let images = a
        .view
        .deviation
        .iter()
        .map(|&deg| {
            let img = if deg == 0.0 {
                render_original(&full)
            } else {
                render_novel(&full, &meta.camera, &meta.camera.orbit(center, deg), NovelParams::new(march))
            };
            (deg, img)
        })
        .collect();
    let mut summary = write_views(&a.view, images)?;
    summary["orbit_center"] = json!(center);
    Ok(summary)
}

pub fn dvr(a: &DvrArgs) -> Result<Value, CliError> {
    check_angles(&a.view)?;
    let scene = load_scene(&a.scene, &a.sampling)?;
    let (camera, center) = match &a.vdi {
        Some(p) => {
            let (vdi, meta) = decode_vdi(&std::fs::read(p).map_err(io_err(p))?)?;
            if meta.volume_digest != scene.volume.digest() || meta.tf_digest != scene.tf.digest() {
                log::warn!("{} was generated from a different volume or transfer function", p.display());
            }
            (meta.camera, orbit_center(&vdi.to_full()?, &meta.camera))
        }
        None => (scene.camera, scene.volume.bounds().center()),
    };
    let params = DvrParams { step: scene.gen_params().step, early_termination: a.early_termination };
    let images = a
        .view
        .deviation
        .iter()
        .map(|&deg| {
            let view = if deg == 0.0 { camera } else { camera.orbit(center, deg) };
            (deg, render_dvr(&scene.volume, &scene.tf, &view, params))
        })
        .collect();
    let mut summary = write_views(&a.view, images)?;
    summary["orbit_center"] = json!(center);
    Ok(summary)
}

/// `inf` for identical images, since JSON has no infinity.
fn finite_or_inf(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

pub fn compare(a: &CompareArgs) -> Result<Value, CliError> {
    let ia = Image::load(&a.a)?;
    let ib = Image::load(&a.b)?;
    let report = json!({
        "a": a.a,
        "b": a.b,
        "width": ia.width,
        "height": ia.height,
        "ssim": ssim(&ia, &ib)?,
        "psnr_db": finite_or_inf(psnr(&ia, &ib)?),
        "mse": mse(&ia, &ib)?,
        "max_abs_diff": ia.max_abs_diff(&ib)?,
    });
    if let Some(p) = &a.diff {
        ssim_difference_image(&ia, &ib)?.write_png(p, [0.0; 3])?;
    }
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    Ok(report)
}

/// Header fields as served to viewers.
pub fn meta_json(h: &VdiHeader, file_bytes: usize) -> Value {
    let c = &h.meta.camera;
    json!({
        "version": h.version,
        "representation": if h.dense { "dense" } else { "full" },
        "compressed": h.compressed,
        "width": h.width,
        "height": h.height,
        "n_sup": h.n_sup,
        "step": h.meta.step,
        "camera": {
            "position": c.position,
            "forward": c.forward,
            "up": c.up,
            "vfov": c.vfov,
            "near": c.near,
            "far": c.far,
        },
        "tf_digest": hex::encode(h.meta.tf_digest),
        "volume_digest": hex::encode(h.meta.volume_digest),
        "body_bytes": h.body_len,
        "file_bytes": file_bytes,
    })
}

pub fn inspect(a: &InspectArgs) -> Result<Value, CliError> {
    let bytes = std::fs::read(&a.vdi).map_err(io_err(&a.vdi))?;
    let header = decode_header(&bytes)?;
    let (vdi, _) = decode_vdi(&bytes)?;
    let mut out = meta_json(&header, bytes.len());
    out["lists"] = vdi_summary(&vdi.counts(), header.n_sup);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(angle_label(5.0), "5");
        assert_eq!(angle_label(-2.5), "m2.5");
    }

    #[test]
    fn summary_ratio() {
        let s = vdi_summary(&[0, 2, 1, 0], 4);
        assert_eq!(s["supersegments"], 3);
        assert_eq!(s["dense_payload_bytes"], 16 + 72);
        assert_eq!(s["full_payload_bytes"], 4 * 4 * 24);
        assert_eq!(finite_or_inf(f64::INFINITY), json!("inf"));
    }
}
