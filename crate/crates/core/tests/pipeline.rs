use vdi::camera::Camera;
use vdi::decomposition::{make_interleaved_decomposition, make_slab_decomposition};
use vdi::distributed::{composite, composite_image_limit_case, Harness, Schedule};
use vdi::metrics::ssim;
use vdi::render::{content_bounds, render_novel, render_original, NovelParams};
use vdi::synth::{self, default_camera};
use vdi::vdi::{generate_full, GenParams};
use vdi::{render_dvr, DvrParams, ScalarVolume, TransferFunction};

fn tf() -> TransferFunction {
    TransferFunction::ramp([0.9, 0.6, 0.3], 0.5)
}

fn camera(vol: &ScalarVolume, n: u32) -> Camera {
    let mut c = default_camera(vol, 40.0, (n, n), 1.2);
    let d = (c.position - vol.bounds().center()).length();
    c.near = d * 0.2;
    c.far = d * 3.0;
    c
}

fn max_diff(a: &vdi::Image, b: &vdi::Image) -> f32 {
    a.max_abs_diff(b).unwrap()
}

#[test]
fn one_pe_equals_single_domain_generation() {
    let vol = synth::blobs(24, 5, 11);
    let cam = camera(&vol, 24);
    let params = GenParams::new(8, 0.5);
    let dec = make_slab_decomposition(vol.dims(), 1).unwrap();
    let out = composite(&mut Harness::new(1), &dec, &vol, &tf(), &cam, params).unwrap();
    let (full, meta) = generate_full(&vol, &tf(), &cam, params);
    assert_eq!(out.vdi, full);
    assert_eq!(out.meta, meta);
}

#[test]
fn no_reduction_is_invariant_in_k() {
    let vol = synth::sparse(32, 0.15);
    let cam = camera(&vol, 32);
    let params = GenParams::new(64, 0.5);
    let mut images = Vec::new();
    for k in [1, 2, 4, 8] {
        let dec = make_slab_decomposition(vol.dims(), k).unwrap();
        let out = composite(&mut Harness::new(k), &dec, &vol, &tf(), &cam, params).unwrap();
        images.push(render_original(&out.vdi));
    }
    for img in &images[1..] {
        assert!(max_diff(&images[0], img) <= 1e-5);
    }
}

#[test]
fn limit_case_matches_raycaster_on_interleaved_domains() {
    let vol = synth::two_shell(32);
    let cam = camera(&vol, 32);
    let reference = render_dvr(&vol, &tf(), &cam, DvrParams::exact(0.5));
    for k in [2, 3] {
        let dec = make_interleaved_decomposition(vol.dims(), k, 3).unwrap();
        let (img, metrics) = composite_image_limit_case(&mut Harness::new(k), &dec, &vol, &tf(), &cam, 0.5).unwrap();
        let d = max_diff(&img, &reference);
        assert!(d <= 1e-4, "k={k}: {d}");
        assert_eq!(metrics.k, k);
    }
}

#[test]
fn composite_on_interleaved_domains_is_close_to_raycaster() {
    let vol = synth::two_shell(32);
    let cam = camera(&vol, 32);
    let reference = render_dvr(&vol, &tf(), &cam, DvrParams::exact(0.5));
    for k in [2, 3] {
        let dec = make_interleaved_decomposition(vol.dims(), k, 3).unwrap();
        let out = composite(&mut Harness::new(k), &dec, &vol, &tf(), &cam, GenParams::new(16, 0.5)).unwrap();
        let s = ssim(&render_original(&out.vdi), &reference).unwrap();
        assert!(s >= 0.99, "k={k}: {s}");
    }
}

#[test]
fn reduction_keeps_structure() {
    let vol = synth::blobs(32, 8, 5);
    let cam = camera(&vol, 48);
    let params = GenParams::new(8, 0.5);
    let one =
        composite(&mut Harness::new(1), &make_slab_decomposition(vol.dims(), 1).unwrap(), &vol, &tf(), &cam, params)
            .unwrap();
    let many =
        composite(&mut Harness::new(8), &make_slab_decomposition(vol.dims(), 8).unwrap(), &vol, &tf(), &cam, params)
            .unwrap();
    let reduced: usize = many.metrics.per_pe.iter().map(|p| p.reduced_lists).sum();
    assert!(reduced > 0, "scene must force recompositing");
    let s0 = ssim(&render_original(&one.vdi), &render_original(&many.vdi)).unwrap();
    let center = content_bounds(&one.vdi, &cam).unwrap().center();
    let view = cam.orbit(center, 5.0);
    let np = NovelParams::new(0.25);
    let s5 = ssim(&render_novel(&one.vdi, &cam, &view, np), &render_novel(&many.vdi, &cam, &view, np)).unwrap();
    eprintln!("ssim 0deg {s0:.4} 5deg {s5:.4} reduced {reduced}");
    assert!(s0 >= 0.95 && s5 >= 0.95);
}

#[test]
fn dense_exchange_scales_better_than_full() {
    let vol = synth::sparse(32, 0.3);
    let cam = camera(&vol, 32);
    let mut ratios = Vec::new();
    for k in [1, 2, 4, 8] {
        let dec = make_slab_decomposition(vol.dims(), k).unwrap();
        let out = composite(&mut Harness::new(k), &dec, &vol, &tf(), &cam, GenParams::new(16, 0.5)).unwrap();
        let ex = &out.metrics.exchange;
        assert!(ex.dense_bytes < ex.full_bound_bytes);
        let sent: u64 = out.metrics.per_pe.iter().map(|p| p.sent_bytes).sum();
        assert_eq!(sent, ex.dense_bytes);
        ratios.push(ex.ratio);
    }
    eprintln!("ratios {ratios:?}");
    assert!(ratios[3] < ratios[1]);
}

#[test]
fn schedule_does_not_change_the_result() {
    let vol = synth::blobs(24, 6, 2);
    let cam = camera(&vol, 24);
    let dec = make_interleaved_decomposition(vol.dims(), 4, 2).unwrap();
    let params = GenParams::new(6, 0.5);
    let a = composite(&mut Harness::with_schedule(4, Schedule::Threads), &dec, &vol, &tf(), &cam, params).unwrap();
    for seed in 0..3 {
        let b = composite(&mut Harness::with_schedule(4, Schedule::Shuffled(seed)), &dec, &vol, &tf(), &cam, params)
            .unwrap();
        assert_eq!(a.vdi, b.vdi);
        assert_eq!(a.metrics.exchange, b.metrics.exchange);
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let vol = synth::sparse(16, 0.3);
    let cam = camera(&vol, 8);
    let dec = make_slab_decomposition(vol.dims(), 2).unwrap();
    assert!(composite(&mut Harness::new(3), &dec, &vol, &tf(), &cam, GenParams::new(4, 0.5)).is_err());
    let other = make_slab_decomposition([16, 16, 8], 2).unwrap();
    assert!(composite(&mut Harness::new(2), &other, &vol, &tf(), &cam, GenParams::new(4, 0.5)).is_err());
}
