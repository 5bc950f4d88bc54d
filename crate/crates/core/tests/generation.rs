use rand::{Rng, SeedableRng};
use vdi::render::render_original;
use vdi::synth::{self, default_camera};
use vdi::vdi::format::{decode_vdi, encode_vdi, read_vdi, write_vdi};
use vdi::vdi::{generate_dense, generate_full, GenParams, RayDomain};
use vdi::volume::ControlPoint;
use vdi::{render_dvr, DvrParams, TransferFunction, Vdi};

fn random_tf(rng: &mut impl Rng) -> TransferFunction {
    let mid = rng.random_range(0.2..0.8);
    let c = |rng: &mut dyn rand::RngCore| [rng.random(), rng.random(), rng.random()];
    TransferFunction::new(vec![
        ControlPoint { scalar: 0.0, color: c(rng), opacity: 0.0 },
        ControlPoint { scalar: mid, color: c(rng), opacity: rng.random_range(0.0..1.0) },
        ControlPoint { scalar: 1.0, color: c(rng), opacity: rng.random_range(0.0..1.0) },
    ])
    .unwrap()
}

#[test]
fn exact_view_for_any_budget() {
    let tf = TransferFunction::ramp([0.8, 0.7, 0.2], 0.4);
    for vol in [synth::two_shell(24), synth::gradient(24, 0), synth::blobs(24, 6, 1)] {
        let cam = default_camera(&vol, 40.0, (24, 24), 1.2);
        let reference = render_dvr(&vol, &tf, &cam, DvrParams::exact(0.5));
        for n_sup in [1, 4, 32] {
            let (full, _) = generate_full(&vol, &tf, &cam, GenParams::new(n_sup, 0.5));
            let d = render_original(&full).max_abs_diff(&reference).unwrap();
            assert!(d <= 1e-4, "n_sup {n_sup}: {d}");
        }
    }
}

#[test]
fn dense_inflates_to_full_and_files_round_trip() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let dir = tempfile::tempdir().unwrap();
    for i in 0..6 {
        let vol = synth::blobs(rng.random_range(8..20), rng.random_range(1..6), rng.random());
        let tf = random_tf(&mut rng);
        let cam =
            default_camera(&vol, rng.random_range(20.0..60.0), (rng.random_range(4..20), rng.random_range(4..20)), 1.2);
        let params = GenParams::new(rng.random_range(1..10), rng.random_range(0.3..1.2));
        let (full, meta) = generate_full(&vol, &tf, &cam, params);
        let (dense, meta_d) = generate_dense(&vol, &tf, &cam, params, RayDomain::Full);
        assert_eq!(dense.inflate().unwrap(), full);
        assert_eq!(meta, meta_d);
        for (vdi, compress) in [(Vdi::Full(full.clone()), false), (Vdi::Dense(dense.clone()), true)] {
            let path = dir.path().join(format!("{i}-{compress}.vdi"));
            write_vdi(&vdi, &meta, &path, compress).unwrap();
            let (back, back_meta) = read_vdi(&path).unwrap();
            assert_eq!(back, vdi);
            assert_eq!(back_meta, meta);
            let bytes = std::fs::read(&path).unwrap();
            assert_eq!(encode_vdi(&back, &back_meta, compress).unwrap(), bytes);
        }
    }
}

#[test]
fn corrupt_files_are_rejected() {
    let vol = synth::two_shell(8);
    let tf = TransferFunction::ramp([1.0; 3], 0.5);
    let cam = default_camera(&vol, 40.0, (6, 6), 1.2);
    let (full, meta) = generate_full(&vol, &tf, &cam, GenParams::new(4, 0.5));
    let mut bytes = encode_vdi(&Vdi::Full(full), &meta, false).unwrap();
    assert!(decode_vdi(&bytes[..bytes.len() / 2]).is_err());
    let n = bytes.len();
    bytes[n - 10] ^= 0xff;
    assert!(decode_vdi(&bytes).is_err());
    bytes[0] = b'X';
    assert!(decode_vdi(&bytes).is_err());
}
