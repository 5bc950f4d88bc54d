use vdi_web::Demo;

#[test]
fn zero_deviation_matches_reference() {
    let d = Demo::new("two_shell", 24, 24, 8, 3, true, 0).unwrap();
    assert_eq!(d.render(0.0).len(), 24 * 24 * 4);
    assert!(d.ssim(0.0) > 0.99);
    assert!(d.ssim(5.0) > 0.9);
    assert_ne!(d.render(0.0), d.render(10.0));
    let m: serde_json::Value = serde_json::from_str(&d.metrics()).unwrap();
    assert_eq!(m["k"], 3);
    assert!(d.file_bytes() > 0);
}

#[test]
fn reference_differs_from_blank() {
    let d = Demo::new("blobs", 16, 16, 4, 2, false, 9).unwrap();
    assert!(d.reference(0.0).chunks(4).any(|p| p[0] > 40));
}
