//! Image similarity: windowed SSIM on luminance and PSNR on RGB, both after
//! compositing over black.

use crate::image::{Image, ImageError};

pub const SSIM_WINDOW: u32 = 8;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn luminance(img: &Image) -> Vec<f64> {
    img.composited_rgb([0.0; 3])
        .into_iter()
        .map(|c| 0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64)
        .collect()
}

/// Per-window SSIM values on the non-overlapping 8x8 grid (row-major), plus
/// the grid size. Images smaller than a window use one window covering the
/// whole image; partial windows at the right and bottom edges are skipped.
pub fn ssim_windows(a: &Image, b: &Image) -> Result<(Vec<f64>, u32, u32), ImageError> {
    a.check_same_size(b)?;
    let (w, h) = (a.width, a.height);
    let (ya, yb) = (luminance(a), luminance(b));
    let (win_w, cols) = if w < SSIM_WINDOW { (w, 1) } else { (SSIM_WINDOW, w / SSIM_WINDOW) };
    let (win_h, rows) = if h < SSIM_WINDOW { (h, 1) } else { (SSIM_WINDOW, h / SSIM_WINDOW) };
    let c1 = K1 * K1;
    let c2 = K2 * K2;
    let mut out = Vec::with_capacity((rows * cols) as usize);
    for wy in 0..rows {
        for wx in 0..cols {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in wy * win_h..(wy + 1) * win_h {
                for x in wx * win_w..(wx + 1) * win_w {
                    let i = (y * w + x) as usize;
                    let (p, q) = (ya[i], yb[i]);
                    sa += p;
                    sb += q;
                    saa += p * p;
                    sbb += q * q;
                    sab += p * q;
                }
            }
            let n = (win_w * win_h) as f64;
            let (ma, mb) = (sa / n, sb / n);
            // sample (n - 1) covariance
            let norm = if n > 1.0 { n - 1.0 } else { 1.0 };
            let va = (saa - n * ma * ma) / norm;
            let vb = (sbb - n * mb * mb) / norm;
            let cov = (sab - n * ma * mb) / norm;
            out.push(((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)));
        }
    }
    Ok((out, cols, rows))
}

/// Mean windowed SSIM in [-1, 1].
pub fn ssim(a: &Image, b: &Image) -> Result<f64, ImageError> {
    let (v, _, _) = ssim_windows(a, b)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// PSNR in dB with peak 1.0; identical images give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64, ImageError> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / m).log10() })
}

pub fn mse(a: &Image, b: &Image) -> Result<f64, ImageError> {
    a.check_same_size(b)?;
    let (ca, cb) = (a.composited_rgb([0.0; 3]), b.composited_rgb([0.0; 3]));
    let sum: f64 = ca.iter().zip(&cb).flat_map(|(p, q)| (0..3).map(move |c| (p[c] as f64 - q[c] as f64).powi(2))).sum();
    Ok(sum / (ca.len() * 3) as f64)
}

/// Grey image, brighter where SSIM is lower; one block per SSIM window.
pub fn ssim_difference_image(a: &Image, b: &Image) -> Result<Image, ImageError> {
    let (v, cols, rows) = ssim_windows(a, b)?;
    let (bw, bh) = ((a.width / cols).max(1), (a.height / rows).max(1));
    let mut img = Image::new(a.width, a.height);
    for y in 0..a.height {
        for x in 0..a.width {
            let (cx, cy) = ((x / bw).min(cols - 1), (y / bh).min(rows - 1));
            let d = ((1.0 - v[(cy * cols + cx) as usize]) / 2.0).clamp(0.0, 1.0) as f32;
            img.pixels[(y * a.width + x) as usize] = [d, d, d, 1.0];
        }
    }
    Ok(img)
}
