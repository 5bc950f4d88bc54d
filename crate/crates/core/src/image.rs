//! Float RGBA images, PNG output and a lossless float dump.

use std::io::{Read, Write};
use std::path::Path;

use crate::dvr::Rgba;

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("not a float image dump (bad magic)")]
    BadMagic,
    #[error("truncated float image dump")]
    Truncated,
    #[error("PNG decode: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("PNG encode: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error("unsupported PNG layout {0:?}")]
    UnsupportedPng(png::ColorType),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major premultiplied RGBA, one f32 per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Rgba>,
}

pub const FLOAT_DUMP_MAGIC: &[u8; 4] = b"VIMG";

impl Image {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, pixels: vec![[0.0; 4]; width as usize * height as usize] }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<Rgba>) -> Self {
        assert_eq!(pixels.len(), width as usize * height as usize);
        Self { width, height, pixels }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgba {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn check_same_size(&self, other: &Image) -> Result<(), ImageError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImageError::DimensionMismatch(self.width, self.height, other.width, other.height));
        }
        Ok(())
    }

    /// RGB after compositing over an opaque background.
    pub fn composited_rgb(&self, background: [f32; 3]) -> Vec<[f32; 3]> {
        self.pixels
            .iter()
            .map(|p| {
                let t = 1.0 - p[3];
                [p[0] + t * background[0], p[1] + t * background[1], p[2] + t * background[2]]
            })
            .collect()
    }

    /// Largest per-channel absolute difference.
    pub fn max_abs_diff(&self, other: &Image) -> Result<f32, ImageError> {
        self.check_same_size(other)?;
        Ok(self
            .pixels
            .iter()
            .zip(&other.pixels)
            .flat_map(|(a, b)| (0..4).map(move |c| (a[c] - b[c]).abs()))
            .fold(0.0, f32::max))
    }

    /// 8-bit RGBA bytes composited over `background` (alpha forced to 255).
    pub fn to_rgba8(&self, background: [f32; 3]) -> Vec<u8> {
        let to8 = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        self.composited_rgb(background).into_iter().flat_map(|c| [to8(c[0]), to8(c[1]), to8(c[2]), 255]).collect()
    }

    pub fn write_png(&self, path: impl AsRef<Path>, background: [f32; 3]) -> Result<(), ImageError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut enc = png::Encoder::new(file, self.width, self.height);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header()?;
        w.write_image_data(&self.to_rgba8(background))?;
        Ok(())
    }

    /// Reads an 8-bit RGB(A) PNG as an opaque image.
    pub fn read_png(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let dec = png::Decoder::new(std::io::BufReader::new(std::fs::File::open(path)?));
        let mut reader = dec.read_info()?;
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf)?;
        if info.bit_depth != png::BitDepth::Eight {
            return Err(ImageError::UnsupportedPng(info.color_type));
        }
        let stride = match info.color_type {
            png::ColorType::Rgb => 3,
            png::ColorType::Rgba => 4,
            other => return Err(ImageError::UnsupportedPng(other)),
        };
        let pixels = buf[..info.buffer_size()]
            .chunks_exact(stride)
            .map(|c| {
                let f = |v: u8| v as f32 / 255.0;
                [f(c[0]), f(c[1]), f(c[2]), 1.0]
            })
            .collect();
        Ok(Self::from_pixels(info.width, info.height, pixels))
    }

    /// Layout: magic `VIMG`, width u32, height u32, then RGBA f32 per pixel,
    /// row-major, all little-endian.
    pub fn write_float_dump(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(FLOAT_DUMP_MAGIC)?;
        w.write_all(&self.width.to_le_bytes())?;
        w.write_all(&self.height.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.pixels.len() * 16);
        for p in &self.pixels {
            for c in p {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
        w.write_all(&buf)
    }

    pub fn read_float_dump(mut r: impl Read) -> Result<Self, ImageError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 12 {
            return Err(if bytes.starts_with(FLOAT_DUMP_MAGIC) { ImageError::Truncated } else { ImageError::BadMagic });
        }
        if &bytes[..4] != FLOAT_DUMP_MAGIC {
            return Err(ImageError::BadMagic);
        }
        let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        let n = width as usize * height as usize;
        let body = &bytes[12..];
        if body.len() != n * 16 {
            return Err(ImageError::Truncated);
        }
        let pixels = body
            .chunks_exact(16)
            .map(|c| std::array::from_fn(|i| f32::from_le_bytes(c[i * 4..i * 4 + 4].try_into().unwrap())))
            .collect();
        Ok(Self::from_pixels(width, height, pixels))
    }

    pub fn save_float_dump(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_float_dump(&mut f)?;
        f.flush()?;
        Ok(())
    }

    /// Loads either a float dump or a PNG, by content.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let path = path.as_ref();
        let mut head = [0u8; 4];
        let n = std::fs::File::open(path)?.read(&mut head)?;
        if n == 4 && &head == FLOAT_DUMP_MAGIC {
            Self::read_float_dump(std::fs::File::open(path)?)
        } else {
            Self::read_png(path)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_dump_round_trip() {
        let img = Image::from_pixels(2, 1, vec![[0.1, 0.2, 0.3, 0.4], [1.0, 0.0, 0.5, 1.0]]);
        let mut buf = Vec::new();
        img.write_float_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 12 + 32);
        assert_eq!(Image::read_float_dump(&buf[..]).unwrap(), img);
        assert!(matches!(Image::read_float_dump(&buf[..20]), Err(ImageError::Truncated)));
        assert!(matches!(Image::read_float_dump(&b"XXXXXXXXXXXXXXXX"[..]), Err(ImageError::BadMagic)));
    }

    #[test]
    fn png_composites_over_background() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = Image::from_pixels(1, 1, vec![[0.5, 0.0, 0.0, 0.5]]);
        img.write_png(&p, [0.0, 0.0, 1.0]).unwrap();
        let back = Image::load(&p).unwrap();
        let px = back.get(0, 0);
        assert!((px[0] - 0.5).abs() < 2.0 / 255.0);
        assert!((px[2] - 0.5).abs() < 2.0 / 255.0);
    }
}
