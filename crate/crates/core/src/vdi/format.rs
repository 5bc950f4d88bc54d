//! VDI file format, little-endian throughout:
//!
//! ```text
//! "VDI1"                      magic
//! u16 version (1), u8 representation (0 full, 1 dense), u8 flags (bit 0: LZ4 body)
//! u32 width, u32 height, u32 n_sup
//! f64 step
//! camera: f64x3 position, f64x3 forward, f64x3 up, f64 vfov, f64 near, f64 far
//! [u8; 32] transfer-function digest, [u8; 32] volume digest
//! u64 stored body length
//! body: dense = u32 count per list, then supersegments; full = every slot
//!       supersegment = f32 t_front, f32 t_back, f32 r, g, b, a
//!       (LZ4 frame format when flagged)
//! u32 CRC32 of everything above
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::camera::Camera;
use crate::math::Vec3;

use super::repr::{ReprError, VdiDense, VdiFull};
use super::segment::Supersegment;
use super::{Vdi, VdiMeta, SUPERSEGMENT_BYTES};

pub const MAGIC: &[u8; 4] = b"VDI1";
pub const VERSION: u16 = 1;
const FLAG_LZ4: u8 = 1;
/// Bytes before the body.
pub const HEADER_BYTES: usize = 4 + 4 + 12 + 8 + 96 + 64 + 8;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("not a VDI file (bad magic)")]
    BadMagic,
    #[error("unsupported VDI version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown representation tag {0}")]
    BadRepresentation(u8),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("file truncated")]
    Truncated,
    #[error("corrupt body: {0}")]
    Corrupt(#[from] ReprError),
    #[error("LZ4 frame: {0}")]
    Lz4(#[from] lz4_flex::frame::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Header fields, readable without decoding the body.
#[derive(Clone, Debug, PartialEq)]
pub struct VdiHeader {
    pub version: u16,
    pub dense: bool,
    pub compressed: bool,
    pub width: u32,
    pub height: u32,
    pub n_sup: usize,
    pub meta: VdiMeta,
    pub body_len: u64,
}

fn put_seg(buf: &mut Vec<u8>, s: &Supersegment) {
    buf.extend_from_slice(&s.t_front.to_le_bytes());
    buf.extend_from_slice(&s.t_back.to_le_bytes());
    for c in s.rgba {
        buf.extend_from_slice(&c.to_le_bytes());
    }
}

pub(crate) fn encode_supersegments(buf: &mut Vec<u8>, segs: &[Supersegment]) {
    buf.reserve(segs.len() * SUPERSEGMENT_BYTES);
    for s in segs {
        put_seg(buf, s);
    }
}

pub(crate) fn decode_supersegments(bytes: &[u8]) -> Vec<Supersegment> {
    bytes
        .chunks_exact(SUPERSEGMENT_BYTES)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes(c[i * 4..i * 4 + 4].try_into().unwrap());
            Supersegment { t_front: f(0), t_back: f(1), rgba: [f(2), f(3), f(4), f(5)] }
        })
        .collect()
}

/// Serializes a VDI with its metadata.
pub fn encode_vdi(vdi: &Vdi, meta: &VdiMeta, compress: bool) -> Result<Vec<u8>, FormatError> {
    let (tag, width, height, n_sup) = match vdi {
        Vdi::Full(f) => (0u8, f.width, f.height, f.n_sup),
        Vdi::Dense(d) => (1u8, d.width, d.height, d.n_sup),
    };
    let mut body = Vec::new();
    match vdi {
        Vdi::Full(f) => encode_supersegments(&mut body, &f.grid),
        Vdi::Dense(d) => {
            for c in &d.counts {
                body.extend_from_slice(&c.to_le_bytes());
            }
            encode_supersegments(&mut body, &d.payload);
        }
    }
    if compress {
        let mut enc = lz4_flex::frame::FrameEncoder::new(Vec::new());
        enc.write_all(&body)?;
        body = enc.finish()?;
    }
    let mut out = Vec::with_capacity(HEADER_BYTES + body.len() + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(tag);
    out.push(if compress { FLAG_LZ4 } else { 0 });
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    out.extend_from_slice(&(n_sup as u32).to_le_bytes());
    out.extend_from_slice(&meta.step.to_le_bytes());
    let cam = &meta.camera;
    for v in [cam.position, cam.forward, cam.up] {
        for c in v.to_array() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for v in [cam.vfov, cam.near, cam.far] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&meta.tf_digest);
    out.extend_from_slice(&meta.volume_digest);
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let s = self.bytes.get(self.pos..self.pos + n).ok_or(FormatError::Truncated)?;
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn vec3(&mut self) -> Result<Vec3, FormatError> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }
    fn digest(&mut self) -> Result<[u8; 32], FormatError> {
        Ok(self.take(32)?.try_into().unwrap())
    }
}

fn parse_header(c: &mut Cursor<'_>) -> Result<VdiHeader, FormatError> {
    if c.take(4)? != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = c.u16()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let tag = c.u8()?;
    if tag > 1 {
        return Err(FormatError::BadRepresentation(tag));
    }
    let flags = c.u8()?;
    let (width, height, n_sup) = (c.u32()?, c.u32()?, c.u32()? as usize);
    let step = c.f64()?;
    let (position, forward, up) = (c.vec3()?, c.vec3()?, c.vec3()?);
    let (vfov, near, far) = (c.f64()?, c.f64()?, c.f64()?);
    let camera = Camera { position, forward, up, vfov, width, height, near, far };
    let (tf_digest, volume_digest) = (c.digest()?, c.digest()?);
    let body_len = c.u64()?;
    Ok(VdiHeader {
        version,
        dense: tag == 1,
        compressed: flags & FLAG_LZ4 != 0,
        width,
        height,
        n_sup,
        meta: VdiMeta { camera, tf_digest, volume_digest, n_sup, step },
        body_len,
    })
}

/// Parses only the header; does not verify the checksum.
pub fn decode_header(bytes: &[u8]) -> Result<VdiHeader, FormatError> {
    parse_header(&mut Cursor { bytes, pos: 0 })
}

/// Verifies magic and checksum, then decodes header and body.
pub fn decode_vdi(bytes: &[u8]) -> Result<(Vdi, VdiMeta), FormatError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    if bytes.len() < HEADER_BYTES + 4 {
        return Err(FormatError::Truncated);
    }
    let (data, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(data);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed });
    }
    let mut c = Cursor { bytes: data, pos: 0 };
    let h = parse_header(&mut c)?;
    let stored_body = c.take(h.body_len as usize)?;
    let body = if h.compressed {
        let mut out = Vec::new();
        lz4_flex::frame::FrameDecoder::new(stored_body).read_to_end(&mut out)?;
        out
    } else {
        stored_body.to_vec()
    };
    let lists = h.width as usize * h.height as usize;
    let vdi = if h.dense {
        let counts_bytes = body.get(..lists * 4).ok_or(FormatError::Truncated)?;
        let counts: Vec<u32> =
            counts_bytes.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).collect();
        let rest = &body[lists * 4..];
        if rest.len() % SUPERSEGMENT_BYTES != 0 {
            return Err(FormatError::Truncated);
        }
        Vdi::Dense(VdiDense::from_parts(h.width, h.height, h.n_sup, counts, decode_supersegments(rest))?)
    } else {
        if body.len() != lists * h.n_sup * SUPERSEGMENT_BYTES {
            return Err(FormatError::Truncated);
        }
        let full = VdiFull { width: h.width, height: h.height, n_sup: h.n_sup, grid: decode_supersegments(&body) };
        full.validate()?;
        Vdi::Full(full)
    };
    Ok((vdi, h.meta))
}

pub fn write_vdi(vdi: &Vdi, meta: &VdiMeta, path: impl AsRef<Path>, compress: bool) -> Result<(), FormatError> {
    std::fs::write(path, encode_vdi(vdi, meta, compress)?)?;
    Ok(())
}

pub fn read_vdi(path: impl AsRef<Path>) -> Result<(Vdi, VdiMeta), FormatError> {
    decode_vdi(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> VdiMeta {
        VdiMeta {
            camera: Camera::look_at(Vec3::new(0.0, 0.0, -5.0), Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0), 45.0, (3, 2)),
            tf_digest: [7; 32],
            volume_digest: [9; 32],
            n_sup: 3,
            step: 0.25,
        }
    }

    fn sparse_full() -> VdiFull {
        let mut f = VdiFull::empty(3, 2, 3);
        f.set_list(1, &[Supersegment { t_front: 1.0, t_back: 2.0, rgba: [0.1, 0.2, 0.3, 0.4] }]);
        f.set_list(
            4,
            &[
                Supersegment { t_front: 1.0, t_back: 1.5, rgba: [0.5, 0.0, 0.0, 0.5] },
                Supersegment { t_front: 2.0, t_back: 2.5, rgba: [0.0, 0.5, 0.0, 0.6] },
            ],
        );
        f
    }

    #[test]
    fn round_trips_both_representations() {
        let full = sparse_full();
        for vdi in [Vdi::Full(full.clone()), Vdi::Dense(full.densify())] {
            for compress in [false, true] {
                let bytes = encode_vdi(&vdi, &meta(), compress).unwrap();
                let (back, m) = decode_vdi(&bytes).unwrap();
                assert_eq!(back, vdi);
                assert_eq!(m, meta());
            }
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode_vdi(&Vdi::Full(sparse_full()), &meta(), false).unwrap();
        assert_eq!(&bytes[..4], b"VDI1");
        assert_eq!(bytes.len(), HEADER_BYTES + 6 * 3 * 24 + 4);
        let h = decode_header(&bytes).unwrap();
        assert!(!h.dense && !h.compressed);
        assert_eq!((h.width, h.height, h.n_sup), (3, 2, 3));
    }

    #[test]
    fn truncation_and_corruption_detected() {
        let bytes = encode_vdi(&Vdi::Dense(sparse_full().densify()), &meta(), false).unwrap();
        assert!(matches!(decode_vdi(&bytes[..bytes.len() - 10]), Err(FormatError::Checksum { .. })));
        let mut flipped = bytes.clone();
        flipped[HEADER_BYTES + 2] ^= 0x40;
        assert!(matches!(decode_vdi(&flipped), Err(FormatError::Checksum { .. })));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(decode_vdi(&magic), Err(FormatError::BadMagic)));
        let mut version = bytes;
        version[4] = 9;
        let n = version.len();
        let crc = crc32fast::hash(&version[..n - 4]);
        version[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode_vdi(&version), Err(FormatError::UnsupportedVersion(9))));
    }

    #[test]
    fn compression_shrinks_sparse_full() {
        let mut f = VdiFull::empty(32, 32, 8);
        f.set_list(100, &[Supersegment { t_front: 1.0, t_back: 2.0, rgba: [0.1, 0.2, 0.3, 0.4] }]);
        let vdi = Vdi::Full(f);
        let raw = encode_vdi(&vdi, &meta(), false).unwrap();
        let lz = encode_vdi(&vdi, &meta(), true).unwrap();
        assert!(lz.len() < raw.len() / 4, "{} vs {}", lz.len(), raw.len());
    }
}
