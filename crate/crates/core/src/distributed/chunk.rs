//! Image-space partition and the sub-VDI chunk sent between PEs.
//!
//! Wire layout, little-endian: `u32 source`, `u32 begin`, `u32 end`, one
//! `u32` count per list of `begin..end`, then the packed supersegments.

use serde::Serialize;

use crate::vdi::format::{decode_supersegments, encode_supersegments};
use crate::vdi::{exclusive_prefix_sum, Supersegment, VdiDense, SUPERSEGMENT_BYTES};

pub const CHUNK_HEADER_BYTES: usize = 12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ChunkError {
    #[error("chunk is {0} bytes, shorter than its header")]
    Truncated(usize),
    #[error("chunk body is {actual} bytes, header implies {expected}")]
    Length { expected: usize, actual: usize },
    #[error("chunk region {begin}..{end} is inverted")]
    BadRegion { begin: u32, end: u32 },
}

/// Contiguous row-major range of list indices `begin..end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ImageRegion {
    pub begin: usize,
    pub end: usize,
}

impl ImageRegion {
    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.begin == self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.begin..self.end).contains(&i)
    }
}

/// Splits `w * h` lists into `k` contiguous ranges whose sizes differ by at
/// most one.
pub fn partition_image(width: u32, height: u32, k: usize) -> Vec<ImageRegion> {
    assert!(k >= 1);
    let n = width as usize * height as usize;
    let (base, extra) = (n / k, n % k);
    let mut begin = 0;
    (0..k)
        .map(|j| {
            let end = begin + base + usize::from(j < extra);
            let r = ImageRegion { begin, end };
            begin = end;
            r
        })
        .collect()
}

/// The lists of one image region taken from one PE's sub-VDI.
#[derive(Clone, Debug, PartialEq)]
pub struct SubVdiChunk {
    pub source: u32,
    pub region: ImageRegion,
    pub counts: Vec<u32>,
    pub offsets: Vec<usize>,
    pub payload: Vec<Supersegment>,
}

impl SubVdiChunk {
    /// List `i` of the whole image, which must lie in the region.
    pub fn list(&self, i: usize) -> &[Supersegment] {
        let l = i - self.region.begin;
        &self.payload[self.offsets[l]..self.offsets[l] + self.counts[l] as usize]
    }

    pub fn wire_bytes(&self) -> usize {
        CHUNK_HEADER_BYTES + 4 * self.counts.len() + SUPERSEGMENT_BYTES * self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.wire_bytes());
        for v in [self.source, self.region.begin as u32, self.region.end as u32] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for c in &self.counts {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        encode_supersegments(&mut buf, &self.payload);
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ChunkError> {
        if bytes.len() < CHUNK_HEADER_BYTES {
            return Err(ChunkError::Truncated(bytes.len()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
        let (source, begin, end) = (word(0), word(1), word(2));
        if end < begin {
            return Err(ChunkError::BadRegion { begin, end });
        }
        let n = (end - begin) as usize;
        let counts_end = CHUNK_HEADER_BYTES + 4 * n;
        if bytes.len() < counts_end {
            return Err(ChunkError::Length { expected: counts_end, actual: bytes.len() });
        }
        let counts: Vec<u32> = (0..n).map(|l| word(3 + l)).collect();
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        let expected = counts_end + total * SUPERSEGMENT_BYTES;
        if bytes.len() != expected {
            return Err(ChunkError::Length { expected, actual: bytes.len() });
        }
        Ok(Self {
            source,
            region: ImageRegion { begin: begin as usize, end: end as usize },
            offsets: exclusive_prefix_sum(&counts),
            counts,
            payload: decode_supersegments(&bytes[counts_end..]),
        })
    }
}

/// Copies the lists of `region` out of a PE's dense sub-VDI. Counts are
/// sliced and offsets rebased to the region start.
pub fn extract_chunk(dense: &VdiDense, region: ImageRegion, source: usize) -> SubVdiChunk {
    let counts = dense.counts[region.begin..region.end].to_vec();
    let payload = if region.is_empty() {
        Vec::new()
    } else {
        let start = dense.offsets[region.begin];
        let stop = dense.offsets[region.end - 1] + dense.counts[region.end - 1] as usize;
        dense.payload[start..stop].to_vec()
    };
    SubVdiChunk { source: source as u32, region, offsets: exclusive_prefix_sum(&counts), counts, payload }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vdi::VdiFull;
    use proptest::prelude::*;

    fn seg(t: f32) -> Supersegment {
        Supersegment { t_front: t, t_back: t + 1.0, rgba: [0.1, 0.2, 0.3, 0.4] }
    }

    #[test]
    fn partition_balanced() {
        let r = partition_image(5, 2, 3);
        assert_eq!(r.iter().map(ImageRegion::len).collect::<Vec<_>>(), vec![4, 3, 3]);
        assert_eq!(r[0].begin, 0);
        assert_eq!(r[2].end, 10);
        let r = partition_image(1, 2, 4);
        assert_eq!(r.iter().filter(|x| x.is_empty()).count(), 2);
    }

    proptest! {
        #[test]
        fn partition_tiles(w in 1u32..40, h in 1u32..40, k in 1usize..12) {
            let r = partition_image(w, h, k);
            prop_assert_eq!(r.len(), k);
            prop_assert_eq!(r[0].begin, 0);
            prop_assert_eq!(r[k - 1].end, (w * h) as usize);
            for p in r.windows(2) {
                prop_assert_eq!(p[0].end, p[1].begin);
            }
            let lens: Vec<_> = r.iter().map(ImageRegion::len).collect();
            prop_assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
        }

        #[test]
        fn chunks_round_trip(counts in prop::collection::vec(0u32..4, 1..30), k in 1usize..5) {
            let mut full = VdiFull::empty(counts.len() as u32, 1, 4);
            for (i, &c) in counts.iter().enumerate() {
                let list: Vec<_> = (0..c).map(|j| seg(j as f32 * 2.0 + i as f32)).collect();
                full.set_list(i, &list);
            }
            let dense = full.densify();
            for (pe, region) in partition_image(counts.len() as u32, 1, k).into_iter().enumerate() {
                let chunk = extract_chunk(&dense, region, pe);
                let bytes = chunk.encode();
                prop_assert_eq!(bytes.len(), chunk.wire_bytes());
                let back = SubVdiChunk::decode(&bytes).unwrap();
                prop_assert_eq!(&back, &chunk);
                for i in region.begin..region.end {
                    prop_assert_eq!(back.list(i), full.list(i));
                }
            }
        }
    }

    #[test]
    fn decode_rejects_bad_lengths() {
        let chunk = SubVdiChunk {
            source: 1,
            region: ImageRegion { begin: 2, end: 4 },
            counts: vec![1, 0],
            offsets: vec![0, 1],
            payload: vec![seg(0.0)],
        };
        let bytes = chunk.encode();
        assert!(matches!(SubVdiChunk::decode(&bytes[..5]), Err(ChunkError::Truncated(5))));
        assert!(matches!(SubVdiChunk::decode(&bytes[..bytes.len() - 1]), Err(ChunkError::Length { .. })));
    }
}
