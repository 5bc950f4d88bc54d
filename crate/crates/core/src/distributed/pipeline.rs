//! Sort-last pipeline: per-PE generation over owned bricks, all-to-all
//! exchange of image regions, per-list merge and recompositing, gather at
//! the root.

use web_time::Instant;

use serde::Serialize;

use crate::camera::Camera;
use crate::decomposition::DomainDecomposition;
use crate::dvr::{over, Rgba};
use crate::image::Image;
use crate::par;
use crate::vdi::format::{decode_supersegments, encode_supersegments};
use crate::vdi::segment::accumulate;
use crate::vdi::{
    exclusive_prefix_sum, generate_dense, sample_ray, GenParams, RayDomain, ReprError, Supersegment, VdiDense, VdiFull,
    VdiMeta, SUPERSEGMENT_BYTES,
};
use crate::volume::{ScalarVolume, TransferFunction};

use super::chunk::{extract_chunk, partition_image, ChunkError, ImageRegion, SubVdiChunk};
use super::harness::{CommError, Harness};
use super::merge::{merge_streams, recomposite_list};

pub const ROOT: usize = 0;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Repr(#[from] ReprError),
    #[error("decomposition has {decomposition} PEs, harness has {harness}")]
    PeMismatch { decomposition: usize, harness: usize },
    #[error("decomposition covers {decomposition:?}, volume is {volume:?}")]
    DimsMismatch { decomposition: [usize; 3], volume: [usize; 3] },
    #[error("PE {pe} gathered a malformed region")]
    BadGather { pe: usize },
}

/// Wall-clock seconds per stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StageTimes {
    pub generation: f64,
    pub distribution: f64,
    pub compositing: f64,
    pub gather: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeMetrics {
    pub pe: usize,
    pub sent_bytes: u64,
    pub received_bytes: u64,
    pub generated_supersegments: usize,
    pub composited_supersegments: usize,
    /// Lists whose merged stream exceeded `n_sup` and were recomposited.
    pub reduced_lists: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExchangeMetrics {
    /// Bytes moved by the all-to-all with dense chunks.
    pub dense_bytes: u64,
    /// Bytes every PE would send with full-resolution sub-VDIs.
    pub full_bound_bytes: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetrics {
    pub k: usize,
    pub width: u32,
    pub height: u32,
    pub n_sup: usize,
    pub stages: StageTimes,
    pub per_pe: Vec<PeMetrics>,
    pub exchange: ExchangeMetrics,
    pub gather_bytes: u64,
    pub overlaps_repaired: usize,
}

pub struct CompositeOutput {
    pub vdi: VdiFull,
    pub meta: VdiMeta,
    pub metrics: RunMetrics,
}

#[derive(Default)]
struct PeState {
    sub: Option<VdiDense>,
    inbox: Vec<Vec<u8>>,
    region_lists: Vec<Supersegment>,
    region_pixels: Vec<Rgba>,
    overlaps: usize,
    reduced: usize,
}

fn check_inputs(
    harness: &Harness,
    decomposition: &DomainDecomposition,
    vol: &ScalarVolume,
) -> Result<(), PipelineError> {
    if decomposition.pe_count() != harness.k() {
        return Err(PipelineError::PeMismatch { decomposition: decomposition.pe_count(), harness: harness.k() });
    }
    if decomposition.dims != vol.dims() {
        return Err(PipelineError::DimsMismatch { decomposition: decomposition.dims, volume: vol.dims() });
    }
    Ok(())
}

/// One PE's sub-VDI over its own bricks.
pub fn phase1_generate(
    pe: usize,
    vol: &ScalarVolume,
    tf: &TransferFunction,
    camera: &Camera,
    decomposition: &DomainDecomposition,
    params: GenParams,
) -> VdiDense {
    generate_dense(vol, tf, camera, params, RayDomain::Bricks(decomposition.bricks(pe))).0
}

/// Exchange stage shared by both pipelines. Leaves each PE's inbox filled
/// with the encoded chunks of its own region, ordered by source.
fn distribute(harness: &mut Harness, states: &mut [PeState], regions: &[ImageRegion]) -> Result<(), PipelineError> {
    let outboxes = harness.superstep(states, |pe, st| {
        let sub = st.sub.as_ref().expect("generation precedes distribution");
        regions.iter().map(|&r| extract_chunk(sub, r, pe).encode()).collect::<Vec<_>>()
    });
    let inboxes = harness.all_to_all(outboxes)?;
    for (st, inbox) in states.iter_mut().zip(inboxes) {
        st.inbox = inbox;
    }
    Ok(())
}

fn decode_inbox(inbox: &[Vec<u8>]) -> Result<Vec<SubVdiChunk>, ChunkError> {
    inbox.iter().map(|b| SubVdiChunk::decode(b)).collect()
}

fn exchange_metrics(
    harness: &Harness,
    states: &[PeState],
    camera: &Camera,
    n_sup: usize,
) -> (Vec<PeMetrics>, ExchangeMetrics) {
    let stats = harness.stats();
    let k = harness.k() as u64;
    let per_pe = states
        .iter()
        .enumerate()
        .map(|(pe, st)| PeMetrics {
            pe,
            sent_bytes: stats.sent_bytes[pe],
            received_bytes: stats.received_bytes[pe],
            generated_supersegments: st.sub.as_ref().map_or(0, |s| s.payload.len()),
            composited_supersegments: st.region_lists.iter().filter(|s| !s.is_empty_slot()).count(),
            reduced_lists: st.reduced,
        })
        .collect();
    let dense = stats.total_sent();
    let full = k * camera.pixel_count() as u64 * n_sup as u64 * SUPERSEGMENT_BYTES as u64;
    (per_pe, ExchangeMetrics { dense_bytes: dense, full_bound_bytes: full, ratio: dense as f64 / full as f64 })
}

fn region_header(region: ImageRegion) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&(region.begin as u32).to_le_bytes());
    buf.extend_from_slice(&(region.end as u32).to_le_bytes());
    buf
}

fn parse_region(bytes: &[u8], pe: usize) -> Result<(ImageRegion, &[u8]), PipelineError> {
    if bytes.len() < 8 {
        return Err(PipelineError::BadGather { pe });
    }
    let begin = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let end = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if end < begin {
        return Err(PipelineError::BadGather { pe });
    }
    Ok((ImageRegion { begin, end }, &bytes[8..]))
}

/// Full pipeline producing the composited VDI at the root.
pub fn composite(
    harness: &mut Harness,
    decomposition: &DomainDecomposition,
    vol: &ScalarVolume,
    tf: &TransferFunction,
    camera: &Camera,
    params: GenParams,
) -> Result<CompositeOutput, PipelineError> {
    check_inputs(harness, decomposition, vol)?;
    let k = harness.k();
    let n_sup = params.n_sup;
    let regions = partition_image(camera.width, camera.height, k);
    let mut states: Vec<PeState> = (0..k).map(|_| PeState::default()).collect();

    let t = Instant::now();
    harness.superstep(&mut states, |pe, st| {
        st.sub = Some(phase1_generate(pe, vol, tf, camera, decomposition, params));
    });
    let generation = t.elapsed().as_secs_f64();

    let t = Instant::now();
    distribute(harness, &mut states, &regions)?;
    let distribution = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let results = harness.superstep(&mut states, |pe, st| -> Result<(), ChunkError> {
        let chunks = decode_inbox(&st.inbox)?;
        let region = regions[pe];
        let merged = par::map_indices(region.len(), |l| {
            let i = region.begin + l;
            let streams: Vec<&[Supersegment]> = chunks.iter().map(|c| c.list(i)).collect();
            let (m, overlaps) = merge_streams(&streams);
            let reduced = m.len() > n_sup;
            (recomposite_list(&m, n_sup, params.max_iters, params.step), overlaps, reduced)
        });
        st.region_lists = vec![Supersegment::EMPTY; region.len() * n_sup];
        for (l, (list, overlaps, reduced)) in merged.into_iter().enumerate() {
            st.region_lists[l * n_sup..l * n_sup + list.len()].copy_from_slice(&list);
            st.overlaps += overlaps;
            st.reduced += usize::from(reduced);
        }
        Ok(())
    });
    results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let compositing = t.elapsed().as_secs_f64();

    let (per_pe, exchange) = exchange_metrics(harness, &states, camera, n_sup);
    let before_gather = harness.stats().total_sent();

    let t = Instant::now();
    let parts = harness.superstep(&mut states, |pe, st| {
        let mut buf = region_header(regions[pe]);
        encode_supersegments(&mut buf, &st.region_lists);
        buf
    });
    let gathered = harness.gather(ROOT, parts)?;
    let mut vdi = VdiFull::empty(camera.width, camera.height, n_sup);
    for (pe, bytes) in gathered.iter().enumerate() {
        let (region, body) = parse_region(bytes, pe)?;
        if region.end > vdi.list_count() || body.len() != region.len() * n_sup * SUPERSEGMENT_BYTES {
            return Err(PipelineError::BadGather { pe });
        }
        vdi.grid[region.begin * n_sup..region.end * n_sup].copy_from_slice(&decode_supersegments(body));
    }
    vdi.validate()?;
    let gather = t.elapsed().as_secs_f64();

    let metrics = RunMetrics {
        k,
        width: camera.width,
        height: camera.height,
        n_sup,
        stages: StageTimes { generation, distribution, compositing, gather },
        per_pe,
        exchange,
        gather_bytes: harness.stats().total_sent() - before_gather,
        overlaps_repaired: states.iter().map(|s| s.overlaps).sum(),
    };
    let meta =
        VdiMeta { camera: *camera, tf_digest: tf.digest(), volume_digest: vol.digest(), n_sup, step: params.step };
    Ok(CompositeOutput { vdi, meta, metrics })
}

/// Sub-VDI with one supersegment per domain interval holding the
/// front-to-back accumulation of every sample inside it.
pub fn limit_case_generate(
    pe: usize,
    vol: &ScalarVolume,
    tf: &TransferFunction,
    camera: &Camera,
    decomposition: &DomainDecomposition,
    step: f64,
) -> VdiDense {
    let domain = RayDomain::Bricks(decomposition.bricks(pe));
    let lists = par::map_indices(camera.pixel_count(), |i| {
        let ray = camera.ray_for_index(i);
        domain
            .intervals(&ray, vol, camera)
            .into_iter()
            .filter_map(|iv| {
                let samples = sample_ray(vol, tf, &ray, step, &[iv]);
                let rgba = accumulate(samples.iter().map(|s| &s.rgba));
                (rgba[3] > 0.0).then(|| Supersegment {
                    t_front: samples[0].t_front,
                    t_back: samples.last().unwrap().t_back,
                    rgba,
                })
            })
            .collect::<Vec<_>>()
    });
    let counts: Vec<u32> = lists.iter().map(|l| l.len() as u32).collect();
    let n_sup = counts.iter().copied().max().unwrap_or(0).max(1) as usize;
    let offsets = exclusive_prefix_sum(&counts);
    let payload = lists.concat();
    VdiDense { width: camera.width, height: camera.height, n_sup, counts, offsets, payload }
}

/// The pipeline with per-interval accumulation and per-pixel compositing in
/// place of supersegment recompositing. Produces a final image at the root.
pub fn composite_image_limit_case(
    harness: &mut Harness,
    decomposition: &DomainDecomposition,
    vol: &ScalarVolume,
    tf: &TransferFunction,
    camera: &Camera,
    step: f64,
) -> Result<(Image, RunMetrics), PipelineError> {
    check_inputs(harness, decomposition, vol)?;
    let k = harness.k();
    let regions = partition_image(camera.width, camera.height, k);
    let mut states: Vec<PeState> = (0..k).map(|_| PeState::default()).collect();

    let t = Instant::now();
    harness.superstep(&mut states, |pe, st| {
        st.sub = Some(limit_case_generate(pe, vol, tf, camera, decomposition, step));
    });
    let generation = t.elapsed().as_secs_f64();
    let n_sup = states.iter().map(|s| s.sub.as_ref().unwrap().n_sup).max().unwrap_or(1);

    let t = Instant::now();
    distribute(harness, &mut states, &regions)?;
    let distribution = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let results = harness.superstep(&mut states, |pe, st| -> Result<(), ChunkError> {
        let chunks = decode_inbox(&st.inbox)?;
        let region = regions[pe];
        st.region_pixels = par::map_indices(region.len(), |l| {
            let streams: Vec<&[Supersegment]> = chunks.iter().map(|c| c.list(region.begin + l)).collect();
            let (m, _) = merge_streams(&streams);
            m.iter().fold([0.0; 4], |acc, s| over(acc, s.rgba))
        });
        Ok(())
    });
    results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let compositing = t.elapsed().as_secs_f64();

    let (per_pe, exchange) = exchange_metrics(harness, &states, camera, n_sup);
    let before_gather = harness.stats().total_sent();

    let t = Instant::now();
    let parts = harness.superstep(&mut states, |pe, st| {
        let mut buf = region_header(regions[pe]);
        for p in &st.region_pixels {
            for c in p {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
        buf
    });
    let gathered = harness.gather(ROOT, parts)?;
    let mut image = Image::new(camera.width, camera.height);
    for (pe, bytes) in gathered.iter().enumerate() {
        let (region, body) = parse_region(bytes, pe)?;
        if region.end > image.pixels.len() || body.len() != region.len() * 16 {
            return Err(PipelineError::BadGather { pe });
        }
        for (l, px) in body.chunks_exact(16).enumerate() {
            image.pixels[region.begin + l] =
                std::array::from_fn(|c| f32::from_le_bytes(px[4 * c..4 * c + 4].try_into().unwrap()));
        }
    }
    let gather = t.elapsed().as_secs_f64();

    let metrics = RunMetrics {
        k,
        width: camera.width,
        height: camera.height,
        n_sup,
        stages: StageTimes { generation, distribution, compositing, gather },
        per_pe,
        exchange,
        gather_bytes: harness.stats().total_sent() - before_gather,
        overlaps_repaired: 0,
    };
    Ok((image, metrics))
}
