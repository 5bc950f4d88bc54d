//! Sort-last compositing over `k` simulated processing elements.

pub mod chunk;
pub mod harness;
pub mod merge;
pub mod pipeline;

pub use chunk::{extract_chunk, partition_image, ChunkError, ImageRegion, SubVdiChunk};
pub use harness::{CommError, CommStats, Harness, Schedule};
pub use merge::{merge_streams, recomposite_list};
pub use pipeline::{
    composite, composite_image_limit_case, limit_case_generate, phase1_generate, CompositeOutput, PipelineError,
    RunMetrics,
};
