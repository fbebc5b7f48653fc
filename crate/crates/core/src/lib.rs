//! Histogram of oriented physiological Gabor responses (HOPGR) for
//! finger-vein recognition.
//!
//! The pipeline has two phases:
//!
//! 1. **Prior acquisition** ([`prior`]): a uniform bank of even Gabor filters
//!    is run over a training corpus, the competitive (minimum) responses are
//!    summed per winning orientation, and the orientations with the most
//!    negative totals are kept as the physiological directions.
//! 2. **Extraction** ([`descriptor`]): a bank restricted to those directions
//!    produces per-pixel responses that are binned into cell histograms,
//!    grouped into overlapping L2-normalized blocks and concatenated.
//!
//! [`matching`] and [`eval`] turn descriptors into verification scores and an
//! equal error rate; [`synth`] renders vein-like test images with known
//! orientations.

pub mod archive;
pub mod descriptor;
pub mod error;
pub mod eval;
pub mod gabor;
pub mod image;
pub mod ingest;
pub mod matching;
pub mod prior;
pub mod response;
pub mod synth;

pub use archive::LabeledDescriptor;
pub use descriptor::{
    assemble_blocks, cell_histograms, extract_hopgr, physiological_response, BinsMode,
    CellHistograms, Descriptor, GridConfig, HopgrExtractor, Layout,
};
pub use error::{Error, ErrorClass, Result};
pub use eval::{
    compute_eer, export_det, make_scores, EvalReport, ImpostorSampling, RocPoint, ScoreSet,
};
pub use gabor::{
    build_bank, make_kernel, uniform_orientations, BankMode, BankParams, FilterBank, GaborParams,
    Kernel,
};
pub use image::GrayImage;
pub use ingest::{index_dataset, load_image, DatasetIndex, DatasetLayout, RoiHandling};
pub use matching::{distance, Metric};
pub use prior::{
    accumulate_hcr, load_prior, save_prior, select_directions, HcrHistogram, PriorDirections,
};
pub use response::{competitive_response, convolve, ResponseField, ResponseMap};
pub use synth::{generate, SynthImage, SynthSpec};
