//! HOPGR extraction: physiological bank responses, per-cell orientation
//! histograms, overlapping blocks and per-block L2 normalization.
//!
//! Each pixel votes for the orientation that won the competitive response,
//! weighted by its dark-line magnitude `max(0, -m)`. Cells tile the image
//! without overlap; blocks of `block_w x block_h` cells slide over the cell
//! grid with a stride given in cells.

use crate::error::{Error, Result};
use crate::gabor::{build_bank, BankParams, FilterBank};
use crate::image::GrayImage;
use crate::prior::PriorDirections;
use crate::response::{competitive_response, ResponseField};

/// How many bins each cell histogram carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinsMode {
    /// One bin per selected direction (`O_s` bins).
    Selected,
    /// One bin per uniform orientation (`O` bins); bins of unselected
    /// directions stay zero.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub cell_w: usize,
    pub cell_h: usize,
    /// Cells per block horizontally.
    pub block_w: usize,
    /// Cells per block vertically.
    pub block_h: usize,
    /// Block step in cells, in both directions.
    pub stride: usize,
    pub epsilon: f64,
    pub bins: BinsMode,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            cell_w: 10,
            cell_h: 10,
            block_w: 2,
            block_h: 2,
            stride: 1,
            epsilon: 1e-2,
            bins: BinsMode::Selected,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell_w == 0 || self.cell_h == 0 {
            return Err(Error::InvalidParameter("cell size must be positive".into()));
        }
        if self.block_w == 0 || self.block_h == 0 {
            return Err(Error::InvalidParameter(
                "block must hold at least one cell".into(),
            ));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("block stride must be >= 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Largest width/height not exceeding the input that the cells tile exactly.
    pub fn fitted_dims(&self, width: usize, height: usize) -> (usize, usize) {
        (width - width % self.cell_w, height - height % self.cell_h)
    }

    /// Center-crops `image` to the largest region divisible by the cell size.
    pub fn fit(&self, image: &GrayImage) -> Result<GrayImage> {
        let (w, h) = self.fitted_dims(image.width(), image.height());
        if w == 0 || h == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} image is smaller than one {}x{} cell",
                image.width(),
                image.height(),
                self.cell_w,
                self.cell_h
            )));
        }
        if (w, h) == (image.width(), image.height()) {
            Ok(image.clone())
        } else {
            image.center_crop(w, h)
        }
    }

    fn blocks_along(&self, cells: usize, block: usize) -> usize {
        if cells < block {
            0
        } else {
            (cells - block) / self.stride + 1
        }
    }
}

/// Per-cell orientation histograms, row-major over cells then bins.
#[derive(Debug, Clone, PartialEq)]
pub struct CellHistograms {
    pub cells_x: usize,
    pub cells_y: usize,
    pub bins: usize,
    pub values: Vec<f64>,
}

impl CellHistograms {
    pub fn cell(&self, cx: usize, cy: usize) -> &[f64] {
        let start = (cy * self.cells_x + cx) * self.bins;
        &self.values[start..start + self.bins]
    }

    /// Re-spreads the bins onto a wider histogram: bin `i` moves to
    /// `positions[i]` of a `total`-bin histogram, the rest stay zero.
    pub fn expand_bins(&self, positions: &[usize], total: usize) -> Result<Self> {
        if positions.len() != self.bins || positions.iter().any(|&p| p >= total) {
            return Err(Error::DimensionMismatch(format!(
                "cannot place {} bins at {positions:?} within {total}",
                self.bins
            )));
        }
        let mut values = vec![0.0; self.cells_x * self.cells_y * total];
        for (src, dst) in self
            .values
            .chunks_exact(self.bins)
            .zip(values.chunks_exact_mut(total))
        {
            for (&v, &p) in src.iter().zip(positions) {
                dst[p] = v;
            }
        }
        Ok(Self {
            cells_x: self.cells_x,
            cells_y: self.cells_y,
            bins: total,
            values,
        })
    }
}

/// Pixel weight in the histograms: the dark-line response magnitude.
#[inline]
pub fn vote_weight(m: f64) -> f64 {
    (-m).max(0.0)
}

pub fn cell_histograms(field: &ResponseField, grid: &GridConfig) -> Result<CellHistograms> {
    grid.validate()?;
    if !field.width.is_multiple_of(grid.cell_w) || !field.height.is_multiple_of(grid.cell_h) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} field is not divisible into {}x{} cells",
            field.width, field.height, grid.cell_w, grid.cell_h
        )));
    }
    let bins = field.bank_thetas.len();
    let cells_x = field.width / grid.cell_w;
    let cells_y = field.height / grid.cell_h;
    let mut values = vec![0.0; cells_x * cells_y * bins];
    for y in 0..field.height {
        let row_base = (y / grid.cell_h) * cells_x;
        let m_row = &field.m[y * field.width..(y + 1) * field.width];
        let k_row = &field.theta_idx[y * field.width..(y + 1) * field.width];
        for (x, (&m, &k)) in m_row.iter().zip(k_row).enumerate() {
            let cell = row_base + x / grid.cell_w;
            values[cell * bins + k] += vote_weight(m);
        }
    }
    Ok(CellHistograms {
        cells_x,
        cells_y,
        bins,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layout {
    pub blocks_x: usize,
    pub blocks_y: usize,
    /// `block_w * block_h * bins`.
    pub block_len: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.blocks_x * self.blocks_y * self.block_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Concatenated L2-normalized block histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: Vec<f64>,
    pub layout: Layout,
    pub grid: GridConfig,
    pub prior_id: [u8; 32],
}

impl Descriptor {
    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.layout.block_len)
    }

    pub fn bins(&self) -> usize {
        self.layout.block_len / (self.grid.block_w * self.grid.block_h)
    }
}

/// Groups cells into overlapping blocks and normalizes each block by
/// `1 / sqrt(|v|^2 + eps^2)`. Blocks and the cells inside them are both
/// visited row-major.
pub fn assemble_blocks(
    cells: &CellHistograms,
    grid: &GridConfig,
    prior_id: [u8; 32],
) -> Result<Descriptor> {
    grid.validate()?;
    let blocks_x = grid.blocks_along(cells.cells_x, grid.block_w);
    let blocks_y = grid.blocks_along(cells.cells_y, grid.block_h);
    if blocks_x == 0 || blocks_y == 0 {
        return Err(Error::GridTooSmall {
            cells_x: cells.cells_x,
            cells_y: cells.cells_y,
            block_w: grid.block_w,
            block_h: grid.block_h,
        });
    }
    let layout = Layout {
        blocks_x,
        blocks_y,
        block_len: grid.block_w * grid.block_h * cells.bins,
    };
    let eps_sq = grid.epsilon * grid.epsilon;
    let mut values = Vec::with_capacity(layout.len());
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let start = values.len();
            for cy in 0..grid.block_h {
                for cx in 0..grid.block_w {
                    values.extend_from_slice(
                        cells.cell(bx * grid.stride + cx, by * grid.stride + cy),
                    );
                }
            }
            let block = &mut values[start..];
            let norm_sq: f64 = block.iter().map(|v| v * v).sum();
            let scale = 1.0 / (norm_sq + eps_sq).sqrt();
            block.iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok(Descriptor {
        values,
        layout,
        grid: *grid,
        prior_id,
    })
}

fn check_prior_bank(prior: &PriorDirections, bank: &BankParams) -> Result<()> {
    let learned = prior.bank();
    if learned != *bank {
        return Err(Error::PriorMismatch(format!(
            "prior was learned with f0={:?} sigma={:?} half_size={} but the bank is f0={:?} sigma={:?} half_size={}",
            learned.f0, learned.sigma, learned.half_size, bank.f0, bank.sigma, bank.half_size
        )));
    }
    Ok(())
}

/// Competitive response of the bank built on the prior's directions;
/// `theta_idx` indexes the selected directions.
pub fn physiological_response(
    image: &GrayImage,
    prior: &PriorDirections,
    bank: &BankParams,
) -> Result<ResponseField> {
    check_prior_bank(prior, bank)?;
    let bank = build_bank(&prior.selected_thetas(), *bank)?;
    competitive_response(image, &bank)
}

/// Reusable extraction state: the physiological bank is built once.
#[derive(Debug, Clone)]
pub struct HopgrExtractor {
    bank: FilterBank,
    grid: GridConfig,
    prior_id: [u8; 32],
    selected_bins: Vec<usize>,
    orientation_count: usize,
}

impl HopgrExtractor {
    pub fn new(prior: &PriorDirections, grid: GridConfig, bank: BankParams) -> Result<Self> {
        check_prior_bank(prior, &bank)?;
        grid.validate()?;
        Ok(Self {
            bank: build_bank(&prior.selected_thetas(), bank)?,
            grid,
            prior_id: prior.id(),
            selected_bins: prior.selected_bins().to_vec(),
            orientation_count: prior.orientation_count(),
        })
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn prior_id(&self) -> [u8; 32] {
        self.prior_id
    }

    pub fn bins(&self) -> usize {
        match self.grid.bins {
            BinsMode::Selected => self.selected_bins.len(),
            BinsMode::Full => self.orientation_count,
        }
    }

    /// Descriptor length for an image of the given size (after fitting).
    pub fn layout_for(&self, width: usize, height: usize) -> Layout {
        let (w, h) = self.grid.fitted_dims(width, height);
        let (cx, cy) = (w / self.grid.cell_w, h / self.grid.cell_h);
        Layout {
            blocks_x: self.grid.blocks_along(cx, self.grid.block_w),
            blocks_y: self.grid.blocks_along(cy, self.grid.block_h),
            block_len: self.grid.block_w * self.grid.block_h * self.bins(),
        }
    }

    pub fn extract(&self, image: &GrayImage) -> Result<Descriptor> {
        let image = self.grid.fit(image)?;
        let field = competitive_response(&image, &self.bank)?;
        let mut cells = cell_histograms(&field, &self.grid)?;
        if self.grid.bins == BinsMode::Full {
            cells = cells.expand_bins(&self.selected_bins, self.orientation_count)?;
        }
        assemble_blocks(&cells, &self.grid, self.prior_id)
    }
}

/// Full HOPGR extraction of one image. Images not divisible into cells are
/// center-cropped to the largest divisible region first.
pub fn extract_hopgr(
    image: &GrayImage,
    prior: &PriorDirections,
    grid: &GridConfig,
    bank: &BankParams,
) -> Result<Descriptor> {
    HopgrExtractor::new(prior, *grid, *bank)?.extract(image)
}
