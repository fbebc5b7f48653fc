//! Unsupervised acquisition of the physiological orientation prior.
//!
//! A uniform bank is run over a training corpus and, for every orientation
//! bin, the competitive responses of all pixels won by that bin are summed
//! into a histogram of cumulative responses (HCR). Dark vein lines give
//! negative responses, so the bins with the smallest sums are the directions
//! veins actually run in; those are kept as the prior.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gabor::{orientation_angle, uniform_orientations, BankMode, BankParams, FilterBank};
use crate::image::GrayImage;
use crate::response::competitive_response;

pub const DEFAULT_ORIENTATIONS: usize = 16;
pub const DEFAULT_SELECTED: usize = 8;

const FORMAT_VERSION: u32 = 1;

/// Per-orientation sums of competitive responses over a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct HcrHistogram {
    pub bin_thetas: Vec<f64>,
    pub sums: Vec<f64>,
    pub image_count: usize,
    pub pixel_count: usize,
    pub bank: BankParams,
}

impl HcrHistogram {
    pub fn empty(bank: &FilterBank) -> Self {
        Self {
            bin_thetas: bank.thetas().to_vec(),
            sums: vec![0.0; bank.len()],
            image_count: 0,
            pixel_count: 0,
            bank: bank.params(),
        }
    }

    pub fn orientation_count(&self) -> usize {
        self.sums.len()
    }

    /// Adds one image's partial histogram. Partials must be added in a fixed
    /// order for the totals to be bit-reproducible.
    pub fn add(&mut self, contribution: &ImageContribution) {
        debug_assert_eq!(contribution.sums.len(), self.sums.len());
        for (total, part) in self.sums.iter_mut().zip(&contribution.sums) {
            *total += part;
        }
        self.image_count += 1;
        self.pixel_count += contribution.pixels;
    }

    /// Bins ordered by ascending sum (ties by smaller angle), the layout of a
    /// sorted HCR table.
    pub fn ascending(&self) -> Vec<(f64, f64)> {
        let order = smallest_bins(&self.bin_thetas, &self.sums, self.sums.len());
        order
            .into_iter()
            .map(|i| (self.bin_thetas[i], self.sums[i]))
            .collect()
    }
}

/// One image's share of the HCR: per-bin sums in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageContribution {
    pub sums: Vec<f64>,
    pub pixels: usize,
}

fn require_uniform(bank: &FilterBank) -> Result<()> {
    if bank.mode() != BankMode::Uniform {
        return Err(Error::InvalidParameter(
            "HCR accumulation requires a uniform bank".into(),
        ));
    }
    Ok(())
}

pub fn image_contribution(image: &GrayImage, bank: &FilterBank) -> Result<ImageContribution> {
    require_uniform(bank)?;
    let field = competitive_response(image, bank)?;
    let mut sums = vec![0.0; bank.len()];
    for (&m, &k) in field.m.iter().zip(&field.theta_idx) {
        sums[k] += m;
    }
    Ok(ImageContribution {
        sums,
        pixels: field.m.len(),
    })
}

/// Computes per-image contributions in parallel and reduces them in corpus
/// order, so the result does not depend on the worker count.
pub fn accumulate_into(
    hcr: &mut HcrHistogram,
    images: &[GrayImage],
    bank: &FilterBank,
) -> Result<()> {
    let parts = images
        .par_iter()
        .map(|img| image_contribution(img, bank))
        .collect::<Result<Vec<_>>>()?;
    for part in &parts {
        hcr.add(part);
    }
    Ok(())
}

pub fn accumulate_hcr(images: &[GrayImage], bank: &FilterBank) -> Result<HcrHistogram> {
    require_uniform(bank)?;
    if images.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut hcr = HcrHistogram::empty(bank);
    accumulate_into(&mut hcr, images, bank)?;
    Ok(hcr)
}

/// Positions of the `count` smallest sums, ties broken by smaller angle,
/// in ascending-sum order. Independent of how the bins are stored.
pub fn smallest_bins(thetas: &[f64], sums: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sums.len()).collect();
    order.sort_by(|&a, &b| {
        sums[a]
            .total_cmp(&sums[b])
            .then(thetas[a].total_cmp(&thetas[b]))
    });
    order.truncate(count);
    order
}

/// The learned orientation set plus the evidence it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDirections {
    /// Selected bin indices `k` (angle `π k / O`), strictly increasing.
    selected: Vec<usize>,
    pub dataset_id: String,
    pub hcr: HcrHistogram,
}

impl PriorDirections {
    /// Prior that keeps all `count` uniform orientations; used by the
    /// uniform-baseline mode.
    pub fn uniform(count: usize, bank: BankParams) -> Result<Self> {
        bank.validate()?;
        let thetas = uniform_orientations(count)?;
        Ok(Self {
            selected: (0..count).collect(),
            dataset_id: "uniform-baseline".to_string(),
            hcr: HcrHistogram {
                sums: vec![0.0; count],
                bin_thetas: thetas,
                image_count: 0,
                pixel_count: 0,
                bank,
            },
        })
    }

    pub fn with_dataset_id(mut self, id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        check_dataset_id(&id)?;
        self.dataset_id = id;
        Ok(self)
    }

    pub fn orientation_count(&self) -> usize {
        self.hcr.orientation_count()
    }

    pub fn selected_count(&self) -> usize {
        self.selected.len()
    }

    pub fn selected_bins(&self) -> &[usize] {
        &self.selected
    }

    pub fn selected_thetas(&self) -> Vec<f64> {
        let o = self.orientation_count();
        self.selected
            .iter()
            .map(|&k| orientation_angle(k, o))
            .collect()
    }

    pub fn image_count(&self) -> usize {
        self.hcr.image_count
    }

    pub fn bank(&self) -> BankParams {
        self.hcr.bank
    }

    /// SHA-256 of the serialized prior; ties descriptors to the exact prior
    /// they were extracted with.
    pub fn id(&self) -> [u8; 32] {
        Sha256::digest(self.to_text().as_bytes()).into()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let bank = self.bank();
        // Writing to a String cannot fail.
        let _ = writeln!(out, "version={FORMAT_VERSION}");
        let _ = writeln!(out, "O={}", self.orientation_count());
        let _ = writeln!(out, "O_s={}", self.selected_count());
        let _ = writeln!(out, "S={}", self.hcr.image_count);
        let _ = writeln!(out, "pixel_count={}", self.hcr.pixel_count);
        let _ = writeln!(out, "f0={:?}", bank.f0);
        let _ = writeln!(out, "sigma={:?}", bank.sigma);
        let _ = writeln!(out, "half_size={}", bank.half_size);
        let _ = writeln!(out, "dataset_id={}", self.dataset_id);
        for (k, sum) in self.hcr.sums.iter().enumerate() {
            let _ = writeln!(out, "{k} {sum:?}");
        }
        let ks: Vec<String> = self.selected.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(out, "selected: {}", ks.join(","));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        parse_prior(text)
    }
}

fn check_dataset_id(id: &str) -> Result<()> {
    if id.contains(['\n', '\r']) {
        return Err(Error::InvalidParameter(
            "dataset id must be a single line".into(),
        ));
    }
    Ok(())
}

/// Keeps the `count` orientations with the smallest HCR sums.
pub fn select_directions(hcr: &HcrHistogram, count: usize) -> Result<PriorDirections> {
    let available = hcr.orientation_count();
    if count == 0 || count > available {
        return Err(Error::InvalidCount {
            requested: count,
            available,
        });
    }
    let mut selected = smallest_bins(&hcr.bin_thetas, &hcr.sums, count);
    selected.sort_unstable();
    Ok(PriorDirections {
        selected,
        dataset_id: String::new(),
        hcr: hcr.clone(),
    })
}

pub fn save_prior(prior: &PriorDirections, path: &Path) -> Result<()> {
    fs::write(path, prior.to_text())?;
    Ok(())
}

pub fn load_prior(path: &Path) -> Result<PriorDirections> {
    let text = fs::read_to_string(path)?;
    parse_prior(&text)
}

struct Header {
    version: Option<u32>,
    orientations: Option<usize>,
    selected: Option<usize>,
    images: Option<usize>,
    pixels: Option<usize>,
    f0: Option<f64>,
    sigma: Option<f64>,
    half_size: Option<usize>,
    dataset_id: Option<String>,
}

fn parse_num<T: std::str::FromStr>(line: usize, field: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::malformed(line, field, format!("cannot parse `{value}`")))
}

fn parse_prior(text: &str) -> Result<PriorDirections> {
    let mut header = Header {
        version: None,
        orientations: None,
        selected: None,
        images: None,
        pixels: None,
        f0: None,
        sigma: None,
        half_size: None,
        dataset_id: None,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();

    while let Some(&(no, line)) = lines.peek() {
        let Some((key, value)) = line.split_once('=') else {
            break;
        };
        lines.next();
        match key.trim() {
            "version" => header.version = Some(parse_num(no, "version", value)?),
            "O" => header.orientations = Some(parse_num(no, "O", value)?),
            "O_s" => header.selected = Some(parse_num(no, "O_s", value)?),
            "S" => header.images = Some(parse_num(no, "S", value)?),
            "pixel_count" => header.pixels = Some(parse_num(no, "pixel_count", value)?),
            "f0" => header.f0 = Some(parse_num(no, "f0", value)?),
            "sigma" => header.sigma = Some(parse_num(no, "sigma", value)?),
            "half_size" => header.half_size = Some(parse_num(no, "half_size", value)?),
            "dataset_id" => header.dataset_id = Some(value.to_string()),
            other => return Err(Error::malformed(no, other, "unknown header key")),
        }
    }
    let next_line = lines.peek().map_or(text.lines().count() + 1, |&(no, _)| no);
    let missing = |field: &str| Error::malformed(next_line, field, "missing header key");

    let version = header.version.ok_or_else(|| missing("version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::malformed(
            1,
            "version",
            format!("unsupported version {version}"),
        ));
    }
    let o = header.orientations.ok_or_else(|| missing("O"))?;
    let o_s = header.selected.ok_or_else(|| missing("O_s"))?;
    let bank = BankParams {
        f0: header.f0.ok_or_else(|| missing("f0"))?,
        sigma: header.sigma.ok_or_else(|| missing("sigma"))?,
        half_size: header.half_size.ok_or_else(|| missing("half_size"))?,
    };
    bank.validate()
        .map_err(|e| Error::malformed(next_line, "bank", e.to_string()))?;
    if o == 0 {
        return Err(Error::malformed(next_line, "O", "must be >= 1"));
    }
    if o_s == 0 || o_s > o {
        return Err(Error::malformed(
            next_line,
            "O_s",
            format!("O_s = {o_s} must be in 1..=O ({o})"),
        ));
    }

    let mut sums = Vec::with_capacity(o);
    for k in 0..o {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::malformed(next_line + k, "sum", format!("missing bin {k}")))?;
        let (idx, value) = line
            .split_once(' ')
            .ok_or_else(|| Error::malformed(no, "sum", "expected `k <sum>`"))?;
        let idx: usize = parse_num(no, "k", idx)?;
        if idx != k {
            return Err(Error::malformed(
                no,
                "k",
                format!("expected bin {k}, found {idx}"),
            ));
        }
        sums.push(parse_num::<f64>(no, "sum", value)?);
    }

    let (no, line) = lines
        .next()
        .ok_or_else(|| Error::malformed(next_line + o, "selected", "missing selection line"))?;
    let list = line
        .strip_prefix("selected:")
        .ok_or_else(|| Error::malformed(no, "selected", "expected `selected: k1,k2,...`"))?;
    let selected = list
        .split(',')
        .map(|s| parse_num::<usize>(no, "selected", s))
        .collect::<Result<Vec<_>>>()?;
    if selected.len() != o_s {
        return Err(Error::malformed(
            no,
            "selected",
            format!("{} entries, header says O_s = {o_s}", selected.len()),
        ));
    }
    if selected.iter().any(|&k| k >= o) || selected.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::malformed(
            no,
            "selected",
            "bins must be strictly increasing and < O",
        ));
    }
    if let Some((no, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::malformed(
            no,
            "trailing",
            "unexpected content after selection",
        ));
    }

    let hcr = HcrHistogram {
        bin_thetas: uniform_orientations(o)?,
        sums,
        image_count: header.images.ok_or_else(|| missing("S"))?,
        pixel_count: header.pixels.unwrap_or(0),
        bank,
    };
    let mut expected = smallest_bins(&hcr.bin_thetas, &hcr.sums, o_s);
    expected.sort_unstable();
    if expected != selected {
        return Err(Error::malformed(
            no,
            "selected",
            format!("selection {selected:?} is not the {o_s} smallest HCR bins {expected:?}"),
        ));
    }
    Ok(PriorDirections {
        selected,
        dataset_id: header.dataset_id.unwrap_or_default(),
        hcr,
    })
}
