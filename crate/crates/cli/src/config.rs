//! Declarative run configuration: UTF-8 `key=value` lines, `#` comments.
//!
//! Relative paths are resolved against the directory of the config file.
//! `show-config` prints every key with its effective value in the same
//! syntax, so its output is itself a valid config file.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hopgr::gabor::orientation_angle;
use hopgr::ingest::ROI_DIMS;
use hopgr::prior::{DEFAULT_ORIENTATIONS, DEFAULT_SELECTED};
use hopgr::{BankParams, BinsMode, DatasetLayout, GridConfig, Metric, RoiHandling};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Physio,
    Uniform,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "physio" | "physiological" => Ok(Mode::Physio),
            "uniform" | "uniform-baseline" => Ok(Mode::Uniform),
            other => Err(format!("unknown mode `{other}` (physio|uniform)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Physio => "physio",
            Mode::Uniform => "uniform",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoiPolicy {
    Keep,
    Strict,
    Crop,
    Resize,
}

impl FromStr for RoiPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "keep" => Ok(RoiPolicy::Keep),
            "strict" => Ok(RoiPolicy::Strict),
            "crop" => Ok(RoiPolicy::Crop),
            "resize" => Ok(RoiPolicy::Resize),
            other => Err(format!(
                "unknown roi policy `{other}` (keep|strict|crop|resize)"
            )),
        }
    }
}

impl std::fmt::Display for RoiPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RoiPolicy::Keep => "keep",
            RoiPolicy::Strict => "strict",
            RoiPolicy::Crop => "crop",
            RoiPolicy::Resize => "resize",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthGeometry {
    /// One band layout per class, jittered per sample.
    Persistent,
    /// Fresh layout per sample.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub out: PathBuf,
    pub classes: usize,
    pub samples: usize,
    pub width: usize,
    pub height: usize,
    pub lines: usize,
    pub line_width: f64,
    pub contrast: f64,
    pub background: f64,
    pub noise: f64,
    /// Orientation bins (of `orientations`) lines are drawn from.
    pub bins: Vec<usize>,
    /// Optional per-class bin sets, cycled over classes.
    pub class_sets: Vec<Vec<usize>>,
    pub geometry: SynthGeometry,
    pub jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("synth"),
            classes: 10,
            samples: 10,
            width: ROI_DIMS.0,
            height: ROI_DIMS.1,
            lines: 10,
            line_width: 3.0,
            contrast: 0.4,
            background: 0.8,
            noise: 0.02,
            bins: vec![0, 1, 2, 3, 8, 13, 14, 15],
            class_sets: Vec::new(),
            geometry: SynthGeometry::Persistent,
            jitter: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub bank: BankParams,
    /// Uniform orientations used to learn the prior (and by uniform mode).
    pub orientations: usize,
    /// Directions kept in the prior.
    pub selected: usize,
    pub grid: GridConfig,
    pub metric: Metric,
    pub mode: Mode,
    pub train_dir: Option<PathBuf>,
    pub dataset_dir: Option<PathBuf>,
    pub layout: DatasetLayout,
    pub dataset_id: Option<String>,
    pub prior: PathBuf,
    pub archive: PathBuf,
    pub csv: Option<PathBuf>,
    pub baseline_archive: Option<PathBuf>,
    pub report: PathBuf,
    pub det: PathBuf,
    pub seed: u64,
    pub impostor_cap: usize,
    pub roi: RoiPolicy,
    pub roi_width: usize,
    pub roi_height: usize,
    pub synth: SynthConfig,
    base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            bank: BankParams::default(),
            orientations: DEFAULT_ORIENTATIONS,
            selected: DEFAULT_SELECTED,
            grid: GridConfig::default(),
            metric: Metric::Euclidean,
            mode: Mode::Physio,
            train_dir: None,
            dataset_dir: None,
            layout: DatasetLayout::Nested,
            dataset_id: None,
            prior: PathBuf::from("prior.txt"),
            archive: PathBuf::from("descriptors.hpga"),
            csv: None,
            baseline_archive: None,
            report: PathBuf::from("report.txt"),
            det: PathBuf::from("det.csv"),
            seed: 0,
            impostor_cap: hopgr::eval::DEFAULT_IMPOSTOR_CAP,
            roi: RoiPolicy::Keep,
            roi_width: ROI_DIMS.0,
            roi_height: ROI_DIMS.1,
            synth: SynthConfig::default(),
            base_dir: PathBuf::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse `{value}` for `{key}`"))
}

fn parse_bins(key: &str, value: &str) -> Result<Vec<usize>, String> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn show_bins(bins: &[usize]) -> String {
    bins.iter()
        .map(|b| b.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

impl RunConfig {
    /// Parses a config file; keys not present keep their defaults.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(hopgr::Error::Io)?;
        let mut cfg = Self::parse_text(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: i + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|message| CliError::Config {
                    line: i + 1,
                    message,
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.synth;
        match key {
            "f0" => self.bank.f0 = parse(key, value)?,
            "sigma" => self.bank.sigma = parse(key, value)?,
            "half_size" => self.bank.half_size = parse(key, value)?,
            "orientations" => self.orientations = parse(key, value)?,
            "selected" => self.selected = parse(key, value)?,
            "cell" => {
                let c = parse(key, value)?;
                self.grid.cell_w = c;
                self.grid.cell_h = c;
            }
            "cell_w" => self.grid.cell_w = parse(key, value)?,
            "cell_h" => self.grid.cell_h = parse(key, value)?,
            "block_w" => self.grid.block_w = parse(key, value)?,
            "block_h" => self.grid.block_h = parse(key, value)?,
            "block_stride" => self.grid.stride = parse(key, value)?,
            "epsilon" => self.grid.epsilon = parse(key, value)?,
            "bins" => {
                self.grid.bins = match value {
                    "selected" => BinsMode::Selected,
                    "full" => BinsMode::Full,
                    other => return Err(format!("unknown bins mode `{other}` (selected|full)")),
                }
            }
            "metric" => self.metric = value.parse().map_err(|e: hopgr::Error| e.to_string())?,
            "mode" => self.mode = value.parse()?,
            "train_dir" => self.train_dir = opt_path(value),
            "dataset_dir" => self.dataset_dir = opt_path(value),
            "layout" => self.layout = value.parse().map_err(|e: hopgr::Error| e.to_string())?,
            "dataset_id" => self.dataset_id = (!value.is_empty()).then(|| value.to_string()),
            "prior" => self.prior = PathBuf::from(value),
            "archive" => self.archive = PathBuf::from(value),
            "csv" => self.csv = opt_path(value),
            "baseline_archive" => self.baseline_archive = opt_path(value),
            "report" => self.report = PathBuf::from(value),
            "det" => self.det = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "impostor_cap" => self.impostor_cap = parse(key, value)?,
            "roi" => self.roi = value.parse()?,
            "roi_width" => self.roi_width = parse(key, value)?,
            "roi_height" => self.roi_height = parse(key, value)?,
            "synth_out" => s.out = PathBuf::from(value),
            "synth_classes" => s.classes = parse(key, value)?,
            "synth_samples" => s.samples = parse(key, value)?,
            "synth_width" => s.width = parse(key, value)?,
            "synth_height" => s.height = parse(key, value)?,
            "synth_lines" => s.lines = parse(key, value)?,
            "synth_line_width" => s.line_width = parse(key, value)?,
            "synth_contrast" => s.contrast = parse(key, value)?,
            "synth_background" => s.background = parse(key, value)?,
            "synth_noise" => s.noise = parse(key, value)?,
            "synth_bins" => s.bins = parse_bins(key, value)?,
            "synth_class_sets" => {
                s.class_sets = value
                    .split(';')
                    .filter(|v| !v.trim().is_empty())
                    .map(|v| parse_bins(key, v.trim()))
                    .collect::<Result<_, _>>()?
            }
            "synth_geometry" => {
                s.geometry = match value {
                    "persistent" => SynthGeometry::Persistent,
                    "random" => SynthGeometry::Random,
                    other => return Err(format!("unknown geometry `{other}` (persistent|random)")),
                }
            }
            "synth_jitter" => s.jitter = parse(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Enforces the downstream parameter invariants.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |message: String| Err(CliError::Config { line: 0, message });
        if let Err(e) = self.bank.validate() {
            return fail(e.to_string());
        }
        if let Err(e) = self.grid.validate() {
            return fail(e.to_string());
        }
        if self.orientations == 0 {
            return fail("orientations must be >= 1".into());
        }
        if self.selected == 0 || self.selected > self.orientations {
            return fail(format!(
                "selected = {} must be in 1..=orientations ({})",
                self.selected, self.orientations
            ));
        }
        let s = &self.synth;
        let all_bins = s.bins.iter().chain(s.class_sets.iter().flatten());
        if let Some(b) = all_bins.into_iter().find(|&&b| b >= self.orientations) {
            return fail(format!(
                "synth bin {b} >= orientations ({})",
                self.orientations
            ));
        }
        if s.bins.is_empty() && s.class_sets.is_empty() && s.lines > 0 {
            return fail("synth_bins is empty".into());
        }
        if s.class_sets.iter().any(Vec::is_empty) {
            return fail("synth_class_sets contains an empty set".into());
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn roi_handling(&self) -> RoiHandling {
        let (w, h) = (self.roi_width, self.roi_height);
        match self.roi {
            RoiPolicy::Keep => RoiHandling::Keep,
            RoiPolicy::Strict => RoiHandling::Strict(w, h),
            RoiPolicy::Crop => RoiHandling::CenterCrop(w, h),
            RoiPolicy::Resize => RoiHandling::Resize(w, h),
        }
    }

    /// Angles of the synthetic orientation set of class `c`.
    pub fn synth_angles(&self, class: usize) -> Vec<f64> {
        let bins = if self.synth.class_sets.is_empty() {
            &self.synth.bins
        } else {
            &self.synth.class_sets[class % self.synth.class_sets.len()]
        };
        let mut bins = bins.clone();
        bins.sort_unstable();
        bins.dedup();
        bins.iter()
            .map(|&k| orientation_angle(k, self.orientations))
            .collect()
    }

    /// Every key with its effective value, as a loadable config file.
    pub fn to_text(&self) -> String {
        let s = &self.synth;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("f0", format!("{:?}", self.bank.f0));
        kv("sigma", format!("{:?}", self.bank.sigma));
        kv("half_size", self.bank.half_size.to_string());
        kv("orientations", self.orientations.to_string());
        kv("selected", self.selected.to_string());
        kv("cell_w", self.grid.cell_w.to_string());
        kv("cell_h", self.grid.cell_h.to_string());
        kv("block_w", self.grid.block_w.to_string());
        kv("block_h", self.grid.block_h.to_string());
        kv("block_stride", self.grid.stride.to_string());
        kv("epsilon", format!("{:?}", self.grid.epsilon));
        kv(
            "bins",
            match self.grid.bins {
                BinsMode::Selected => "selected".into(),
                BinsMode::Full => "full".into(),
            },
        );
        kv("metric", self.metric.to_string());
        kv("mode", self.mode.to_string());
        kv("train_dir", show_path(&self.train_dir));
        kv("dataset_dir", show_path(&self.dataset_dir));
        kv(
            "layout",
            match self.layout {
                DatasetLayout::Nested => "nested".into(),
                DatasetLayout::Flat => "flat".into(),
            },
        );
        kv("dataset_id", self.dataset_id.clone().unwrap_or_default());
        kv("prior", self.prior.display().to_string());
        kv("archive", self.archive.display().to_string());
        kv("csv", show_path(&self.csv));
        kv("baseline_archive", show_path(&self.baseline_archive));
        kv("report", self.report.display().to_string());
        kv("det", self.det.display().to_string());
        kv("seed", self.seed.to_string());
        kv("impostor_cap", self.impostor_cap.to_string());
        kv("roi", self.roi.to_string());
        kv("roi_width", self.roi_width.to_string());
        kv("roi_height", self.roi_height.to_string());
        kv("synth_out", s.out.display().to_string());
        kv("synth_classes", s.classes.to_string());
        kv("synth_samples", s.samples.to_string());
        kv("synth_width", s.width.to_string());
        kv("synth_height", s.height.to_string());
        kv("synth_lines", s.lines.to_string());
        kv("synth_line_width", format!("{:?}", s.line_width));
        kv("synth_contrast", format!("{:?}", s.contrast));
        kv("synth_background", format!("{:?}", s.background));
        kv("synth_noise", format!("{:?}", s.noise));
        kv("synth_bins", show_bins(&s.bins));
        kv(
            "synth_class_sets",
            s.class_sets
                .iter()
                .map(|b| show_bins(b))
                .collect::<Vec<_>>()
                .join(";"),
        );
        kv(
            "synth_geometry",
            match s.geometry {
                SynthGeometry::Persistent => "persistent".into(),
                SynthGeometry::Random => "random".into(),
            },
        );
        kv("synth_jitter", format!("{:?}", s.jitter));
        out
    }
}

/// Formats an angle `π k / o` as a fraction of π, e.g. `3π/16`.
pub fn angle_label(k: usize, o: usize) -> String {
    if k == 0 {
        return "0".into();
    }
    let g = gcd(k, o);
    let (n, d) = (k / g, o / g);
    match (n, d) {
        (1, 1) => "π".into(),
        (1, d) => format!("π/{d}"),
        (n, 1) => format!("{n}π"),
        (n, d) => format!("{n}π/{d}"),
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Angle in degrees, for human-readable tables.
pub fn degrees(theta: f64) -> f64 {
    theta * 180.0 / PI
}
