//! Synthetic vein-like images: straight dark bands on a bright background.
//!
//! A band at orientation `θ` runs along `(dx, dy) = (cos θ, -sin θ)` in
//! column/row coordinates, which is the direction the Gabor kernel of the same
//! `θ` responds to most strongly. Band edges are anti-aliased by the exact
//! 1D coverage of each pixel, so responses vary smoothly with position.

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// splitmix64 finalizer over `seed + (index + 1) * golden`; used to derive a
/// per-image seed from a batch seed.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub line_count: usize,
    /// Allowed band orientations with relative sampling weights.
    pub orientations: Vec<(f64, f64)>,
    pub line_width: f64,
    /// Depth of darkening at full coverage.
    pub contrast: f64,
    pub background: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            line_count: 6,
            orientations: vec![(0.0, 1.0)],
            line_width: 3.0,
            contrast: 0.4,
            background: 0.8,
            noise_sigma: 0.02,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Equal-weight orientation set.
    pub fn with_angles(mut self, angles: &[f64]) -> Self {
        self.orientations = angles.iter().map(|&a| (a, 1.0)).collect();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.width == 0 || self.height == 0 {
            return fail(format!(
                "size {}x{} must be positive",
                self.width, self.height
            ));
        }
        if self.line_count > 0 && self.orientations.is_empty() {
            return fail("lines requested but orientation set is empty".into());
        }
        if self
            .orientations
            .iter()
            .any(|&(a, w)| !a.is_finite() || !w.is_finite() || w < 0.0)
        {
            return fail("orientation angles must be finite and weights >= 0".into());
        }
        if self.line_count > 0 && self.orientations.iter().all(|&(_, w)| w == 0.0) {
            return fail("orientation weights sum to zero".into());
        }
        if !(self.line_width.is_finite() && self.line_width > 0.0) {
            return fail(format!("line width {} must be > 0", self.line_width));
        }
        if !(0.0..=1.0).contains(&self.background) || !(0.0..=1.0).contains(&self.contrast) {
            return fail("background and contrast must lie in [0, 1]".into());
        }
        if self.contrast > self.background {
            return fail(format!(
                "contrast {} exceeds background {}",
                self.contrast, self.background
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return fail(format!("noise sigma {} must be >= 0", self.noise_sigma));
        }
        Ok(())
    }
}

/// Geometry of one rendered band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineTruth {
    pub angle: f64,
    /// A point on the band axis, in (column, row) pixel coordinates.
    pub anchor: (f64, f64),
    pub width: f64,
}

impl LineTruth {
    /// Perpendicular distance from pixel center `(x, y)` to the band axis.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let (s, c) = self.angle.sin_cos();
        ((x - self.anchor.0) * s + (y - self.anchor.1) * c).abs()
    }

    /// Fraction of the unit pixel interval around `d` covered by the band.
    pub fn coverage(&self, d: f64) -> f64 {
        let half = self.width / 2.0;
        ((d + 0.5).min(half) - (d - 0.5).max(-half)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub image: GrayImage,
    pub lines: Vec<LineTruth>,
}

/// Draws band geometry for `spec` from `rng`.
pub fn sample_lines(spec: &SynthSpec, rng: &mut impl Rng) -> Result<Vec<LineTruth>> {
    if spec.line_count == 0 {
        return Ok(Vec::new());
    }
    let weights = WeightedIndex::new(spec.orientations.iter().map(|&(_, w)| w))
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let xs = Uniform::new(0.0, spec.width as f64).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let ys =
        Uniform::new(0.0, spec.height as f64).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    Ok((0..spec.line_count)
        .map(|_| LineTruth {
            angle: spec.orientations[weights.sample(rng)].0,
            anchor: (xs.sample(rng), ys.sample(rng)),
            width: spec.line_width,
        })
        .collect())
}

/// Renders bands over the background; overlapping bands take the maximum
/// coverage so intensities never fall below `background - contrast`.
/// Gaussian noise is added from `rng` when `noise_sigma > 0`.
pub fn render(spec: &SynthSpec, lines: &[LineTruth], rng: &mut impl Rng) -> Result<GrayImage> {
    spec.validate()?;
    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?)
    } else {
        None
    };
    let mut pixels = Vec::with_capacity(spec.width * spec.height);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let cover = lines
                .iter()
                .map(|l| l.coverage(l.distance(x as f64, y as f64)))
                .fold(0.0, f64::max);
            let mut v = spec.background - spec.contrast * cover;
            if let Some(n) = &noise {
                v += n.sample(rng);
            }
            pixels.push(v.clamp(0.0, 1.0));
        }
    }
    GrayImage::new(spec.width, spec.height, pixels)
}

/// Deterministic image plus ground truth for `spec`.
pub fn generate(spec: &SynthSpec) -> Result<SynthImage> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lines = sample_lines(spec, &mut rng)?;
    let image = render(spec, &lines, &mut rng)?;
    Ok(SynthImage { image, lines })
}

/// `count` images from `spec`, image `i` seeded by `child_seed(spec.seed, i)`.
pub fn generate_batch(spec: &SynthSpec, count: usize) -> Result<Vec<SynthImage>> {
    use rayon::prelude::*;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            generate(&SynthSpec {
                seed: child_seed(spec.seed, i),
                ..spec.clone()
            })
        })
        .collect()
}

/// A labeled synthetic dataset: each class has its own orientation set.
///
/// With `persistent_geometry`, a class is one fixed band layout and its
/// samples differ by a uniform shift of up to `jitter` pixels plus fresh
/// noise (a "finger" imaged repeatedly). Without it, every sample draws new
/// geometry and classes differ only in their orientation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPlan {
    pub base: SynthSpec,
    pub class_orientations: Vec<Vec<f64>>,
    pub samples_per_class: usize,
    pub persistent_geometry: bool,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub class: usize,
    pub sample: usize,
    pub image: SynthImage,
}

pub fn generate_dataset(plan: &DatasetPlan) -> Result<Vec<SynthSample>> {
    use rayon::prelude::*;
    if plan.class_orientations.is_empty() || plan.samples_per_class == 0 {
        return Err(Error::InvalidSpec(
            "dataset needs classes and samples".into(),
        ));
    }
    if !(plan.jitter.is_finite() && plan.jitter >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "jitter {} must be >= 0",
            plan.jitter
        )));
    }
    let jobs: Vec<(usize, usize)> = (0..plan.class_orientations.len())
        .flat_map(|c| (0..plan.samples_per_class).map(move |s| (c, s)))
        .collect();
    jobs.into_par_iter()
        .map(|(c, s)| {
            let class_seed = child_seed(plan.base.seed, c as u64);
            let spec = SynthSpec {
                seed: child_seed(class_seed, s as u64),
                ..plan.base.clone()
            }
            .with_angles(&plan.class_orientations[c]);
            let image = if plan.persistent_geometry {
                spec.validate()?;
                let mut class_rng = ChaCha8Rng::seed_from_u64(class_seed);
                let layout = sample_lines(&spec, &mut class_rng)?;
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                let (dx, dy) = if plan.jitter > 0.0 {
                    (
                        rng.random_range(-plan.jitter..=plan.jitter),
                        rng.random_range(-plan.jitter..=plan.jitter),
                    )
                } else {
                    (0.0, 0.0)
                };
                let lines: Vec<LineTruth> = layout
                    .into_iter()
                    .map(|l| LineTruth {
                        anchor: (l.anchor.0 + dx, l.anchor.1 + dy),
                        ..l
                    })
                    .collect();
                let image = render(&spec, &lines, &mut rng)?;
                SynthImage { image, lines }
            } else {
                generate(&spec)?
            };
            Ok(SynthSample {
                class: c,
                sample: s,
                image,
            })
        })
        .collect()
}
