//! Descriptor distances.

use std::fmt;
use std::str::FromStr;

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};

const CHI_SQUARE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    ChiSquare,
    Cosine,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::ChiSquare => "chi2",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "chi2" | "chi_square" => Ok(Metric::ChiSquare),
            "cosine" | "cosine_distance" => Ok(Metric::Cosine),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

impl Metric {
    /// Distance between raw vectors of equal length.
    pub fn between(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::ChiSquare => {
                0.5 * a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y) / (x + y + CHI_SQUARE_GUARD))
                    .sum::<f64>()
            }
            Metric::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                if na == 0.0 || nb == 0.0 {
                    0.0
                } else {
                    // Rounding can push the ratio a hair above 1.
                    (1.0 - dot / (na.sqrt() * nb.sqrt())).max(0.0)
                }
            }
        }
    }
}

/// Fails unless the two descriptors come from the same grid, layout and prior.
pub fn check_compatible(a: &Descriptor, b: &Descriptor) -> Result<()> {
    if a.layout != b.layout || a.grid != b.grid {
        return Err(Error::LayoutMismatch(format!(
            "{:?}/{:?} vs {:?}/{:?}",
            a.layout, a.grid, b.layout, b.grid
        )));
    }
    if a.prior_id != b.prior_id {
        return Err(Error::PriorMismatch(
            "descriptors were extracted with different priors".into(),
        ));
    }
    Ok(())
}

pub fn distance(a: &Descriptor, b: &Descriptor, metric: Metric) -> Result<f64> {
    check_compatible(a, b)?;
    Ok(metric.between(&a.values, &b.values))
}
