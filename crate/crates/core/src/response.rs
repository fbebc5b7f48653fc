//! Oriented filtering and the competitive (minimum) response.
//!
//! Vein lines are darker than their surroundings, so the even Gabor kernel
//! tuned to a line's orientation produces a strongly negative value on it. At
//! every pixel the most negative response over the bank is kept together with
//! the index of the orientation that produced it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gabor::{FilterBank, Kernel};
use crate::image::GrayImage;

/// A real-valued map with the same geometry as the image it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ResponseMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Per-pixel competitive response `m` and winning orientation index.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseField {
    pub width: usize,
    pub height: usize,
    /// Signed minimum response over the bank, row-major.
    pub m: Vec<f64>,
    /// Index into `bank_thetas` of the orientation achieving `m`.
    pub theta_idx: Vec<usize>,
    pub bank_thetas: Vec<f64>,
}

impl ResponseField {
    /// Field of the given geometry with every response zero and index 0.
    pub fn zeros(width: usize, height: usize, bank_thetas: Vec<f64>) -> Self {
        Self {
            width,
            height,
            m: vec![0.0; width * height],
            theta_idx: vec![0; width * height],
            bank_thetas,
        }
    }

    #[inline]
    pub fn m_at(&self, x: usize, y: usize) -> f64 {
        self.m[y * self.width + x]
    }

    #[inline]
    pub fn theta_at(&self, x: usize, y: usize) -> usize {
        self.theta_idx[y * self.width + x]
    }
}

/// Copies `image` into a buffer extended by `half` pixels on every side using
/// edge replication. Returns the padded width alongside the buffer.
fn pad_replicate(image: &GrayImage, half: usize) -> (usize, Vec<f64>) {
    let (w, h) = (image.width(), image.height());
    let pw = w + 2 * half;
    let ph = h + 2 * half;
    let mut padded = Vec::with_capacity(pw * ph);
    for py in 0..ph {
        let src = image.row(py.saturating_sub(half).min(h - 1));
        let left = src[0];
        let right = src[w - 1];
        padded.extend(std::iter::repeat_n(left, half));
        padded.extend_from_slice(src);
        padded.extend(std::iter::repeat_n(right, half));
    }
    (pw, padded)
}

fn check_size(image: &GrayImage, side: usize) -> Result<()> {
    if image.width() < side || image.height() < side {
        return Err(Error::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            side,
        });
    }
    Ok(())
}

/// Correlates the padded image with `flipped` (already the 180° rotation of
/// the convolution kernel). Each output row accumulates one kernel tap at a
/// time as a contiguous axpy, which the compiler vectorizes.
///
/// With `centered`, every tap multiplies `p - p_center` instead of `p`. For a
/// zero-sum kernel this is the same convolution, but a flat neighbourhood
/// yields exactly `0.0` rather than rounding residue of order 1e-17.
fn convolve_padded(
    padded: &[f64],
    padded_width: usize,
    width: usize,
    height: usize,
    flipped: &[f64],
    side: usize,
    centered: bool,
) -> Vec<f64> {
    let half = side / 2;
    let zeros = vec![0.0; width];
    let mut out = vec![0.0; width * height];
    for (y, out_row) in out.chunks_exact_mut(width).enumerate() {
        let center = if centered {
            let start = (y + half) * padded_width + half;
            &padded[start..start + width]
        } else {
            &zeros[..]
        };
        for a in 0..side {
            let src_row = &padded[(y + a) * padded_width..(y + a + 1) * padded_width];
            let taps = &flipped[a * side..(a + 1) * side];
            for (b, &w) in taps.iter().enumerate() {
                let src = &src_row[b..b + width];
                for ((o, &s), &c) in out_row.iter_mut().zip(src).zip(center) {
                    *o += w * (s - c);
                }
            }
        }
    }
    out
}

fn flip(kernel: &Kernel) -> Vec<f64> {
    kernel.weights().iter().rev().copied().collect()
}

/// True 2D convolution with edge-replicated borders; output has the image's
/// dimensions.
pub fn convolve(image: &GrayImage, kernel: &Kernel) -> Result<ResponseMap> {
    check_size(image, kernel.side())?;
    let (pw, padded) = pad_replicate(image, kernel.half());
    let values = convolve_padded(
        &padded,
        pw,
        image.width(),
        image.height(),
        &flip(kernel),
        kernel.side(),
        false,
    );
    Ok(ResponseMap {
        width: image.width(),
        height: image.height(),
        values,
    })
}

/// Convolves with every kernel of the bank, in parallel across orientations.
///
/// Bank kernels are zero-mean, so responses are evaluated relative to the
/// center pixel; flat regions give exactly zero for every orientation.
pub fn oriented_responses(image: &GrayImage, bank: &FilterBank) -> Result<Vec<ResponseMap>> {
    check_size(image, bank.side())?;
    let half = bank.side() / 2;
    let (pw, padded) = pad_replicate(image, half);
    let (w, h) = (image.width(), image.height());
    Ok(bank
        .kernels()
        .par_iter()
        .map(|k| ResponseMap {
            width: w,
            height: h,
            values: convolve_padded(&padded, pw, w, h, &flip(k), k.side(), true),
        })
        .collect())
}

/// Per-pixel minimum over the bank's responses and its orientation index.
/// Ties resolve to the smallest index.
pub fn competitive_response(image: &GrayImage, bank: &FilterBank) -> Result<ResponseField> {
    let maps = oriented_responses(image, bank)?;
    let n = image.width() * image.height();
    let mut m = maps[0].values.clone();
    let mut theta_idx = vec![0usize; n];
    for (k, map) in maps.iter().enumerate().skip(1) {
        for ((best, idx), &v) in m.iter_mut().zip(theta_idx.iter_mut()).zip(&map.values) {
            if v < *best {
                *best = v;
                *idx = k;
            }
        }
    }
    Ok(ResponseField {
        width: image.width(),
        height: image.height(),
        m,
        theta_idx,
        bank_thetas: bank.thetas().to_vec(),
    })
}
