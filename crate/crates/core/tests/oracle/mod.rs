//! Straight-line reference implementations, written for clarity only: no
//! padding buffers, no flipping tricks, no merges. Shared by the core
//! integration tests and the acceptance suite.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod checks;
pub mod invariants;

use std::f64::consts::PI;

/// Even Gabor sampled on a (2h+1)^2 grid, rows offset `x`, columns `y`,
/// mean removed. `k[i][j]` is row offset `i - h`, column offset `j - h`.
pub fn gabor(theta: f64, f0: f64, sigma: f64, h: usize) -> Vec<Vec<f64>> {
    let side = 2 * h + 1;
    let mut k = vec![vec![0.0; side]; side];
    let mut total = 0.0;
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let x = i as f64 - h as f64;
            let y = j as f64 - h as f64;
            let xt = x * theta.cos() + y * theta.sin();
            let yt = -x * theta.sin() + y * theta.cos();
            *v = (-(xt * xt + yt * yt) / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
                * (2.0 * PI * f0 * xt).cos();
            total += *v;
        }
    }
    let mean = total / (side * side) as f64;
    for v in k.iter_mut().flatten() {
        *v -= mean;
    }
    k
}

fn clamp(v: isize, n: usize) -> usize {
    v.clamp(0, n as isize - 1) as usize
}

/// `out(r, c) = sum_{i,j} K(i, j) * I(r - (i-h), c - (j-h))`, edges replicated.
pub fn convolve(img: &[f64], w: usize, h: usize, k: &[Vec<f64>]) -> Vec<f64> {
    let half = (k.len() / 2) as isize;
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (i, row) in k.iter().enumerate() {
                for (j, &kv) in row.iter().enumerate() {
                    let rr = clamp(r as isize - (i as isize - half), h);
                    let cc = clamp(c as isize - (j as isize - half), w);
                    acc += kv * img[rr * w + cc];
                }
            }
            out[r * w + c] = acc;
        }
    }
    out
}

/// Per-pixel minimum over orientations and the first index achieving it.
pub fn competitive(
    img: &[f64],
    w: usize,
    h: usize,
    kernels: &[Vec<Vec<f64>>],
) -> (Vec<f64>, Vec<usize>) {
    let responses: Vec<Vec<f64>> = kernels.iter().map(|k| convolve(img, w, h, k)).collect();
    let mut m = vec![0.0; w * h];
    let mut idx = vec![0; w * h];
    for p in 0..w * h {
        let mut best = 0;
        for o in 1..responses.len() {
            if responses[o][p] < responses[best][p] {
                best = o;
            }
        }
        m[p] = responses[best][p];
        idx[p] = best;
    }
    (m, idx)
}

/// Per-orientation sum of competitive responses over a corpus.
pub fn hcr(images: &[(Vec<f64>, usize, usize)], kernels: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let mut sums = vec![0.0; kernels.len()];
    for (img, w, h) in images {
        let (m, idx) = competitive(img, *w, *h, kernels);
        for o in 0..kernels.len() {
            for p in 0..m.len() {
                if idx[p] == o {
                    sums[o] += m[p];
                }
            }
        }
    }
    sums
}

/// Repeatedly extracts the smallest remaining sum (ties: smaller angle),
/// then reports the chosen bins in ascending order.
pub fn select(thetas: &[f64], sums: &[f64], count: usize) -> Vec<usize> {
    let mut taken = vec![false; sums.len()];
    let mut chosen = Vec::new();
    for _ in 0..count {
        let mut best: Option<usize> = None;
        for k in 0..sums.len() {
            if taken[k] {
                continue;
            }
            best = match best {
                None => Some(k),
                Some(b) if sums[k] < sums[b] || (sums[k] == sums[b] && thetas[k] < thetas[b]) => {
                    Some(k)
                }
                keep => keep,
            };
        }
        let b = best.unwrap();
        taken[b] = true;
        chosen.push(b);
    }
    chosen.sort_unstable();
    chosen
}

pub struct Grid {
    pub cell: (usize, usize),
    pub block: (usize, usize),
    pub stride: usize,
    pub epsilon: f64,
}

/// Descriptor straight from the definition: for each block (row-major), for
/// each cell in it (row-major), for each bin, sum the votes of the cell's
/// pixels for that bin; then scale the block by 1/sqrt(|v|^2 + eps^2).
pub fn descriptor(m: &[f64], idx: &[usize], w: usize, bins: usize, g: &Grid) -> Vec<f64> {
    let h = m.len() / w;
    let (cw, ch) = g.cell;
    let (ncx, ncy) = (w / cw, h / ch);
    let (bw, bh) = g.block;
    let mut out = Vec::new();
    let mut by = 0;
    while by + bh <= ncy {
        let mut bx = 0;
        while bx + bw <= ncx {
            let mut block = Vec::new();
            for cy in by..by + bh {
                for cx in bx..bx + bw {
                    for b in 0..bins {
                        let mut v = 0.0;
                        for y in cy * ch..(cy + 1) * ch {
                            for x in cx * cw..(cx + 1) * cw {
                                if idx[y * w + x] == b && m[y * w + x] < 0.0 {
                                    v += -m[y * w + x];
                                }
                            }
                        }
                        block.push(v);
                    }
                }
            }
            let norm = (block.iter().map(|v| v * v).sum::<f64>() + g.epsilon * g.epsilon).sqrt();
            out.extend(block.iter().map(|v| v / norm));
            bx += g.stride;
        }
        by += g.stride;
    }
    out
}

/// FAR/FRR at every distinct score by direct counting, then the EER at the
/// first threshold where FAR >= FRR (interpolated from the previous one), or
/// the closest approach when they never cross. Returns (EER %, threshold).
pub fn eer(genuine: &[f64], impostor: &[f64]) -> (f64, f64) {
    let mut ts: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    let pts: Vec<(f64, f64, f64)> = ts
        .iter()
        .map(|&t| {
            let far = impostor.iter().filter(|&&d| d <= t).count() as f64 / impostor.len() as f64;
            let frr = genuine.iter().filter(|&&d| d > t).count() as f64 / genuine.len() as f64;
            (t, far, frr)
        })
        .collect();
    for i in 0..pts.len() {
        let (t, far, frr) = pts[i];
        if far - frr >= 0.0 {
            if far == frr {
                return (100.0 * far, t);
            }
            if i > 0 {
                let (t0, far0, frr0) = pts[i - 1];
                let (g0, g1) = (far0 - frr0, far - frr);
                let a = -g0 / (g1 - g0);
                return (100.0 * (far0 + a * (far - far0)), t0 + a * (t - t0));
            }
            break;
        }
    }
    let mut best = pts[0];
    for &p in &pts {
        if (p.1 - p.2).abs() < (best.1 - best.2).abs() {
            best = p;
        }
    }
    (50.0 * (best.1 + best.2), best.0)
}
