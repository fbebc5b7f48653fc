//! Seeded comparisons of the library against the references in `super`.
//! Each returns the worst absolute error and the number of exact-match
//! failures (argmin, selection) over all generated cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hopgr::descriptor::{assemble_blocks, cell_histograms};
use hopgr::eval::{compute_eer, ScoreSet};
use hopgr::prior::{accumulate_hcr, smallest_bins};
use hopgr::{
    competitive_response, convolve, make_kernel, uniform_orientations, BankParams, FilterBank,
    GaborParams, GrayImage, GridConfig, HopgrExtractor, PriorDirections, ResponseField,
};

#[derive(Debug, Default, Clone, Copy)]
pub struct Outcome {
    pub cases: usize,
    pub max_err: f64,
    pub mismatches: usize,
}

impl Outcome {
    fn err(&mut self, a: f64, b: f64) {
        self.max_err = self.max_err.max((a - b).abs());
    }

    fn errs(&mut self, a: &[f64], b: &[f64]) {
        if a.len() != b.len() {
            self.mismatches += 1;
            return;
        }
        a.iter().zip(b).for_each(|(&x, &y)| self.err(x, y));
    }

    pub fn ok(&self, tol: f64) -> bool {
        self.cases > 0 && self.mismatches == 0 && self.max_err <= tol
    }
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> GrayImage {
    let pixels = (0..w * h).map(|_| rng.random::<f64>()).collect();
    GrayImage::new(w, h, pixels).unwrap()
}

fn random_bank(rng: &mut impl Rng) -> BankParams {
    BankParams {
        f0: rng.random_range(0.05..0.25),
        sigma: rng.random_range(1.0..4.0),
        half_size: [2, 3, 4, 6, 8][rng.random_range(0..5)],
    }
}

fn ref_kernels(thetas: &[f64], p: BankParams) -> Vec<Vec<Vec<f64>>> {
    thetas
        .iter()
        .map(|&t| super::gabor(t, p.f0, p.sigma, p.half_size))
        .collect()
}

pub fn kernels(seed: u64, cases: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut o = Outcome::default();
    for _ in 0..cases {
        let p = random_bank(&mut rng);
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let k = make_kernel(&GaborParams::new(theta, p)).unwrap();
        let r = super::gabor(theta, p.f0, p.sigma, p.half_size);
        o.errs(k.weights(), &r.concat());
        o.cases += 1;
    }
    o
}

pub fn convolution(seed: u64, cases: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut o = Outcome::default();
    for _ in 0..cases {
        let p = random_bank(&mut rng);
        let side = 2 * p.half_size + 1;
        let (w, h) = (rng.random_range(side..=32), rng.random_range(side..=32));
        let img = random_image(&mut rng, w, h);
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let k = make_kernel(&GaborParams::new(theta, p)).unwrap();
        let got = convolve(&img, &k).unwrap();
        let kref: Vec<Vec<f64>> = k.weights().chunks(side).map(<[f64]>::to_vec).collect();
        o.errs(&got.values, &super::convolve(img.pixels(), w, h, &kref));
        o.cases += 1;
    }
    o
}

pub fn competitive(seed: u64, cases: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut o = Outcome::default();
    for _ in 0..cases {
        let p = random_bank(&mut rng);
        let count = rng.random_range(1..=4);
        let side = 2 * p.half_size + 1;
        let (w, h) = (rng.random_range(side..=32), rng.random_range(side..=32));
        let img = random_image(&mut rng, w, h);
        let bank = FilterBank::uniform(count, p).unwrap();
        let field = competitive_response(&img, &bank).unwrap();
        let (m, idx) = super::competitive(img.pixels(), w, h, &ref_kernels(bank.thetas(), p));
        o.errs(&field.m, &m);
        o.mismatches += field
            .theta_idx
            .iter()
            .zip(&idx)
            .filter(|(a, b)| a != b)
            .count();
        o.cases += 1;
    }
    o
}

pub fn hcr(seed: u64, cases: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut o = Outcome::default();
    for _ in 0..cases {
        let p = random_bank(&mut rng);
        let count = rng.random_range(2..=4);
        let side = 2 * p.half_size + 1;
        let images: Vec<GrayImage> = (0..rng.random_range(1..=3))
            .map(|_| {
                let (w, h) = (rng.random_range(side..=32), rng.random_range(side..=32));
                random_image(&mut rng, w, h)
            })
            .collect();
        let bank = FilterBank::uniform(count, p).unwrap();
        let got = accumulate_hcr(&images, &bank).unwrap();
        let refs: Vec<_> = images
            .iter()
            .map(|i| (i.pixels().to_vec(), i.width(), i.height()))
            .collect();
        o.errs(
            &got.sums,
            &super::hcr(&refs, &ref_kernels(bank.thetas(), p)),
        );
        o.cases += 1;
    }
    o
}

/// Selection on random sums with frequent exact ties.
pub fn selection(seed: u64, cases: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut o = Outcome::default();
    for _ in 0..cases {
        let n = rng.random_range(1..=16);
        let thetas = uniform_orientations(n).unwrap();
        let sums: Vec<f64> = (0..n).map(|_| -(rng.random_range(0..6) as f64)).collect();
        let count = rng.random_range(1..=n);
        let mut got = smallest_bins(&thetas, &sums, count);
        got.sort_unstable();
        if got != super::select(&thetas, &sums, count) {
            o.mismatches += 1;
        }
        o.cases += 1;
    }
    o
}

fn random_grid(rng: &mut impl Rng) -> GridConfig {
    let block_w = rng.random_range(1..=3);
    let block_h = rng.random_range(1..=3);
    GridConfig {
        cell_w: rng.random_range(1..=6),
        cell_h: rng.random_range(1..=6),
        block_w,
        block_h,
        stride: rng.random_range(1..=block_w.min(block_h)),
        epsilon: [1e-2, 1e-3, 1.0][rng.random_range(0..3)],
        ..GridConfig::default()
    }
}

fn ref_grid(g: &GridConfig) -> super::Grid {
    super::Grid {
        cell: (g.cell_w, g.cell_h),
        block: (g.block_w, g.block_h),
        stride: g.stride,
        epsilon: g.epsilon,
    }
}

/// Cell histograms plus block assembly on random response fields, and full
/// extraction on random images against the reference pipeline.
pub fn descriptor(seed: u64, cases: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut o = Outcome::default();
    for _ in 0..cases {
        let grid = random_grid(&mut rng);
        let cells_x = rng.random_range(grid.block_w..=(32 / grid.cell_w).max(grid.block_w));
        let cells_y = rng.random_range(grid.block_h..=(32 / grid.cell_h).max(grid.block_h));
        let (w, h) = (cells_x * grid.cell_w, cells_y * grid.cell_h);
        let bins = rng.random_range(1..=4);
        let mut field = ResponseField::zeros(w, h, uniform_orientations(bins).unwrap());
        for p in 0..w * h {
            field.m[p] = rng.random_range(-1.0..0.5);
            field.theta_idx[p] = rng.random_range(0..bins);
        }
        let cells = cell_histograms(&field, &grid).unwrap();
        let got = assemble_blocks(&cells, &grid, [0; 32]).unwrap();
        let want = super::descriptor(&field.m, &field.theta_idx, w, bins, &ref_grid(&grid));
        o.errs(&got.values, &want);
        o.cases += 1;
    }

    for _ in 0..cases / 4 {
        let p = BankParams {
            half_size: 4,
            ..random_bank(&mut rng)
        };
        let grid = GridConfig {
            cell_w: 4,
            cell_h: 4,
            ..GridConfig::default()
        };
        let count = rng.random_range(1..=4);
        let prior = PriorDirections::uniform(count, p).unwrap();
        let img = random_image(&mut rng, 32, 24);
        let got = HopgrExtractor::new(&prior, grid, p)
            .unwrap()
            .extract(&img)
            .unwrap();
        let (m, idx) = super::competitive(
            img.pixels(),
            32,
            24,
            &ref_kernels(&prior.selected_thetas(), p),
        );
        o.errs(
            &got.values,
            &super::descriptor(&m, &idx, 32, count, &ref_grid(&grid)),
        );
        o.cases += 1;
    }
    o
}

/// Score sets of up to 200 values, quantized so ties are common.
pub fn eer(seed: u64, cases: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut o = Outcome::default();
    for _ in 0..cases {
        let ng = rng.random_range(1..=100);
        let ni = rng.random_range(1..=100);
        let shift = rng.random_range(0.0..3.0);
        let levels = [8.0, 64.0, 1e6][rng.random_range(0..3)];
        let q = |v: f64| (v * levels).round() / levels;
        let genuine: Vec<f64> = (0..ng).map(|_| q(rng.random_range(0.0..2.0))).collect();
        let impostor: Vec<f64> = (0..ni)
            .map(|_| q(rng.random_range(shift..shift + 2.0)))
            .collect();
        let report = compute_eer(&ScoreSet::from_distances(&genuine, &impostor)).unwrap();
        let (eer, t) = super::eer(&genuine, &impostor);
        o.err(report.eer, eer);
        o.err(report.threshold_at_eer, t);
        o.cases += 1;
    }
    o
}
