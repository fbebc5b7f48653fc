//! Descriptor invariants on one seeded random input: length formula,
//! non-negativity, block norms, cell-shift equivariance, prior mismatch.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hopgr::matching::check_compatible;
use hopgr::prior::select_directions;
use hopgr::synth::generate;
use hopgr::{BankParams, BinsMode, Error, GridConfig, HopgrExtractor, PriorDirections, SynthSpec};

/// A random learned prior over 16 bins with the given bank.
pub fn random_prior(rng: &mut impl Rng, bank: BankParams) -> PriorDirections {
    let mut hcr = PriorDirections::uniform(16, bank).unwrap().hcr;
    for s in &mut hcr.sums {
        *s = -rng.random_range(0.0..100.0);
    }
    select_directions(&hcr, rng.random_range(1..=16)).unwrap()
}

fn blocks_along(cells: usize, block: usize, stride: usize) -> usize {
    if cells < block {
        0
    } else {
        (cells - block) / stride + 1
    }
}

/// Checks every invariant for one seed; `Err` names the first violation.
pub fn check(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bank = BankParams {
        half_size: rng.random_range(2..=8),
        ..BankParams::default()
    };
    let prior = random_prior(&mut rng, bank);
    let block_w = rng.random_range(1..=3);
    let block_h = rng.random_range(1..=3);
    let grid = GridConfig {
        cell_w: rng.random_range(3..=10),
        cell_h: rng.random_range(3..=10),
        block_w,
        block_h,
        stride: 1,
        epsilon: 1e-2,
        bins: if rng.random_bool(0.2) {
            BinsMode::Full
        } else {
            BinsMode::Selected
        },
    };
    let ex = HopgrExtractor::new(&prior, grid, bank).map_err(|e| e.to_string())?;

    // A band image wider than two views of it offset by `shift` whole cells.
    let shift = rng.random_range(1..=2);
    let half = bank.half_size;
    let min_cx = (2 * half).div_ceil(grid.cell_w) + shift + block_w + 2;
    let min_cy = (2 * half).div_ceil(grid.cell_h) + block_h + 1;
    let (w, h) = (
        grid.cell_w * rng.random_range(min_cx..=min_cx + 4),
        grid.cell_h * rng.random_range(min_cy..=min_cy + 3),
    );
    let picked = index::sample(&mut rng, 16, 4).into_vec();
    let angles: Vec<f64> = picked
        .iter()
        .map(|&k| std::f64::consts::PI * k as f64 / 16.0)
        .collect();
    let spec = SynthSpec {
        width: w + shift * grid.cell_w,
        height: h,
        line_count: 8,
        seed: rng.random(),
        ..SynthSpec::default()
    }
    .with_angles(&angles);
    let big = generate(&spec).map_err(|e| e.to_string())?.image;
    let a = big.crop(0, 0, w, h).unwrap();
    let b = big.crop(shift * grid.cell_w, 0, w, h).unwrap();
    let da = ex.extract(&a).map_err(|e| e.to_string())?;
    let db = ex.extract(&b).map_err(|e| e.to_string())?;

    // Length formula, computed independently of the library's layout.
    let bins = match grid.bins {
        BinsMode::Selected => prior.selected_count(),
        BinsMode::Full => 16,
    };
    let (cx, cy) = (w / grid.cell_w, h / grid.cell_h);
    let want =
        blocks_along(cx, block_w, 1) * blocks_along(cy, block_h, 1) * block_w * block_h * bins;
    if da.values.len() != want {
        return Err(format!("length {} != {want}", da.values.len()));
    }
    if let Some(v) = da.values.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(format!("negative or NaN entry {v}"));
    }
    if let Some(n) = da
        .blocks()
        .map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt())
        .find(|&n| n > 1.0)
    {
        return Err(format!("block norm {n} > 1"));
    }

    // Shift equivariance: block (bx + shift) of `a` equals block bx of `b`
    // wherever neither view's border (kernel reach) touches the block.
    let reach_cells = bank.half_size.div_ceil(grid.cell_w);
    let bx_count = da.layout.blocks_x;
    let mut compared = 0;
    for by in 0..da.layout.blocks_y {
        let bys = by * grid.cell_h;
        if bys < bank.half_size || bys + block_h * grid.cell_h + bank.half_size > h {
            continue;
        }
        for bx in reach_cells..bx_count {
            let ax = bx + shift;
            if ax >= bx_count || (ax + block_w) * grid.cell_w + bank.half_size > w {
                continue;
            }
            let len = da.layout.block_len;
            let va = &da.values[(by * bx_count + ax) * len..][..len];
            let vb = &db.values[(by * bx_count + bx) * len..][..len];
            if let Some((x, y)) = va.iter().zip(vb).find(|(x, y)| (*x - *y).abs() > 1e-12) {
                return Err(format!("shift mismatch at block ({bx},{by}): {x} vs {y}"));
            }
            compared += 1;
        }
    }
    if compared == 0 {
        return Err(format!(
            "no interior blocks to compare ({w}x{h}, grid {grid:?})"
        ));
    }

    // Prior mismatch: other bank parameters, and descriptors from another prior.
    let other_bank = BankParams {
        sigma: bank.sigma + 0.5,
        ..bank
    };
    match HopgrExtractor::new(&prior, grid, other_bank) {
        Err(Error::PriorMismatch(_)) => {}
        other => {
            return Err(format!(
                "bank mismatch not rejected: {:?}",
                other.map(|_| ())
            ))
        }
    }
    let other = random_prior(&mut rng, bank)
        .with_dataset_id(format!("other-{seed}"))
        .unwrap();
    let dc = HopgrExtractor::new(&other, grid, bank)
        .and_then(|e| e.extract(&a))
        .map_err(|e| e.to_string())?;
    match check_compatible(&da, &dc) {
        Err(Error::PriorMismatch(_)) => {}
        Err(Error::LayoutMismatch(_)) if dc.layout != da.layout => {}
        other => {
            return Err(format!(
                "descriptors from another prior accepted: {other:?}"
            ))
        }
    }
    Ok(())
}
