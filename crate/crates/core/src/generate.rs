//! Seeded random test functions.
//!
//! Fibers are sums of a few smooth bumps and a few Haar-type spikes, so both
//! the smooth and the rough paths of the decomposition get exercised. Tensor
//! functions have 1 to 8 terms over randomly drawn disjoint row sets.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::grid::{DenseFunction2D, Grid1D, SampledFunction1D, TensorFunction2D, TensorTerm};

/// Description stamped into experiment reports.
pub const GENERATOR_NOTE: &str = "test functions: tensor sums of 1-8 terms over disjoint random row sets; \
     fibers are sums of 1-4 smooth bumps and 1-6 Haar-type spikes (generator choice of this tool)";

pub fn random_fiber<R: Rng + ?Sized>(rng: &mut R, grid: &Grid1D) -> SampledFunction1D {
    let n = grid.count();
    let h = grid.step();
    let mut values = vec![0.0; n];

    let bumps = rng.random_range(1..=4);
    for _ in 0..bumps {
        let center = grid.origin() + rng.random::<f64>() * grid.extent();
        let width = h * rng.random_range(2.0..(n as f64 / 8.0).max(3.0));
        let amp = rng.random_range(-1.0..1.0);
        for (m, v) in values.iter_mut().enumerate() {
            let u = (grid.point(m) - center) / width;
            *v += amp * (-0.5 * u * u).exp();
        }
    }

    let spikes = rng.random_range(1..=6);
    for _ in 0..spikes {
        let width = 1usize << rng.random_range(0..=2u32).min(grid.depth());
        let start = rng.random_range(0..=(n - width));
        let height = rng.random_range(2.0..20.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let haar = width > 1 && rng.random::<bool>();
        for k in 0..width {
            let sign = if haar && 2 * k >= width { -1.0 } else { 1.0 };
            values[start + k] += sign * height;
        }
    }

    SampledFunction1D::new(*grid, values).expect("generated samples are finite")
}

/// Fiber made only of tall isolated spikes: `count` single-sample spikes of
/// the given height at random positions.
pub fn spike_fiber<R: Rng + ?Sized>(
    rng: &mut R,
    grid: &Grid1D,
    count: usize,
    height: f64,
) -> SampledFunction1D {
    let mut values = vec![0.0; grid.count()];
    for _ in 0..count {
        let m = rng.random_range(0..grid.count());
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        values[m] = sign * height * rng.random_range(0.5..1.0);
    }
    SampledFunction1D::new(*grid, values).expect("generated samples are finite")
}

/// Random disjoint row sets for `terms` terms; some rows may stay empty.
pub fn random_row_sets<R: Rng + ?Sized>(rng: &mut R, rows: usize, terms: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(rng);
    let used = rng.random_range(terms.min(rows)..=rows);
    let mut sets = vec![Vec::new(); terms];
    for (k, &n) in order[..used].iter().enumerate() {
        let j = if k < terms { k } else { rng.random_range(0..terms) };
        sets[j].push(n);
    }
    sets.retain(|s| !s.is_empty());
    sets
}

pub fn random_tensor<R: Rng + ?Sized>(rng: &mut R, gx: &Grid1D, gy: &Grid1D) -> TensorFunction2D {
    let terms = rng.random_range(1..=8);
    let sets = random_row_sets(rng, gy.count(), terms);
    tensor_from_sets(gx, gy, sets, |rng_fiber| random_fiber(rng_fiber, gx), rng)
}

/// Tensor function whose fibers are [`spike_fiber`]s.
pub fn spike_tensor<R: Rng + ?Sized>(
    rng: &mut R,
    gx: &Grid1D,
    gy: &Grid1D,
    spikes: usize,
    height: f64,
) -> TensorFunction2D {
    let terms = rng.random_range(1..=8);
    let sets = random_row_sets(rng, gy.count(), terms);
    tensor_from_sets(gx, gy, sets, |r| spike_fiber(r, gx, spikes, height), rng)
}

fn tensor_from_sets<R: Rng + ?Sized>(
    gx: &Grid1D,
    gy: &Grid1D,
    sets: Vec<Vec<usize>>,
    mut fiber: impl FnMut(&mut R) -> SampledFunction1D,
    rng: &mut R,
) -> TensorFunction2D {
    let terms = sets
        .into_iter()
        .map(|set| TensorTerm::new(fiber(rng), set))
        .collect();
    TensorFunction2D::new(*gx, *gy, terms).expect("row sets are disjoint by construction")
}

/// Dense function with independent uniform samples in `[-1, 1)`.
pub fn random_dense<R: Rng + ?Sized>(rng: &mut R, gx: &Grid1D, gy: &Grid1D) -> DenseFunction2D {
    let values = (0..gx.count() * gy.count())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    DenseFunction2D::new(*gx, *gy, values).expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_tensors_are_valid_and_reproducible() {
        let gx = Grid1D::spanning(0.0, 1.0, 64).unwrap();
        let gy = Grid1D::spanning(0.0, 1.0, 32).unwrap();
        let a = random_tensor(&mut ChaCha8Rng::seed_from_u64(5), &gx, &gy);
        let b = random_tensor(&mut ChaCha8Rng::seed_from_u64(5), &gx, &gy);
        assert_eq!(a, b);
        assert!((1..=8).contains(&a.terms().len()));
        assert!(a.l1_norm() > 0.0);
    }
}
