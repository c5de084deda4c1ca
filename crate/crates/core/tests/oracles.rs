//! Paraproducts against direct summation over every sample pair.

use std::f64::consts::LN_2;

use fibercz::filters::{dilation, MotherFilter};
use fibercz::generate::{random_dense, random_fiber};
use fibercz::{paraproduct_pi, paraproduct_t, DenseFunction2D, Grid1D, ParaproductConfig, ScaleLadder};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kernel(zeta: &MotherFilter, t: f64, grid: &Grid1D, offset: isize) -> f64 {
    dilation(zeta, t, grid).unwrap().eval(offset as f64 * grid.step())
}

fn t_oracle(f: &DenseFunction2D, g: &DenseFunction2D, cfg: &ParaproductConfig) -> Vec<f64> {
    let (gx, gy) = (*f.grid_x(), *f.grid_y());
    let (nx, ny) = (gx.count(), gy.count());
    let mut out = vec![0.0; nx * ny];
    for t in cfg.ladder.scales() {
        let psi: Vec<f64> = (-(nx as isize) + 1..nx as isize).map(|k| kernel(&cfg.psi, t, &gx, k)).collect();
        let phi: Vec<f64> = (-(ny as isize) + 1..ny as isize).map(|k| kernel(&cfg.phi, t, &gy, k)).collect();
        for n in 0..ny {
            for m in 0..nx {
                let mut u = 0.0;
                for mp in 0..nx {
                    u += psi[m + nx - 1 - mp] * f.get(mp, n);
                }
                let mut v = 0.0;
                for np in 0..ny {
                    v += phi[n + ny - 1 - np] * g.get(m, np);
                }
                out[n * nx + m] += gx.step() * u * gy.step() * v;
            }
        }
    }
    out.iter().map(|v| LN_2 * v).collect()
}

#[test]
fn dense_t_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = Grid1D::spanning(0.0, 1.0, 64).unwrap();
    for cfg in [
        ParaproductConfig::standard(ScaleLadder::for_grid(&grid).unwrap()),
        ParaproductConfig::strict(MotherFilter::standard_pair().0, ScaleLadder::new(-5, -1).unwrap()),
    ] {
        let f = random_dense(&mut rng, &grid, &grid);
        let g = random_dense(&mut rng, &grid, &grid);
        let fast = paraproduct_t(&f, &g, &cfg).unwrap();
        let slow = t_oracle(&f, &g, &cfg);
        let scale = slow.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let err = fast.values().iter().zip(&slow).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-12 * scale, "error {err} at scale {scale}");
    }
}

#[test]
fn classical_paraproduct_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = Grid1D::spanning(-1.0, 2.0, 128).unwrap();
    let cfg = ParaproductConfig::standard(ScaleLadder::for_grid(&grid).unwrap());
    let f = random_fiber(&mut rng, &grid);
    let g = random_fiber(&mut rng, &grid);
    let fast = paraproduct_pi(&f, &g, &cfg).unwrap();
    let n = grid.count() as isize;
    let h = grid.step();
    let mut slow = vec![0.0; grid.count()];
    for t in cfg.ladder.scales() {
        for (m, s) in slow.iter_mut().enumerate() {
            let (mut u, mut v) = (0.0, 0.0);
            for k in 0..n {
                let d = m as isize - k;
                u += kernel(&cfg.psi, t, &grid, d) * f.values()[k as usize];
                v += kernel(&cfg.phi, t, &grid, d) * g.values()[k as usize];
            }
            *s += h * u * h * v;
        }
    }
    let scale = slow.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    for (a, b) in fast.values().iter().zip(&slow) {
        assert!((a - LN_2 * b).abs() <= 1e-12 * scale);
    }
}
