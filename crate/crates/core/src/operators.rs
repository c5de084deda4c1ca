//! Axis convolutions and the bilinear operators built from them.
//!
//! With `t_j = 2^j` on the configured ladder and weight `ln 2` per scale:
//!
//! ```text
//! Π(f, g)     = ln2 Σ_j (ψ_j * f) (φ_j * g)
//! T(f, g)     = ln2 Σ_j (ψ_j *_x f) (φ_j *_y g)
//! T*1(h, g)   = ln2 Σ_j ψ̃_j *_x [h (φ_j *_y g)]
//! T*2(f, h)   = ln2 Σ_j φ̃_j *_y [(ψ_j *_x f) h]
//! ```
//!
//! Convolutions extend by zero outside the grid and carry the step weight,
//! `(k * F)(x_m) = Σ_n step k(x_m - x_n) F(x_n)`. Sums over scales run in
//! ascending `j` and every output sample is computed by the same arithmetic
//! regardless of how rows are split across threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::czd::FiberDecomposition;
use crate::error::{Error, Result};
use crate::filters::{dilation, MotherFilter, ScaleLadder};
use crate::grid::{DenseFunction2D, Grid1D, SampledFunction1D, TensorFunction2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Filters and scales shared by Π, T and the duals.
#[derive(Debug, Clone)]
pub struct ParaproductConfig {
    pub psi: MotherFilter,
    /// Second-slot mother; `φ` by default, `ψ` in strict mode.
    pub phi: MotherFilter,
    pub ladder: ScaleLadder,
}

impl ParaproductConfig {
    pub fn new(psi: MotherFilter, phi: MotherFilter, ladder: ScaleLadder) -> Self {
        Self { psi, phi, ladder }
    }

    /// Default mothers on the given ladder.
    pub fn standard(ladder: ScaleLadder) -> Self {
        let (psi, phi) = MotherFilter::standard_pair();
        Self::new(psi, phi, ladder)
    }

    /// `ψ` in both slots.
    pub fn strict(psi: MotherFilter, ladder: ScaleLadder) -> Self {
        Self::new(psi.clone(), psi, ladder)
    }
}

/// Kernel taps on an integer lattice: `taps[i]` sits at offset `first + i`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Taps {
    first: isize,
    taps: Vec<f64>,
    step: f64,
}

impl Taps {
    fn from_function(k: &SampledFunction1D, step: f64) -> Result<Self> {
        let g = k.grid();
        if (g.step() - step).abs() > 1e-12 * step {
            return Err(Error::StepMismatch {
                kernel: g.step(),
                operand: step,
            });
        }
        let pos = g.origin() / step;
        if (pos - pos.round()).abs() > 1e-9 {
            return Err(Error::GridMismatch(format!(
                "kernel origin {} is not on the lattice of step {step}",
                g.origin()
            )));
        }
        Ok(Self {
            first: pos.round() as isize,
            taps: k.values().to_vec(),
            step,
        })
    }

    fn dilated(zeta: &MotherFilter, t: f64, grid: &Grid1D) -> Result<Self> {
        let d = dilation(zeta, t, grid)?;
        Ok(Self {
            first: -(d.half_width() as isize),
            taps: d.taps(),
            step: grid.step(),
        })
    }

    fn reflected(&self) -> Self {
        let mut taps = self.taps.clone();
        taps.reverse();
        Self {
            first: -(self.first + self.taps.len() as isize - 1),
            taps,
            step: self.step,
        }
    }

    /// `out[m] = step Σ_n taps[m - n - first] input[n]`, `n` ascending.
    fn apply(&self, input: &[f64], out: &mut [f64]) {
        let n_in = input.len() as isize;
        let len = self.taps.len() as isize;
        for (m, o) in out.iter_mut().enumerate() {
            let m = m as isize;
            let lo = (m - self.first - len + 1).max(0);
            let hi = (m - self.first).min(n_in - 1);
            let mut acc = 0.0;
            let mut n = lo;
            while n <= hi {
                acc += self.taps[(m - n - self.first) as usize] * input[n as usize];
                n += 1;
            }
            *o = self.step * acc;
        }
    }

    fn apply_vec(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; input.len()];
        self.apply(input, &mut out);
        out
    }
}

fn convolve_rows(values: &[f64], nx: usize, taps: &Taps) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(nx)
        .zip(values.par_chunks(nx))
        .for_each(|(o, row)| taps.apply(row, o));
    out
}

fn convolve_columns(values: &[f64], nx: usize, taps: &Taps) -> Vec<f64> {
    let ny = values.len() / nx;
    let columns: Vec<Vec<f64>> = (0..nx)
        .into_par_iter()
        .map(|m| {
            let col: Vec<f64> = (0..ny).map(|n| values[n * nx + m]).collect();
            taps.apply_vec(&col)
        })
        .collect();
    let mut out = vec![0.0; values.len()];
    for (m, col) in columns.iter().enumerate() {
        for (n, v) in col.iter().enumerate() {
            out[n * nx + m] = *v;
        }
    }
    out
}

fn convolve_dense(f: &DenseFunction2D, taps: &Taps, axis: Axis) -> Vec<f64> {
    let nx = f.grid_x().count();
    match axis {
        Axis::X => convolve_rows(f.values(), nx, taps),
        Axis::Y => convolve_columns(f.values(), nx, taps),
    }
}

/// Convolves every slice of `f` along `axis` with the kernel `k`.
pub fn convolve_axis(f: &DenseFunction2D, k: &SampledFunction1D, axis: Axis) -> Result<DenseFunction2D> {
    let grid = match axis {
        Axis::X => f.grid_x(),
        Axis::Y => f.grid_y(),
    };
    let taps = Taps::from_function(k, grid.step())?;
    Ok(DenseFunction2D::from_parts(
        *f.grid_x(),
        *f.grid_y(),
        convolve_dense(f, &taps, axis),
    ))
}

/// 1D convolution `k * f` with the same conventions.
pub fn convolve_1d(f: &SampledFunction1D, k: &SampledFunction1D) -> Result<SampledFunction1D> {
    let taps = Taps::from_function(k, f.grid().step())?;
    SampledFunction1D::new(*f.grid(), taps.apply_vec(f.values()))
}

/// Per-scale kernels for one pair of operand grids.
struct KernelBank {
    psi_x: Vec<Taps>,
    phi_y: Vec<Taps>,
}

impl KernelBank {
    fn new(cfg: &ParaproductConfig, gx: &Grid1D, gy: &Grid1D) -> Result<Self> {
        let psi_x = cfg
            .ladder
            .scales()
            .map(|t| Taps::dilated(&cfg.psi, t, gx))
            .collect::<Result<_>>()?;
        let phi_y = cfg
            .ladder
            .scales()
            .map(|t| Taps::dilated(&cfg.phi, t, gy))
            .collect::<Result<_>>()?;
        Ok(Self { psi_x, phi_y })
    }
}

fn accumulate_products(acc: &mut [f64], a: &[f64], b: &[f64]) {
    acc.par_iter_mut()
        .zip(a.par_iter().zip(b.par_iter()))
        .for_each(|(s, (x, y))| *s += x * y);
}

fn scale_in_place(values: &mut [f64], factor: f64) {
    values.iter_mut().for_each(|v| *v *= factor);
}

/// The classical paraproduct on a 1D grid.
pub fn paraproduct_pi(
    f: &SampledFunction1D,
    g: &SampledFunction1D,
    cfg: &ParaproductConfig,
) -> Result<SampledFunction1D> {
    f.grid().ensure_same(g.grid(), "paraproduct_pi operands")?;
    let grid = f.grid();
    let mut acc = vec![0.0; grid.count()];
    for t in cfg.ladder.scales() {
        let pf = Taps::dilated(&cfg.psi, t, grid)?.apply_vec(f.values());
        let pg = Taps::dilated(&cfg.phi, t, grid)?.apply_vec(g.values());
        acc.iter_mut()
            .zip(pf.iter().zip(&pg))
            .for_each(|(s, (a, b))| *s += a * b);
    }
    scale_in_place(&mut acc, ScaleLadder::WEIGHT);
    SampledFunction1D::new(*grid, acc)
}

/// `T(f, g)` on dense operands.
pub fn paraproduct_t(
    f: &DenseFunction2D,
    g: &DenseFunction2D,
    cfg: &ParaproductConfig,
) -> Result<DenseFunction2D> {
    f.ensure_same_grid(g, "paraproduct_T operands")?;
    let bank = KernelBank::new(cfg, f.grid_x(), f.grid_y())?;
    let mut acc = vec![0.0; f.values().len()];
    for (psi, phi) in bank.psi_x.iter().zip(&bank.phi_y) {
        let u = convolve_dense(f, psi, Axis::X);
        let v = convolve_dense(g, phi, Axis::Y);
        accumulate_products(&mut acc, &u, &v);
    }
    scale_in_place(&mut acc, ScaleLadder::WEIGHT);
    Ok(DenseFunction2D::from_parts(*f.grid_x(), *f.grid_y(), acc))
}

/// `T(f, g)` evaluated row by row from the fibers of `f`: the x-convolutions
/// are computed once per tensor term and reused on every row of its index
/// set. Agrees bit for bit with [`paraproduct_t`] on `f.materialize()`.
pub fn paraproduct_t_fiberwise(
    f: &TensorFunction2D,
    g: &DenseFunction2D,
    cfg: &ParaproductConfig,
) -> Result<DenseFunction2D> {
    f.grid_x().ensure_same(g.grid_x(), "paraproduct_T_fiberwise gridX")?;
    f.grid_y().ensure_same(g.grid_y(), "paraproduct_T_fiberwise gridY")?;
    let nx = f.grid_x().count();
    let bank = KernelBank::new(cfg, f.grid_x(), f.grid_y())?;
    let zeros = vec![0.0; nx];
    let mut acc = vec![0.0; g.values().len()];
    for (psi, phi) in bank.psi_x.iter().zip(&bank.phi_y) {
        let per_term: Vec<Vec<f64>> = f
            .terms()
            .iter()
            .map(|t| psi.apply_vec(t.fiber().values()))
            .collect();
        let empty_row = psi.apply_vec(&zeros);
        let v = convolve_dense(g, phi, Axis::Y);
        acc.par_chunks_mut(nx)
            .zip(v.par_chunks(nx))
            .enumerate()
            .for_each(|(n, (row, vrow))| {
                let u = f.row_owner(n).map_or(&empty_row, |j| &per_term[j]);
                row.iter_mut()
                    .zip(u.iter().zip(vrow))
                    .for_each(|(s, (a, b))| *s += a * b);
            });
    }
    scale_in_place(&mut acc, ScaleLadder::WEIGHT);
    Ok(DenseFunction2D::from_parts(*g.grid_x(), *g.grid_y(), acc))
}

/// First dual: `⟨T(f, g), h⟩ = ⟨f, T*1(h, g)⟩`.
pub fn dual_t1(
    h: &DenseFunction2D,
    g: &DenseFunction2D,
    cfg: &ParaproductConfig,
) -> Result<DenseFunction2D> {
    h.ensure_same_grid(g, "dual_T1 operands")?;
    let bank = KernelBank::new(cfg, h.grid_x(), h.grid_y())?;
    let nx = h.grid_x().count();
    let mut acc = vec![0.0; h.values().len()];
    for (psi, phi) in bank.psi_x.iter().zip(&bank.phi_y) {
        let v = convolve_dense(g, phi, Axis::Y);
        let product: Vec<f64> = h.values().iter().zip(&v).map(|(a, b)| a * b).collect();
        let w = convolve_rows(&product, nx, &psi.reflected());
        acc.iter_mut().zip(&w).for_each(|(s, x)| *s += x);
    }
    scale_in_place(&mut acc, ScaleLadder::WEIGHT);
    Ok(DenseFunction2D::from_parts(*h.grid_x(), *h.grid_y(), acc))
}

/// Second dual: `⟨T(f, g), h⟩ = ⟨g, T*2(f, h)⟩`.
pub fn dual_t2(
    f: &DenseFunction2D,
    h: &DenseFunction2D,
    cfg: &ParaproductConfig,
) -> Result<DenseFunction2D> {
    f.ensure_same_grid(h, "dual_T2 operands")?;
    let bank = KernelBank::new(cfg, f.grid_x(), f.grid_y())?;
    let nx = f.grid_x().count();
    let mut acc = vec![0.0; f.values().len()];
    for (psi, phi) in bank.psi_x.iter().zip(&bank.phi_y) {
        let u = convolve_dense(f, psi, Axis::X);
        let product: Vec<f64> = u.iter().zip(h.values()).map(|(a, b)| a * b).collect();
        let w = convolve_columns(&product, nx, &phi.reflected());
        acc.iter_mut().zip(&w).for_each(|(s, x)| *s += x);
    }
    scale_in_place(&mut acc, ScaleLadder::WEIGHT);
    Ok(DenseFunction2D::from_parts(*f.grid_x(), *f.grid_y(), acc))
}

/// `ln2 Σ_j ψ_j * a`: the x-part of `T(a, 1)` away from the y-boundary.
pub fn ladder_response(a: &SampledFunction1D, cfg: &ParaproductConfig) -> Result<SampledFunction1D> {
    let grid = a.grid();
    let mut acc = vec![0.0; grid.count()];
    for t in cfg.ladder.scales() {
        let u = Taps::dilated(&cfg.psi, t, grid)?.apply_vec(a.values());
        acc.iter_mut().zip(&u).for_each(|(s, x)| *s += x);
    }
    scale_in_place(&mut acc, ScaleLadder::WEIGHT);
    SampledFunction1D::new(*grid, acc)
}

/// Uncentered maximal function of one slice: for each sample, the largest
/// average of `|g|` over the grid intervals containing it.
///
/// For each left end `l` the averages over `[l, r]` are formed by a running
/// sum and folded into every `u ∈ [l, r]` through a suffix maximum, O(n²).
pub fn maximal_1d(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0_f64; n];
    let mut avg = vec![0.0_f64; n];
    for l in 0..n {
        let mut sum = 0.0;
        for r in l..n {
            sum += g[r].abs();
            avg[r] = sum / (r - l + 1) as f64;
        }
        let mut suffix = f64::MIN;
        for u in (l..n).rev() {
            suffix = suffix.max(avg[u]);
            out[u] = out[u].max(suffix);
        }
    }
    out
}

/// Hardy–Littlewood maximal function along one axis.
pub fn hl_maximal_axis(g: &DenseFunction2D, axis: Axis) -> DenseFunction2D {
    let nx = g.grid_x().count();
    let ny = g.grid_y().count();
    let values = match axis {
        Axis::X => {
            let mut out = vec![0.0; g.values().len()];
            out.par_chunks_mut(nx)
                .zip(g.values().par_chunks(nx))
                .for_each(|(o, row)| o.copy_from_slice(&maximal_1d(row)));
            out
        }
        Axis::Y => {
            let columns: Vec<Vec<f64>> = (0..nx)
                .into_par_iter()
                .map(|m| maximal_1d(&g.column(m)))
                .collect();
            let mut out = vec![0.0; nx * ny];
            for (m, col) in columns.iter().enumerate() {
                for (n, v) in col.iter().enumerate() {
                    out[n * nx + m] = *v;
                }
            }
            out
        }
    };
    DenseFunction2D::from_parts(*g.grid_x(), *g.grid_y(), values)
}

/// Largest observed `|φ_t *_y g| / 𝓜_y g` over the ladder, for a constant,
/// isolated spikes and `trials` random `g`.
///
/// A nonnegative, even kernel that decreases away from 0 is a positive
/// combination of centered boxes, so the ratio never exceeds its mass.
pub fn phi_domination_constant<R: Rng + ?Sized>(
    phi: &MotherFilter,
    ladder: &ScaleLadder,
    grid_x: &Grid1D,
    grid_y: &Grid1D,
    rng: &mut R,
    trials: usize,
) -> Result<f64> {
    let mut inputs = vec![DenseFunction2D::from_fn(*grid_x, *grid_y, |_, _| 1.0)?];
    let (nx, ny) = (grid_x.count(), grid_y.count());
    let mut spikes = vec![0.0; nx * ny];
    for m in 0..nx {
        spikes[rng.random_range(0..ny) * nx + m] = 1.0;
    }
    inputs.push(DenseFunction2D::new(*grid_x, *grid_y, spikes)?);
    for _ in 0..trials {
        inputs.push(crate::generate::random_dense(rng, grid_x, grid_y));
    }
    let kernels: Vec<Taps> = ladder
        .scales()
        .map(|t| Taps::dilated(phi, t, grid_y))
        .collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for g in &inputs {
        let maximal = hl_maximal_axis(g, Axis::Y);
        for k in &kernels {
            let v = convolve_dense(g, k, Axis::Y);
            for (a, m) in v.iter().zip(maximal.values()) {
                if *m > 0.0 {
                    worst = worst.max(a.abs() / m);
                }
            }
        }
    }
    Ok(worst)
}

/// `H(x, y) = Σ_i |Q_{i,y}| r_{i,y} / |x - c_{i,y}|²` over `x ∉ 2Q_{i,y}`.
pub fn h_majorant(d: &FiberDecomposition, grid_x: &Grid1D, grid_y: &Grid1D) -> Result<DenseFunction2D> {
    d.grid_x().ensure_same(grid_x, "h_majorant gridX")?;
    d.grid_y().ensure_same(grid_y, "h_majorant gridY")?;
    let nx = grid_x.count();
    let mut values = vec![0.0; nx * grid_y.count()];
    for (term, cz) in d.good_part().terms().iter().zip(d.per_fiber()) {
        let row = majorant_row(cz, grid_x);
        for &n in term.index_set() {
            values[n * nx..(n + 1) * nx].copy_from_slice(&row);
        }
    }
    Ok(DenseFunction2D::from_parts(*grid_x, *grid_y, values))
}

pub(crate) fn majorant_row(cz: &crate::czd::CZDecomposition, grid: &Grid1D) -> Vec<f64> {
    let mut row = vec![0.0; grid.count()];
    for q in cz.selected() {
        let len = grid.interval_length(q);
        let c = grid.center(q);
        let r = 0.5 * len;
        for (m, h) in row.iter_mut().enumerate() {
            let x = grid.point(m);
            if x >= c - 2.0 * r && x < c + 2.0 * r {
                continue;
            }
            let dist = x - c;
            *h += len * r / (dist * dist);
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::czd::fiberwise_decompose;
    use crate::filters::{dilate, kernel_from_taps};
    use crate::grid::TensorTerm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Grid1D {
        Grid1D::spanning(0.0, 1.0, n).unwrap()
    }

    fn cfg_for(g: &Grid1D) -> ParaproductConfig {
        ParaproductConfig::standard(ScaleLadder::for_grid(g).unwrap())
    }

    #[test]
    fn delta_kernel_is_identity() {
        let g = grid(32);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = crate::generate::random_dense(&mut rng, &g, &g);
        let delta = kernel_from_taps(&[1.0 / g.step()], 0, g.step());
        for axis in [Axis::X, Axis::Y] {
            let out = convolve_axis(&f, &delta, axis).unwrap();
            assert!(out.max_abs_diff(&f).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn unit_mass_kernel_preserves_constants_in_interior() {
        let g = grid(128);
        let (_, phi) = MotherFilter::standard_pair();
        let t = 0.0625;
        let k = dilate(&phi, t, &g).unwrap();
        let f = DenseFunction2D::from_fn(g, g, |_, _| 3.0).unwrap();
        let out = convolve_axis(&f, &k, Axis::Y).unwrap();
        for n in 0..128 {
            let y = g.point(n);
            if y >= t && y < 1.0 - t {
                for m in 0..128 {
                    assert!((out.get(m, n) - 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn impulse_response_is_the_kernel() {
        let g = grid(64);
        let (psi, _) = MotherFilter::standard_pair();
        let k = dilate(&psi, 0.125, &g).unwrap();
        let mut values = vec![0.0; 64 * 64];
        let (m0, n0) = (30, 5);
        values[n0 * 64 + m0] = 1.0 / (g.step());
        let f = DenseFunction2D::new(g, g, values).unwrap();
        let out = convolve_axis(&f, &k, Axis::X).unwrap();
        let first = (k.grid().origin() / g.step()).round() as isize;
        for m in 0..64isize {
            let i = m - m0 as isize - first;
            let expected = if i >= 0 && (i as usize) < k.values().len() {
                k.values()[i as usize]
            } else {
                0.0
            };
            assert!((out.get(m as usize, n0) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn step_mismatch_is_rejected() {
        let g = grid(32);
        let k = kernel_from_taps(&[1.0], 0, 0.5);
        let f = DenseFunction2D::zeros(g, g);
        assert!(matches!(
            convolve_axis(&f, &k, Axis::X),
            Err(Error::StepMismatch { .. })
        ));
    }

    #[test]
    fn pi_trivial_cases() {
        let g = grid(256);
        let cfg = cfg_for(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = crate::generate::random_fiber(&mut rng, &g);
        let zero = SampledFunction1D::zeros(g);
        assert!(paraproduct_pi(&zero, &f, &cfg).unwrap().sup_norm() == 0.0);

        // g ≡ 1: only the ψ-part survives away from the boundary.
        let one = SampledFunction1D::new(g, vec![1.0; 256]).unwrap();
        let p = paraproduct_pi(&f, &one, &cfg).unwrap();
        let r = ladder_response(&f, &cfg).unwrap();
        let reach = 2f64.powi(cfg.ladder.j_max());
        for m in 0..256 {
            let x = g.point(m);
            if x >= reach && x < 1.0 - reach {
                assert!((p.values()[m] - r.values()[m]).abs() < 1e-12);
            }
        }

        // f ≡ 1: ψ annihilates constants in the interior.
        let p = paraproduct_pi(&one, &f, &cfg).unwrap();
        for m in 0..256 {
            let x = g.point(m);
            if x >= reach && x < 1.0 - reach {
                assert!(p.values()[m].abs() < 1e-12, "{}", p.values()[m]);
            }
        }
    }

    #[test]
    fn t_of_separated_variables_is_a_tensor() {
        let g = grid(64);
        let cfg = cfg_for(&g);
        let u = |x: f64| (6.0 * x).sin() + x;
        let v = |y: f64| (-(y - 0.4) * (y - 0.4) * 20.0).exp();
        let f = DenseFunction2D::from_fn(g, g, |x, _| u(x)).unwrap();
        let gg = DenseFunction2D::from_fn(g, g, |_, y| v(y)).unwrap();
        let out = paraproduct_t(&f, &gg, &cfg).unwrap();
        let uf = SampledFunction1D::from_fn(g, u).unwrap();
        let vf = SampledFunction1D::from_fn(g, v).unwrap();
        let mut expected = vec![0.0; 64 * 64];
        for t in cfg.ladder.scales() {
            let a = convolve_1d(&uf, &dilate(&cfg.psi, t, &g).unwrap()).unwrap();
            let b = convolve_1d(&vf, &dilate(&cfg.phi, t, &g).unwrap()).unwrap();
            for n in 0..64 {
                for m in 0..64 {
                    expected[n * 64 + m] += ScaleLadder::WEIGHT * a.values()[m] * b.values()[n];
                }
            }
        }
        let expected = DenseFunction2D::new(g, g, expected).unwrap();
        assert!(out.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn t_is_zero_on_zero_inputs() {
        let g = grid(32);
        let cfg = cfg_for(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = crate::generate::random_dense(&mut rng, &g, &g);
        let z = DenseFunction2D::zeros(g, g);
        assert_eq!(paraproduct_t(&f, &z, &cfg).unwrap().sup_norm(), 0.0);
        assert_eq!(paraproduct_t(&z, &f, &cfg).unwrap().sup_norm(), 0.0);
        assert_eq!(dual_t1(&z, &f, &cfg).unwrap().sup_norm(), 0.0);
        assert_eq!(dual_t2(&z, &f, &cfg).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn fiberwise_matches_dense_exactly() {
        let g = grid(64);
        let cfg = cfg_for(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = crate::generate::random_tensor(&mut rng, &g, &g);
        let gg = crate::generate::random_dense(&mut rng, &g, &g);
        let a = paraproduct_t_fiberwise(&f, &gg, &cfg).unwrap();
        let b = paraproduct_t(&f.materialize(), &gg, &cfg).unwrap();
        assert_eq!(a, b);

        let zero = TensorFunction2D::zeros(g, g);
        assert_eq!(paraproduct_t_fiberwise(&zero, &gg, &cfg).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn two_term_split_matches_dense() {
        let g = grid(32);
        let cfg = cfg_for(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fiber = crate::generate::random_fiber(&mut rng, &g);
        let one = TensorFunction2D::new(g, g, vec![TensorTerm::new(fiber.clone(), (0..16).collect())]).unwrap();
        let two = TensorFunction2D::new(
            g,
            g,
            vec![
                TensorTerm::new(fiber.clone(), (0..7).collect()),
                TensorTerm::new(fiber, (7..16).collect()),
            ],
        )
        .unwrap();
        let gg = crate::generate::random_dense(&mut rng, &g, &g);
        let a = paraproduct_t_fiberwise(&two, &gg, &cfg).unwrap();
        let b = paraproduct_t(&one.materialize(), &gg, &cfg).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
    }

    #[test]
    fn duals_with_trivial_inputs() {
        let g = grid(64);
        let cfg = cfg_for(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = crate::generate::random_dense(&mut rng, &g, &g);
        let one = DenseFunction2D::from_fn(g, g, |_, _| 1.0).unwrap();
        // T*1(h, 1) = ln2 Σ ψ̃_j *_x h where φ_j * 1 = 1.
        let out = dual_t1(&h, &one, &cfg).unwrap();
        let reach = 2f64.powi(cfg.ladder.j_max());
        let mut expected = vec![0.0; 64 * 64];
        for t in cfg.ladder.scales() {
            let k = dilate(&cfg.psi.reflected(), t, &g).unwrap();
            let c = convolve_axis(&h, &k, Axis::X).unwrap();
            expected.iter_mut().zip(c.values()).for_each(|(e, v)| *e += v);
        }
        for n in 0..64 {
            let y = g.point(n);
            if y < reach || y >= 1.0 - reach {
                continue;
            }
            for m in 0..64 {
                let e = ScaleLadder::WEIGHT * expected[n * 64 + m];
                assert!((out.get(m, n) - e).abs() < 1e-12);
            }
        }
        // T*2(1, h) vanishes where ψ sees only the constant.
        let out = dual_t2(&one, &h, &cfg).unwrap();
        let interior = reach * 2.0;
        for n in 0..64 {
            for m in 0..64 {
                let x = g.point(m);
                if x >= interior && x < 1.0 - interior {
                    assert!(out.get(m, n).abs() < 1e-12, "{}", out.get(m, n));
                }
            }
        }
    }

    #[test]
    fn maximal_of_constant_and_small_slice() {
        assert_eq!(maximal_1d(&[-2.0; 5]), vec![2.0; 5]);
        let m = maximal_1d(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(m, vec![0.5, 1.0, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn phi_is_dominated_by_the_maximal_function() {
        let gx = grid(16);
        let gy = grid(128);
        let (_, phi) = MotherFilter::standard_pair();
        let ladder = ScaleLadder::for_grid(&gy).unwrap();
        let c = phi_domination_constant(&phi, &ladder, &gx, &gy, &mut ChaCha8Rng::seed_from_u64(6), 4).unwrap();
        assert!(c > 0.99 && c <= 1.0 + 1e-12, "{c}");
    }

    #[test]
    fn majorant_single_atom() {
        let gx = grid(64);
        let gy = grid(4);
        let mut v = vec![0.0; 64];
        // One atom on [0.25, 0.5): large mass spread over the interval.
        for m in 16..32 {
            v[m] = if m < 24 { 4.0 } else { 3.0 };
        }
        let fiber = SampledFunction1D::new(gx, v).unwrap();
        let f = TensorFunction2D::new(gx, gy, vec![TensorTerm::new(fiber, vec![1])]).unwrap();
        let d = fiberwise_decompose(&f, 2.0).unwrap();
        assert_eq!(d.per_fiber()[0].atoms().len(), 1);
        let h = h_majorant(&d, &gx, &gy).unwrap();
        for m in 0..64 {
            let x = gx.point(m);
            let expected = if (0.125..0.625).contains(&x) {
                0.0
            } else {
                0.25 * 0.125 / ((x - 0.375) * (x - 0.375))
            };
            assert!((h.get(m, 1) - expected).abs() < 1e-12);
            assert_eq!(h.get(m, 0), 0.0);
        }

        let empty = fiberwise_decompose(&TensorFunction2D::zeros(gx, gy), 1.0).unwrap();
        assert_eq!(h_majorant(&empty, &gx, &gy).unwrap().sup_norm(), 0.0);
    }
}
