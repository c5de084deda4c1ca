//! Uniform sampled grids, dyadic intervals over them, and the 1D/2D sampled
//! function types everything else is built on.
//!
//! Sample `m` of a [`Grid1D`] sits at `origin + m * step` and represents the
//! cell `[x_m, x_m + step)`. Integrals are left-endpoint Riemann sums, so the
//! discrete L¹ norm is additive over dyadic intervals. Functions are taken to
//! vanish outside the grid extent.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform grid with a power-of-two number of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid1D {
    origin: f64,
    step: f64,
    count: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    origin: f64,
    step: f64,
    count: usize,
}

impl TryFrom<RawGrid> for Grid1D {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid1D::new(raw.origin, raw.step, raw.count)
    }
}

impl Grid1D {
    pub fn new(origin: f64, step: f64, count: usize) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::InvalidGrid(format!("origin {origin} is not finite")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!("step {step} must be positive")));
        }
        if count == 0 || !count.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "count {count} must be a positive power of two"
            )));
        }
        Ok(Self {
            origin,
            step,
            count,
        })
    }

    /// Grid of `count` samples covering `[start, start + length)`.
    pub fn spanning(start: f64, length: f64, count: usize) -> Result<Self> {
        Self::new(start, length / count as f64, count)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn extent(&self) -> f64 {
        self.step * self.count as f64
    }

    pub fn end(&self) -> f64 {
        self.origin + self.extent()
    }

    /// Depth `L` of the dyadic tree, `count = 2^L`.
    pub fn depth(&self) -> u32 {
        self.count.trailing_zeros()
    }

    pub fn point(&self, index: usize) -> f64 {
        self.origin + index as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|m| self.point(m))
    }

    /// Sample indices covered by a dyadic interval.
    pub fn interval_indices(&self, q: DyadicInterval) -> Range<usize> {
        let len = self.count >> q.generation;
        let start = q.offset as usize * len;
        start..start + len
    }

    /// Endpoints `[a, b)` of a dyadic interval.
    pub fn interval_bounds(&self, q: DyadicInterval) -> (f64, f64) {
        let r = self.interval_indices(q);
        (self.point(r.start), self.point(r.end))
    }

    pub fn center(&self, q: DyadicInterval) -> f64 {
        let (a, b) = self.interval_bounds(q);
        0.5 * (a + b)
    }

    pub fn radius(&self, q: DyadicInterval) -> f64 {
        0.5 * self.interval_length(q)
    }

    pub fn interval_length(&self, q: DyadicInterval) -> f64 {
        (self.count >> q.generation) as f64 * self.step
    }

    pub fn contains(&self, q: DyadicInterval) -> bool {
        q.generation <= self.depth() && q.offset < (1u64 << q.generation)
    }

    pub(crate) fn ensure_same(&self, other: &Grid1D, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {self:?} vs {other:?}"
            )))
        }
    }
}

/// The dyadic interval of the given generation and offset, relative to the
/// grid's root interval (generation 0, offset 0 is the whole extent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub generation: u32,
    pub offset: u64,
}

impl DyadicInterval {
    pub const ROOT: DyadicInterval = DyadicInterval {
        generation: 0,
        offset: 0,
    };

    pub fn new(generation: u32, offset: u64) -> Self {
        Self { generation, offset }
    }

    /// Left and right children. Fails once the interval is a single sample
    /// of a grid of depth `depth`.
    pub fn children(self, depth: u32) -> Result<(DyadicInterval, DyadicInterval)> {
        if self.generation >= depth {
            return Err(Error::AtomicInterval {
                generation: self.generation,
            });
        }
        let generation = self.generation + 1;
        Ok((
            DyadicInterval::new(generation, 2 * self.offset),
            DyadicInterval::new(generation, 2 * self.offset + 1),
        ))
    }

    pub fn parent(self) -> Option<DyadicInterval> {
        (self.generation > 0).then(|| DyadicInterval::new(self.generation - 1, self.offset / 2))
    }
}

/// The concentric interval `2Q`, clipped to the grid extent.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubledInterval {
    pub lo: f64,
    pub hi: f64,
    /// Samples whose node `x_m` falls in `[lo, hi)`.
    pub indices: Range<usize>,
}

impl DoubledInterval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Concentric interval with twice the radius, clipped to the grid.
///
/// Computed in half-sample units so the endpoints are exact even for
/// single-sample intervals, whose doubled endpoints fall mid-cell.
pub fn double_interval(q: DyadicInterval, grid: &Grid1D) -> DoubledInterval {
    let r = grid.interval_indices(q);
    let len = (r.end - r.start) as i64;
    // Doubled interval in units of step/2.
    let lo2 = (2 * r.start as i64 - len).max(0);
    let hi2 = (2 * r.end as i64 + len).min(2 * grid.count() as i64);
    let first = ((lo2 + 1) / 2) as usize;
    let last = ((hi2 + 1) / 2) as usize;
    let half = 0.5 * grid.step();
    DoubledInterval {
        lo: grid.origin() + lo2 as f64 * half,
        hi: grid.origin() + hi2 as f64 * half,
        indices: first..last.min(grid.count()),
    }
}

/// Measure of a set of grid cells: `step * cardinality`.
pub fn lebesgue_measure(indices: &[usize], grid: &Grid1D) -> Result<f64> {
    if let Some(&index) = indices.iter().find(|&&i| i >= grid.count()) {
        return Err(Error::IndexOutOfRange {
            index,
            count: grid.count(),
        });
    }
    Ok(grid.step() * indices.len() as f64)
}

/// Real-valued samples on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSampled", into = "RawSampled")]
pub struct SampledFunction1D {
    grid: Grid1D,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSampled {
    origin: f64,
    step: f64,
    count: usize,
    values: Vec<f64>,
}

impl TryFrom<RawSampled> for SampledFunction1D {
    type Error = Error;

    fn try_from(raw: RawSampled) -> Result<Self> {
        SampledFunction1D::new(Grid1D::new(raw.origin, raw.step, raw.count)?, raw.values)
    }
}

impl From<SampledFunction1D> for RawSampled {
    fn from(f: SampledFunction1D) -> Self {
        RawSampled {
            origin: f.grid.origin,
            step: f.grid.step,
            count: f.grid.count,
            values: f.values,
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

impl SampledFunction1D {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::LengthMismatch {
                expected: grid.count(),
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.count()],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.step * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete integral `step * sum(values)`.
    pub fn integral(&self) -> f64 {
        self.grid.step * self.values.iter().sum::<f64>()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// One term `f¹_j(x) 1_{E_j}(y)` of a tensor function.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTerm {
    fiber: SampledFunction1D,
    index_set: Vec<usize>,
}

impl TensorTerm {
    pub fn new(fiber: SampledFunction1D, mut index_set: Vec<usize>) -> Self {
        index_set.sort_unstable();
        index_set.dedup();
        Self { fiber, index_set }
    }

    pub fn fiber(&self) -> &SampledFunction1D {
        &self.fiber
    }

    pub fn index_set(&self) -> &[usize] {
        &self.index_set
    }
}

/// A finite sum `Σ_j f¹_j(x) 1_{E_j}(y)` with pairwise disjoint `E_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor", into = "RawTensor")]
pub struct TensorFunction2D {
    grid_x: Grid1D,
    grid_y: Grid1D,
    terms: Vec<TensorTerm>,
    /// Term owning each y-row, if any.
    row_owner: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawTensor {
    #[serde(rename = "gridX")]
    grid_x: Grid1D,
    #[serde(rename = "gridY")]
    grid_y: Grid1D,
    terms: Vec<RawTerm>,
}

// Fiber values only; the fiber grid is gridX.
#[derive(Serialize, Deserialize)]
struct RawTerm {
    values: Vec<f64>,
    #[serde(rename = "indexSet")]
    index_set: Vec<usize>,
}

impl TryFrom<RawTensor> for TensorFunction2D {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Self> {
        let terms = raw
            .terms
            .into_iter()
            .map(|t| {
                Ok(TensorTerm::new(
                    SampledFunction1D::new(raw.grid_x, t.values)?,
                    t.index_set,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        TensorFunction2D::new(raw.grid_x, raw.grid_y, terms)
    }
}

impl From<TensorFunction2D> for RawTensor {
    fn from(f: TensorFunction2D) -> Self {
        RawTensor {
            grid_x: f.grid_x,
            grid_y: f.grid_y,
            terms: f
                .terms
                .into_iter()
                .map(|t| RawTerm {
                    values: t.fiber.into_values(),
                    index_set: t.index_set,
                })
                .collect(),
        }
    }
}

impl TensorFunction2D {
    pub fn new(grid_x: Grid1D, grid_y: Grid1D, terms: Vec<TensorTerm>) -> Result<Self> {
        let mut row_owner = vec![None; grid_y.count()];
        for (j, term) in terms.iter().enumerate() {
            term.fiber.grid.ensure_same(&grid_x, "tensor fiber vs gridX")?;
            for &n in &term.index_set {
                let slot = row_owner.get_mut(n).ok_or(Error::IndexOutOfRange {
                    index: n,
                    count: grid_y.count(),
                })?;
                if let Some(first) = *slot {
                    return Err(Error::OverlappingIndexSets {
                        first,
                        second: j,
                        index: n,
                    });
                }
                *slot = Some(j);
            }
        }
        Ok(Self {
            grid_x,
            grid_y,
            terms,
            row_owner,
        })
    }

    pub fn zeros(grid_x: Grid1D, grid_y: Grid1D) -> Self {
        Self {
            grid_x,
            grid_y,
            terms: Vec::new(),
            row_owner: vec![None; grid_y.count()],
        }
    }

    pub fn grid_x(&self) -> &Grid1D {
        &self.grid_x
    }

    pub fn grid_y(&self) -> &Grid1D {
        &self.grid_y
    }

    pub fn terms(&self) -> &[TensorTerm] {
        &self.terms
    }

    /// Index of the term whose index set contains row `n`.
    pub fn row_owner(&self, n: usize) -> Option<usize> {
        self.row_owner.get(n).copied().flatten()
    }

    /// The fiber `f(·, y_n)`, if the row is non-zero.
    pub fn fiber_at(&self, n: usize) -> Option<&SampledFunction1D> {
        self.row_owner(n).map(|j| &self.terms[j].fiber)
    }

    /// `Σ_j ‖f¹_j‖₁ |E_j|`, the L¹ norm over the plane.
    pub fn l1_norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.fiber.l1_norm() * self.grid_y.step() * t.index_set.len() as f64)
            .sum()
    }

    pub fn materialize(&self) -> DenseFunction2D {
        let nx = self.grid_x.count();
        let mut values = vec![0.0; nx * self.grid_y.count()];
        for term in &self.terms {
            for &n in &term.index_set {
                values[n * nx..(n + 1) * nx].copy_from_slice(term.fiber.values());
            }
        }
        DenseFunction2D {
            grid_x: self.grid_x,
            grid_y: self.grid_y,
            values,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| TensorTerm {
                fiber: t.fiber.scaled(factor),
                index_set: t.index_set.clone(),
            })
            .collect();
        Self {
            terms,
            ..self.clone()
        }
    }
}

/// General samples on a 2D grid, stored row-major with one row per y-index:
/// `values[n * count_x + m] = F(x_m, y_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDense", into = "RawDense")]
pub struct DenseFunction2D {
    grid_x: Grid1D,
    grid_y: Grid1D,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDense {
    #[serde(rename = "gridX")]
    grid_x: Grid1D,
    #[serde(rename = "gridY")]
    grid_y: Grid1D,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawDense> for DenseFunction2D {
    type Error = Error;

    fn try_from(raw: RawDense) -> Result<Self> {
        if raw.values.len() != raw.grid_y.count() {
            return Err(Error::LengthMismatch {
                expected: raw.grid_y.count(),
                got: raw.values.len(),
            });
        }
        let flat = raw.values.into_iter().flatten().collect();
        DenseFunction2D::new(raw.grid_x, raw.grid_y, flat)
    }
}

impl From<DenseFunction2D> for RawDense {
    fn from(f: DenseFunction2D) -> Self {
        RawDense {
            grid_x: f.grid_x,
            grid_y: f.grid_y,
            values: f.values.chunks(f.grid_x.count()).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl DenseFunction2D {
    pub fn new(grid_x: Grid1D, grid_y: Grid1D, values: Vec<f64>) -> Result<Self> {
        let expected = grid_x.count() * grid_y.count();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self {
            grid_x,
            grid_y,
            values,
        })
    }

    pub fn zeros(grid_x: Grid1D, grid_y: Grid1D) -> Self {
        Self {
            grid_x,
            grid_y,
            values: vec![0.0; grid_x.count() * grid_y.count()],
        }
    }

    pub fn from_fn(grid_x: Grid1D, grid_y: Grid1D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid_x.count() * grid_y.count());
        for y in grid_y.points() {
            values.extend(grid_x.points().map(|x| f(x, y)));
        }
        Self::new(grid_x, grid_y, values)
    }

    /// Caller guarantees finiteness and length; used by operators whose
    /// outputs are finite combinations of finite inputs.
    pub(crate) fn from_parts(grid_x: Grid1D, grid_y: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid_x.count() * grid_y.count());
        Self {
            grid_x,
            grid_y,
            values,
        }
    }

    pub fn grid_x(&self) -> &Grid1D {
        &self.grid_x
    }

    pub fn grid_y(&self) -> &Grid1D {
        &self.grid_y
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[n * self.grid_x.count() + m]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let nx = self.grid_x.count();
        &self.values[n * nx..(n + 1) * nx]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.grid_x.count())
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(m)
            .step_by(self.grid_x.count())
            .copied()
            .collect()
    }

    pub fn cell_area(&self) -> f64 {
        self.grid_x.step() * self.grid_y.step()
    }

    pub(crate) fn ensure_same_grid(&self, other: &DenseFunction2D, what: &str) -> Result<()> {
        self.grid_x.ensure_same(&other.grid_x, what)?;
        self.grid_y.ensure_same(&other.grid_y, what)
    }

    /// `self + factor * other`, sample-wise.
    pub fn add_scaled(&self, other: &DenseFunction2D, factor: f64) -> Result<Self> {
        self.ensure_same_grid(other, "add_scaled")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Self::from_parts(self.grid_x, self.grid_y, values))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(
            self.grid_x,
            self.grid_y,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// Discrete pairing `Σ F G dx dy`.
    pub fn inner(&self, other: &DenseFunction2D) -> Result<f64> {
        self.ensure_same_grid(other, "inner product")?;
        let dot: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(dot * self.cell_area())
    }

    pub fn max_abs_diff(&self, other: &DenseFunction2D) -> Result<f64> {
        self.ensure_same_grid(other, "difference")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
