//! Dyadic Calderón–Zygmund decomposition of sampled 1D functions, and its
//! fiber-wise extension to tensor functions.
//!
//! At threshold `γ` the stopping time walks the dyadic tree from the root and
//! selects the first interval on each branch whose average of `|f|` is
//! strictly above `γ`. On a selected `Q` the good part is the average of `f`
//! over `Q` and the atom is `(f - avg) 1_Q`; elsewhere the good part is `f`.
//!
//! With the selection maximal, every selected interval below the root has a
//! parent whose average is at most `γ`, which gives the dyadic constants
//! used throughout: `‖b‖_∞ ≤ 2γ`, `‖a_i‖₁ ≤ 2∫_Q|f| ≤ 4γ|Q|` and
//! `Σ|Q_i| < ‖f‖₁ / γ`.
//!
//! The root is selected when its own average exceeds `γ`. For
//! `γ ≥ avg_root|f| / 2` this is exactly the dyadic decomposition of the
//! zero-extended function on the line; below that level the sup bound on the
//! good part can fail, see [`root_saturation_level`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    double_interval, DenseFunction2D, DyadicInterval, Grid1D, SampledFunction1D,
    TensorFunction2D, TensorTerm,
};

/// Constant in `‖b‖_∞ ≤ C γ`.
pub const GOOD_SUP_CONSTANT: f64 = 2.0;
/// Constant in `‖a_i‖₁ ≤ C γ |Q_i|`.
pub const ATOM_L1_CONSTANT: f64 = 4.0;
/// Constant in `Σ|Q_i| ≤ C ‖f‖₁ / γ`.
pub const COVER_CONSTANT: f64 = 1.0;
/// Constant in `|∪ 2Q_{i,y}| ≤ C ‖f‖₁ / γ`.
pub const EXCEPTIONAL_CONSTANT: f64 = 4.0;

pub const RECONSTRUCTION_TOL: f64 = 1e-12;
/// Relative slack on `‖b‖₁ ≤ ‖f‖₁` and `‖b‖_∞ ≤ 2γ`, both of which can hold
/// with equality before rounding.
pub const GOOD_ROUNDING: f64 = 1e-12;
pub const ATOM_MEAN_TOL: f64 = 1e-10;

/// `γ = α^s ‖f‖₁^{1-s}`.
pub fn cz_scale(alpha: f64, f_l1: f64, s: f64) -> Result<f64> {
    for (name, value) in [("alpha", alpha), ("f_l1", f_l1), ("s", s)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositive { name, value });
        }
    }
    if s > 1.0 {
        return Err(Error::InvalidExponent(format!("s = {s} exceeds 1")));
    }
    Ok(alpha.powf(s) * f_l1.powf(1.0 - s))
}

/// Smallest `γ` for which the decomposition on the grid coincides with the
/// one on the line: half the root average of `|f|`.
pub fn root_saturation_level(f: &SampledFunction1D) -> f64 {
    0.5 * f.l1_norm() / f.grid().extent()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(flatten)]
    interval: DyadicInterval,
    /// Samples on the interval only; the atom vanishes elsewhere.
    values: Vec<f64>,
}

impl Atom {
    pub fn interval(&self) -> DyadicInterval {
        self.interval
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn l1_norm(&self, grid: &Grid1D) -> f64 {
        grid.step() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// The atom as a function on the full grid.
    pub fn to_function(&self, grid: &Grid1D) -> SampledFunction1D {
        let mut values = vec![0.0; grid.count()];
        values[grid.interval_indices(self.interval)].copy_from_slice(&self.values);
        SampledFunction1D::new(*grid, values).expect("atom samples are finite")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CZDecomposition {
    gamma: f64,
    good: SampledFunction1D,
    atoms: Vec<Atom>,
}

impl CZDecomposition {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn good(&self) -> &SampledFunction1D {
        &self.good
    }

    pub fn grid(&self) -> &Grid1D {
        self.good.grid()
    }

    /// Atoms in left-to-right order, one per selected interval.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn selected(&self) -> impl Iterator<Item = DyadicInterval> + '_ {
        self.atoms.iter().map(|a| a.interval)
    }

    pub fn selected_measure(&self) -> f64 {
        self.selected().map(|q| self.grid().interval_length(q)).sum()
    }

    /// `Σ_i a_i` on the full grid.
    pub fn bad_part(&self) -> SampledFunction1D {
        let grid = *self.grid();
        let mut values = vec![0.0; grid.count()];
        for atom in &self.atoms {
            values[grid.interval_indices(atom.interval)].copy_from_slice(&atom.values);
        }
        SampledFunction1D::new(grid, values).expect("atom samples are finite")
    }

    /// `good + Σ atoms`.
    pub fn reconstruct(&self) -> SampledFunction1D {
        let bad = self.bad_part();
        let values = self
            .good
            .values()
            .iter()
            .zip(bad.values())
            .map(|(g, a)| g + a)
            .collect();
        SampledFunction1D::new(*self.grid(), values).expect("finite")
    }

    /// Measure of `∪_i 2Q_i` clipped to the grid extent.
    pub fn doubled_union(&self) -> (f64, Vec<usize>) {
        let grid = self.grid();
        let mut covered = vec![false; grid.count()];
        let mut segments: Vec<(f64, f64)> = Vec::with_capacity(self.atoms.len());
        for q in self.selected() {
            let d = double_interval(q, grid);
            covered[d.indices.clone()].iter_mut().for_each(|c| *c = true);
            segments.push((d.lo, d.hi));
        }
        segments.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut length = 0.0;
        let mut current: Option<(f64, f64)> = None;
        for (lo, hi) in segments {
            current = match current {
                Some((a, b)) if lo <= b => Some((a, b.max(hi))),
                Some((a, b)) => {
                    length += b - a;
                    Some((lo, hi))
                }
                None => Some((lo, hi)),
            };
        }
        if let Some((a, b)) = current {
            length += b - a;
        }
        let indices = covered
            .iter()
            .enumerate()
            .filter_map(|(m, &c)| c.then_some(m))
            .collect();
        (length, indices)
    }
}

/// Pairwise sum over halves. Power-of-two slices of equal values sum exactly,
/// so constant functions compare against `gamma` without rounding.
fn pairwise(values: &[f64], f: fn(f64) -> f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => f(values[0]),
        n => pairwise(&values[..n / 2], f) + pairwise(&values[n / 2..], f),
    }
}

fn abs_sum(values: &[f64]) -> f64 {
    pairwise(values, f64::abs)
}

/// Calderón–Zygmund decomposition of `f` at threshold `gamma`.
pub fn cz_decompose_1d(f: &SampledFunction1D, gamma: f64) -> Result<CZDecomposition> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::NonPositive {
            name: "gamma",
            value: gamma,
        });
    }
    if let Some(i) = f.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let grid = *f.grid();
    let depth = grid.depth();
    let samples = f.values();
    let mut good = samples.to_vec();
    let mut atoms = Vec::new();

    // Depth-first, left child first, so atoms come out left to right.
    let mut stack = vec![DyadicInterval::ROOT];
    while let Some(q) = stack.pop() {
        let range = grid.interval_indices(q);
        let slice = &samples[range.clone()];
        let len = slice.len() as f64;
        if abs_sum(slice) / len > gamma {
            let mean = pairwise(slice, |v| v) / len;
            good[range].iter_mut().for_each(|b| *b = mean);
            atoms.push(Atom {
                interval: q,
                values: slice.iter().map(|v| v - mean).collect(),
            });
        } else if let Ok((left, right)) = q.children(depth) {
            stack.push(right);
            stack.push(left);
        }
    }

    Ok(CZDecomposition {
        gamma,
        good: SampledFunction1D::new(grid, good)?,
        atoms,
    })
}

/// Measured quantities of a decomposition against the pinned constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CzReport {
    /// `‖b‖₁ / ‖f‖₁`
    pub good_l1_ratio: f64,
    /// `‖b‖_∞ / γ`
    pub good_sup_ratio: f64,
    /// `γ Σ|Q_i| / ‖f‖₁`
    pub cover_ratio: f64,
    /// Largest `|mean(a_i)|` relative to the atom's scale.
    pub max_atom_mean: f64,
    /// Largest `‖a_i‖₁ / (γ |Q_i|)`.
    pub max_atom_l1_ratio: f64,
    /// `max |f - b - Σa_i| / ‖f‖_∞`
    pub reconstruction_error: f64,
    pub disjoint: bool,
    pub maximal: bool,
    pub flags: CzFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CzFlags {
    pub reconstruction: bool,
    pub good_l1: bool,
    pub good_sup: bool,
    pub cover: bool,
    pub atom_mean: bool,
    pub atom_l1: bool,
    pub disjoint: bool,
    pub maximal: bool,
}

impl CzFlags {
    pub fn all(&self) -> bool {
        self.reconstruction
            && self.good_l1
            && self.good_sup
            && self.cover
            && self.atom_mean
            && self.atom_l1
            && self.disjoint
            && self.maximal
    }
}

impl CzReport {
    pub fn passed(&self) -> bool {
        self.flags.all()
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Checks every decomposition property of `d` against the original `f`.
pub fn verify_cz_invariants(d: &CZDecomposition, f: &SampledFunction1D) -> CzReport {
    let grid = d.grid();
    let gamma = d.gamma;
    let f_l1 = f.l1_norm();
    let f_sup = f.sup_norm();
    let samples = f.values();

    let rebuilt = d.reconstruct();
    let max_err = samples
        .iter()
        .zip(rebuilt.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let reconstruction_error = ratio(max_err, f_sup);

    let mut max_atom_mean = 0.0_f64;
    let mut max_atom_l1_ratio = 0.0_f64;
    let mut maximal = true;
    for atom in &d.atoms {
        let q = atom.interval;
        let range = grid.interval_indices(q);
        let len = range.len() as f64;
        // Scale: the larger of the atom's and f's average magnitude on Q, so
        // an atom that cancels to rounding noise is measured against f.
        let scale = (abs_sum(&atom.values) / len).max(abs_sum(&samples[range.clone()]) / len);
        max_atom_mean = max_atom_mean.max(ratio(atom.mean().abs(), scale));
        max_atom_l1_ratio =
            max_atom_l1_ratio.max(atom.l1_norm(grid) / (gamma * grid.interval_length(q)));
        if let Some(parent) = q.parent() {
            let pr = grid.interval_indices(parent);
            if abs_sum(&samples[pr.clone()]) / pr.len() as f64 > gamma {
                maximal = false;
            }
        }
    }
    let disjoint = d.atoms.windows(2).all(|w| {
        grid.interval_indices(w[0].interval).end <= grid.interval_indices(w[1].interval).start
    });

    let good_l1_ratio = ratio(d.good.l1_norm(), f_l1);
    let good_sup_ratio = d.good.sup_norm() / gamma;
    let cover_ratio = ratio(gamma * d.selected_measure(), f_l1);

    let flags = CzFlags {
        reconstruction: reconstruction_error <= RECONSTRUCTION_TOL,
        good_l1: d.good.l1_norm() <= f_l1 * (1.0 + GOOD_ROUNDING),
        good_sup: good_sup_ratio <= GOOD_SUP_CONSTANT * (1.0 + GOOD_ROUNDING),
        cover: gamma * d.selected_measure() <= COVER_CONSTANT * f_l1,
        atom_mean: max_atom_mean <= ATOM_MEAN_TOL,
        atom_l1: max_atom_l1_ratio <= ATOM_L1_CONSTANT,
        disjoint,
        maximal,
    };
    CzReport {
        good_l1_ratio,
        good_sup_ratio,
        cover_ratio,
        max_atom_mean,
        max_atom_l1_ratio,
        reconstruction_error,
        disjoint,
        maximal,
        flags,
    }
}

/// Fiber-wise decomposition of a tensor function: one 1D decomposition per
/// tensor term, shared by every row of the term's index set.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberDecomposition {
    gamma: f64,
    good_part: TensorFunction2D,
    per_fiber: Vec<CZDecomposition>,
}

#[derive(Serialize)]
struct FiberDecompositionJson<'a> {
    gamma: f64,
    #[serde(rename = "goodPart")]
    good_part: &'a TensorFunction2D,
    #[serde(rename = "perFiber")]
    per_fiber: &'a [CZDecomposition],
}

impl Serialize for FiberDecomposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FiberDecompositionJson {
            gamma: self.gamma,
            good_part: &self.good_part,
            per_fiber: &self.per_fiber,
        }
        .serialize(s)
    }
}

impl FiberDecomposition {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `b(x, y) = Σ_j b¹_j(x) 1_{E_j}(y)`.
    pub fn good_part(&self) -> &TensorFunction2D {
        &self.good_part
    }

    pub fn per_fiber(&self) -> &[CZDecomposition] {
        &self.per_fiber
    }

    pub fn grid_x(&self) -> &Grid1D {
        self.good_part.grid_x()
    }

    pub fn grid_y(&self) -> &Grid1D {
        self.good_part.grid_y()
    }

    /// Decomposition governing row `n`, if the row is non-zero.
    pub fn row_decomposition(&self, n: usize) -> Option<&CZDecomposition> {
        self.good_part.row_owner(n).map(|j| &self.per_fiber[j])
    }

    /// `a(x, y) = Σ_i a_{i,y}(x)`, assembled from the per-term atoms.
    pub fn bad_part(&self) -> DenseFunction2D {
        let nx = self.grid_x().count();
        let mut values = vec![0.0; nx * self.grid_y().count()];
        for (term, d) in self.good_part.terms().iter().zip(&self.per_fiber) {
            let bad = d.bad_part();
            for &n in term.index_set() {
                values[n * nx..(n + 1) * nx].copy_from_slice(bad.values());
            }
        }
        DenseFunction2D::from_parts(*self.grid_x(), *self.grid_y(), values)
    }
}

pub fn fiberwise_decompose(f: &TensorFunction2D, gamma: f64) -> Result<FiberDecomposition> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::NonPositive {
            name: "gamma",
            value: gamma,
        });
    }
    let per_fiber = f
        .terms()
        .par_iter()
        .map(|t| cz_decompose_1d(t.fiber(), gamma))
        .collect::<Result<Vec<_>>>()?;
    let terms = f
        .terms()
        .iter()
        .zip(&per_fiber)
        .map(|(t, d)| TensorTerm::new(d.good().clone(), t.index_set().to_vec()))
        .collect();
    let good_part = TensorFunction2D::new(*f.grid_x(), *f.grid_y(), terms)?;
    Ok(FiberDecomposition {
        gamma,
        good_part,
        per_fiber,
    })
}

/// `{(x, y) : x ∈ ∪_i 2Q_{i,y}}` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceptionalSet {
    /// Covered x-indices for each y-row (empty for rows without atoms).
    #[serde(rename = "perRow")]
    pub per_row: Vec<Vec<usize>>,
    /// Lebesgue measure of the clipped doubled intervals, `Σ_y step_y |∪ 2Q|`.
    pub measure: f64,
    /// Measure of the covered grid cells, `Σ_y step_y step_x #row`.
    #[serde(rename = "cellMeasure")]
    pub cell_measure: f64,
}

pub fn exceptional_set(d: &FiberDecomposition) -> ExceptionalSet {
    let step_x = d.grid_x().step();
    let step_y = d.grid_y().step();
    let mut per_row = vec![Vec::new(); d.grid_y().count()];
    let mut measure = 0.0;
    let mut cell_measure = 0.0;
    for (term, cz) in d.good_part.terms().iter().zip(&d.per_fiber) {
        let (length, indices) = cz.doubled_union();
        let rows = term.index_set().len() as f64;
        measure += step_y * length * rows;
        cell_measure += step_y * step_x * indices.len() as f64 * rows;
        for &n in term.index_set() {
            per_row[n] = indices.clone();
        }
    }
    ExceptionalSet {
        per_row,
        measure,
        cell_measure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::random_fiber;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_unit_grid() -> Grid1D {
        Grid1D::new(0.0, 0.5, 4).unwrap()
    }

    #[test]
    fn scale_examples() {
        assert_eq!(cz_scale(1.0, 1.0, 0.5).unwrap(), 1.0);
        assert_eq!(cz_scale(4.0, 1.0, 0.5).unwrap(), 2.0);
        assert!((cz_scale(1.0, 16.0, 0.75).unwrap() - 2.0).abs() < 1e-15);
        assert!(cz_scale(0.0, 1.0, 0.5).is_err());
        assert!(cz_scale(1.0, -1.0, 0.5).is_err());
        assert!(cz_scale(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn below_threshold_is_untouched() {
        let g = Grid1D::new(0.0, 0.1, 16).unwrap();
        let f = SampledFunction1D::new(g, vec![-0.7; 16]).unwrap();
        let d = cz_decompose_1d(&f, 0.7).unwrap();
        assert!(d.atoms().is_empty());
        assert_eq!(d.good(), &f);
        let r = verify_cz_invariants(&d, &f);
        assert!(r.passed());
        assert_eq!(r.reconstruction_error, 0.0);
        assert!(r.good_l1_ratio <= 1.0 && r.good_sup_ratio <= 1.0 && r.cover_ratio <= 1.0);
    }

    #[test]
    fn root_selected_example() {
        let gamma = 0.3;
        let f = SampledFunction1D::new(
            two_unit_grid(),
            vec![4.0 * gamma, 4.0 * gamma, 0.0, 0.0],
        )
        .unwrap();
        let d = cz_decompose_1d(&f, gamma).unwrap();
        assert_eq!(d.atoms().len(), 1);
        assert_eq!(d.atoms()[0].interval(), DyadicInterval::ROOT);
        assert!(d.good().values().iter().all(|&b| b == 2.0 * gamma));
        assert_eq!(
            d.atoms()[0].values(),
            &[2.0 * gamma, 2.0 * gamma, -2.0 * gamma, -2.0 * gamma]
        );
        assert_eq!(d.atoms()[0].mean(), 0.0);
        let r = verify_cz_invariants(&d, &f);
        assert_eq!(r.good_sup_ratio, 2.0);
        assert!(r.flags.good_sup);
        assert!(r.passed());
    }

    #[test]
    fn tie_is_not_selected() {
        let gamma = 0.3;
        let f = SampledFunction1D::new(two_unit_grid(), vec![2.0 * gamma, 0.0, 0.0, 0.0]).unwrap();
        let d = cz_decompose_1d(&f, gamma).unwrap();
        // [0, 1) has average exactly γ, so the selection happens one level down.
        assert_eq!(d.atoms().len(), 1);
        assert_eq!(d.atoms()[0].interval(), DyadicInterval::new(2, 0));
        assert_eq!(d.atoms()[0].values(), &[0.0]);
        assert_eq!(d.good().values(), f.values());
        let r = verify_cz_invariants(&d, &f);
        assert_eq!(r.good_sup_ratio, 2.0);
        assert!(r.passed());
    }

    #[test]
    fn rejects_bad_threshold() {
        let f = SampledFunction1D::zeros(two_unit_grid());
        assert!(cz_decompose_1d(&f, 0.0).is_err());
        assert!(cz_decompose_1d(&f, -1.0).is_err());
        assert!(cz_decompose_1d(&f, f64::NAN).is_err());
    }

    #[test]
    fn atom_l1_constant_is_sharp_beyond_two() {
        // Parent [0, 8) has average γ, child [0, 4) has average 2γ and
        // concentrates on one sample: ‖a‖₁ = 3γ|Q|.
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let gamma = 1.0;
        let mut v = vec![0.0; 16];
        v[0] = 8.0;
        let f = SampledFunction1D::new(g, v).unwrap();
        let d = cz_decompose_1d(&f, gamma).unwrap();
        let r = verify_cz_invariants(&d, &f);
        assert!(r.passed());
        assert!((r.max_atom_l1_ratio - 3.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn saturation_makes_decomposition_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid1D::spanning(0.0, 1.0, 256).unwrap();
        for _ in 0..10 {
            let f = random_fiber(&mut rng, &g);
            let d = cz_decompose_1d(&f, f.sup_norm()).unwrap();
            assert!(d.atoms().is_empty());
            assert_eq!(d.good(), &f);
        }
    }

    #[test]
    fn doubled_union_of_single_cell_atom() {
        let gamma = 0.3;
        let f = SampledFunction1D::new(two_unit_grid(), vec![2.0 * gamma, 0.0, 0.0, 0.0]).unwrap();
        let d = cz_decompose_1d(&f, gamma).unwrap();
        let (length, indices) = d.doubled_union();
        assert_eq!(length, 0.75);
        assert_eq!(indices, vec![0, 1]);
    }

    fn single_term(fiber: SampledFunction1D, rows: Vec<usize>, gy: Grid1D) -> TensorFunction2D {
        let gx = *fiber.grid();
        TensorFunction2D::new(gx, gy, vec![TensorTerm::new(fiber, rows)]).unwrap()
    }

    #[test]
    fn fiberwise_trivial_cases() {
        let gx = Grid1D::spanning(0.0, 1.0, 16).unwrap();
        let gy = Grid1D::spanning(0.0, 1.0, 8).unwrap();
        let f = single_term(SampledFunction1D::new(gx, vec![0.5; 16]).unwrap(), vec![1, 4], gy);
        let d = fiberwise_decompose(&f, 1.0).unwrap();
        assert_eq!(d.good_part(), &f);
        assert!(d.per_fiber()[0].atoms().is_empty());
        let e = exceptional_set(&d);
        assert_eq!(e.measure, 0.0);
        assert!(e.per_row.iter().all(Vec::is_empty));

        let zero = TensorFunction2D::zeros(gx, gy);
        let d = fiberwise_decompose(&zero, 1.0).unwrap();
        assert!(d.per_fiber().is_empty());
        assert!(d.good_part().materialize().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exceptional_set_examples() {
        // Root atom: every x-index of the owning rows.
        let gx = Grid1D::spanning(0.0, 2.0, 8).unwrap();
        let gy = Grid1D::spanning(0.0, 1.0, 4).unwrap();
        let f = single_term(SampledFunction1D::new(gx, vec![3.0; 8]).unwrap(), vec![0, 2], gy);
        let d = fiberwise_decompose(&f, 1.0).unwrap();
        let e = exceptional_set(&d);
        assert_eq!(e.per_row[0], (0..8).collect::<Vec<_>>());
        assert!(e.per_row[1].is_empty());
        assert_eq!(e.measure, 2.0 * 2.0 * 0.25);
        assert_eq!(e.cell_measure, e.measure);

        // Single-cell atom on [0, 0.5) in [0, 2): 2Q clipped is [0, 0.75).
        let gamma = 0.3;
        let gx = two_unit_grid();
        let f = single_term(
            SampledFunction1D::new(gx, vec![2.0 * gamma, 0.0, 0.0, 0.0]).unwrap(),
            vec![3],
            gy,
        );
        let e = exceptional_set(&fiberwise_decompose(&f, gamma).unwrap());
        assert_eq!(e.measure, 0.75 * gy.step());
        assert_eq!(e.per_row[3], vec![0, 1]);
    }

    #[test]
    fn fiberwise_matches_rowwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gx = Grid1D::spanning(0.0, 1.0, 64).unwrap();
        let gy = Grid1D::spanning(0.0, 1.0, 64).unwrap();
        let f = crate::generate::random_tensor(&mut rng, &gx, &gy);
        let gamma = 0.5 * f.l1_norm();
        let d = fiberwise_decompose(&f, gamma).unwrap();
        let good = d.good_part().materialize();
        let bad = d.bad_part();
        let dense = f.materialize();
        for n in 0..gy.count() {
            match f.fiber_at(n) {
                Some(fiber) => {
                    let row = cz_decompose_1d(fiber, gamma).unwrap();
                    assert_eq!(good.row(n), row.good().values());
                    assert_eq!(bad.row(n), row.bad_part().values());
                }
                None => assert!(good.row(n).iter().all(|&v| v == 0.0)),
            }
        }
        let sum = good.add_scaled(&bad, 1.0).unwrap();
        assert!(sum.max_abs_diff(&dense).unwrap() <= 1e-12 * dense.sup_norm());
    }

    #[test]
    fn doubled_union_with_large_right_neighbour() {
        // Q1 = [3, 4) and Q2 = [4, 8): 2Q2 starts left of 2Q1.
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = 2.5;
        v[4..8].copy_from_slice(&[1.6, 1.6, 1.6, 1.6]);
        let f = SampledFunction1D::new(g, v).unwrap();
        let d = cz_decompose_1d(&f, 1.5).unwrap();
        let q: Vec<_> = d.selected().collect();
        assert_eq!(q, vec![DyadicInterval::new(4, 3), DyadicInterval::new(2, 1)]);
        let (length, indices) = d.doubled_union();
        assert_eq!(length, 10.0 - 2.0);
        assert_eq!(indices, (2..10).collect::<Vec<_>>());
    }

    #[test]
    fn json_layout() {
        let gamma = 0.25;
        let f = SampledFunction1D::new(two_unit_grid(), vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let d = cz_decompose_1d(&f, gamma).unwrap();
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(v["gamma"], 0.25);
        assert_eq!(v["good"]["count"], 4);
        assert_eq!(v["atoms"][0]["generation"], 0);
        assert_eq!(v["atoms"][0]["offset"], 0);
        assert_eq!(v["atoms"][0]["values"].as_array().unwrap().len(), 4);
        let back: CZDecomposition = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
    }
}
