//! Mother filters, their L¹-normalized dilations `ζ_t(x) = t⁻¹ ζ(x / t)`, and
//! the dyadic scale ladder that replaces `∫₀^∞ … dt/t`.
//!
//! Both default mothers are compactly supported and C^∞:
//!
//! * `ψ(x) = (m(x) - κ) w(x / R)`, where `m` is the Mexican hat with
//!   `σ = R / 4` and `w(u) = exp(1 - 1 / (1 - u²))` is the unit-height bump
//!   window. `κ` is fitted on the sampling grid so the discrete integral of
//!   `ψ` vanishes.
//! * `φ(x) = ν w(x / R)`, with `ν` fitted so the discrete integral is 1.
//!
//! Dilated kernels refit `κ` (resp. `ν`) on the operand grid, so every kernel
//! in the ladder has discrete integral exactly 0 (resp. 1) up to rounding.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, SampledFunction1D};

pub const DEFAULT_SUPPORT_RADIUS: f64 = 1.0;
pub const DEFAULT_DECAY_ORDER: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// Mean-zero, first slot.
    Psi,
    /// Unit mass, second slot.
    Phi,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    MexicanHat { sigma: f64 },
    Bump,
    /// Linear interpolation of the stored profile.
    Tabulated,
}

/// A sampled mother filter together with the closed form it was sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct MotherFilter {
    kind: FilterKind,
    shape: Shape,
    profile: SampledFunction1D,
    support_radius: f64,
    decay_order: u32,
}

/// `exp(1 - 1/(1 - u²))` on `(-1, 1)`, zero outside; equals 1 at the origin.
pub fn bump_window(u: f64) -> f64 {
    let s = 1.0 - u * u;
    if s <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / s).exp()
    }
}

fn mexican_hat(x: f64, sigma: f64) -> f64 {
    let v = x / sigma;
    (1.0 - v * v) * (-0.5 * v * v).exp()
}

fn check_radius(radius: f64, grid: &Grid1D) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::NonPositive {
            name: "supportRadius",
            value: radius,
        });
    }
    if radius < 4.0 * grid.step() {
        return Err(Error::RadiusTooSmall {
            radius,
            step: grid.step(),
        });
    }
    Ok(())
}

impl MotherFilter {
    /// Standard mean-zero mother `ψ` on `grid`.
    pub fn psi(support_radius: f64, grid: &Grid1D) -> Result<Self> {
        check_radius(support_radius, grid)?;
        let mut filter = Self {
            kind: FilterKind::Psi,
            shape: Shape::MexicanHat {
                sigma: support_radius / 4.0,
            },
            profile: SampledFunction1D::zeros(*grid),
            support_radius,
            decay_order: DEFAULT_DECAY_ORDER,
        };
        filter.profile = filter.sample_dilation(1.0, grid);
        Ok(filter)
    }

    /// Standard unit-mass bump `φ` on `grid`.
    pub fn phi(support_radius: f64, grid: &Grid1D) -> Result<Self> {
        check_radius(support_radius, grid)?;
        let mut filter = Self {
            kind: FilterKind::Phi,
            shape: Shape::Bump,
            profile: SampledFunction1D::zeros(*grid),
            support_radius,
            decay_order: DEFAULT_DECAY_ORDER,
        };
        filter.profile = filter.sample_dilation(1.0, grid);
        Ok(filter)
    }

    /// A mother given by samples; values outside `[-R, R]` are dropped and
    /// the profile is renormalized like the closed-form mothers.
    pub fn tabulated(kind: FilterKind, profile: SampledFunction1D, support_radius: f64) -> Result<Self> {
        let grid = *profile.grid();
        check_radius(support_radius, &grid)?;
        let mut filter = Self {
            kind,
            shape: Shape::Tabulated,
            profile,
            support_radius,
            decay_order: DEFAULT_DECAY_ORDER,
        };
        filter.profile = filter.sample_dilation(1.0, &grid);
        Ok(filter)
    }

    /// The default pair on a grid of 256 samples over `[-2, 2)`.
    pub fn standard_pair() -> (Self, Self) {
        let grid = Self::standard_grid();
        (
            Self::psi(DEFAULT_SUPPORT_RADIUS, &grid).expect("valid default"),
            Self::phi(DEFAULT_SUPPORT_RADIUS, &grid).expect("valid default"),
        )
    }

    pub fn standard_grid() -> Grid1D {
        Grid1D::new(-2.0, 1.0 / 64.0, 256).expect("valid default grid")
    }

    pub fn with_decay_order(mut self, decay_order: u32) -> Self {
        self.decay_order = decay_order.max(2);
        self
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn profile(&self) -> &SampledFunction1D {
        &self.profile
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn decay_order(&self) -> u32 {
        self.decay_order
    }

    /// The mother with `ζ̃(x) = ζ(-x)`.
    pub fn reflected(&self) -> Self {
        match self.shape {
            // Both closed forms are even.
            Shape::MexicanHat { .. } | Shape::Bump => self.clone(),
            Shape::Tabulated => {
                let g = *self.profile.grid();
                let values = g.points().map(|x| self.tabulated_value(-x)).collect();
                let profile = SampledFunction1D::new(g, values).expect("finite");
                Self {
                    profile,
                    ..self.clone()
                }
            }
        }
    }

    /// Pointwise value of the un-normalized shape: `(core(x), window(x))`.
    fn core_and_window(&self, x: f64) -> (f64, f64) {
        let r = self.support_radius;
        match self.shape {
            Shape::MexicanHat { sigma } => (mexican_hat(x, sigma), bump_window(x / r)),
            Shape::Bump => (1.0, bump_window(x / r)),
            Shape::Tabulated => {
                let w = if x.abs() < r { 1.0 } else { 0.0 };
                (self.tabulated_value(x), w)
            }
        }
    }

    fn tabulated_value(&self, x: f64) -> f64 {
        let g = self.profile.grid();
        let pos = (x - g.origin()) / g.step();
        if pos < 0.0 || pos > (g.count() - 1) as f64 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        let v = self.profile.values();
        if i + 1 >= v.len() {
            v[i]
        } else {
            v[i] * (1.0 - frac) + v[i + 1] * frac
        }
    }

    fn sample_dilation(&self, t: f64, grid: &Grid1D) -> SampledFunction1D {
        let d = Dilation::fit(self, t, grid.step(), usize::MAX);
        let values = grid.points().map(|x| d.eval(x)).collect();
        SampledFunction1D::new(*grid, values).expect("filter samples are finite")
    }
}

/// `make_mother_psi`: mean-zero mother on `grid`.
pub fn make_mother_psi(support_radius: f64, grid: &Grid1D) -> Result<MotherFilter> {
    MotherFilter::psi(support_radius, grid)
}

/// `make_mother_phi`: unit-mass bump on `grid`.
pub fn make_mother_phi(support_radius: f64, grid: &Grid1D) -> Result<MotherFilter> {
    MotherFilter::phi(support_radius, grid)
}

/// A mother dilated to scale `t` and normalized on a lattice of spacing
/// `step`; evaluates the kernel at any real offset.
#[derive(Debug, Clone)]
pub struct Dilation<'a> {
    mother: &'a MotherFilter,
    t: f64,
    step: f64,
    /// Largest tap index `K`; the kernel lives on offsets `-K..=K`.
    half_width: usize,
    /// `κ_t` for ψ.
    shift: f64,
    /// `ν_t` for φ.
    gain: f64,
}

impl<'a> Dilation<'a> {
    fn fit(mother: &'a MotherFilter, t: f64, step: f64, max_half_width: usize) -> Self {
        let reach = t * mother.support_radius / step;
        let half_width = if reach >= max_half_width as f64 {
            max_half_width
        } else {
            reach.floor() as usize
        };
        let half_width = half_width.min(max_half_width);
        let mut cw = 0.0;
        let mut w = 0.0;
        let k = half_width as i64;
        for i in -k..=k {
            let (core, window) = mother.core_and_window(i as f64 * step / t);
            cw += core * window;
            w += window;
        }
        let (shift, gain) = match mother.kind {
            FilterKind::Psi => (if w > 0.0 { cw / w } else { 0.0 }, 1.0),
            FilterKind::Phi => (0.0, if cw > 0.0 { t / (step * cw) } else { 0.0 }),
        };
        Self {
            mother,
            t,
            step,
            half_width,
            shift,
            gain,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// `ζ_t(u)`.
    pub fn eval(&self, u: f64) -> f64 {
        let (core, window) = self.mother.core_and_window(u / self.t);
        if window == 0.0 {
            return 0.0;
        }
        self.gain * (core - self.shift) * window / self.t
    }

    /// Taps at offsets `-K..=K`.
    pub fn taps(&self) -> Vec<f64> {
        let k = self.half_width as i64;
        (-k..=k).map(|i| self.eval(i as f64 * self.step)).collect()
    }
}

fn check_scale(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name: "t", value: t })
    }
}

/// The dilation of `zeta` at scale `t`, normalized on `grid`'s spacing.
///
/// Taps beyond the grid length are dropped: they never touch the operand.
pub fn dilation<'a>(zeta: &'a MotherFilter, t: f64, grid: &Grid1D) -> Result<Dilation<'a>> {
    check_scale(t)?;
    Ok(Dilation::fit(zeta, t, grid.step(), grid.count()))
}

/// `ζ_t` sampled at the offsets `k · step` of `grid`, as a function on a
/// kernel grid centered at 0 (origin `-count/2 · step`).
pub fn dilate(zeta: &MotherFilter, t: f64, grid: &Grid1D) -> Result<SampledFunction1D> {
    let d = dilation(zeta, t, grid)?;
    Ok(kernel_from_taps(&d.taps(), d.half_width, grid.step()))
}

pub(crate) fn kernel_from_taps(taps: &[f64], half_width: usize, step: f64) -> SampledFunction1D {
    let count = (2 * half_width + 2).next_power_of_two();
    let center = count / 2;
    let mut values = vec![0.0; count];
    values[center - half_width..=center + half_width].copy_from_slice(taps);
    let grid = Grid1D::new(-(center as f64) * step, step, count).expect("valid kernel grid");
    SampledFunction1D::new(grid, values).expect("finite taps")
}

/// The scales `t_j = 2^j`, `j_min ≤ j ≤ j_max`, each weighted by `ln 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLadder")]
pub struct ScaleLadder {
    #[serde(rename = "jMin")]
    j_min: i32,
    #[serde(rename = "jMax")]
    j_max: i32,
}

#[derive(Deserialize)]
struct RawLadder {
    #[serde(rename = "jMin")]
    j_min: i32,
    #[serde(rename = "jMax")]
    j_max: i32,
}

impl TryFrom<RawLadder> for ScaleLadder {
    type Error = Error;

    fn try_from(raw: RawLadder) -> Result<Self> {
        ScaleLadder::new(raw.j_min, raw.j_max)
    }
}

impl ScaleLadder {
    pub const WEIGHT: f64 = LN_2;

    pub fn new(j_min: i32, j_max: i32) -> Result<Self> {
        if j_min > j_max {
            return Err(Error::Config(format!("ladder jMin {j_min} > jMax {j_max}")));
        }
        Ok(Self { j_min, j_max })
    }

    /// `[log₂(4 step), log₂(extent / 4)]`, rounded inwards.
    pub fn for_grid(grid: &Grid1D) -> Result<Self> {
        let lo = (4.0 * grid.step()).log2().ceil() as i32;
        let hi = (grid.extent() / 4.0).log2().floor() as i32;
        Self::new(lo, hi)
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn len(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scales(&self) -> impl Iterator<Item = f64> {
        (self.j_min..=self.j_max).map(|j| 2f64.powi(j))
    }
}

/// Smallest `C` with
/// `sup_{z∈Q} |ζ_t(x-z) - ζ_t(x-c)| ≤ C (r/t²) (1 + |x-c|/t)^{-M}`
/// over every node `x` of `grid` outside `2Q = [c-2r, c+2r)`.
///
/// `Q = [lo, hi]` is scanned at 17 evenly spaced points. An empty `Q`
/// returns 0.
pub fn kernel_regularity_check(
    zeta: &MotherFilter,
    t: f64,
    q: (f64, f64),
    decay: u32,
    grid: &Grid1D,
) -> Result<f64> {
    check_scale(t)?;
    if decay > zeta.decay_order {
        return Err(Error::Config(format!(
            "decay order {decay} exceeds the filter's {}",
            zeta.decay_order
        )));
    }
    let (lo, hi) = q;
    if hi <= lo {
        return Ok(0.0);
    }
    let d = dilation(zeta, t, grid)?;
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    const SUBSAMPLES: usize = 16;
    let zs: Vec<f64> = (0..=SUBSAMPLES)
        .map(|k| lo + (hi - lo) * k as f64 / SUBSAMPLES as f64)
        .collect();
    let mut worst = 0.0_f64;
    for x in grid.points() {
        if x >= c - 2.0 * r && x < c + 2.0 * r {
            continue;
        }
        let base = d.eval(x - c);
        let diff = zs.iter().fold(0.0_f64, |m, &z| m.max((d.eval(x - z) - base).abs()));
        if diff == 0.0 {
            continue;
        }
        let bound = r / (t * t) * (1.0 + (x - c).abs() / t).powi(-(decay as i32));
        worst = worst.max(diff / bound);
    }
    Ok(worst)
}

/// Measured regularity constant at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleConstant {
    pub t: f64,
    pub constant: f64,
}

/// Regularity constants over a ladder.
///
/// At each scale the constant is the largest [`kernel_regularity_check`]
/// value over intervals of 1, 2, 4, 8 and 16 cells placed mid-grid.
/// `variation` is max/min over the scales resolved by at least 8 samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityCertificate {
    pub decay: u32,
    pub per_scale: Vec<ScaleConstant>,
    pub certified: f64,
    pub variation: f64,
}

pub const CERTIFIED_CELL_COUNTS: [usize; 5] = [1, 2, 4, 8, 16];

pub fn certify_regularity(
    zeta: &MotherFilter,
    ladder: &ScaleLadder,
    grid: &Grid1D,
    decay: u32,
) -> Result<RegularityCertificate> {
    let mid = grid.origin() + 0.5 * grid.extent();
    let mut per_scale = Vec::with_capacity(ladder.len());
    for t in ladder.scales() {
        let mut constant = 0.0_f64;
        for cells in CERTIFIED_CELL_COUNTS {
            let q = (mid, mid + cells as f64 * grid.step());
            constant = constant.max(kernel_regularity_check(zeta, t, q, decay, grid)?);
        }
        per_scale.push(ScaleConstant { t, constant });
    }
    let certified = per_scale.iter().fold(0.0_f64, |m, s| m.max(s.constant));
    let resolved: Vec<f64> = per_scale
        .iter()
        .filter(|s| s.t >= 8.0 * grid.step() * (1.0 - 1e-12))
        .map(|s| s.constant)
        .collect();
    let variation = match (
        resolved.iter().cloned().reduce(f64::max),
        resolved.iter().cloned().reduce(f64::min),
    ) {
        (Some(hi), Some(lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    };
    Ok(RegularityCertificate {
        decay,
        per_scale,
        certified,
        variation,
    })
}

/// Regularity constant of `ψ` at `t = 1` for `Q = [-1/8, 1/8)` on the
/// standard grid, with `M = 2`.
pub fn standard_regularity_constant() -> f64 {
    let (psi, _) = MotherFilter::standard_pair();
    kernel_regularity_check(&psi, 1.0, (-0.125, 0.125), 2, &MotherFilter::standard_grid())
        .expect("standard filter is valid")
}

/// `|ζ̂(ξ)| = |Σ step ζ(x_m) e^{-2πiξx_m}|` of the mother profile.
pub fn fourier_magnitude(zeta: &MotherFilter, xi: f64) -> f64 {
    let g = zeta.profile.grid();
    let (mut re, mut im) = (0.0, 0.0);
    for (x, v) in g.points().zip(zeta.profile.values()) {
        let phase = -2.0 * PI * xi * x;
        re += v * phase.cos();
        im += v * phase.sin();
    }
    g.step() * re.hypot(im)
}

/// How close the mother's spectrum is to a corona: the spectral peak, the
/// value at the origin, and the fraction of spectral energy below a quarter
/// of the peak frequency. Measured, never asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoronaReport {
    pub peak_frequency: f64,
    pub dc_magnitude: f64,
    pub low_band_energy_fraction: f64,
}

pub fn corona_report(zeta: &MotherFilter) -> CoronaReport {
    let g = zeta.profile.grid();
    let nyquist = 0.5 / g.step();
    let samples = 512;
    let freqs: Vec<f64> = (0..=samples).map(|k| nyquist * k as f64 / samples as f64).collect();
    let mags: Vec<f64> = freqs.iter().map(|&xi| fourier_magnitude(zeta, xi)).collect();
    let (peak_idx, _) = mags
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
    let peak_frequency = freqs[peak_idx];
    let total: f64 = mags.iter().map(|m| m * m).sum();
    let low: f64 = freqs
        .iter()
        .zip(&mags)
        .filter(|(f, _)| **f < 0.25 * peak_frequency)
        .map(|(_, m)| m * m)
        .sum();
    CoronaReport {
        peak_frequency,
        dc_magnitude: mags[0],
        low_band_energy_fraction: if total > 0.0 { low / total } else { 0.0 },
    }
}
