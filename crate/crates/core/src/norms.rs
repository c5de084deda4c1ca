//! Discrete Lebesgue norms, distribution functions and weak-type quasi-norms.
//!
//! Infinite exponents are `f64::INFINITY`, with `1/∞ = 0` throughout. In JSON
//! they are written as the string `"inf"`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DenseFunction2D, SampledFunction1D};

/// Sampled function with a uniform cell measure.
pub trait Sampled {
    fn samples(&self) -> &[f64];
    fn cell_measure(&self) -> f64;
}

impl Sampled for SampledFunction1D {
    fn samples(&self) -> &[f64] {
        self.values()
    }

    fn cell_measure(&self) -> f64 {
        self.grid().step()
    }
}

impl Sampled for DenseFunction2D {
    fn samples(&self) -> &[f64] {
        self.values()
    }

    fn cell_measure(&self) -> f64 {
        self.cell_area()
    }
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(format!("{name} = {p} is below 1")));
    }
    Ok(())
}

pub fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn from_recip(u: f64) -> f64 {
    if u == 0.0 {
        f64::INFINITY
    } else {
        1.0 / u
    }
}

/// `(Σ |F|^p · cell)^{1/p}`, or `max |F|` for `p = ∞`.
pub fn lp_norm<F: Sampled + ?Sized>(f: &F, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    let sup = f.samples().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if p.is_infinite() || sup == 0.0 {
        return Ok(sup);
    }
    let sum: f64 = f.samples().iter().map(|v| (v.abs() / sup).powf(p)).sum();
    Ok(sup * (sum * f.cell_measure()).powf(1.0 / p))
}

/// `cell · #{|F| > α}`.
pub fn superlevel_measure<F: Sampled + ?Sized>(f: &F, alpha: f64) -> f64 {
    let count = f.samples().iter().filter(|v| v.abs() > alpha).count();
    count as f64 * f.cell_measure()
}

/// `count` levels spaced evenly in `log α` over `[lo, hi]`.
pub fn log_levels(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidLevels);
    }
    if count == 1 {
        return Ok(vec![hi]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut levels: Vec<f64> = (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect();
    levels[0] = lo;
    levels[count - 1] = hi;
    levels.dedup();
    Ok(levels)
}

pub const DEFAULT_LEVEL_COUNT: usize = 64;
pub const DEFAULT_LEVEL_SPAN: f64 = 1e-6;

/// Default level grid `[sup·10⁻⁶, sup]` with 64 points; a zero function uses
/// `[10⁻⁶, 1]`.
pub fn default_levels<F: Sampled + ?Sized>(f: &F) -> Vec<f64> {
    let sup = f.samples().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let hi = if sup > 0.0 { sup } else { 1.0 };
    log_levels(hi * DEFAULT_LEVEL_SPAN, hi, DEFAULT_LEVEL_COUNT).expect("valid default levels")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeakNormEstimate {
    #[serde(with = "exponent_serde")]
    pub p: f64,
    pub alphas: Vec<f64>,
    pub measures: Vec<f64>,
    pub quasi_norm: f64,
}

impl WeakNormEstimate {
    /// Writes `alpha,measure` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "measure"])?;
        for (a, m) in self.alphas.iter().zip(&self.measures) {
            w.write_record([a.to_string(), m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `sup_α α · |{|F| > α}|^{1/p}` over the given increasing positive levels.
pub fn weak_lp_quasinorm<F: Sampled + ?Sized>(f: &F, p: f64, levels: &[f64]) -> Result<WeakNormEstimate> {
    check_exponent("p", p)?;
    if levels.is_empty()
        || levels.iter().any(|a| !(*a > 0.0) || !a.is_finite())
        || levels.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidLevels);
    }
    let mut abs: Vec<f64> = f.samples().iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let cell = f.cell_measure();
    let measures: Vec<f64> = levels
        .iter()
        .map(|&a| {
            let above = abs.len() - abs.partition_point(|v| *v <= a);
            above as f64 * cell
        })
        .collect();
    let inv = recip(p);
    let quasi_norm = levels
        .iter()
        .zip(&measures)
        .map(|(a, m)| if *m > 0.0 { a * m.powf(inv) } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(WeakNormEstimate {
        p,
        alphas: levels.to_vec(),
        measures,
        quasi_norm,
    })
}

/// Exponents of the bilinear estimates.
///
/// `1/r = 1/p + 1/q`; `s` is the endpoint exponent for an `L¹` first slot,
/// `1/s = 1 + 1/q`; `p'` and `q'` are the conjugates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExponentTriple {
    #[serde(with = "exponent_serde")]
    pub p: f64,
    #[serde(with = "exponent_serde")]
    pub q: f64,
    #[serde(with = "exponent_serde")]
    pub r: f64,
    #[serde(with = "exponent_serde")]
    pub s: f64,
    #[serde(with = "exponent_serde")]
    pub p_conj: f64,
    #[serde(with = "exponent_serde")]
    pub q_conj: f64,
}

impl ExponentTriple {
    /// `|s·r/p' − (r − s)|`, or the reciprocal form `|1/s − 1/r − 1/p'|` when
    /// `r` is infinite.
    pub fn relation_residual(&self) -> f64 {
        if self.r.is_finite() {
            (self.s * self.r * recip(self.p_conj) - (self.r - self.s)).abs()
        } else {
            (recip(self.s) - recip(self.r) - recip(self.p_conj)).abs()
        }
    }

    /// `p ∈ [1, p0]`, `q ∈ [1, q0]` and `1/r0 < 1/r ≤ 2`.
    pub fn admissible(&self, p0: f64, q0: f64) -> bool {
        let inv_r0 = recip(p0) + recip(q0);
        let inv_r = recip(self.r);
        self.p <= p0 && self.q <= q0 && inv_r0 < inv_r && inv_r <= 2.0
    }
}

pub fn exponent_algebra(p: f64, q: f64) -> Result<ExponentTriple> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    Ok(ExponentTriple {
        p,
        q,
        r: from_recip(recip(p) + recip(q)),
        s: 1.0 / (1.0 + recip(q)),
        p_conj: from_recip(1.0 - recip(p)),
        q_conj: from_recip(1.0 - recip(q)),
    })
}

/// Reads exponents as numbers or `"inf"`; writes `∞` as `"inf"`.
pub mod exponent_serde {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = f64;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}
