//! Laws of sums of independent integer-shape gamma variables.
//!
//! A null-spectrum value at a scatterer is, to first order, `s * X` with
//! `X ~ Gamma(N, 1)` (one mode) or a sum of two such terms with different
//! scales (generalized). The CDF is evaluated by whichever representation
//! is numerically safe for the scales at hand.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{gamma_cdf_int, gamma_pdf_int};

/// Relative scale gap below which two components are merged.
pub const MERGE_TOLERANCE: f64 = 1e-9;
/// Scale ratio `min / max` below which partial fractions replace the series.
pub const SERIES_MIN_RATIO: f64 = 0.05;

const SERIES_TAIL: f64 = 1e-13;
const SERIES_MAX_TERMS: usize = 20_000;

/// `scale * Gamma(shape, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaComponent {
    pub shape: u64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// All mass at zero.
    Zero,
    Single(GammaComponent),
    /// Positive-weight mixture `sum_k w_k Gamma(rho + k, beta)`.
    Series {
        rho: u64,
        beta: f64,
        weights: Vec<f64>,
    },
    /// Signed mixture `sum c_j Gamma(shape_j, scale_j)`.
    PartialFractions(Vec<(f64, GammaComponent)>),
}

/// Distribution of a non-negative sum of independent gamma components.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfDescriptor {
    components: Vec<GammaComponent>,
    repr: Repr,
}

impl PdfDescriptor {
    pub fn new(components: &[GammaComponent]) -> Result<Self> {
        if components
            .iter()
            .any(|c| !(c.scale >= 0.0) || !c.scale.is_finite())
        {
            return Err(Error::Degenerate(
                "gamma scale must be finite and non-negative".into(),
            ));
        }
        let mut merged: Vec<GammaComponent> = Vec::new();
        for c in components.iter().filter(|c| c.shape > 0 && c.scale > 0.0) {
            match merged
                .iter_mut()
                .find(|m| (m.scale - c.scale).abs() <= MERGE_TOLERANCE * m.scale.max(c.scale))
            {
                Some(m) => m.shape += c.shape,
                None => merged.push(*c),
            }
        }
        merged.sort_by(|a, b| a.scale.total_cmp(&b.scale));
        let repr = match merged.as_slice() {
            [] => Repr::Zero,
            [c] => Repr::Single(*c),
            [a, b] if a.scale / b.scale < SERIES_MIN_RATIO => {
                Repr::PartialFractions(partial_fractions(*a, *b))
            }
            _ => series(&merged)?,
        };
        Ok(Self {
            components: components.to_vec(),
            repr,
        })
    }

    pub fn components(&self) -> &[GammaComponent] {
        &self.components
    }

    /// Name of the evaluation scheme, for diagnostics.
    pub fn method(&self) -> &'static str {
        match self.repr {
            Repr::Zero => "point-mass",
            Repr::Single(_) => "gamma",
            Repr::Series { .. } => "series",
            Repr::PartialFractions(_) => "partial-fractions",
        }
    }

    pub fn mean(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.shape as f64 * c.scale)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.shape as f64 * c.scale * c.scale)
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        if y < 0.0 {
            return 0.0;
        }
        match &self.repr {
            Repr::Zero => 1.0,
            Repr::Single(c) => gamma_cdf_int(c.shape, y / c.scale),
            Repr::Series { rho, beta, weights } => series_cdf(*rho, y / beta, weights),
            Repr::PartialFractions(terms) => terms
                .iter()
                .map(|(w, c)| w * gamma_cdf_int(c.shape, y / c.scale))
                .sum::<f64>()
                .clamp(0.0, 1.0),
        }
    }

    /// Density; `+inf` at zero for the point mass.
    pub fn pdf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        match &self.repr {
            Repr::Zero => {
                if y == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Repr::Single(c) => gamma_pdf_int(c.shape, y / c.scale) / c.scale,
            Repr::Series { rho, beta, weights } => {
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * gamma_pdf_int(rho + k as u64, y / beta))
                    .sum::<f64>()
                    / beta
            }
            Repr::PartialFractions(terms) => terms
                .iter()
                .map(|(w, c)| w * gamma_pdf_int(c.shape, y / c.scale) / c.scale)
                .sum::<f64>()
                .max(0.0),
        }
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Partial-fraction expansion of the Laplace transform
/// `l1^m l2^n / ((s + l1)^m (s + l2)^n)` with rates `l = 1 / scale`.
fn partial_fractions(a: GammaComponent, b: GammaComponent) -> Vec<(f64, GammaComponent)> {
    let (m, n) = (a.shape, b.shape);
    let (l1, l2) = (1.0 / a.scale, 1.0 / b.scale);
    let mut terms = Vec::with_capacity((m + n) as usize);
    for j in 1..=m {
        let sign = if (m - j) % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign
            * binomial(m + n - j - 1, m - j)
            * (l1 / (l2 - l1)).powi((m - j) as i32)
            * (l2 / (l2 - l1)).powi(n as i32);
        terms.push((
            c,
            GammaComponent {
                shape: j,
                scale: a.scale,
            },
        ));
    }
    for j in 1..=n {
        let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign
            * binomial(m + n - j - 1, n - j)
            * (l2 / (l1 - l2)).powi((n - j) as i32)
            * (l1 / (l1 - l2)).powi(m as i32);
        terms.push((
            c,
            GammaComponent {
                shape: j,
                scale: b.scale,
            },
        ));
    }
    terms
}

/// Mixture weights of the gamma-sum series around the smallest scale.
fn series(comps: &[GammaComponent]) -> Result<Repr> {
    let beta = comps.iter().map(|c| c.scale).fold(f64::INFINITY, f64::min);
    let rho: u64 = comps.iter().map(|c| c.shape).sum();
    let ln_c: f64 = comps
        .iter()
        .map(|c| c.shape as f64 * (beta / c.scale).ln())
        .sum();
    let c0 = ln_c.exp();
    let q: Vec<f64> = comps.iter().map(|c| 1.0 - beta / c.scale).collect();
    let mut gamma = vec![0.0];
    let mut delta = vec![1.0];
    let mut mass = c0;
    let mut weights = vec![c0];
    let mut qk: Vec<f64> = vec![1.0; comps.len()];
    for k in 1..SERIES_MAX_TERMS {
        let mut g = 0.0;
        for (i, c) in comps.iter().enumerate() {
            qk[i] *= q[i];
            g += c.shape as f64 * qk[i];
        }
        gamma.push(g / k as f64);
        let d = (1..=k)
            .map(|i| i as f64 * gamma[i] * delta[k - i])
            .sum::<f64>()
            / k as f64;
        delta.push(d);
        let w = c0 * d;
        weights.push(w);
        mass += w;
        if 1.0 - mass <= SERIES_TAIL {
            return Ok(Repr::Series { rho, beta, weights });
        }
    }
    Err(Error::Degenerate(format!(
        "gamma-sum series did not converge (mass {mass})"
    )))
}

fn series_cdf(rho: u64, x: f64, weights: &[f64]) -> f64 {
    // P(n + 1, x) = P(n, x) - e^-x x^n / n!
    let mut p = gamma_cdf_int(rho, x);
    let lx = x.ln();
    let mut ln_fact: f64 = (2..=rho).map(|k| (k as f64).ln()).sum();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        let n = rho + k as u64;
        if k > 0 {
            ln_fact += (n as f64).ln();
        }
        acc += w * p;
        if x > 0.0 {
            p = (p - (n as f64 * lx - x - ln_fact).exp()).max(0.0);
        }
    }
    acc.clamp(0.0, 1.0)
}
