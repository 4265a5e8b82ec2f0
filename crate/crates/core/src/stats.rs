//! Small statistical helpers: compensated sums, sample moments, histograms,
//! integer-shape gamma distribution and Kolmogorov-Smirnov tests.

use crate::error::{Error, Result};

/// Neumaier-compensated sum. Order-dependent, so callers fix the order.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 samples, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mean = neumaier_sum(xs.iter().copied()) / n;
    let var = neumaier_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    Ok((mean, var))
}

/// Equal-width histogram over `[0, max]`; the top edge is inclusive so the
/// counts always sum to `xs.len()`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_samples(xs: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        if xs.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Degenerate(
                "histogram samples must be finite and non-negative".into(),
            ));
        }
        let max = xs.iter().copied().fold(0.0, f64::max);
        let width = if max > 0.0 {
            max / bins as f64
        } else {
            1.0 / bins as f64
        };
        let edges = (0..=bins).map(|i| i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &x in xs {
            let i = ((x / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Ok(Self { edges, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Density of the unit-scale gamma law with integer shape `n >= 1`.
pub fn gamma_pdf_int(n: u64, y: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    if y == 0.0 {
        return if n == 1 { 1.0 } else { 0.0 };
    }
    ((n as f64 - 1.0) * y.ln() - y - ln_factorial(n - 1)).exp()
}

/// Regularised lower incomplete gamma `P(n, y)` for integer `n >= 1`, i.e.
/// the CDF of a unit-scale gamma (complex chi-square) law with `n` degrees
/// of freedom.
pub fn gamma_cdf_int(n: u64, y: f64) -> f64 {
    assert!(n >= 1, "gamma shape must be positive");
    if y <= 0.0 {
        return 0.0;
    }
    if y.is_infinite() {
        return 1.0;
    }
    let ly = y.ln();
    let term = |k: u64, lf: f64| (k as f64 * ly - y - lf).exp();
    if y < n as f64 {
        // P = sum_{k >= n} e^-y y^k / k!, terms decrease geometrically
        let mut lf = ln_factorial(n);
        let mut s = 0.0;
        let mut k = n;
        loop {
            let t = term(k, lf);
            s += t;
            if t <= s * 1e-17 || t == 0.0 {
                break;
            }
            k += 1;
            lf += (k as f64).ln();
        }
        s.min(1.0)
    } else {
        // Q = sum_{k < n} e^-y y^k / k!
        let mut lf = 0.0;
        let mut q = 0.0;
        for k in 0..n {
            if k > 0 {
                lf += (k as f64).ln();
            }
            q += term(k, lf);
        }
        (1.0 - q).max(0.0)
    }
}

/// Kolmogorov-Smirnov outcome.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample KS test of `xs` against the continuous CDF `cdf`.
pub fn ks_test(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if xs.is_empty() {
        return Err(Error::Degenerate("KS test needs samples".into()));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, sorted.len()),
        n: sorted.len(),
    })
}

/// Asymptotic p-value with the small-sample correction
/// `lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) D`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// Kolmogorov survival function `Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let a = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let j = j as f64;
        let t = sign * (a * j * j).exp();
        sum += t;
        if t.abs() <= 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Dvoretzky-Kiefer-Wolfowitz band half-width at confidence `1 - alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}
