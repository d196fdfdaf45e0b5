//! Statistics of a return stream: its marginal distribution, mean absolute
//! value and the lag-one structure between consecutive returns.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Bin count used for the distribution plots.
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Relative frequency per bin (sums to one).
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// `(lo, hi, count)` per bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(e, &c)| (e[0], e[1], c))
    }

    /// Largest absolute difference between the relative frequencies of two
    /// histograms over the same bins.
    pub fn sup_distance(&self, other: &Histogram) -> Result<f64> {
        if self.edges != other.edges {
            return Err(Error::invalid("histogram", "bin edges differ"));
        }
        Ok(self
            .frequencies()
            .iter()
            .zip(other.frequencies())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Equal-width histogram over `[lo, hi]`. Bins are left-closed and
/// right-open except the last, which also takes `hi`.
pub fn histogram(values: &[f64], n_bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::invalid("n_bins", "must be at least 1"));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::invalid("range", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let width = hi - lo;
    let edges = (0..=n_bins)
        .map(|i| if i == n_bins { hi } else { lo + width * i as f64 / n_bins as f64 })
        .collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let v = Error::check_range("series value", v, lo, hi)?;
        let idx = (((v - lo) / width) * n_bins as f64).floor() as usize;
        counts[idx.min(n_bins - 1)] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        total: values.len() as u64,
    })
}

pub fn mean_abs(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData {
            what: "mean_abs",
            needed: 1,
            got: 0,
        });
    }
    Ok(values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64)
}

fn need_pair(what: &'static str, values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            what,
            needed: 2,
            got: values.len(),
        });
    }
    Ok(())
}

/// `r(t) r(t+1)` for every adjacent pair.
pub fn consecutive_products(values: &[f64]) -> Result<Vec<f64>> {
    need_pair("consecutive products", values)?;
    Ok(values.windows(2).map(|w| w[0] * w[1]).collect())
}

pub fn consecutive_product_distribution(values: &[f64], n_bins: usize) -> Result<Histogram> {
    histogram(&consecutive_products(values)?, n_bins, -1.0, 1.0)
}

pub fn mean_consecutive_product(values: &[f64]) -> Result<f64> {
    let products = consecutive_products(values)?;
    Ok(products.iter().sum::<f64>() / products.len() as f64)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean of `sign(r(t)) sign(r(t+1))`, with `sign(0) = 0`.
pub fn sign_correlation(values: &[f64]) -> Result<f64> {
    need_pair("sign correlation", values)?;
    let n = values.len() - 1;
    Ok(values.windows(2).map(|w| sign(w[0]) * sign(w[1])).sum::<f64>() / n as f64)
}

/// Pearson correlation between `r(t)` and `r(t+1)`.
pub fn lag1_autocorrelation(values: &[f64]) -> Result<f64> {
    need_pair("lag-1 autocorrelation", values)?;
    Ok(pearson(&values[..values.len() - 1], &values[1..]))
}

/// Pearson correlation of two equal-length samples; 0 when either is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "pearson: length mismatch");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// CDF of `sin(θ)` for `θ` uniform on the circle.
pub fn arcsine_cdf(r: f64) -> f64 {
    0.5 + r.clamp(-1.0, 1.0).asin() / PI
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Kolmogorov–Smirnov distance between an empirical sample and a CDF.
pub fn ks_against<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let v = sorted(values);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
