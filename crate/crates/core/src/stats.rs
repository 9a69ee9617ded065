//! Entropy and sampling statistics shared by the estimators.

use alloc::vec::Vec;

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// `-p log2 p`, with `0 log 0 = 0`.
#[inline]
pub fn eta(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * log2(p)
    }
}

/// Shannon entropy (bits) of a probability vector.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().map(|&x| eta(x)).sum()
}

pub fn binary_entropy(p: f64) -> f64 {
    eta(p) + eta(1.0 - p)
}

/// Plug-in entropy (bits) of a count table.
pub fn plugin_entropy(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| eta(c as f64 / nf))
        .sum()
}

/// Plug-in entropy plus the Miller–Madow term `(m - 1) / (2 N ln 2)`.
pub fn miller_madow(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let m = counts.iter().filter(|&&c| c > 0).count() as f64;
    plugin_entropy(counts) + (m - 1.0) / (2.0 * n as f64 * core::f64::consts::LN_2)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of a full-sample estimate from `k` equal shards: `sd(shards) / sqrt(k)`.
pub fn shard_stderr(shards: &[f64]) -> f64 {
    if shards.len() < 2 {
        return 0.0;
    }
    libm::sqrt(variance(shards) / shards.len() as f64)
}

/// One-sided 95% Student-t quantile (Cornish–Fisher expansion, accurate to ~1e-3 for df >= 5).
pub fn t95(df: usize) -> f64 {
    let z = 1.6448536269514722;
    let n = df.max(1) as f64;
    let z3 = z * z * z;
    let z5 = z3 * z * z;
    let z7 = z5 * z * z;
    z + (z3 + z) / (4.0 * n)
        + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * n * n)
        + (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * n * n * n)
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// One-sided t-test that the mean of `xs` is below zero; returns `(t, passes)`.
pub fn negative_mean_test(xs: &[f64]) -> (f64, bool) {
    let se = libm::sqrt(variance(xs) / xs.len() as f64);
    let m = mean(xs);
    if se == 0.0 {
        return (if m < 0.0 { f64::NEG_INFINITY } else { 0.0 }, m < 0.0);
    }
    let t = m / se;
    (t, t < -t95(xs.len() - 1))
}

/// Count table for a stream of small integer keys.
pub fn histogram(keys: impl Iterator<Item = usize>, size: usize) -> Vec<u64> {
    let mut h = alloc::vec![0u64; size];
    for k in keys {
        h[k] += 1;
    }
    h
}
