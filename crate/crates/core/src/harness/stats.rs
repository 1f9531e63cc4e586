//! Summary statistics and one-sided tests used by the experiment outputs.

use statrs::distribution::{ContinuousCDF, DiscreteCDF, Hypergeometric, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Bin edges with Freedman–Diaconis width. Falls back to unit bins when the
/// interquartile range is zero.
pub fn freedman_diaconis(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return vec![0.0, 1.0];
    }
    let s = sorted(xs);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
    let mut width = 2.0 * iqr / (s.len() as f64).cbrt();
    if !(width > 0.0) {
        width = if hi > lo { (hi - lo) / (s.len() as f64).sqrt().ceil() } else { 1.0 };
    }
    let bins = (((hi - lo) / width).floor() as usize + 1).min(10_000);
    (0..=bins).map(|k| lo + k as f64 * width).collect()
}

/// Counts per bin; the last bin is closed on the right and values outside
/// the edges are clamped into the end bins.
pub fn histogram(xs: &[f64], edges: &[f64]) -> Vec<usize> {
    let bins = edges.len().saturating_sub(1).max(1);
    let mut counts = vec![0; bins];
    for &x in xs {
        let k = edges[1..].iter().position(|&e| x < e).unwrap_or(bins - 1);
        counts[k.min(bins - 1)] += 1;
    }
    counts
}

/// Welch t-test p-value for H1: mean(b) > mean(a).
pub fn welch_greater(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 || b.len() < 2 {
        return f64::NAN;
    }
    let (va, vb) = (variance(a) / a.len() as f64, variance(b) / b.len() as f64);
    let diff = mean(b) - mean(a);
    let se = (va + vb).sqrt();
    if se == 0.0 {
        return if diff > 0.0 { 0.0 } else { 1.0 };
    }
    let df = (va + vb).powi(2)
        / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let t = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    t.sf(diff / se)
}

/// Fisher exact p-value for H1: the rate k/n is below the reference rate.
pub fn fisher_less(k_ref: usize, n_ref: usize, k: usize, n: usize) -> f64 {
    if n == 0 || n_ref == 0 {
        return f64::NAN;
    }
    let h = Hypergeometric::new((n_ref + n) as u64, (k_ref + k) as u64, n as u64)
        .expect("valid hypergeometric");
    h.cdf(k as u64)
}
