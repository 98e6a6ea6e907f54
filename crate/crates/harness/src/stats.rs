//! Medians with distribution-free confidence intervals from order statistics.

use statrs::distribution::{Binomial, DiscreteCDF};

/// Median of `xs`; the mean of the two middle values for an even count.
pub fn median(xs: &[f64]) -> Option<f64> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(s[n / 2]),
        _ => Some((s[n / 2 - 1] + s[n / 2]) / 2.0),
    }
}

/// Interval `[x_(j), x_(n+1-j)]` of order statistics (1-based) covering the
/// median with probability at least `level`. `j` is the largest index with
/// `P(Bin(n, 1/2) < j) <= (1 - level) / 2`; when even `j = 1` misses the
/// level, the whole sample range is returned.
pub fn median_ci(xs: &[f64], level: f64) -> Option<(f64, f64)> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        return None;
    }
    let tail = (1.0 - level) / 2.0;
    let bin = Binomial::new(0.5, n as u64).expect("valid binomial");
    let mut j = 1;
    while j < n.div_ceil(2) && bin.cdf(j as u64) <= tail {
        j += 1;
    }
    Some((s[j - 1], s[n - j]))
}
