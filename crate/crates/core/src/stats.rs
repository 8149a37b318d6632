//! Small statistics helpers shared by the Monte Carlo modules.

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
///
/// Returns `(0, 1)` when there are no trials.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes >= trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Plug-in mutual information (bits) of a 2x2 contingency table
/// `counts[row][col]`, with `0 log 0 = 0` and no bias correction.
pub fn mutual_information_bits(counts: [[u64; 2]; 2]) -> f64 {
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let rows = [
        (counts[0][0] + counts[0][1]) as f64 / n,
        (counts[1][0] + counts[1][1]) as f64 / n,
    ];
    let cols = [
        (counts[0][0] + counts[1][0]) as f64 / n,
        (counts[0][1] + counts[1][1]) as f64 / n,
    ];
    let mut mi = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let joint = counts[r][c] as f64 / n;
            if joint > 0.0 {
                mi += joint * (joint / (rows[r] * cols[c])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F1 - F2|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        // advance past ties on both sides before comparing the CDFs
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Large-sample critical value of the two-sample KS statistic at level `alpha`.
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Standard error of a proportion estimated from `trials` samples.
pub fn proportion_se(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Combined standard error of the difference of two independent proportions.
pub fn two_proportion_se(p1: f64, n1: u64, p2: f64, n2: u64) -> f64 {
    (proportion_se(p1, n1).powi(2) + proportion_se(p2, n2).powi(2)).sqrt()
}
