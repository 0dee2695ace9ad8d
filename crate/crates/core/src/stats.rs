//! Small statistics toolkit for the Monte Carlo experiments.
//!
//! Reductions always run over slices in index order so results do not
//! depend on how replicas were scheduled.

use statrs::function::erf::erfc;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Bessel-corrected sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Standard error of the sample mean.
pub fn std_err(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the sample variance, from the fourth central moment:
/// `Var(s^2) ~ (mu4 - sigma^4 (N-3)/(N-1)) / N`.
pub fn variance_std_err(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if n < 4.0 {
        return f64::NAN;
    }
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return 0.0;
    }
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile, `q` in [0, 1].
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let v = sorted(xs);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

pub fn normal_cdf(x: f64, sd: f64) -> f64 {
    0.5 * erfc(-x / (sd * std::f64::consts::SQRT_2))
}

/// Kolmogorov-Smirnov distance between the empirical law of `xs` and
/// Normal(0, sd^2).
pub fn ks_normal(xs: &[f64], sd: f64) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = normal_cdf(x, sd);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// KS distance using the mid-point of the empirical CDF at each distinct
/// value. For lattice-valued data this removes the half-jump floor that the
/// plain statistic has against a continuous law. Values within 1e-9 of the
/// first one in a run count as the same atom (densities of equal-type
/// strings differ by rounding).
pub fn ks_normal_midpoint(xs: &[f64], sd: f64) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] - v[i] <= 1e-9 * v[i].abs().max(1.0) {
            j += 1;
        }
        let mid = (i as f64 + (j + 1) as f64) / (2.0 * n);
        d = d.max((mid - normal_cdf(v[i], sd)).abs());
        i = j + 1;
    }
    d
}

/// Asymptotic 5% critical value of the one-sample KS statistic.
pub fn ks_critical_5pct(samples: usize) -> f64 {
    1.36 / (samples as f64).sqrt()
}

/// Two-sided p-value of the Mann-Whitney rank-sum test (normal
/// approximation with tie correction).
pub fn mann_whitney_p(a: &[f64], b: &[f64]) -> f64 {
    let mut all: Vec<(f64, usize)> = a.iter().map(|&v| (v, 0)).chain(b.iter().map(|&v| (v, 1))).collect();
    all.sort_by(|p, q| p.0.total_cmp(&q.0));
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for slot in ranks.iter_mut().take(j + 1).skip(i) {
            *slot = r;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let r1: f64 = all.iter().zip(&ranks).filter(|(p, _)| p.1 == 0).map(|(_, r)| r).sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let nn = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = (u - mu).abs() / var.sqrt();
    (2.0 * (1.0 - normal_cdf(z, 1.0))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((correlation(&xs, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0, 1.0) - 0.5).abs() < 1e-15);
        let q = normal_cdf(1.959963984540054, 1.0);
        // statrs erfc is accurate to roughly 1e-12 here
        assert!((q - 0.975).abs() < 1e-11, "{q:e}");
        assert!((normal_cdf(2.0, 2.0) - normal_cdf(1.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn midpoint_ks_ignores_lattice_jumps() {
        // Half the mass at -1 and half at +1 against N(0, 1): the plain
        // statistic sees the full jump at 0 region, the mid-point one only
        // the distance of each atom's mid-CDF to the normal CDF.
        let xs = [-1.0, -1.0, 1.0, 1.0];
        let plain = ks_normal(&xs, 1.0);
        let mid = ks_normal_midpoint(&xs, 1.0);
        assert!((plain - (0.5 - normal_cdf(-1.0, 1.0))).abs() < 1e-12);
        assert!((mid - (normal_cdf(-1.0, 1.0) - 0.25).abs()).abs() < 1e-12);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        // Midpoint quantiles of N(0,1): KS distance is exactly 1/(2N).
        let n = 1000;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / n as f64;
                // bisection inverse
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if normal_cdf(mid, 1.0) < p {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        assert!((ks_normal(&xs, 1.0) - 0.0005).abs() < 1e-9);
        assert!(ks_normal(&xs, 2.0) > 0.1);
    }

    #[test]
    fn mann_whitney_detects_shift() {
        let a: Vec<f64> = (0..50).map(f64::from).collect();
        let b: Vec<f64> = (0..50).map(|i| f64::from(i) + 0.5).collect();
        assert!(mann_whitney_p(&a, &b) > 0.5);
        let c: Vec<f64> = (0..50).map(|i| f64::from(i) + 40.0).collect();
        assert!(mann_whitney_p(&a, &c) < 1e-6);
    }
}
