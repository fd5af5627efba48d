/// Binomial coefficient as f64 (exact for the small arguments used here).
pub(crate) fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Sample mean and unbiased variance in a fixed summation order.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (m - 1.0))
}

/// Standard error of the sample variance, from the fourth central moment.
pub(crate) fn variance_standard_error(xs: &[f64]) -> f64 {
    let m = xs.len() as f64;
    if xs.len() < 2 {
        return f64::INFINITY;
    }
    let (mean, var) = mean_var(xs);
    let mu4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m;
    ((mu4 - var * var).max(0.0) / m).sqrt()
}
