//! Order-stable summation and small sample statistics shared by the estimators.

/// Pairwise summation; the result depends only on the slice contents and order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&dev) / (xs.len() as f64 - 1.0)
}

/// Sample Pearson correlation, `None` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = Vec::with_capacity(xs.len());
    let mut sxx = Vec::with_capacity(xs.len());
    let mut syy = Vec::with_capacity(xs.len());
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy.push(dx * dy);
        sxx.push(dx * dx);
        syy.push(dy * dy);
    }
    let sxx = pairwise_sum(&sxx);
    let syy = pairwise_sum(&syy);
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(pairwise_sum(&sxy) / (sxx * syy).sqrt())
}

/// Trapezoidal integral of equally spaced samples.
pub fn trapezoid(ys: &[f64], h: f64) -> f64 {
    match ys.len() {
        0 | 1 => 0.0,
        n => {
            let inner = pairwise_sum(&ys[1..n - 1]);
            h * (0.5 * ys[0] + inner + 0.5 * ys[n - 1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn pearson_perfect_and_flat() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-15);
        assert!(pearson(&xs, &[1.0; 4]).is_none());
    }

    #[test]
    fn trapezoid_linear_exact() {
        let ys: Vec<f64> = (0..=10).map(|i| 2.0 * i as f64 * 0.1).collect();
        assert!((trapezoid(&ys, 0.1) - 1.0).abs() < 1e-12);
    }
}
