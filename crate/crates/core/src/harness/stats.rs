use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided pooled two-proportion z-test; the p-value for `x1/n1` vs `x2/n2`.
///
/// Degenerate pooled proportions (all failures or all successes) give p = 1.
pub fn two_proportion_test(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    assert!(n1 > 0 && n2 > 0, "empty sample");
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    if pooled <= 0.0 || pooled >= 1.0 {
        return 1.0;
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = (p1 - p2) / se;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    2.0 * (1.0 - normal.cdf(z.abs()))
}
