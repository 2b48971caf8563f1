//! Closed-form moments of the standard 3D Gaussian, used as independent
//! reference values by the test suites. Nothing in the solver path depends on
//! this module.

/// `E[v1^p1 v2^p2 v3^p3]` for `v ~ N(0, I_3)`: a product of 1D moments,
/// `(p - 1)!!` for even `p` and zero for odd `p`.
pub fn std_gaussian_moment(powers: [u32; 3]) -> f64 {
    powers.iter().map(|&p| gaussian_moment_1d(p)).product()
}

fn gaussian_moment_1d(p: u32) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    let mut acc = 1.0;
    let mut k = p as i64 - 1;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `E[|v|^{2k}]` for `v ~ N(0, I_3)`: 1, 3, 15, 105, ...
pub fn std_gaussian_speed_moment(k: u32) -> f64 {
    // |v|^{2k} expands into monomials; for the small k needed here the direct
    // product formula (2k + 1)!! holds in three dimensions.
    let mut acc = 1.0;
    let mut j = 2 * k as i64 + 1;
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    acc
}
