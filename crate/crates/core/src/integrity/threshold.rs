//! Detection threshold for the relational watermark.
//!
//! On unmarked data each examined bit matches with probability 1/2, so the
//! match count is Binomial(ω, 1/2). The threshold is the smallest τ whose
//! upper tail falls below the significance level.

/// `P[Binomial(omega, 1/2) >= tau]`.
pub fn binomial_half_tail(omega: u64, tau: u64) -> f64 {
    if tau == 0 {
        return 1.0;
    }
    if tau > omega {
        return 0.0;
    }
    let ln2 = std::f64::consts::LN_2;
    let n = omega as f64;
    // walk down from k = omega, where ln C(omega, omega) = 0
    let mut ln_c = 0.0f64;
    let mut tail = 0.0f64;
    let mut k = omega;
    loop {
        tail += (ln_c - n * ln2).exp();
        if k == tau {
            break;
        }
        // C(n, k-1) = C(n, k) * k / (n - k + 1)
        ln_c += (k as f64).ln() - ((omega - k + 1) as f64).ln();
        k -= 1;
    }
    tail.min(1.0)
}

/// Smallest τ with `P[Binomial(omega, 1/2) >= τ] < alpha`. When `omega` is
/// zero the answer is 1, which no match count can reach.
pub fn detect_threshold(omega: u64, alpha: f64) -> u64 {
    let ln2 = std::f64::consts::LN_2;
    let n = omega as f64;
    let mut ln_c = 0.0f64;
    let mut tail = 0.0f64;
    // tail(omega + 1) = 0 < alpha always; extend downward while it holds
    let mut tau = omega + 1;
    let mut k = omega;
    loop {
        tail += (ln_c - n * ln2).exp();
        if tail >= alpha {
            return tau;
        }
        tau = k;
        if k == 0 {
            return 0;
        }
        ln_c += (k as f64).ln() - ((omega - k + 1) as f64).ln();
        k -= 1;
    }
}
