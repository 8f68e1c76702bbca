//! Small exact combinatorics used by the Fock-space modules.

/// Binomial coefficient as u128; saturates are not needed at the sizes the
/// basis guard admits.
pub(crate) fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub(crate) fn binomial_f(n: u32, k: u32) -> f64 {
    binomial_u128(n as u64, k as u64) as f64
}

pub(crate) fn factorial_f(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `sqrt(n! / prod(counts!))` for a photon tuple with `sum(counts) = n`.
pub(crate) fn multinomial_sqrt(n: u32, counts: &[u32]) -> f64 {
    let mut value = factorial_f(n);
    for &c in counts {
        value /= factorial_f(c);
    }
    value.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial_u128(7, 4), 35);
        assert_eq!(binomial_u128(11, 7), 330);
        assert_eq!(binomial_u128(4, 5), 0);
        assert_eq!(binomial_f(2, 1), 2.0);
    }

    #[test]
    fn multinomial_prefactor() {
        // 2 photons split (1,1): sqrt(2!/1!1!) = sqrt(2).
        assert!((multinomial_sqrt(2, &[1, 1]) - 2.0f64.sqrt()).abs() < 1e-15);
        assert!((multinomial_sqrt(3, &[3, 0]) - 1.0).abs() < 1e-15);
    }
}
