use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Brute-force search size for recovering up to `k` flipped bits among `n`
/// candidates: `sum_{i=1..k} C(n, i)`.
pub fn complexity_exact(n: u64, k: u64) -> Result<BigUint> {
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
    }
    let mut c = BigUint::from(1u32);
    let mut sum = BigUint::zero();
    for i in 1..=k {
        c = c * (n - i + 1) / i;
        sum += &c;
    }
    Ok(sum)
}

/// `C(n, k)` as an exact integer.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (1..=k).fold(BigUint::from(1u32), |c, i| c * (n - i + 1) / i)
}

/// Geometric-series upper bound `C(n,k)·(n−k+1)/(n−2k+1) − 1`, kept as an
/// exact fraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityBound {
    pub numer: BigUint,
    pub denom: BigUint,
}

impl ComplexityBound {
    pub fn to_f64(&self) -> f64 {
        ratio_f64(&self.numer, &self.denom)
    }

    /// `x <= bound`, compared exactly.
    pub fn dominates(&self, x: &BigUint) -> bool {
        x * &self.denom <= self.numer
    }
}

fn ratio_f64(a: &BigUint, b: &BigUint) -> f64 {
    // Shift both down so the quotient keeps full precision without overflow.
    let shift = a.bits().max(b.bits()).saturating_sub(1000);
    (a >> shift).to_f64().unwrap_or(f64::INFINITY) / (b >> shift).to_f64().unwrap_or(f64::INFINITY)
}

pub fn complexity_bound(n: u64, k: u64) -> Result<ComplexityBound> {
    if 2 * k > n {
        return Err(Error::Domain(format!("bound needs k < (n+1)/2, got n = {n}, k = {k}")));
    }
    let denom = BigUint::from(n - 2 * k + 1);
    let numer = binomial(n, k) * (n - k + 1) - &denom;
    Ok(ComplexityBound { numer, denom })
}

/// One line of the complexity table. `exact` is a decimal string so that
/// CSV and JSON keep every digit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityEstimate {
    pub n: u64,
    pub k: u64,
    pub exact: String,
    /// Empty when the bound is undefined for this `k`.
    pub bound: Option<f64>,
    pub days: f64,
}

/// Exact search size and attack wall time in days, for `k = 0..=k_max`.
pub fn feasibility_report(n: u64, k_max: u64, inferences_per_second: f64) -> Result<Vec<ComplexityEstimate>> {
    if !(inferences_per_second > 0.0) {
        return Err(Error::Domain(format!("inference rate must be positive, got {inferences_per_second}")));
    }
    (0..=k_max)
        .map(|k| {
            let exact = complexity_exact(n, k)?;
            let days = exact.to_f64().unwrap_or(f64::INFINITY) / inferences_per_second / 86_400.0;
            Ok(ComplexityEstimate {
                n,
                k,
                exact: exact.to_string(),
                bound: complexity_bound(n, k).ok().map(|b| b.to_f64()),
                days,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(complexity_exact(150, 5).unwrap(), BigUint::from(612_422_930u64));
        assert_eq!(complexity_exact(5, 5).unwrap(), BigUint::from(31u32));
        assert_eq!(complexity_exact(150, 150).unwrap(), (BigUint::from(1u32) << 150usize) - 1u32);
        assert!(complexity_exact(3, 4).is_err());
        let b = complexity_bound(150, 5).unwrap();
        assert!((b.to_f64() - 6.126e8).abs() < 1e5, "{}", b.to_f64());
        assert!(b.dominates(&complexity_exact(150, 5).unwrap()));
        assert!(complexity_bound(9, 5).is_err());
    }

    #[test]
    fn binomial_matches_pascal() {
        let mut row = vec![BigUint::from(1u32)];
        for n in 1..=40u64 {
            let mut next = vec![BigUint::from(1u32); n as usize + 1];
            for k in 1..n as usize {
                next[k] = &row[k - 1] + &row[k];
            }
            row = next;
            for k in 0..=n {
                assert_eq!(binomial(n, k), row[k as usize]);
            }
        }
    }

    #[test]
    fn k_one_bound() {
        for n in 2..50u64 {
            let b = complexity_bound(n, 1).unwrap();
            assert_eq!(b.numer, BigUint::from(n * n - (n - 1)));
            assert_eq!(b.denom, BigUint::from(n - 1));
        }
    }

    #[test]
    fn feasibility_linearity() {
        let a = feasibility_report(1152, 5, 6900.0).unwrap();
        let b = feasibility_report(1152, 5, 13800.0).unwrap();
        assert_eq!(a[0].days, 0.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.days - 2.0 * y.days).abs() <= 1e-9 * x.days);
        }
        assert!(feasibility_report(10, 2, 0.0).is_err());
    }
}
