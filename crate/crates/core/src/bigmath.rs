//! Small exact-arithmetic helpers shared by the exact paths.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `binomial(n, r)` as an exact big integer (0 when `r > n`).
pub fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Natural log of a positive big integer, accurate to double precision.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit mantissa");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a nonnegative rational; `-inf` for zero.
pub fn ln_rational(x: &BigRational) -> f64 {
    assert!(!x.is_negative(), "log of a negative rational");
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_biguint(x.numer().magnitude()) - ln_biguint(x.denom().magnitude())
}

pub fn rational_from_uint(x: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// `base^exp` for rationals with a nonnegative exponent.
pub fn pow_rational(base: &BigRational, exp: u64) -> BigRational {
    num_traits::pow(base.clone(), exp as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(6, 0), BigUint::one());
        assert_eq!(binomial(3, 4), BigUint::zero());
        assert_eq!(binomial(66, 33), BigUint::from(7219428434016265740u64));
    }

    #[test]
    fn ln_of_huge_integer() {
        let x = num_traits::pow(BigUint::from(10u32), 2000);
        assert!((ln_biguint(&x) - 2000.0 * 10f64.ln()).abs() < 1e-9);
        let r = BigRational::new(1.into(), num_traits::pow(BigInt::from(3), 900));
        assert!((ln_rational(&r) + 900.0 * 3f64.ln()).abs() < 1e-9);
        assert_eq!(ln_rational(&BigRational::zero()), f64::NEG_INFINITY);
    }
}
