//! Small integer helpers shared by the residue and oracle code.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |acc, &x| acc.gcd(&x))
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Reduces an arbitrary integer into `[0, m)`.
pub fn reduce_big(c: &BigInt, m: u64) -> u64 {
    let m_big = BigInt::from(m);
    let r = c.mod_floor(&m_big);
    u64::try_from(r).expect("residue fits in u64")
}

/// p-adic valuation of a residue modulo `p^depth`; `None` when it is zero there.
pub fn valuation_mod(mut x: u64, p: u64, depth: u32) -> Option<u32> {
    if x == 0 {
        return None;
    }
    let mut v = 0;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
        if v >= depth {
            return None;
        }
    }
    Some(v)
}

/// `q^e` as an exact rational, negative exponents allowed.
pub fn q_pow(q: u64, e: i64) -> BigRational {
    let base = BigInt::from(q);
    let mag = num_traits::pow(base, e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(mag)
    } else {
        BigRational::new(BigInt::one(), mag)
    }
}

pub fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            while n.is_multiple_of(d) {
                n /= d;
            }
            result -= result / d;
        }
        d += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=n).filter(|d| n.is_multiple_of(*d)).collect();
    out.sort_unstable();
    out
}

pub fn rational_from_i64(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // scale down huge numerators/denominators before dividing
            let bits = r.numer().bits().max(r.denom().bits()) as i64 - 900;
            let shift = bits.max(0) as usize;
            let n = (r.numer().abs() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
            let v = if d == 0.0 { f64::INFINITY } else { n / d };
            if r.is_negative() {
                -v
            } else {
                v
            }
        }
    }
}


/// Serde helpers that write rationals as `"p/q"` strings.
pub mod ser {
    use num_rational::BigRational;
    use serde::Serializer;

    pub fn rat<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn rat_vec<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| r.to_string()))
    }

    pub fn opt_rat<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&r.to_string()),
            None => s.serialize_none(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_and_powers() {
        assert!(is_prime(3) && is_prime(7) && !is_prime(9) && !is_prime(1));
        assert_eq!(pow_mod(2, 10, 1000), 24);
        assert_eq!(valuation_mod(18, 3, 5), Some(2));
        assert_eq!(valuation_mod(0, 3, 5), None);
        assert_eq!(valuation_mod(81, 3, 4), None);
        assert_eq!(euler_phi(9), 6);
        assert_eq!(q_pow(3, -2), rational_from_i64(1, 9));
    }
}
