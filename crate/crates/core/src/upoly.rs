//! Dense univariate polynomials in `t` over `ℚ` or `ℚ(ζ_M)`.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use crate::cyclo::CycRat;

/// Coefficients lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UPoly {
    coeffs: Vec<CycRat>,
}

impl UPoly {
    pub fn zero() -> Self {
        UPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(CycRat::one())
    }

    pub fn constant(c: CycRat) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// `c · t^k`.
    pub fn monomial(c: CycRat, k: usize) -> Self {
        let mut v = vec![CycRat::zero(); k + 1];
        v[k] = c;
        Self::from_coeffs(v)
    }

    pub fn from_coeffs(mut coeffs: Vec<CycRat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UPoly { coeffs }
    }

    pub fn from_rationals(v: Vec<BigRational>) -> Self {
        Self::from_coeffs(v.into_iter().map(CycRat::from_rational).collect())
    }

    pub fn coeffs(&self) -> &[CycRat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> Option<&CycRat> {
        self.coeffs.last()
    }

    /// Lowest power of `t` with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let v = (0..len)
            .map(|i| match (self.coeffs.get(i), other.coeffs.get(i)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) | (None, Some(a)) => a.clone(),
                (None, None) => unreachable!(),
            })
            .collect();
        Self::from_coeffs(v)
    }

    pub fn neg(&self) -> Self {
        UPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut v = vec![CycRat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    v[i + j] = &v[i + j] + &(a * b);
                }
            }
        }
        Self::from_coeffs(v)
    }

    pub fn scale(&self, c: &CycRat) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![CycRat::zero(); k];
        v.extend(self.coeffs.iter().cloned());
        UPoly { coeffs: v }
    }

    pub fn pow(&self, e: usize) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by zero polynomial");
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let inv_lead = d.coeffs[dd].inv();
        let mut q = vec![CycRat::zero(); r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = &r[i + dd] * &inv_lead;
            if !c.is_zero() {
                for (j, dj) in d.coeffs.iter().enumerate() {
                    r[i + j] = &r[i + j] - &(&c * dj);
                }
            }
            q[i] = c;
        }
        r.truncate(dd);
        (Self::from_coeffs(q), Self::from_coeffs(r))
    }

    /// Quotient when `d` divides `self`, otherwise `None`.
    pub fn exact_div(&self, d: &Self) -> Option<Self> {
        let (q, r) = self.divrem(d);
        r.is_zero().then_some(q)
    }

    pub fn monic(&self) -> Self {
        match self.lead() {
            None => Self::zero(),
            Some(l) => self.scale(&l.inv()),
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    pub fn eval(&self, t: &CycRat) -> CycRat {
        self.coeffs.iter().rev().fold(CycRat::zero(), |acc, c| &(&acc * t) + c)
    }

    pub fn eval_rational(&self, t: &BigRational) -> CycRat {
        self.eval(&CycRat::from_rational(t.clone()))
    }

    pub fn eval_complex(&self, t: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c.to_complex())
    }

    /// Whether every coefficient is rational.
    pub fn is_rational(&self) -> bool {
        self.coeffs.iter().all(|c| c.as_rational().is_some())
    }

    pub fn from_ints(v: &[i64]) -> Self {
        Self::from_rationals(v.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
    }

    /// Text form in the variable `t`, highest degree first.
    pub fn to_string_var(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let cs = if c.as_rational().is_some() { c.to_string() } else { format!("({c})") };
            let term = match k {
                0 => cs,
                _ => {
                    let mono = if k == 1 { var.to_string() } else { format!("{var}^{k}") };
                    if c.is_one() {
                        mono
                    } else if (-c).is_one() {
                        format!("-{mono}")
                    } else {
                        format!("{cs}*{mono}")
                    }
                }
            };
            parts.push(term);
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            match p.strip_prefix('-') {
                Some(rest) => {
                    out.push_str(" - ");
                    out.push_str(rest);
                }
                None => {
                    out.push_str(" + ");
                    out.push_str(p);
                }
            }
        }
        out
    }
}

impl fmt::Display for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_var("t"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::CycCtx;
    use proptest::prelude::*;

    #[test]
    fn basic_arithmetic() {
        let a = UPoly::from_ints(&[-1, 0, 1]); // t² − 1
        let b = UPoly::from_ints(&[1, 1]); // t + 1
        let (q, r) = a.divrem(&b);
        assert_eq!(q, UPoly::from_ints(&[-1, 1]));
        assert!(r.is_zero());
        assert_eq!(a.gcd(&UPoly::from_ints(&[1, 2, 1])), b);
        assert_eq!(a.to_string(), "t^2 - 1");
        assert_eq!(a.eval_rational(&BigRational::from_integer(3.into())), CycRat::from_int(8));
        assert_eq!(UPoly::from_ints(&[0, 0, 3]).valuation(), Some(2));
    }

    #[test]
    fn gcd_over_cyclotomic_field() {
        // t² + 1 = (t − i)(t + i) over ℚ(ζ₄)
        let c = CycCtx::new(4);
        let i = CycRat::zeta_pow(&c, 1);
        let p = UPoly::from_ints(&[1, 0, 1]);
        let lin = UPoly::from_coeffs(vec![-&i, CycRat::one()]);
        let g = p.gcd(&lin.mul(&UPoly::from_ints(&[2, 1])));
        assert_eq!(g, lin);
        assert!(p.exact_div(&lin).is_some());
    }

    proptest! {
        #[test]
        fn division_identity(a in prop::collection::vec(-5i64..6, 0..6), b in prop::collection::vec(-5i64..6, 1..4)) {
            let pa = UPoly::from_ints(&a);
            let pb = UPoly::from_ints(&b);
            prop_assume!(!pb.is_zero());
            let (q, r) = pa.divrem(&pb);
            prop_assert_eq!(q.mul(&pb).add(&r), pa.clone());
            prop_assert!(r.degree().is_none_or(|d| d < pb.degree().unwrap()));
            let g = pa.gcd(&pb);
            prop_assert!(pa.exact_div(&g).is_some() || pa.is_zero());
            prop_assert!(pb.exact_div(&g).is_some());
        }
    }
}
