//! Exact arithmetic in `ℚ(ζ_M)`.
//!
//! Elements are coefficient vectors in the power basis `1, ζ, …, ζ^{φ(M)−1}`
//! reduced modulo the cyclotomic polynomial `Φ_M`. Rationals carry no field
//! context and mix freely with any cyclotomic field.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::rat_to_f64;

/// `Φ_m` with integer coefficients, lowest degree first.
pub fn cyclotomic_poly(m: u64) -> Vec<BigInt> {
    assert!(m >= 1);
    // x^m − 1 divided by Φ_d for every proper divisor d
    let mut num: Vec<BigInt> = vec![BigInt::zero(); m as usize + 1];
    num[0] = BigInt::from(-1);
    num[m as usize] = BigInt::one();
    for d in crate::arith::divisors(m) {
        if d == m {
            continue;
        }
        num = exact_div_int(&num, &cyclotomic_poly(d));
    }
    num
}

fn exact_div_int(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = &b[db];
    let mut q = vec![BigInt::zero(); r.len() - db];
    for i in (0..q.len()).rev() {
        let c = &r[i + db] / lead;
        for (j, bj) in b.iter().enumerate() {
            r[i + j] -= &c * bj;
        }
        q[i] = c;
    }
    debug_assert!(r.iter().all(|x| x.is_zero()));
    q
}

#[derive(Debug)]
pub struct CycCtx {
    pub m: u64,
    /// Monic `Φ_M` as rationals, lowest degree first.
    phi: Vec<BigRational>,
    /// `ζ_M^j` reduced, for `0 ≤ j < M`.
    powers: Vec<Vec<BigRational>>,
}

impl CycCtx {
    pub fn new(m: u64) -> Arc<Self> {
        let phi: Vec<BigRational> = cyclotomic_poly(m).into_iter().map(BigRational::from_integer).collect();
        let mut powers = Vec::with_capacity(m as usize);
        let mut cur = vec![BigRational::one()];
        for _ in 0..m {
            powers.push(trim(cur.clone()));
            let mut next = vec![BigRational::zero()];
            next.extend(cur.iter().cloned());
            cur = reduce(next, &phi);
        }
        Arc::new(CycCtx { m, phi, powers })
    }

    pub fn degree(&self) -> usize {
        self.phi.len() - 1
    }
}

fn trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.last().is_some_and(|x| x.is_zero()) {
        v.pop();
    }
    v
}

fn reduce(mut v: Vec<BigRational>, phi: &[BigRational]) -> Vec<BigRational> {
    let d = phi.len() - 1;
    if d == 0 {
        return trim(v);
    }
    while v.len() > d {
        let top = v.len() - 1;
        let c = v[top].clone();
        if !c.is_zero() {
            for k in 0..d {
                let t = &c * &phi[k];
                v[top - d + k] -= t;
            }
        }
        v.pop();
    }
    trim(v)
}

/// An element of `ℚ(ζ_M)`; `ctx == None` marks a plain rational.
#[derive(Clone, Debug)]
pub struct CycRat {
    ctx: Option<Arc<CycCtx>>,
    coeffs: Vec<BigRational>,
}

impl CycRat {
    pub fn zero() -> Self {
        CycRat { ctx: None, coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_rational(r: BigRational) -> Self {
        CycRat { ctx: None, coeffs: trim(vec![r]) }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// `ζ_M^k`.
    pub fn zeta_pow(ctx: &Arc<CycCtx>, k: i64) -> Self {
        let j = k.rem_euclid(ctx.m as i64) as usize;
        CycRat { ctx: Some(ctx.clone()), coeffs: ctx.powers[j].clone() }.simplify()
    }

    fn simplify(mut self) -> Self {
        if self.coeffs.len() <= 1 {
            self.ctx = None;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self.coeffs.len() {
            0 => Some(BigRational::zero()),
            1 => Some(self.coeffs[0].clone()),
            _ => None,
        }
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn order(&self) -> Option<u64> {
        self.ctx.as_ref().map(|c| c.m)
    }

    fn join(a: &Self, b: &Self) -> Option<Arc<CycCtx>> {
        match (&a.ctx, &b.ctx) {
            (Some(x), Some(y)) => {
                assert_eq!(x.m, y.m, "mixing cyclotomic fields");
                Some(x.clone())
            }
            (Some(x), None) | (None, Some(x)) => Some(x.clone()),
            (None, None) => None,
        }
    }

    fn add_ref(&self, other: &Self) -> Self {
        let ctx = Self::join(self, other);
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut v = vec![BigRational::zero(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            v[i] += c;
        }
        CycRat { ctx, coeffs: trim(v) }.simplify()
    }

    fn neg_ref(&self) -> Self {
        CycRat { ctx: self.ctx.clone(), coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    fn mul_ref(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let ctx = Self::join(self, other);
        let mut v = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        let coeffs = match &ctx {
            Some(c) => reduce(v, &c.phi),
            None => trim(v),
        };
        CycRat { ctx, coeffs }.simplify()
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        CycRat { ctx: self.ctx.clone(), coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    /// Multiplicative inverse by the extended Euclidean algorithm against `Φ_M`.
    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero");
        let Some(ctx) = &self.ctx else {
            return Self::from_rational(self.coeffs[0].recip());
        };
        // invariant: s·a ≡ r (mod Φ)
        let (mut r0, mut r1) = (ctx.phi.clone(), self.coeffs.clone());
        let (mut s0, mut s1): (Vec<BigRational>, Vec<BigRational>) = (Vec::new(), vec![BigRational::one()]);
        while r1.len() > 1 {
            let (q, r) = qpoly_divrem(&r0, &r1);
            let s2 = qpoly_sub(&s0, &qpoly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
        }
        debug_assert_eq!(r1.len(), 1);
        let c = r1[0].recip();
        let coeffs = reduce(s1.iter().map(|x| x * &c).collect(), &ctx.phi);
        CycRat { ctx: Some(ctx.clone()), coeffs }.simplify()
    }

    /// Complex embedding with `ζ_M ↦ e^{2πi/M}`.
    pub fn to_complex(&self) -> Complex64 {
        let m = self.ctx.as_ref().map_or(1, |c| c.m) as f64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| Complex64::from_polar(rat_to_f64(c), std::f64::consts::TAU * j as f64 / m))
            .sum()
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }
}

fn qpoly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let len = a.len().max(b.len());
    let mut v = vec![BigRational::zero(); len];
    for (i, x) in a.iter().enumerate() {
        v[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        v[i] -= x;
    }
    trim(v)
}

fn qpoly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut v = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            v[i + j] += x * y;
        }
    }
    trim(v)
}

fn qpoly_divrem(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    if r.len() <= db {
        return (Vec::new(), trim(r));
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    for i in (0..q.len()).rev() {
        let c = &r[i + db] / &b[db];
        if !c.is_zero() {
            for (j, bj) in b.iter().enumerate() {
                let t = &c * bj;
                r[i + j] -= t;
            }
        }
        q[i] = c;
    }
    r.truncate(db);
    (trim(q), trim(r))
}

impl PartialEq for CycRat {
    fn eq(&self, other: &Self) -> bool {
        if self.coeffs.len() > 1 && self.order() != other.order() {
            return false;
        }
        self.coeffs == other.coeffs
    }
}

impl Eq for CycRat {}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&CycRat> for &CycRat {
            type Output = CycRat;
            fn $m(self, rhs: &CycRat) -> CycRat {
                $body(self, rhs)
            }
        }
        impl $tr<CycRat> for CycRat {
            type Output = CycRat;
            fn $m(self, rhs: CycRat) -> CycRat {
                $body(&self, &rhs)
            }
        }
        impl $tr<&CycRat> for CycRat {
            type Output = CycRat;
            fn $m(self, rhs: &CycRat) -> CycRat {
                $body(&self, rhs)
            }
        }
    };
}

binop!(Add, add, |a: &CycRat, b: &CycRat| a.add_ref(b));
binop!(Sub, sub, |a: &CycRat, b: &CycRat| a.add_ref(&b.neg_ref()));
binop!(Mul, mul, |a: &CycRat, b: &CycRat| a.mul_ref(b));
binop!(Div, div, |a: &CycRat, b: &CycRat| a.mul_ref(&b.inv()));

impl Neg for CycRat {
    type Output = CycRat;
    fn neg(self) -> CycRat {
        self.neg_ref()
    }
}

impl Neg for &CycRat {
    type Output = CycRat;
    fn neg(self) -> CycRat {
        self.neg_ref()
    }
}

impl From<BigRational> for CycRat {
    fn from(r: BigRational) -> Self {
        CycRat::from_rational(r)
    }
}

impl fmt::Display for CycRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let m = self.order().unwrap_or(1);
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    write!(f, "zeta{m}")?;
                    if j > 1 {
                        write!(f, "^{j}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(1), ints(&[-1, 1]));
        assert_eq!(cyclotomic_poly(2), ints(&[1, 1]));
        assert_eq!(cyclotomic_poly(4), ints(&[1, 0, 1]));
        assert_eq!(cyclotomic_poly(6), ints(&[1, -1, 1]));
        assert_eq!(cyclotomic_poly(12), ints(&[1, 0, -1, 0, 1]));
        assert_eq!(cyclotomic_poly(9), ints(&[1, 0, 0, 1, 0, 0, 1]));
    }

    #[test]
    fn roots_of_unity() {
        let c = CycCtx::new(6);
        let z = CycRat::zeta_pow(&c, 1);
        assert_eq!(z.pow(6), CycRat::one());
        assert_eq!(z.pow(3), CycRat::from_int(-1));
        assert_ne!(z.pow(2), CycRat::one());
        let sum = (0..6).fold(CycRat::zero(), |a, k| a + CycRat::zeta_pow(&c, k));
        assert!(sum.is_zero());
        let c2 = CycCtx::new(2);
        assert_eq!(CycRat::zeta_pow(&c2, 1), CycRat::from_int(-1));
        assert_eq!(CycRat::zeta_pow(&c, 1).to_string(), "zeta6");
    }

    #[test]
    fn inverse_and_embedding() {
        let c = CycCtx::new(5);
        let a = CycRat::zeta_pow(&c, 1) + CycRat::from_int(2);
        let b = a.inv();
        assert!((&a * &b).is_one());
        let z = a.to_complex() * b.to_complex();
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    fn arb_elem(m: u64) -> impl Strategy<Value = CycRat> {
        prop::collection::vec((-4i64..5, 1i64..4), 1..6).prop_map(move |cs| {
            let ctx = CycCtx::new(m);
            cs.iter()
                .enumerate()
                .map(|(k, &(n, d))| CycRat::zeta_pow(&ctx, k as i64).scale(&BigRational::new(n.into(), d.into())))
                .fold(CycRat::zero(), |a, b| a + b)
        })
    }

    proptest! {
        #[test]
        fn field_axioms(a in arb_elem(12), b in arb_elem(12), c in arb_elem(12)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            let z = (&a * &b).to_complex() - a.to_complex() * b.to_complex();
            prop_assert!(z.norm() < 1e-9);
            if !a.is_zero() {
                prop_assert!((&a * &a.inv()).is_one());
            }
        }
    }
}
