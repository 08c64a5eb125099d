//! Sparse multivariate polynomials with integer coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by exponent vector, so iteration is
//! always in lexicographic exponent order and zero coefficients are never
//! stored.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{mul_mod, pow_mod, reduce_big};
use crate::error::{Error, Result};

/// Monomial exponent vector `m ∈ ℕⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentVector(pub Vec<u32>);

impl ExponentVector {
    pub fn zero(n: usize) -> Self {
        ExponentVector(vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        ExponentVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn as_i64(&self) -> Vec<i64> {
        self.0.iter().map(|&e| e as i64).collect()
    }

    /// `⟨k, m⟩` for an integer weight vector.
    pub fn dot(&self, k: &[i64]) -> i64 {
        self.0.iter().zip(k).map(|(&e, &w)| e as i64 * w).sum()
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A point of `(ℤ/p^e)ⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResiduePoint {
    pub coords: Vec<u64>,
    pub modulus: u64,
}

impl ResiduePoint {
    pub fn new(coords: Vec<u64>, modulus: u64) -> Self {
        let coords = coords.into_iter().map(|c| c % modulus).collect();
        ResiduePoint { coords, modulus }
    }

    /// Whether every coordinate is a unit modulo `p`.
    pub fn in_torus(&self, p: u64) -> bool {
        self.coords.iter().all(|c| c % p != 0)
    }
}

/// Exact polynomial `Σ c_m x^m` over the integers in `n` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    n: usize,
    terms: BTreeMap<ExponentVector, BigInt>,
}

impl MultiPoly {
    pub fn zero(n: usize) -> Self {
        MultiPoly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(n);
        p.add_term(ExponentVector::zero(n), c.into());
        p
    }

    pub fn monomial(exp: Vec<u32>, c: impl Into<BigInt>) -> Self {
        let n = exp.len();
        let mut p = Self::zero(n);
        p.add_term(ExponentVector(exp), c.into());
        p
    }

    pub fn variable(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        Self::monomial(e, 1)
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, collecting
    /// duplicates.
    pub fn from_terms<I, C>(n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, C)>,
        C: Into<BigInt>,
    {
        let mut p = Self::zero(n);
        for (e, c) in terms {
            assert_eq!(e.len(), n, "exponent vector of wrong length");
            p.add_term(ExponentVector(e), c.into());
        }
        p
    }

    fn add_term(&mut self, e: ExponentVector, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, &BigInt)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &ExponentVector) -> BigInt {
        self.terms.get(e).cloned().unwrap_or_else(BigInt::zero)
    }

    /// `supp(h)`: exponent vectors carrying a nonzero coefficient.
    pub fn support(&self) -> Vec<ExponentVector> {
        self.terms.keys().cloned().collect()
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.0.iter().sum()).max().unwrap_or(0)
    }

    /// Homogeneous of some degree, `None` for the zero polynomial.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(|e| e.0.iter().sum::<u32>());
        let d = degs.next()?;
        degs.all(|x| x == d).then_some(d)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        MultiPoly {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Exact product; zero terms pruned.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.add(eb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.n, 1);
        for _ in 0..k {
            acc = acc.product(self).expect("same dimension");
        }
        acc
    }

    /// Face function `h_k`: the terms minimizing `⟨k, m⟩`.
    pub fn face_function(&self, k: &[BigRational]) -> Self {
        assert_eq!(k.len(), self.n, "weight vector of wrong length");
        let weights = |e: &ExponentVector| -> BigRational {
            e.0.iter()
                .zip(k)
                .map(|(&m, w)| w * BigInt::from(m))
                .fold(BigRational::zero(), |a, b| a + b)
        };
        let min = self.terms.keys().map(weights).min();
        let Some(min) = min else {
            return self.clone();
        };
        MultiPoly {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| weights(e) == min)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Face function for an integer weight vector.
    pub fn face_function_int(&self, k: &[i64]) -> Self {
        let min = self.terms.keys().map(|e| e.dot(k)).min();
        let Some(min) = min else {
            return self.clone();
        };
        MultiPoly {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.dot(k) == min)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn partial_derivative(&self, j: usize) -> Self {
        assert!(j < self.n, "variable index out of range");
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            let ej = e.0[j];
            if ej == 0 {
                continue;
            }
            let mut d = e.clone();
            d.0[j] -= 1;
            out.add_term(d, c * BigInt::from(ej));
        }
        out
    }

    /// Value at `z` with all arithmetic reduced modulo `z.modulus`.
    pub fn evaluate_residue(&self, z: &ResiduePoint) -> u64 {
        assert_eq!(z.coords.len(), self.n);
        self.reduce(z.modulus).eval(&z.coords)
    }

    /// Coefficients reduced modulo `modulus`, in a form cheap to evaluate.
    pub fn reduce(&self, modulus: u64) -> ModPoly {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.0.clone(), reduce_big(c, modulus)))
            .filter(|(_, c)| *c != 0)
            .collect();
        ModPoly { modulus, terms }
    }

    /// Whether every coefficient is divisible by `p`.
    pub fn vanishes_mod(&self, p: u64) -> bool {
        self.reduce(p).terms.is_empty()
    }

    /// Pipeline admission: nonzero, no constant term, nonzero reduction mod `p`.
    pub fn admit(&self, p: u64) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Inadmissible(format!(
                "at least two variables are required, found {}",
                self.n
            )));
        }
        if self.is_zero() {
            return Err(Error::Inadmissible("zero polynomial".into()));
        }
        if self.terms.contains_key(&ExponentVector::zero(self.n)) {
            return Err(Error::Inadmissible("constant term must vanish (h(0) = 0)".into()));
        }
        if self.vanishes_mod(p) {
            return Err(Error::Inadmissible(format!(
                "every coefficient is divisible by p = {p}"
            )));
        }
        Ok(())
    }

    /// Renders the polynomial using the given variable names, terms in
    /// lexicographic exponent order.
    pub fn to_string_with(&self, vars: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            for (j, &ej) in e.0.iter().enumerate() {
                match ej {
                    0 => {}
                    1 => factors.push(vars[j].clone()),
                    _ => factors.push(format!("{}^{}", vars[j], ej)),
                }
            }
            if factors.is_empty() {
                out.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    out.push_str(&mag.to_string());
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }

    /// Default names `x, y, z, w` or `x1..xn` beyond four variables.
    pub fn default_vars(n: usize) -> Vec<String> {
        if n <= 4 {
            ["x", "y", "z", "w"][..n].iter().map(|s| s.to_string()).collect()
        } else {
            (1..=n).map(|i| format!("x{i}")).collect()
        }
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_with(&Self::default_vars(self.n)))
    }
}

/// Polynomial with coefficients reduced modulo a fixed integer.
#[derive(Clone, Debug)]
pub struct ModPoly {
    pub modulus: u64,
    pub terms: Vec<(Vec<u32>, u64)>,
}

impl ModPoly {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[u64]) -> u64 {
        let m = self.modulus;
        let mut acc = 0u64;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (xi, &ei) in x.iter().zip(e) {
                if ei > 0 {
                    t = mul_mod(t, pow_mod(*xi, ei as u64, m), m);
                }
            }
            acc = (acc + t) % m;
        }
        acc
    }

    /// Evaluation through precomputed power tables `pows[j][e] = x_j^e`.
    pub fn eval_with_powers(&self, pows: &[Vec<u64>]) -> u64 {
        let m = self.modulus;
        let mut acc = 0u64;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (j, &ej) in e.iter().enumerate() {
                if ej > 0 {
                    t = mul_mod(t, pows[j][ej as usize], m);
                }
            }
            acc += t;
            if acc >= m {
                acc -= m;
            }
        }
        acc
    }

    pub fn max_exponent(&self) -> u32 {
        self.terms.iter().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0)
    }
}

/// Parses an integer-coefficient polynomial in the named variables.
///
/// Grammar: sums and differences of products of factors, where a factor is
/// an integer literal, a variable, or a parenthesised expression, optionally
/// raised to a nonnegative integer power with `^`. Whitespace is ignored.
pub fn parse_poly(text: &str, vars: &[String]) -> Result<MultiPoly> {
    let mut parser = Parser { src: text.as_bytes(), pos: 0, vars, n: vars.len() };
    parser.skip_ws();
    if parser.peek().is_none() {
        return Err(Error::Parse { pos: 0, msg: "empty expression".into() });
    }
    let p = parser.expr()?;
    parser.skip_ws();
    if let Some(c) = parser.peek() {
        return Err(parser.unexpected(c));
    }
    Ok(p)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
    n: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn unexpected(&self, c: u8) -> Error {
        let msg = match c {
            b'.' | b'/' => "non-integer coefficient".to_string(),
            _ => format!("unexpected character `{}`", c as char),
        };
        Error::Parse { pos: self.pos, msg }
    }

    fn expr(&mut self) -> Result<MultiPoly> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(&t)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.sub(&t)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly> {
        let mut acc = self.unary()?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
                let f = self.unary()?;
                acc = acc.product(&f)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<MultiPoly> {
        self.skip_ws();
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<MultiPoly> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return Err(Error::Parse {
                    pos: start,
                    msg: "exponent must be a nonnegative integer literal".into(),
                });
            }
            let k: u32 = digits.parse().map_err(|_| Error::Parse {
                pos: start,
                msg: "exponent too large".into(),
            })?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<MultiPoly> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(Error::Parse { pos: self.pos, msg: "expected `)`".into() });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let lit = self.digits();
                if matches!(self.peek(), Some(b'.')) {
                    return Err(Error::Parse { pos: self.pos, msg: "non-integer coefficient".into() });
                }
                let v: BigInt = lit.parse().expect("digit string");
                Ok(MultiPoly::constant(self.n, v))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                match self.vars.iter().position(|v| *v == name) {
                    Some(j) => Ok(MultiPoly::variable(self.n, j)),
                    None => Err(Error::UnknownVariable(name)),
                }
            }
            Some(c) => Err(self.unexpected(c)),
            None => Err(Error::Parse { pos: self.pos, msg: "unexpected end of input".into() }),
        }
    }
}

/// Integer coefficient as `i64` if it fits.
pub fn coeff_i64(c: &BigInt) -> Option<i64> {
    c.to_i64()
}
