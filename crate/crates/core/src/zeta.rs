//! The explicit formula in `t = q^{-s}`: per-cone terms `L_Δ · S_Δ`, the
//! multivariate structured form, and the reduced rational function.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::arith::{self, q_pow};
use crate::cyclo::{cyclotomic_poly, CycRat};
use crate::error::{Error, Result};
use crate::fan::{fundamental_points, SimplicialCone, SimplicialFan};
use crate::newton::{sigma, NewtonPolyhedron};
use crate::poly::MultiPoly;
use crate::residue::{census, nu, Character, FaceCounts};
use crate::upoly::UPoly;

/// `1 − q^{-a} t^b` with `b ≥ 1`. After normalizing a factor with a
/// negative power of `t`, `a` may be negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AtomicFactor {
    pub a: i64,
    pub b: i64,
}

impl AtomicFactor {
    pub fn poly(&self, q: u64) -> UPoly {
        let mut c = vec![CycRat::zero(); self.b as usize + 1];
        c[0] = CycRat::one();
        c[self.b as usize] = CycRat::from_rational(-q_pow(q, -self.a));
        UPoly::from_coeffs(c)
    }

    /// Real part of the poles on this factor's circle: `|t| = q^{a/b}`.
    pub fn real_part(&self) -> BigRational {
        BigRational::new(BigInt::from(-self.a), BigInt::from(self.b))
    }
}

/// `t^shift · num(t) / ∏ atomic^mult`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fraction {
    pub shift: i64,
    pub num: UPoly,
    pub den: BTreeMap<AtomicFactor, u32>,
}

impl Fraction {
    pub fn zero() -> Self {
        Fraction { shift: 0, num: UPoly::zero(), den: BTreeMap::new() }
    }

    pub fn constant(c: CycRat) -> Self {
        Fraction { shift: 0, num: UPoly::constant(c), den: BTreeMap::new() }
    }

    pub fn from_poly(num: UPoly) -> Self {
        Fraction { shift: 0, num, den: BTreeMap::new() }
    }

    /// `1 / (1 − q^{-σ} t^B)` for any integer `B`, normalized.
    pub fn inverse_raw_factor(sig: i64, big_b: i64, q: u64) -> Self {
        match big_b.cmp(&0) {
            std::cmp::Ordering::Greater => {
                let mut den = BTreeMap::new();
                den.insert(AtomicFactor { a: sig, b: big_b }, 1);
                Fraction { shift: 0, num: UPoly::one(), den }
            }
            std::cmp::Ordering::Equal => {
                let c = BigRational::one() - q_pow(q, -sig);
                Fraction::constant(CycRat::from_rational(c.recip()))
            }
            std::cmp::Ordering::Less => {
                // 1 − q^{-σ}t^{-b} = −q^{-σ} t^{-b} (1 − q^{σ} t^{b})
                let b = -big_b;
                let mut den = BTreeMap::new();
                den.insert(AtomicFactor { a: -sig, b }, 1);
                Fraction { shift: b, num: UPoly::constant(CycRat::from_rational(-q_pow(q, sig))), den }
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut den = self.den.clone();
        for (k, v) in &other.den {
            *den.entry(*k).or_insert(0) += v;
        }
        Fraction { shift: self.shift + other.shift, num: self.num.mul(&other.num), den }
    }

    pub fn scale(&self, c: &CycRat) -> Self {
        Fraction { shift: self.shift, num: self.num.scale(c), den: self.den.clone() }
    }

    /// Rewrites over a larger denominator and a smaller shift.
    fn lift(&self, den: &BTreeMap<AtomicFactor, u32>, shift: i64, q: u64) -> UPoly {
        let mut num = self.num.shift((self.shift - shift) as usize);
        for (f, &m) in den {
            let have = self.den.get(f).copied().unwrap_or(0);
            if m > have {
                num = num.mul(&f.poly(q).pow((m - have) as usize));
            }
        }
        num
    }

    pub fn add(&self, other: &Self, q: u64) -> Self {
        if self.num.is_zero() {
            return other.clone();
        }
        if other.num.is_zero() {
            return self.clone();
        }
        let mut den = self.den.clone();
        for (k, &v) in &other.den {
            let e = den.entry(*k).or_insert(0);
            *e = (*e).max(v);
        }
        let shift = self.shift.min(other.shift);
        let num = self.lift(&den, shift, q).add(&other.lift(&den, shift, q));
        Fraction { shift, num, den }
    }

    pub fn sum(items: impl IntoIterator<Item = Fraction>, q: u64) -> Self {
        items.into_iter().fold(Fraction::zero(), |acc, x| acc.add(&x, q))
    }

    /// Value at a point `t ≠ 0` off the denominator's zeros.
    pub fn eval(&self, t: &CycRat, q: u64) -> Option<CycRat> {
        let mut d = CycRat::one();
        for (f, &m) in &self.den {
            d = &d * &f.poly(q).eval(t).pow(m);
        }
        if d.is_zero() || t.is_zero() {
            return None;
        }
        let tp = if self.shift >= 0 { t.pow(self.shift as u32) } else { t.pow((-self.shift) as u32).inv() };
        Some(&(&self.num.eval(t) * &tp) / &d)
    }

    pub fn denominator_poly(&self, q: u64) -> UPoly {
        self.den.iter().fold(UPoly::one(), |acc, (f, &m)| acc.mul(&f.poly(q).pow(m as usize)))
    }
}

/// Numerator and denominator data of `S_Δ`.
#[derive(Clone, Debug, Serialize)]
pub struct SDelta {
    /// `(σ(t), d_f(t) − d_g(t), count)` aggregated over fundamental points.
    pub numerator: Vec<(i64, i64, u64)>,
    /// `(σ(w), d_f(w) − d_g(w))` for each generator.
    pub denominator: Vec<(i64, i64)>,
}

impl SDelta {
    pub fn fraction(&self, q: u64) -> Fraction {
        let min_b = self.numerator.iter().map(|x| x.1).min().unwrap_or(0);
        let mut coeffs: BTreeMap<i64, BigRational> = BTreeMap::new();
        for &(a, b, c) in &self.numerator {
            *coeffs.entry(b - min_b).or_insert_with(BigRational::zero) +=
                q_pow(q, -a) * BigRational::from_integer(c.into());
        }
        let len = coeffs.keys().max().map_or(0, |&k| k as usize + 1);
        let mut v = vec![BigRational::zero(); len];
        for (k, c) in coeffs {
            v[k as usize] = c;
        }
        let mut fr = Fraction { shift: min_b, num: UPoly::from_rationals(v), den: BTreeMap::new() };
        for &(sig, b) in &self.denominator {
            fr = fr.mul(&Fraction::inverse_raw_factor(sig, b, q));
        }
        fr
    }
}

/// `S_Δ` from fundamental points; the zero cone gives `S = 1`.
pub fn s_delta(cone: &SimplicialCone, gf: &NewtonPolyhedron, gg: &NewtonPolyhedron) -> Result<SDelta> {
    let n = gf.n;
    let pts = fundamental_points(cone, n)?;
    let mut agg: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    for t in &pts.points {
        *agg.entry((sigma(t), gf.d_int(t) - gg.d_int(t))).or_insert(0) += 1;
    }
    Ok(SDelta {
        numerator: agg.into_iter().map(|((a, b), c)| (a, b, c)).collect(),
        denominator: cone.generators.iter().map(|w| (sigma(w), gf.d_int(w) - gg.d_int(w))).collect(),
    })
}

/// `L_Δ` in the form of the explicit formula for `f/g`.
///
/// Trivial χ: `ν₀ − N_f(1−t)/(1−q⁻¹t) − N_g·q(1−t)/(1−qt) − N_fg(1−t)²/((1−q⁻¹t)(1−qt))`
/// with `ν₀ = (q−1)ⁿ/qⁿ`. Nontrivial χ: the constant `ν`.
pub fn l_delta(counts: &FaceCounts, chi: &Character, q: u64, n: usize) -> Fraction {
    if !chi.is_trivial() {
        return Fraction::constant(counts.nu.clone());
    }
    let qr = BigRational::from_integer(BigInt::from(q));
    let nu0 = (&qr - BigRational::one()).pow(n as i32) / qr.pow(n as i32);
    let one_minus_t = UPoly::from_ints(&[1, -1]);
    let f_down = AtomicFactor { a: 1, b: 1 };
    let f_up = AtomicFactor { a: -1, b: 1 };
    let cr = |r: &BigRational| CycRat::from_rational(r.clone());
    let term = |coef: CycRat, num: UPoly, dens: &[AtomicFactor]| {
        let mut den = BTreeMap::new();
        for d in dens {
            *den.entry(*d).or_insert(0) += 1;
        }
        Fraction { shift: 0, num: num.scale(&coef), den }
    };
    let parts = vec![
        Fraction::constant(cr(&nu0)),
        term(cr(&-counts.n_f.clone()), one_minus_t.clone(), &[f_down]),
        term(cr(&-(&counts.n_g * &qr)), one_minus_t.clone(), &[f_up]),
        term(cr(&-counts.n_fg.clone()), one_minus_t.pow(2), &[f_down, f_up]),
    ];
    Fraction::sum(parts.into_iter().filter(|p| !p.num.is_zero()), q)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeTerm {
    /// `None` for the zero cone.
    pub cone: Option<usize>,
    pub generators: Vec<Vec<i64>>,
    #[serde(rename = "L")]
    pub counts: FaceCounts,
    #[serde(rename = "S")]
    pub s: SDelta,
    #[serde(skip)]
    pub product: Fraction,
}

/// A pole circle factor `Φ_d(q^{-r} t^v)` with `gcd(r, v) = 1`, `v ≥ 1`.
/// Its roots satisfy `|t| = q^{r/v}`, i.e. `Re(s) = −r/v`.
#[derive(Clone, Debug, Serialize)]
pub struct CircleFactor {
    #[serde(serialize_with = "crate::arith::ser::rat")]
    pub real_part: BigRational,
    pub r: i64,
    pub v: i64,
    pub d: u64,
    pub multiplicity: u32,
    #[serde(skip)]
    pub poly: UPoly,
}

/// Monic `Φ_d(q^{-r} t^v)`.
pub fn circle_poly(r: i64, v: i64, d: u64, q: u64) -> UPoly {
    let phi = cyclotomic_poly(d);
    let mut c = vec![CycRat::zero(); v as usize * (phi.len() - 1) + 1];
    for (j, cj) in phi.iter().enumerate() {
        c[v as usize * j] = CycRat::from_rational(BigRational::from_integer(cj.clone()) * q_pow(q, -r * j as i64));
    }
    UPoly::from_coeffs(c).monic()
}

/// Circle factors dividing `1 − q^{-a} t^b`.
pub fn circle_factors_of(f: &AtomicFactor) -> Vec<(i64, i64, u64)> {
    let g = f.a.gcd(&f.b);
    let (r, v) = (f.a / g, f.b / g);
    arith::divisors(g.unsigned_abs()).into_iter().map(|d| (r, v, d)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorReport {
    /// Power of `t` in the reduced denominator.
    pub t_power: usize,
    pub circles: Vec<CircleFactor>,
    /// Degree of whatever is left after removing the circle factors (0 when
    /// the decomposition is complete).
    pub residual_degree: usize,
}

#[derive(Clone, Debug)]
pub struct Canonical {
    pub num: UPoly,
    /// Monic.
    pub den: UPoly,
}

impl Canonical {
    pub fn eval(&self, t: &CycRat) -> Option<CycRat> {
        let d = self.den.eval(t);
        (!d.is_zero()).then(|| &self.num.eval(t) / &d)
    }

    /// Value at `s`, through `t = q^{-s}`.
    pub fn eval_at_s(&self, s: num_complex::Complex64, q: u64) -> num_complex::Complex64 {
        let t = (-s * (q as f64).ln()).exp();
        self.num.eval_complex(t) / self.den.eval_complex(t)
    }
}

/// Reduces `t^shift · num / ∏ atomic` to lowest terms with a monic
/// denominator, and decomposes the denominator into circle factors.
pub fn canonicalize(sum: &Fraction, q: u64) -> (Canonical, FactorReport) {
    let mut num = sum.num.clone();
    let mut den = sum.denominator_poly(q);
    if sum.shift >= 0 {
        num = num.shift(sum.shift as usize);
    } else {
        den = den.shift((-sum.shift) as usize);
    }
    let (num, den) = if num.is_zero() {
        (UPoly::zero(), UPoly::one())
    } else {
        let g = num.gcd(&den);
        let n2 = num.exact_div(&g).expect("gcd divides");
        let d2 = den.exact_div(&g).expect("gcd divides");
        let lead = d2.lead().expect("nonzero").inv();
        (n2.scale(&lead), d2.scale(&lead))
    };

    let mut rest = den.clone();
    let t_power = rest.valuation().unwrap_or(0);
    let mut coeffs = rest.coeffs().to_vec();
    coeffs.drain(..t_power);
    rest = UPoly::from_coeffs(coeffs);
    let mut keys: Vec<(i64, i64, u64)> = sum.den.keys().flat_map(circle_factors_of).collect();
    keys.sort();
    keys.dedup();
    let mut circles = Vec::new();
    for (r, v, d) in keys {
        let poly = circle_poly(r, v, d, q);
        let mut mult = 0;
        while let Some(qt) = rest.exact_div(&poly) {
            rest = qt;
            mult += 1;
        }
        if mult > 0 {
            circles.push(CircleFactor {
                real_part: BigRational::new(BigInt::from(-r), BigInt::from(v)),
                r,
                v,
                d,
                multiplicity: mult,
                poly,
            });
        }
    }
    circles.sort_by(|a, b| a.real_part.cmp(&b.real_part).then(a.d.cmp(&b.d)));
    let residual_degree = rest.degree().unwrap_or(0);
    (Canonical { num, den }, FactorReport { t_power, circles, residual_degree })
}

#[derive(Clone, Debug)]
pub struct RationalZeta {
    pub terms: Vec<ConeTerm>,
    pub sum: Fraction,
    pub canonical: Canonical,
    pub factors: FactorReport,
    pub spot_checks: Vec<SpotCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpotCheck {
    #[serde(serialize_with = "crate::arith::ser::rat")]
    pub t: BigRational,
    pub agrees: bool,
}

/// Seeded rational sample points for identity checks, avoiding zeros of
/// every denominator involved.
pub fn sample_points(seed: u64, count: usize, avoid: &[&UPoly]) -> Vec<BigRational> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let num: i64 = rng.gen_range(1..40);
        let den: i64 = rng.gen_range(1..40);
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        let t = BigRational::new(BigInt::from(sign * num), BigInt::from(den));
        let c = CycRat::from_rational(t.clone());
        if avoid.iter().all(|p| !p.eval(&c).is_zero()) && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

/// Per-cone data already computed by the caller: `(cone, faces counts)`.
pub struct ConeInput<'a> {
    pub cone: Option<&'a SimplicialCone>,
    pub counts: FaceCounts,
}

/// Assembles `Z(s, χ, f/g) = Σ_Δ L_Δ S_Δ` and its reduced form.
pub fn explicit_formula_rational(
    inputs: &[ConeInput<'_>],
    gf: &NewtonPolyhedron,
    gg: &NewtonPolyhedron,
    chi: &Character,
    seed: u64,
) -> Result<RationalZeta> {
    let q = chi.p;
    let n = gf.n;
    let mut terms = Vec::new();
    for inp in inputs {
        let (s, generators, cone) = match inp.cone {
            None => (SDelta { numerator: vec![(0, 0, 1)], denominator: vec![] }, vec![], None),
            Some(c) => (s_delta(c, gf, gg)?, c.generators.clone(), Some(c.id)),
        };
        let product = l_delta(&inp.counts, chi, q, n).mul(&s.fraction(q));
        terms.push(ConeTerm { cone, generators, counts: inp.counts.clone(), s, product });
    }
    let sum = Fraction::sum(terms.iter().map(|t| t.product.clone()), q);
    let (canonical, factors) = canonicalize(&sum, q);

    let term_dens: Vec<UPoly> = terms.iter().map(|t| t.product.denominator_poly(q)).collect();
    let mut avoid: Vec<&UPoly> = term_dens.iter().collect();
    avoid.push(&canonical.den);
    let spot_checks = sample_points(seed, 3, &avoid)
        .into_iter()
        .map(|t| {
            let c = CycRat::from_rational(t.clone());
            let direct = terms
                .iter()
                .map(|x| x.product.eval(&c, q).expect("sample avoids poles"))
                .fold(CycRat::zero(), |a, b| a + b);
            let agrees = canonical.eval(&c) == Some(direct);
            SpotCheck { t, agrees }
        })
        .collect();
    Ok(RationalZeta { terms, sum, canonical, factors, spot_checks })
}

/// One cone of the multivariate formula, kept in structured form.
#[derive(Clone, Debug, Serialize)]
pub struct MultiTerm {
    pub cone: Option<usize>,
    #[serde(serialize_with = "crate::residue::ser_cyc")]
    pub nu: CycRat,
    /// `(pattern bitmask, σ_I)` for nonempty patterns with `σ_I ≠ 0`.
    pub sigma: Vec<(u32, String)>,
    #[serde(skip)]
    pub sigma_exact: Vec<(u32, BigRational)>,
    /// `(σ(t), [d(t, Γ(h_i))]_i)` for each fundamental point.
    pub s_numerator: Vec<(i64, Vec<i64>)>,
    /// `(σ(w), [d(w, Γ(h_i))]_i)` for each generator.
    pub s_denominator: Vec<(i64, Vec<i64>)>,
}

fn mono(q: u64, sig: i64, ds: &[i64], vars: &[CycRat]) -> CycRat {
    let mut acc = CycRat::from_rational(q_pow(q, -sig));
    for (d, v) in ds.iter().zip(vars) {
        let p = if *d >= 0 { v.pow(*d as u32) } else { v.pow((-d) as u32).inv() };
        acc = &acc * &p;
    }
    acc
}

impl MultiTerm {
    /// Value at `T_i = q^{-s_i}`.
    pub fn eval(&self, q: u64, vars: &[CycRat]) -> Option<CycRat> {
        let qr = BigRational::from_integer(BigInt::from(q));
        let mut l = self.nu.clone();
        for (mask, s) in &self.sigma_exact {
            let mut prod = CycRat::from_rational(s.clone());
            for (i, v) in vars.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    // (q−1) q^{-1} T / (1 − q^{-1} T)
                    let qinv = CycRat::from_rational(qr.recip());
                    let den = &CycRat::one() - &(&qinv * v);
                    if den.is_zero() {
                        return None;
                    }
                    let num = &CycRat::from_rational((&qr - BigRational::one()) / &qr) * v;
                    prod = &prod * &(&num / &den);
                }
            }
            l = &l + &prod;
        }
        let mut s = CycRat::zero();
        for (sig, ds) in &self.s_numerator {
            s = &s + &mono(q, *sig, ds, vars);
        }
        for (sig, ds) in &self.s_denominator {
            let den = &CycRat::one() - &mono(q, *sig, ds, vars);
            if den.is_zero() {
                return None;
            }
            s = &s / &den;
        }
        Some(&l * &s)
    }
}

/// Structured multivariate formula for `h = (h_1..h_r)` over a fan
/// subordinate to `Γ(∏ h_i)`. Non-degeneracy is the caller's responsibility.
pub fn explicit_formula_multivariate(
    h: &[MultiPoly],
    chars: &[Character],
    p: u64,
    fan: &SimplicialFan,
) -> Result<Vec<MultiTerm>> {
    if h.is_empty() || h.len() != chars.len() || h.len() > h[0].dim() {
        return Err(Error::InvalidInput("need 1 ≤ r ≤ n polynomials with one character each".into()));
    }
    let n = h[0].dim();
    let polys: Vec<NewtonPolyhedron> =
        h.iter().map(|x| NewtonPolyhedron::build(&x.support())).collect::<Result<_>>()?;
    let trivial = chars.iter().all(|c| c.is_trivial());
    let mut cones: Vec<Option<&SimplicialCone>> = vec![None];
    cones.extend(fan.cones.iter().map(Some));
    let mut out = Vec::new();
    for cone in cones {
        let b = cone.map_or(vec![0; n], |c| crate::fan::barycenter(c, n));
        let faces: Vec<MultiPoly> = h.iter().map(|x| x.face_function_int(&b)).collect();
        let (nu_v, sigma_exact) = if trivial {
            let c = census(&faces, p);
            let sig: Vec<(u32, BigRational)> = (1u32..(1 << h.len()))
                .map(|m| (m, c.measure(m)))
                .filter(|(_, v)| !v.is_zero())
                .collect();
            (CycRat::from_rational(c.measure(0)), sig)
        } else {
            (nu(&faces, chars, p)?, Vec::new())
        };
        let (s_numerator, s_denominator) = match cone {
            None => (vec![(0, vec![0; h.len()])], vec![]),
            Some(c) => {
                let pts = fundamental_points(c, n)?;
                let num = pts.points.iter().map(|t| (sigma(t), polys.iter().map(|g| g.d_int(t)).collect())).collect();
                let den = c.generators.iter().map(|w| (sigma(w), polys.iter().map(|g| g.d_int(w)).collect())).collect();
                (num, den)
            }
        };
        out.push(MultiTerm {
            cone: cone.map(|c| c.id),
            nu: nu_v,
            sigma: sigma_exact.iter().map(|(m, v)| (*m, v.to_string())).collect(),
            sigma_exact,
            s_numerator,
            s_denominator,
        });
    }
    Ok(out)
}

/// Sum of the multivariate terms at a point.
pub fn eval_multivariate(terms: &[MultiTerm], q: u64, vars: &[CycRat]) -> Option<CycRat> {
    terms.iter().try_fold(CycRat::zero(), |acc, t| Some(&acc + &t.eval(q, vars)?))
}

/// A band endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bound {
    NegInf,
    Finite(BigRational),
    PosInf,
}

impl Serialize for Bound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::NegInf => write!(f, "-inf"),
            Bound::PosInf => write!(f, "inf"),
            Bound::Finite(r) => write!(f, "{r}"),
        }
    }
}

impl Bound {
    pub fn lt(&self, x: &BigRational) -> bool {
        match self {
            Bound::NegInf => true,
            Bound::PosInf => false,
            Bound::Finite(r) => r < x,
        }
    }

    pub fn gt(&self, x: &BigRational) -> bool {
        match self {
            Bound::NegInf => false,
            Bound::PosInf => true,
            Bound::Finite(r) => r > x,
        }
    }
}

/// `(β̃, α̃)` for trivial χ, `(β, α)` otherwise.
pub fn holomorphy_band(ts: &crate::poles::TSets, chi: &Character) -> (Bound, Bound) {
    let one = BigRational::one();
    if chi.is_trivial() {
        let lo = match &ts.beta {
            Some(b) => Bound::Finite(b.clone().max(-one.clone())),
            None => Bound::Finite(-one.clone()),
        };
        let hi = match &ts.alpha {
            Some(a) => Bound::Finite(a.clone().min(one)),
            None => Bound::Finite(one),
        };
        (lo, hi)
    } else {
        (
            ts.beta.clone().map_or(Bound::NegInf, Bound::Finite),
            ts.alpha.clone().map_or(Bound::PosInf, Bound::Finite),
        )
    }
}
