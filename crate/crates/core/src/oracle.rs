//! Brute-force p-adic verification: the one-variable integral lemma, the
//! truncated integral of `|f/g|^s χ(ac(f/g))`, and the stationary phase
//! decomposition when the singular locus is empty.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::arith::q_pow;
use crate::cyclo::CycRat;
use crate::error::{Error, Result};
use crate::poly::{ModPoly, MultiPoly};
use crate::residue::{par_fold_grid, rank_mod_p, Character};

/// Nonzero `p^valuation · unit` or zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PAdic {
    Zero,
    Value { valuation: i64, unit: u64 },
}

fn qf(q: u64, x: f64) -> f64 {
    (q as f64).powf(-x)
}

/// `q^{-z}` for complex `z`.
fn qc(q: u64, z: Complex64) -> Complex64 {
    (-z * (q as f64).ln()).exp()
}

fn zeta_c(order: u64, j: u64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j % order) as f64 / order as f64)
}

/// Exponent of `χ^N(u)` as a power of `ζ_M`; zero for trivial χ.
fn chi_pow_exponent(chi: &Character, u: u64, big_n: i64) -> Option<u64> {
    if chi.is_trivial() {
        return (!u.is_multiple_of(chi.p)).then_some(0);
    }
    let ex = chi.exponent(u)? as i128 * big_n as i128;
    Some(ex.rem_euclid(chi.order as i128) as u64)
}

fn chi_pow_trivial(chi: &Character, big_n: i64) -> bool {
    chi.is_trivial() || (chi.k as i128 * big_n as i128).rem_euclid(chi.order as i128) == 0
}

/// Whether `χ^N` is trivial on `1 + p^j 𝒪`.
fn chi_pow_trivial_on(chi: &Character, big_n: i64, j: u32) -> bool {
    if chi.is_trivial() || j >= chi.e {
        return true;
    }
    let step = chi.p.pow(j);
    (0..chi.p.pow(chi.e - j)).all(|t| chi_pow_exponent(chi, 1 + step * t, big_n) == Some(0))
}

/// Closed form of `∫_{a+π^c𝒪∖{0}} χ^N(ac x) |x|^{Ns+n−1} |dx|`.
pub fn igusa_lemma_closed(a: PAdic, c: i64, big_n: i64, n: u32, chi: &Character, s: Complex64) -> Result<Complex64> {
    if big_n == 0 || n == 0 {
        return Err(Error::InvalidInput("need N ≠ 0 and n ≥ 1".into()));
    }
    let q = chi.p;
    let expo = s * big_n as f64 + n as f64;
    match a {
        PAdic::Value { valuation, unit } if valuation < c => {
            if unit % q == 0 {
                return Err(Error::InvalidInput("unit part divisible by p".into()));
            }
            if !chi_pow_trivial_on(chi, big_n, (c - valuation) as u32) {
                return Ok(Complex64::zero());
            }
            let j = chi_pow_exponent(chi, unit % chi.modulus(), big_n).expect("unit");
            Ok(qf(q, c as f64) * zeta_c(chi.order, j) * qc(q, (expo - 1.0) * valuation as f64))
        }
        _ => {
            if expo.re <= 0.0 {
                return Err(Error::InvalidInput("Re(Ns + n) must be positive".into()));
            }
            if !chi_pow_trivial(chi, big_n) {
                return Ok(Complex64::zero());
            }
            Ok((1.0 - 1.0 / q as f64) * qc(q, expo * c as f64) / (1.0 - qc(q, expo)))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaBruteForce {
    #[serde(serialize_with = "ser_complex")]
    pub truncated: Complex64,
    /// `∫ |integrand|` over the part left out at depth `m`.
    pub tail_bound: f64,
    /// Truncated sum with the left-out ball restored through `x ↦ π^k x`
    /// self-similarity.
    #[serde(serialize_with = "ser_complex")]
    pub renormalized: Complex64,
}

/// Riemann sum over residues mod `p^m` of the same integral.
#[allow(clippy::too_many_arguments)]
pub fn igusa_lemma_bruteforce(
    a: PAdic,
    c: i64,
    big_n: i64,
    n: u32,
    chi: &Character,
    s: Complex64,
    m: u32,
    max_evals: u128,
) -> Result<LemmaBruteForce> {
    let q = chi.p;
    let e = if chi.is_trivial() { 0 } else { chi.e as i64 };
    if c < 0 || (m as i64) < c + e + 2 {
        return Err(Error::InvalidInput(format!("depth m = {m} must be at least c + e + 2 = {}", c + e + 2)));
    }
    let modulus = q.checked_pow(m).ok_or(Error::BudgetExceeded { needed: u128::MAX, budget: max_evals })?;
    let a0 = match a {
        PAdic::Zero => 0,
        PAdic::Value { valuation, .. } if valuation >= m as i64 => 0,
        PAdic::Value { valuation, unit } if valuation >= 0 => q.pow(valuation as u32) * (unit % modulus) % modulus,
        _ => return Err(Error::InvalidInput("brute force needs a ∈ 𝒪".into())),
    };
    let count = q.pow(m - c as u32);
    crate::pipeline::check_budget(count as u128, max_evals)?;
    let sigma = s * big_n as f64 + (n as f64 - 1.0);
    let step = q.pow(c as u32);
    let mut acc = Complex64::zero();
    let mut by_val: BTreeMap<(u32, u64), u64> = BTreeMap::new();
    for y in 0..count {
        let x = (a0 + step * y) % modulus;
        if x == 0 {
            continue;
        }
        let v = x.trailing_zeros_base(q);
        if v as i64 + e > m as i64 {
            continue;
        }
        let ac = x / q.pow(v);
        let j = chi_pow_exponent(chi, ac % chi.modulus(), big_n).expect("unit");
        *by_val.entry((v, j)).or_default() += 1;
    }
    let w = qf(q, m as f64);
    for ((v, j), cnt) in by_val {
        acc += zeta_c(chi.order, j) * qc(q, sigma * v as f64) * (cnt as f64 * w);
    }
    let in_ball = a0 % step == 0;
    if !in_ball {
        return Ok(LemmaBruteForce { truncated: acc, tail_bound: 0.0, renormalized: acc });
    }
    // left out: π^K 𝒪 with K = m − max(e, 1) + 1
    let k = m as i64 - e.max(1) + 1;
    let re = sigma.re;
    let tail_bound = if re > -1.0 {
        let exact = qf(q, k as f64 * (1.0 + re)) * (1.0 - 1.0 / q as f64) / (1.0 - qf(q, 1.0 + re));
        exact * (1.0 + BOUND_REL_SLACK) + BOUND_ABS_SLACK
    } else {
        f64::INFINITY
    };
    let renormalized = acc / (1.0 - qc(q, (sigma + 1.0) * (k - c) as f64));
    Ok(LemmaBruteForce { truncated: acc, tail_bound, renormalized })
}

trait BaseValuation {
    fn trailing_zeros_base(self, p: u64) -> u32;
}

impl BaseValuation for u64 {
    fn trailing_zeros_base(mut self, p: u64) -> u32 {
        let mut v = 0;
        while self.is_multiple_of(p) {
            self /= p;
            v += 1;
        }
        v
    }
}

fn val_big(x: &BigInt, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    loop {
        let (d, r) = x.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        x = d;
        v += 1;
    }
}

pub fn ser_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// Integration domain `E ⊆ 𝒪ⁿ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Domain {
    Full,
    Torus,
    /// `center + (p^depth 𝒪)ⁿ`.
    Coset { center: Vec<u64>, depth: u32 },
}

/// Sparse polynomial as `(exponent, coefficient)` pairs.
type Sparse = Vec<(Vec<u32>, BigInt)>;

/// Hasse derivatives: `h(x + z) = Σ_β T_β(x) z^β`.
#[derive(Clone, Debug)]
struct Taylor {
    n: usize,
    terms: Vec<(Vec<u32>, Sparse)>,
}

fn binom(a: u32, b: u32) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..b {
        r = r * BigInt::from(a - i) / BigInt::from(i + 1);
    }
    r
}

impl Taylor {
    fn new(h: &MultiPoly) -> Self {
        let n = h.dim();
        let mut map: BTreeMap<Vec<u32>, BTreeMap<Vec<u32>, BigInt>> = BTreeMap::new();
        for (alpha, c) in h.terms() {
            let alpha = &alpha.0;
            let mut beta = vec![0u32; n];
            loop {
                let coeff = beta.iter().zip(alpha).fold(c.clone(), |acc, (&b, &a)| acc * binom(a, b));
                let rest: Vec<u32> = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
                *map.entry(beta.clone()).or_default().entry(rest).or_insert_with(BigInt::zero) += coeff;
                // next β ≤ α in mixed radix
                let mut i = 0;
                while i < n {
                    if beta[i] < alpha[i] {
                        beta[i] += 1;
                        break;
                    }
                    beta[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
        let terms = map
            .into_iter()
            .map(|(b, t)| (b, t.into_iter().filter(|(_, c)| !c.is_zero()).collect::<Vec<_>>()))
            .filter(|(_, t)| !t.is_empty())
            .collect();
        Taylor { n, terms }
    }

    fn eval_all(&self, x: &[u64]) -> Vec<(&[u32], BigInt)> {
        let xb: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.terms
            .iter()
            .map(|(b, t)| {
                let v = t.iter().fold(BigInt::zero(), |acc, (e, c)| {
                    acc + e.iter().zip(&xb).fold(c.clone(), |m, (&k, xv)| m * Pow::pow(xv, k))
                });
                (b.as_slice(), v)
            })
            .collect()
    }
}

/// Static facts about one integrand polynomial.
#[derive(Clone, Debug)]
struct PolyInfo {
    reduced: ModPoly,
    taylor: Taylor,
    /// Exponent of a monomial with unit coefficient.
    monomial: Option<Vec<u32>>,
    /// Degree of a homogeneous polynomial without nontrivial zeros mod `p`.
    anisotropic: Option<u32>,
}

fn anisotropic_degree(h: &MultiPoly, p: u64, n: usize) -> Option<u32> {
    let d = h.homogeneous_degree()?;
    if (p as u128).pow(n as u32) > 1 << 22 {
        return None;
    }
    let red = h.reduce(p);
    let values: Vec<u64> = (0..p).collect();
    let zero_free = par_fold_grid(
        &values,
        n,
        || true,
        |ok, idx, pt| {
            if idx != 0 && red.eval(pt) == 0 {
                *ok = false;
            }
        },
        |a, b| a && b,
    );
    zero_free.then_some(d)
}

impl PolyInfo {
    fn new(h: &MultiPoly, p: u64, modulus: u64) -> Self {
        let monomial = if h.is_monomial() {
            let (e, c) = h.terms().next().expect("nonzero");
            (c % BigInt::from(p) != BigInt::zero()).then(|| e.0.clone())
        } else {
            None
        };
        PolyInfo {
            reduced: h.reduce(modulus),
            taylor: Taylor::new(h),
            monomial,
            anisotropic: anisotropic_degree(h, p, h.dim()),
        }
    }
}

/// Structure of one polynomial on a residue class `x₀ + (p^m 𝒪)ⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Local {
    /// Constant valuation.
    Exact(i64),
    /// `p^μ · φ` with `φ` having a unit partial derivative; row is the
    /// normalized gradient mod `p`.
    Smooth(i64, Vec<u64>),
    /// Only a lower bound on the valuation is known.
    Lower(i64),
}

/// `h(x₀)` and its valuation when `ν(h)` and `ac(h) mod p^e` are constant on
/// `x₀ + (p^m 𝒪)ⁿ`: every higher Taylor term has valuation at least
/// `ν + max(e, 1)`.
fn certified_value(info: &PolyInfo, x0: &[u64], m: i64, p: u64, e: u32) -> Option<(i64, BigInt)> {
    let mut h0 = None;
    let mut margin = i64::MAX;
    for (beta, v) in info.taylor.eval_all(x0) {
        let ord: i64 = beta.iter().map(|&b| b as i64).sum();
        if ord == 0 {
            h0 = Some(v);
        } else if let Some(nu) = val_big(&v, p) {
            margin = margin.min(m * ord + nu);
        }
    }
    let h0 = h0?;
    let v0 = val_big(&h0, p)?;
    (v0 + e.max(1) as i64 <= margin).then_some((v0, h0))
}

fn local_structure(info: &PolyInfo, x0: &[u64], m: i64, p: u64) -> Local {
    let vals = info.taylor.eval_all(x0);
    let n = info.taylor.n;
    let mut v0 = i64::MAX;
    let mut mu1 = i64::MAX;
    let mut mu2 = i64::MAX;
    let mut grad: Vec<(usize, BigInt)> = Vec::new();
    for (beta, v) in &vals {
        let ord: i64 = beta.iter().map(|&b| b as i64).sum();
        let Some(nu) = val_big(v, p) else { continue };
        if ord == 0 {
            v0 = nu;
        } else if ord == 1 {
            mu1 = mu1.min(m + nu);
            grad.push((beta.iter().position(|&b| b == 1).unwrap(), v.clone()));
        } else {
            mu2 = mu2.min(m * ord + nu);
        }
    }
    if v0 < mu1.min(mu2) {
        return Local::Exact(v0);
    }
    if mu1 < mu2 {
        let delta = mu1 - m;
        let pb = BigInt::from(p);
        let scale = Pow::pow(&pb, delta as u32);
        let mut row = vec![0u64; n];
        for (j, g) in grad {
            row[j] = (g / &scale).mod_floor(&pb).to_u64().unwrap();
        }
        return Local::Smooth(mu1, row);
    }
    Local::Lower(v0.min(mu1).min(mu2))
}

/// `q^{-mn} · q^{-Σ a_i τ_i} · ∏ (1 − q^{-c}) / (1 − q^{-(c + Σ w_i τ_i)})`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Formula {
    a: Vec<i64>,
    g: Vec<(i64, Vec<i64>)>,
}

impl Formula {
    /// Natural logarithm of the value; `+∞` when the integral diverges.
    fn ln_eval(&self, q: u64, mass_exp: f64, tau: &[f64]) -> f64 {
        let lq = (q as f64).ln();
        let mut v = -lq * (mass_exp + self.a.iter().zip(tau).map(|(a, t)| *a as f64 * t).sum::<f64>());
        for (c, w) in &self.g {
            let x = *c as f64 + w.iter().zip(tau).map(|(w, t)| *w as f64 * t).sum::<f64>();
            if x <= 0.0 {
                return f64::INFINITY;
            }
            v += (-qf(q, *c as f64)).ln_1p() - (-qf(q, x)).ln_1p();
        }
        v
    }

    fn eval(&self, q: u64, mass_exp: f64, tau: &[f64]) -> f64 {
        self.ln_eval(q, mass_exp, tau).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Single {
    /// Pointwise `|h| ≤ q^{-a}`, usable for nonnegative exponents.
    Lower(i64),
    Integral(Formula),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum ClassModel {
    /// Exact value of `∫ ∏|h_i|^{τ_i}` over the class.
    Joint(Formula),
    /// One model per polynomial, combined by Hölder's inequality.
    Split(Vec<Single>),
}

fn monomial_formula(
    alphas: &[Option<&Vec<u32>>],
    exact: &[Option<i64>],
    x0: &[u64],
    m: i64,
    p: u64,
) -> Formula {
    let r = alphas.len();
    let mut a: Vec<i64> = exact.iter().map(|e| e.unwrap_or(0)).collect();
    let mut g = Vec::new();
    for (j, &xj) in x0.iter().enumerate() {
        let (val, zero) = if xj == 0 { (m, true) } else { (xj.trailing_zeros_base(p) as i64, false) };
        let mut w = vec![0i64; r];
        for i in 0..r {
            if let Some(al) = alphas[i] {
                a[i] += al[j] as i64 * val;
                w[i] = al[j] as i64;
            }
        }
        if zero && w.iter().any(|&x| x != 0) {
            g.push((1, w));
        }
    }
    Formula { a, g }
}

fn class_model(infos: &[PolyInfo], x0: &[u64], m: i64, p: u64, n: usize) -> ClassModel {
    let r = infos.len();
    let locals: Vec<Local> = infos.iter().map(|i| local_structure(i, x0, m, p)).collect();
    let exact: Vec<Option<i64>> = locals.iter().map(|l| if let Local::Exact(v) = l { Some(*v) } else { None }).collect();
    let open: Vec<usize> = (0..r).filter(|&i| exact[i].is_none()).collect();
    let base_a: Vec<i64> = exact.iter().map(|e| e.unwrap_or(0)).collect();

    if open.iter().all(|&i| matches!(locals[i], Local::Smooth(..))) {
        let rows: Vec<Vec<u64>> =
            open.iter().map(|&i| if let Local::Smooth(_, row) = &locals[i] { row.clone() } else { unreachable!() }).collect();
        if rank_mod_p(rows, p) == open.len() {
            let mut a = base_a.clone();
            let mut g = Vec::new();
            for &i in &open {
                if let Local::Smooth(mu, _) = &locals[i] {
                    a[i] = *mu;
                }
                let mut w = vec![0; r];
                w[i] = 1;
                g.push((1, w));
            }
            return ClassModel::Joint(Formula { a, g });
        }
    }
    if open.iter().all(|&i| infos[i].monomial.is_some()) {
        let alphas: Vec<Option<&Vec<u32>>> =
            (0..r).map(|i| if exact[i].is_none() { infos[i].monomial.as_ref() } else { None }).collect();
        return ClassModel::Joint(monomial_formula(&alphas, &exact, x0, m, p));
    }
    let at_origin = x0.iter().all(|&x| x == 0);
    if at_origin && open.iter().all(|&i| infos[i].anisotropic.is_some()) {
        let mut a = base_a.clone();
        let mut w = vec![0; r];
        for &i in &open {
            let d = infos[i].anisotropic.unwrap() as i64;
            a[i] = m * d;
            w[i] = d;
        }
        return ClassModel::Joint(Formula { a, g: vec![(n as i64, w)] });
    }
    let singles = (0..r)
        .map(|i| {
            let one = |a: i64, g: Vec<(i64, i64)>| {
                let mut av = vec![0; r];
                av[i] = a;
                let g = g
                    .into_iter()
                    .map(|(c, w)| {
                        let mut wv = vec![0; r];
                        wv[i] = w;
                        (c, wv)
                    })
                    .collect();
                Single::Integral(Formula { a: av, g })
            };
            match &locals[i] {
                Local::Exact(v) => one(*v, vec![]),
                Local::Smooth(mu, _) => one(*mu, vec![(1, 1)]),
                Local::Lower(lo) => {
                    if let Some(al) = &infos[i].monomial {
                        let mut alphas = vec![None; r];
                        alphas[i] = Some(al);
                        Single::Integral(monomial_formula(&alphas, &vec![None; r], x0, m, p))
                    } else if let (true, Some(d)) = (at_origin, infos[i].anisotropic) {
                        one(m * d as i64, vec![(n as i64, d as i64)])
                    } else {
                        Single::Lower(*lo)
                    }
                }
            }
        })
        .collect();
    ClassModel::Split(singles)
}

impl ClassModel {
    /// Bound on `∫ |∏ h_i^{s_i}|` over one class; `τ = Re(s)`.
    fn bound(&self, q: u64, mass_exp: f64, tau: &[f64]) -> f64 {
        match self {
            ClassModel::Joint(f) => f.eval(q, mass_exp, tau),
            ClassModel::Split(singles) => {
                let mut pointwise = 1.0;
                let mut integrals = Vec::new();
                for (i, s) in singles.iter().enumerate() {
                    match s {
                        Single::Integral(f) if f.g.is_empty() => {
                            pointwise *= qf(q, f.a[i] as f64 * tau[i]);
                        }
                        Single::Lower(a) => {
                            if tau[i] < 0.0 {
                                return f64::INFINITY;
                            }
                            pointwise *= qf(q, *a as f64 * tau[i]);
                        }
                        Single::Integral(f) => integrals.push((i, f)),
                    }
                }
                let k = integrals.len();
                if k == 0 {
                    return pointwise * qf(q, mass_exp);
                }
                // Hölder: any weights 1/p_i summing to one are valid, so try
                // the equal split and splits favouring each integral.
                // Combined in log space: extreme weights underflow otherwise.
                let holder = |weights: &[f64]| -> f64 {
                    integrals
                        .iter()
                        .zip(weights)
                        .map(|((i, f), w)| {
                            let mut t = vec![0.0; tau.len()];
                            t[*i] = tau[*i] / w;
                            w * f.ln_eval(q, mass_exp, &t)
                        })
                        .sum()
                };
                let mut best = holder(&vec![1.0 / k as f64; k]);
                if k > 1 {
                    for favoured in 0..k {
                        for delta in [0.5, 0.25, 0.1, 0.03, 0.01] {
                            let mut w = vec![delta / (k - 1) as f64; k];
                            w[favoured] = 1.0 - delta;
                            best = best.min(holder(&w));
                        }
                    }
                }
                pointwise * best.exp()
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberEntry {
    pub valuations: Vec<u32>,
    #[serde(serialize_with = "crate::arith::ser::rat")]
    pub measure: BigRational,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValuationFiberTable {
    pub depth: u32,
    pub entries: Vec<FiberEntry>,
    #[serde(serialize_with = "crate::arith::ser::rat")]
    pub unresolved: BigRational,
    /// Residue classes that carry the unresolved mass.
    pub unresolved_classes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedValue {
    #[serde(serialize_with = "ser_complex")]
    pub s: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    /// `None` when some class has no certified rule at this `s`.
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedReport {
    pub table: ValuationFiberTable,
    pub values: Vec<TruncatedValue>,
}

#[derive(Default)]
struct Acc {
    fibers: BTreeMap<Vec<u32>, Vec<u64>>,
    classes: BTreeMap<ClassModel, u64>,
    unresolved: u64,
}

fn merge_acc(mut a: Acc, b: Acc) -> Acc {
    for (k, v) in b.fibers {
        let e = a.fibers.entry(k).or_insert_with(|| vec![0; v.len()]);
        for (x, y) in e.iter_mut().zip(v) {
            *x += y;
        }
    }
    for (k, v) in b.classes {
        *a.classes.entry(k).or_default() += v;
    }
    a.unresolved += b.unresolved;
    a
}

/// Relative and absolute slack added to certified tail bounds to absorb
/// floating-point rounding in the partial sums.
pub const BOUND_REL_SLACK: f64 = 1e-9;
pub const BOUND_ABS_SLACK: f64 = 1e-12;

/// Truncated `Z_E(s, χ, h) = ∫_E ∏ χ_i(ac h_i) |h_i|^{s_i}` at depth `m`,
/// evaluated at each sample vector `s`.
pub fn truncated_integral(
    h: &[MultiPoly],
    chars: &[Character],
    p: u64,
    m: u32,
    domain: &Domain,
    samples: &[Vec<Complex64>],
    max_evals: u128,
) -> Result<TruncatedReport> {
    if h.is_empty() || h.len() != chars.len() {
        return Err(Error::InvalidInput("one character per polynomial is required".into()));
    }
    let n = h[0].dim();
    let trivial = chars.iter().all(|c| c.is_trivial());
    if !trivial && chars.iter().any(|c| c.is_trivial() || c.e != chars[0].e || c.order != chars[0].order) {
        return Err(Error::Unsupported("characters must be all trivial or share conductor and order".into()));
    }
    let e = if trivial { 0 } else { chars[0].e };
    let order = chars[0].order;
    if m == 0 || m < e + 1 {
        return Err(Error::InvalidInput(format!("depth {m} too small for conductor {e}")));
    }
    let modulus = p.checked_pow(m).filter(|&x| x <= 1 << 40).ok_or_else(|| Error::InvalidInput("depth too large".into()))?;
    let (values, center): (Vec<u64>, Vec<u64>) = match domain {
        Domain::Full => ((0..modulus).collect(), vec![0; n]),
        Domain::Torus => ((0..modulus).filter(|x| x % p != 0).collect(), vec![0; n]),
        Domain::Coset { center, depth } => {
            if *depth > m || center.len() != n {
                return Err(Error::InvalidInput("coset must have depth ≤ m and n coordinates".into()));
            }
            let step = p.pow(*depth);
            ((0..modulus / step).map(|t| t * step).collect(), center.iter().map(|c| c % modulus).collect())
        }
    };
    let total = (values.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    crate::pipeline::check_budget(total, max_evals)?;
    let infos: Vec<PolyInfo> = h.iter().map(|x| PolyInfo::new(x, p, modulus)).collect();
    let mi = m as i64;

    let acc = par_fold_grid(
        &values,
        n,
        Acc::default,
        |acc, _, pt| {
            let x: Vec<u64> = pt.iter().zip(&center).map(|(v, c)| (v + c) % modulus).collect();
            let mut vals = Vec::with_capacity(infos.len());
            let mut ex = 0u64;
            let mut resolved = true;
            for (info, chi) in infos.iter().zip(chars) {
                let hv = info.reduced.eval(&x);
                if hv == 0 {
                    resolved = false;
                    break;
                }
                let v = hv.trailing_zeros_base(p);
                if v + e > m {
                    resolved = false;
                    break;
                }
                if !trivial {
                    let ac = hv / p.pow(v) % chi.modulus();
                    ex += chi.exponent(ac).expect("unit");
                }
                vals.push(v);
            }
            if !resolved {
                // Valuations at or beyond the depth can still be certified
                // from the Taylor expansion at the lift.
                vals.clear();
                ex = 0;
                resolved = true;
                for (info, chi) in infos.iter().zip(chars) {
                    let Some((v, h0)) = certified_value(info, &x, mi, p, e) else {
                        resolved = false;
                        break;
                    };
                    if !trivial {
                        let unit = (h0 / BigInt::from(p).pow(v as u32)).mod_floor(&BigInt::from(chi.modulus()));
                        ex += chi.exponent(unit.to_u64().expect("reduced")).expect("unit");
                    }
                    vals.push(v as u32);
                }
            }
            if resolved {
                let slot = if trivial { 0 } else { (ex % order) as usize };
                acc.fibers.entry(vals).or_insert_with(|| vec![0; if trivial { 1 } else { order as usize }])[slot] += 1;
            } else {
                acc.unresolved += 1;
                *acc.classes.entry(class_model(&infos, &x, mi, p, n)).or_default() += 1;
            }
        },
        merge_acc,
    );

    let denom = BigRational::from_integer(BigInt::from(p).pow(n as u32 * m));
    let entries: Vec<FiberEntry> = acc
        .fibers
        .iter()
        .map(|(v, c)| FiberEntry {
            valuations: v.clone(),
            measure: BigRational::from_integer(BigInt::from(c.iter().sum::<u64>())) / &denom,
        })
        .collect();
    let table = ValuationFiberTable {
        depth: m,
        entries,
        unresolved: BigRational::from_integer(BigInt::from(acc.unresolved)) / &denom,
        unresolved_classes: acc.unresolved,
    };
    let w = qf(p, (n as u32 * m) as f64);
    let mass_exp = (n as u32 * m) as f64;
    let values = samples
        .iter()
        .map(|s| {
            let mut value = Complex64::zero();
            for (v, counts) in &acc.fibers {
                let z: Complex64 = v.iter().zip(s).map(|(&vi, si)| si * vi as f64).sum();
                let cs: Complex64 = counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(j, &c)| zeta_c(order, j as u64) * c as f64)
                    .sum();
                value += qc(p, z) * cs * w;
            }
            let tau: Vec<f64> = s.iter().map(|x| x.re).collect();
            let raw: f64 = acc.classes.iter().map(|(model, &cnt)| cnt as f64 * model.bound(p, mass_exp, &tau)).sum();
            let bound = raw.is_finite().then_some(raw * (1.0 + BOUND_REL_SLACK) + BOUND_ABS_SLACK);
            TruncatedValue { s: s.first().copied().unwrap_or_default(), value, bound }
        })
        .collect();
    Ok(TruncatedReport { table, values })
}

/// Truncated `Z(s, χ, f/g)` over `𝒪ⁿ` at depth `m`.
pub fn truncated_zeta(
    f: &MultiPoly,
    g: &MultiPoly,
    chi: &Character,
    m: u32,
    samples: &[Complex64],
    max_evals: u128,
) -> Result<TruncatedReport> {
    let s2: Vec<Vec<Complex64>> = samples.iter().map(|&s| vec![s, -s]).collect();
    truncated_integral(&[f.clone(), g.clone()], &[chi.clone(), chi.inverse()], chi.p, m, &Domain::Full, &s2, max_evals)
}

/// `ν + Σ_I σ_I ∏_{i∈I} (q−1)q^{-1-s_i}/(1 − q^{-1-s_i})`.
#[derive(Clone, Debug, Serialize)]
pub struct SpfValue {
    pub q: u64,
    #[serde(serialize_with = "crate::residue::ser_cyc")]
    pub nu: CycRat,
    /// `(pattern bitmask, σ_I)` for nonempty `I` with `σ_I ≠ 0`.
    pub sigma: Vec<(u32, String)>,
    #[serde(skip)]
    pub sigma_exact: Vec<(u32, BigRational)>,
}

impl SpfValue {
    pub fn eval(&self, s: &[Complex64]) -> Complex64 {
        let q = self.q as f64;
        let mut v = self.nu.to_complex();
        for (mask, sig) in &self.sigma_exact {
            let mut t = Complex64::new(crate::arith::rat_to_f64(sig), 0.0);
            for (i, si) in s.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    let x = qc(self.q, si + 1.0);
                    t *= (q - 1.0) * x / (1.0 - x);
                }
            }
            v += t;
        }
        v
    }
}

/// Stationary phase decomposition over `E = 𝒪ⁿ` or the torus; refuses when
/// the singular locus of `h̄` meets `Ē`.
pub fn spf_eval(h: &[MultiPoly], chars: &[Character], p: u64, domain: &Domain) -> Result<SpfValue> {
    if h.is_empty() || h.len() != chars.len() {
        return Err(Error::InvalidInput("one character per polynomial is required".into()));
    }
    let n = h[0].dim();
    let r = h.len();
    let values: Vec<u64> = match domain {
        Domain::Full => (0..p).collect(),
        Domain::Torus => (1..p).collect(),
        Domain::Coset { .. } => return Err(Error::Unsupported("stationary phase over a coset".into())),
    };
    let red: Vec<ModPoly> = h.iter().map(|x| x.reduce(p)).collect();
    let partials: Vec<Vec<ModPoly>> =
        h.iter().map(|x| (0..n).map(|j| x.partial_derivative(j).reduce(p)).collect()).collect();
    type Tally = (BTreeMap<u32, u64>, Vec<(u64, Vec<u64>)>);
    let (counts, singular): Tally = par_fold_grid(
        &values,
        n,
        || (BTreeMap::new(), Vec::new()),
        |(c, sing), idx, z| {
            let mask = (0..r).filter(|&i| red[i].eval(z) == 0).fold(0u32, |m, i| m | 1 << i);
            if mask != 0 {
                let rows: Vec<Vec<u64>> = (0..r)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| partials[i].iter().map(|d| d.eval(z)).collect())
                    .collect();
                if rank_mod_p(rows, p) < mask.count_ones() as usize {
                    sing.push((idx, z.to_vec()));
                    return;
                }
            }
            *c.entry(mask).or_default() += 1;
        },
        |(mut a, mut sa), (b, sb)| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            sa.extend(sb);
            (a, sa)
        },
    );
    if !singular.is_empty() {
        let mut pts: Vec<Vec<u64>> = singular.into_iter().map(|(_, z)| z).collect();
        pts.sort();
        return Err(Error::Degenerate(format!("singular points over E: {pts:?}")));
    }
    let qn = q_pow(p, -(n as i64));
    let trivial = chars.iter().all(|c| c.is_trivial());
    let nu = if trivial {
        CycRat::from_rational(BigRational::from_integer(BigInt::from(*counts.get(&0).unwrap_or(&0))) * &qn)
    } else {
        twisted_nu(h, chars, p, domain)?
    };
    let sigma_exact: Vec<(u32, BigRational)> = if trivial {
        counts
            .iter()
            .filter(|(&k, _)| k != 0)
            .map(|(&k, &c)| (k, BigRational::from_integer(BigInt::from(c)) * &qn))
            .collect()
    } else {
        Vec::new()
    };
    Ok(SpfValue {
        q: p,
        nu,
        sigma: sigma_exact.iter().map(|(k, v)| (*k, v.to_string())).collect(),
        sigma_exact,
    })
}

/// `Σ_{a ∈ E mod p^e, h̄_i(a) ≠ 0} q^{-ne} ∏ χ_i(h_i(a))`.
fn twisted_nu(h: &[MultiPoly], chars: &[Character], p: u64, domain: &Domain) -> Result<CycRat> {
    if chars.iter().any(|c| c.is_trivial() || c.e != chars[0].e || c.order != chars[0].order) {
        return Err(Error::Unsupported("characters must be all nontrivial with one conductor and order".into()));
    }
    let n = h[0].dim();
    let modulus = chars[0].modulus();
    let order = chars[0].order;
    let values: Vec<u64> = match domain {
        Domain::Torus => (0..modulus).filter(|x| x % p != 0).collect(),
        _ => (0..modulus).collect(),
    };
    let red: Vec<ModPoly> = h.iter().map(|x| x.reduce(modulus)).collect();
    let counts = par_fold_grid(
        &values,
        n,
        || vec![0u64; order as usize],
        |acc, _, a| {
            let mut ex = 0;
            for (hh, chi) in red.iter().zip(chars) {
                match chi.exponent(hh.eval(a)) {
                    Some(x) => ex += x,
                    None => return,
                }
            }
            acc[(ex % order) as usize] += 1;
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    let ctx = chars[0].ctx().expect("nontrivial");
    let scale = q_pow(p, -((n as u32 * chars[0].e) as i64));
    Ok(counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(j, &c)| CycRat::zeta_pow(ctx, j as i64).scale(&(BigRational::from_integer(BigInt::from(c)) * &scale)))
        .fold(CycRat::zero(), |a, b| a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{analyze, Config};
    use crate::poly::parse_poly;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn poly(s: &str) -> MultiPoly {
        parse_poly(s, &MultiPoly::default_vars(2)).unwrap()
    }

    fn quad(p: u64) -> Character {
        Character::new(p, 1, 2, 1).unwrap()
    }

    const BIG: u128 = 1 << 40;

    #[test]
    fn lemma_closed_examples() {
        let triv = Character::trivial(3);
        let v = igusa_lemma_closed(PAdic::Zero, 1, 1, 1, &triv, c(1.0)).unwrap();
        assert!((v - c(1.0 / 12.0)).norm() < 1e-12);
        let unit = PAdic::Value { valuation: 0, unit: 2 };
        let v = igusa_lemma_closed(unit, 1, 1, 1, &triv, c(0.7)).unwrap();
        assert!((v - c(1.0 / 3.0)).norm() < 1e-12);
        // quadratic χ is trivial on 1 + 3𝒪 for e = 1, so use conductor 2 over p = 3
        let chi = Character::new(3, 2, 3, 1).unwrap();
        let v = igusa_lemma_closed(unit, 1, 1, 1, &chi, c(0.7)).unwrap();
        assert_eq!(v, Complex64::zero());
    }

    #[test]
    fn lemma_bruteforce_matches() {
        let triv = Character::trivial(3);
        let b = igusa_lemma_bruteforce(PAdic::Zero, 1, 1, 1, &triv, c(1.0), 8, BIG).unwrap();
        assert!((b.renormalized - c(1.0 / 12.0)).norm() < 1e-6);
        assert!((b.truncated - c(1.0 / 12.0)).norm() <= b.tail_bound, "{b:?}");
        let unit = PAdic::Value { valuation: 0, unit: 2 };
        let b = igusa_lemma_bruteforce(unit, 1, 1, 1, &triv, c(0.7), 6, BIG).unwrap();
        assert!((b.truncated - c(1.0 / 3.0)).norm() < 1e-12);
        let chi = Character::new(3, 2, 3, 1).unwrap();
        let b = igusa_lemma_bruteforce(unit, 1, 1, 1, &chi, c(0.7), 7, BIG).unwrap();
        assert!(b.truncated.norm() < 1e-9);
    }

    #[test]
    fn lemma_depth_precondition() {
        let chi = Character::trivial(3);
        assert!(igusa_lemma_bruteforce(PAdic::Zero, 2, 1, 1, &chi, c(1.0), 3, BIG).is_err());
    }

    #[test]
    fn separable_depth_two() {
        let r = truncated_zeta(&poly("x"), &poly("y"), &Character::trivial(3), 2, &[c(0.0)], BIG).unwrap();
        assert!((r.values[0].value - c(64.0 / 81.0)).norm() < 1e-12);
        assert_eq!(r.table.unresolved, BigRational::new(17.into(), 81.into()));
        let total: BigRational = r.table.entries.iter().map(|e| e.measure.clone()).sum::<BigRational>() + &r.table.unresolved;
        assert!(total.is_one());
        let b = r.values[0].bound.unwrap();
        assert!((r.values[0].value - c(1.0)).norm() <= b);
    }

    #[test]
    fn example1_against_formula() {
        let cfg = Config::parse("x^2-y", "x^2*y", None, 3, "trivial").unwrap();
        let a = analyze(&cfg).unwrap();
        let s = [c(0.2), c(-0.2), c(0.0), Complex64::new(0.1, 0.5)];
        let r5 = truncated_zeta(&cfg.f, &cfg.g, &cfg.chi, 5, &s, BIG).unwrap();
        let r6 = truncated_zeta(&cfg.f, &cfg.g, &cfg.chi, 6, &s, BIG).unwrap();
        for (v5, v6) in r5.values.iter().zip(&r6.values) {
            let exact = a.zeta.canonical.eval_at_s(v5.s, 3);
            let (b5, b6) = (v5.bound.unwrap(), v6.bound.unwrap());
            assert!((v5.value - exact).norm() <= b5, "{:?} {} {}", v5.s, (v5.value - exact).norm(), b5);
            assert!((v6.value - exact).norm() <= b6);
            assert!(b6 < b5);
        }
    }

    #[test]
    fn twisted_separable_sums_vanish() {
        let s = [c(0.3), c(-0.4), Complex64::new(0.2, 1.0)];
        let r = truncated_zeta(&poly("x"), &poly("y"), &quad(5), 3, &s, BIG).unwrap();
        for v in &r.values {
            assert!(v.value.norm() < 1e-9);
            assert!(v.bound.is_some());
        }
    }

    #[test]
    fn spf_examples() {
        let h = poly("x^2-y");
        let v = spf_eval(std::slice::from_ref(&h), &[Character::trivial(3)], 3, &Domain::Full).unwrap();
        assert_eq!(v.nu, CycRat::from_rational(BigRational::new(2.into(), 3.into())));
        assert_eq!(v.sigma_exact, vec![(1, BigRational::new(1.into(), 3.into()))]);
        let s = c(0.4);
        let r = truncated_integral(&[h], &[Character::trivial(3)], 3, 6, &Domain::Full, &[vec![s]], BIG).unwrap();
        let x = v.eval(&[s]);
        assert!((r.values[0].value - x).norm() <= r.values[0].bound.unwrap());

        let chi = Character::new(5, 1, 4, 1).unwrap();
        let v = spf_eval(&[poly("x^2-y"), poly("x^2*y")], &[chi.clone(), chi], 5, &Domain::Torus).unwrap();
        assert!(v.sigma_exact.is_empty());

        let err = spf_eval(&[poly("(x+y)^2")], &[Character::trivial(3)], 3, &Domain::Torus).unwrap_err();
        assert!(err.to_string().contains("[1, 2]"), "{err}");
    }

    #[test]
    fn nonsingular_zero_kills_twisted_integral() {
        // x + y vanishes at (1, 2) mod 3 with unit gradient
        let chi = Character::new(3, 1, 2, 1).unwrap();
        let dom = Domain::Coset { center: vec![1, 2], depth: 1 };
        let r = truncated_integral(&[poly("x+y")], &[chi], 3, 6, &dom, &[vec![c(0.5)], vec![c(1.5)]], BIG).unwrap();
        for v in &r.values {
            assert!(v.value.norm() < 1e-9);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let e = truncated_zeta(&poly("x"), &poly("y"), &Character::trivial(3), 5, &[c(0.0)], 1000).unwrap_err();
        assert!(matches!(e, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn deep_valuations_are_certified_not_guessed() {
        // g = x⁴ + y⁴ vanishes mod 3⁵ and 3⁶ on the same balls; only Taylor
        // certification lets the tail shrink between the two depths.
        let cfg = Config::parse("x^2+y^2", "x^4+y^4", None, 3, "trivial").unwrap();
        let a = analyze(&cfg).unwrap();
        let s = [c(0.0), c(-0.2)];
        let r5 = truncated_zeta(&cfg.f, &cfg.g, &cfg.chi, 5, &s, BIG).unwrap();
        let r6 = truncated_zeta(&cfg.f, &cfg.g, &cfg.chi, 6, &s, BIG).unwrap();
        assert!(r5.table.entries.iter().any(|e| e.valuations.iter().any(|&v| v >= 5)));
        for (v5, v6) in r5.values.iter().zip(&r6.values) {
            let exact = a.zeta.canonical.eval_at_s(v5.s, 3);
            assert!((v5.value - exact).norm() <= v5.bound.unwrap());
            assert!((v6.value - exact).norm() <= v6.bound.unwrap());
            assert!(v6.bound.unwrap() < v5.bound.unwrap());
        }
        // A valuation equal to the Taylor margin is not certified: at depth 4
        // the bound must still cover the error.
        let cfg = Config::parse("x^2-y", "x^2*y", None, 3, "trivial").unwrap();
        let a = analyze(&cfg).unwrap();
        let r4 = truncated_zeta(&cfg.f, &cfg.g, &cfg.chi, 4, &[c(-0.2)], BIG).unwrap();
        let v = &r4.values[0];
        assert!((v.value - a.zeta.canonical.eval_at_s(v.s, 3)).norm() <= v.bound.unwrap());
    }

    #[test]
    fn extreme_holder_weights_do_not_underflow() {
        // Near the band edge the bound comes from a lopsided Hölder split
        // whose factors underflow in linear space.
        let cfg = Config::parse("6*x*y-x", "-4*x^3*y^2", None, 3, "trivial").unwrap();
        let a = analyze(&cfg).unwrap();
        let s = [Complex64::new(-0.925, 0.3), Complex64::new(-0.5, 0.3)];
        for m in [3, 4, 5] {
            let r = truncated_zeta(&cfg.f, &cfg.g, &cfg.chi, m, &s, BIG).unwrap();
            for v in &r.values {
                let diff = (v.value - a.zeta.canonical.eval_at_s(v.s, 3)).norm();
                assert!(diff <= v.bound.unwrap(), "m={m} s={} diff {diff:e} bound {:?}", v.s, v.bound);
            }
        }
    }
}
