//! Finite-field and residue-ring computations: torus zero sets, Jacobian
//! ranks, non-degeneracy, the stationary-phase quantities `ν` and `σ`, and
//! multiplicative characters with exact cyclotomic values.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{self, gcd_i64, pow_mod, q_pow};
use crate::cyclo::{CycCtx, CycRat};
use crate::error::{Error, Result};
use crate::fan::{barycenter, SimplicialFan};
use crate::poly::{ModPoly, MultiPoly, ResiduePoint};

/// Multiplicative character of `(ℤ/p^e)^×` sending the smallest generator to `ζ_M^k`.
#[derive(Clone, Debug)]
pub struct Character {
    pub p: u64,
    pub e: u32,
    pub order: u64,
    pub k: u64,
    pub generator: u64,
    modulus: u64,
    /// Discrete logarithm of each residue; `u32::MAX` for non-units.
    log: Arc<Vec<u32>>,
    ctx: Option<Arc<CycCtx>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacterInfo {
    pub kind: &'static str,
    pub conductor: u32,
    #[serde(rename = "M")]
    pub order: u64,
    pub k: u64,
    pub generator: u64,
}

impl Character {
    pub fn trivial(p: u64) -> Self {
        Character { p, e: 1, order: 1, k: 0, generator: 1, modulus: p, log: Arc::new(Vec::new()), ctx: None }
    }

    pub fn new(p: u64, e: u32, order: u64, k: u64) -> Result<Self> {
        if !arith::is_prime(p) {
            return Err(Error::InvalidInput(format!("p = {p} is not prime")));
        }
        if e == 0 || order == 0 {
            return Err(Error::InvalidCharacter("e and M must be positive".into()));
        }
        if p == 2 && e >= 3 {
            return Err(Error::InvalidCharacter("(ℤ/2^e)^× is not cyclic for e ≥ 3".into()));
        }
        let modulus = p
            .checked_pow(e)
            .filter(|&m| m <= 1 << 24)
            .ok_or_else(|| Error::InvalidCharacter(format!("modulus {p}^{e} is too large")))?;
        let phi = arith::euler_phi(modulus);
        let k = k % order;
        if k == 0 {
            return Err(Error::InvalidCharacter("k ≡ 0 mod M gives the trivial character; use `trivial`".into()));
        }
        if !(k as u128 * phi as u128).is_multiple_of(order as u128) {
            return Err(Error::InvalidCharacter(format!(
                "ζ_{order}^{k} has order not dividing φ({p}^{e}) = {phi}"
            )));
        }
        if e > 1 {
            // nontrivial on 1 + p^{e−1}: the subgroup generated by g^{φ/p}
            let step = phi / p;
            if (k as u128 * step as u128).is_multiple_of(order as u128) {
                return Err(Error::InvalidCharacter(format!(
                    "conductor is smaller than {e}: the character is trivial on 1 + {p}^{}",
                    e - 1
                )));
            }
        }
        if order > 1000 {
            return Err(Error::InvalidCharacter(format!("order M = {order} exceeds the limit 1000")));
        }
        let generator = primitive_root(modulus, phi);
        let mut log = vec![u32::MAX; modulus as usize];
        let mut x = 1u64;
        for j in 0..phi {
            log[x as usize] = j as u32;
            x = x * generator % modulus;
        }
        Ok(Character { p, e, order, k, generator, modulus, log: Arc::new(log), ctx: Some(CycCtx::new(order)) })
    }

    /// Parses `trivial` or `mult:e=<int>,M=<int>,k=<int>`.
    pub fn parse(spec: &str, p: u64) -> Result<Self> {
        let spec = spec.trim();
        if spec == "trivial" {
            return Ok(Self::trivial(p));
        }
        let body = spec
            .strip_prefix("mult:")
            .ok_or_else(|| Error::InvalidCharacter(format!("expected `trivial` or `mult:e=..,M=..,k=..`, got `{spec}`")))?;
        let mut fields: BTreeMap<&str, u64> = BTreeMap::new();
        for part in body.split(',') {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidCharacter(format!("malformed field `{part}`")))?;
            let v: u64 = val
                .trim()
                .parse()
                .map_err(|_| Error::InvalidCharacter(format!("`{val}` is not a nonnegative integer")))?;
            fields.insert(key.trim(), v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::InvalidCharacter(format!("missing field `{k}`")));
        let e = u32::try_from(get("e")?).map_err(|_| Error::InvalidCharacter("e too large".into()))?;
        Self::new(p, e, get("M")?, get("k")?)
    }

    pub fn is_trivial(&self) -> bool {
        self.ctx.is_none()
    }

    pub fn conductor(&self) -> u32 {
        self.e
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn ctx(&self) -> Option<&Arc<CycCtx>> {
        self.ctx.as_ref()
    }

    /// `χ(u) = ζ_M^{exponent}`; `None` for non-units.
    pub fn exponent(&self, u: u64) -> Option<u64> {
        let u = u % self.modulus;
        if u.is_multiple_of(self.p) {
            return None;
        }
        if self.is_trivial() {
            return Some(0);
        }
        let l = self.log[u as usize] as u64;
        Some((l as u128 * self.k as u128 % self.order as u128) as u64)
    }

    pub fn value(&self, u: u64) -> Option<CycRat> {
        let ex = self.exponent(u)?;
        Some(match &self.ctx {
            None => CycRat::one(),
            Some(c) => CycRat::zeta_pow(c, ex as i64),
        })
    }

    pub fn inverse(&self) -> Self {
        let mut c = self.clone();
        if !self.is_trivial() {
            c.k = (self.order - self.k) % self.order;
        }
        c
    }

    pub fn info(&self) -> CharacterInfo {
        CharacterInfo {
            kind: if self.is_trivial() { "trivial" } else { "nontrivial" },
            conductor: self.e,
            order: self.order,
            k: self.k,
            generator: self.generator,
        }
    }
}

fn primitive_root(modulus: u64, phi: u64) -> u64 {
    if modulus == 2 {
        return 1;
    }
    let mut primes = Vec::new();
    let mut m = phi;
    let mut d = 2;
    while d * d <= m {
        if m.is_multiple_of(d) {
            primes.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    (2..modulus)
        .find(|&g| gcd_i64(g as i64, modulus as i64) == 1 && primes.iter().all(|&l| pow_mod(g, phi / l, modulus) != 1))
        .expect("cyclic unit group has a generator")
}

/// Folds a function over `values^n` in parallel; `merge` must be
/// associative and commutative for a deterministic result.
pub(crate) fn par_fold_grid<T, I, F, M>(values: &[u64], n: usize, init: I, f: F, merge: M) -> T
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(&mut T, u64, &[u64]) + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    let base = values.len() as u64;
    let total = base.pow(n as u32);
    (0..total)
        .into_par_iter()
        .fold(
            || (init(), vec![0u64; n]),
            |(mut acc, mut pt), idx| {
                let mut r = idx;
                for c in pt.iter_mut() {
                    *c = values[(r % base) as usize];
                    r /= base;
                }
                f(&mut acc, idx, &pt);
                (acc, pt)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(&init, &merge)
}

fn torus_values(p: u64) -> Vec<u64> {
    (1..p).collect()
}

/// Rank over `𝔽_p` of a small matrix by Gaussian elimination.
pub fn rank_mod_p(mut m: Vec<Vec<u64>>, p: u64) -> usize {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| !m[i][c].is_multiple_of(p)) else { continue };
        m.swap(r, piv);
        let inv = pow_mod(m[r][c] % p, p - 2, p);
        #[allow(clippy::needless_range_loop)]
        for i in 0..rows {
            if i != r && !m[i][c].is_multiple_of(p) {
                let f = m[i][c] % p * inv % p;
                for j in 0..cols {
                    m[i][j] = (m[i][j] + p - f * m[r][j] % p) % p;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Face functions reduced mod `p` together with their reduced partials.
struct Reduced {
    values: Vec<ModPoly>,
    partials: Vec<Vec<ModPoly>>,
}

impl Reduced {
    fn new(polys: &[MultiPoly], p: u64) -> Self {
        let values = polys.iter().map(|h| h.reduce(p)).collect();
        let partials = polys
            .iter()
            .map(|h| (0..h.dim()).map(|j| h.partial_derivative(j).reduce(p)).collect())
            .collect();
        Reduced { values, partials }
    }

    fn rank_at(&self, pattern: &[usize], z: &[u64], p: u64) -> usize {
        let rows: Vec<Vec<u64>> =
            pattern.iter().map(|&i| self.partials[i].iter().map(|d| d.eval(z)).collect()).collect();
        rank_mod_p(rows, p)
    }
}

/// Jacobian rank over `𝔽_p` of `polys` at `z`.
pub fn jacobian_rank(polys: &[MultiPoly], z: &ResiduePoint, p: u64) -> usize {
    if polys.is_empty() {
        return 0;
    }
    let red = Reduced::new(polys, p);
    let idx: Vec<usize> = (0..polys.len()).collect();
    red.rank_at(&idx, &z.coords, p)
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusSolutionSet {
    pub pattern: Vec<usize>,
    pub points: Vec<ResiduePoint>,
    pub singular_points: Vec<ResiduePoint>,
}

/// Points of `(𝔽_p^×)ⁿ` whose zero pattern among `polys` is exactly `pattern`.
pub fn torus_solutions(polys: &[MultiPoly], pattern: &[usize], p: u64) -> TorusSolutionSet {
    let n = polys[0].dim();
    let red = Reduced::new(polys, p);
    let mut found: Vec<(u64, Vec<u64>, bool)> = par_fold_grid(
        &torus_values(p),
        n,
        Vec::new,
        |acc, idx, z| {
            let zeros: Vec<usize> = (0..polys.len()).filter(|&i| red.values[i].eval(z) == 0).collect();
            if zeros == pattern {
                let singular = red.rank_at(pattern, z, p) < pattern.len();
                acc.push((idx, z.to_vec(), singular));
            }
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    found.sort();
    let points: Vec<ResiduePoint> = found.iter().map(|(_, z, _)| ResiduePoint::new(z.clone(), p)).collect();
    let singular_points = found.iter().filter(|x| x.2).map(|(_, z, _)| ResiduePoint::new(z.clone(), p)).collect();
    TorusSolutionSet { pattern: pattern.to_vec(), points, singular_points }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PatternCount {
    pub nonsingular: u64,
    pub singular: u64,
    /// Smallest singular point in enumeration order, with its index.
    pub first_singular: Option<(u64, Vec<u64>)>,
}

/// Torus points of a face system grouped by zero pattern (bitmask).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    pub n: usize,
    pub p: u64,
    pub by_pattern: BTreeMap<u32, PatternCount>,
}

impl Census {
    pub fn count(&self, mask: u32) -> PatternCount {
        self.by_pattern.get(&mask).cloned().unwrap_or_default()
    }

    /// `q^{-n}` times the nonsingular count of the pattern.
    pub fn measure(&self, mask: u32) -> BigRational {
        BigRational::from_integer(BigInt::from(self.count(mask).nonsingular)) * q_pow(self.p, -(self.n as i64))
    }

    pub fn first_singular(&self) -> Option<(u32, Vec<u64>)> {
        self.by_pattern
            .iter()
            .filter_map(|(m, c)| c.first_singular.as_ref().map(|(i, z)| (*i, *m, z.clone())))
            .min()
            .map(|(_, m, z)| (m, z))
    }
}

/// One pass over the torus classifying each point by zero pattern and
/// Jacobian rank.
pub fn census(polys: &[MultiPoly], p: u64) -> Census {
    let n = polys[0].dim();
    let red = Reduced::new(polys, p);
    let by_pattern = par_fold_grid(
        &torus_values(p),
        n,
        BTreeMap::<u32, PatternCount>::new,
        |acc, idx, z| {
            let mut mask = 0u32;
            let mut pattern = Vec::new();
            for (i, h) in red.values.iter().enumerate() {
                if h.eval(z) == 0 {
                    mask |= 1 << i;
                    pattern.push(i);
                }
            }
            let entry = acc.entry(mask).or_default();
            if mask != 0 && red.rank_at(&pattern, z, p) < pattern.len() {
                entry.singular += 1;
                if entry.first_singular.as_ref().is_none_or(|(j, _)| idx < *j) {
                    entry.first_singular = Some((idx, z.to_vec()));
                }
            } else {
                entry.nonsingular += 1;
            }
        },
        |mut a, b| {
            for (m, c) in b {
                let e = a.entry(m).or_default();
                e.nonsingular += c.nonsingular;
                e.singular += c.singular;
                e.first_singular = match (e.first_singular.take(), c.first_singular) {
                    (Some(x), Some(y)) => Some(if x.0 <= y.0 { x } else { y }),
                    (x, y) => x.or(y),
                };
            }
            a
        },
    );
    Census { n, p, by_pattern }
}

/// `ν(h̄, (𝒪^×)ⁿ, χ)`. Trivial mode counts torus points off every zero set;
/// nontrivial mode sums `q^{-ne} ∏ χ_i(h_i(a))` over units mod `p^e` where
/// every `h_i(a)` is a unit.
pub fn nu(faces: &[MultiPoly], chars: &[Character], p: u64) -> Result<CycRat> {
    if chars.iter().all(|c| c.is_trivial()) {
        return Ok(CycRat::from_rational(census(faces, p).measure(0)));
    }
    if chars.iter().any(|c| c.is_trivial()) {
        return Err(Error::Unsupported("mixing trivial and nontrivial characters".into()));
    }
    let e = chars[0].e;
    let m = chars[0].order;
    if chars.iter().any(|c| c.e != e || c.order != m) {
        return Err(Error::Unsupported("characters with different conductors or orders".into()));
    }
    let n = faces[0].dim();
    let modulus = chars[0].modulus();
    let reduced: Vec<ModPoly> = faces.iter().map(|h| h.reduce(modulus)).collect();
    let units: Vec<u64> = (1..modulus).filter(|u| u % p != 0).collect();
    let counts: Vec<u64> = par_fold_grid(
        &units,
        n,
        || vec![0u64; m as usize],
        |acc, _, a| {
            let mut ex = 0u64;
            for (h, chi) in reduced.iter().zip(chars) {
                match chi.exponent(h.eval(a)) {
                    Some(x) => ex += x,
                    None => return,
                }
            }
            acc[(ex % m) as usize] += 1;
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    Ok(character_sum(&counts, chars[0].ctx().expect("nontrivial"), q_pow(p, -((n as i64) * e as i64))))
}

fn character_sum(counts: &[u64], ctx: &Arc<CycCtx>, scale: BigRational) -> CycRat {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(j, &c)| CycRat::zeta_pow(ctx, j as i64).scale(&(BigRational::from_integer(c.into()) * &scale)))
        .fold(CycRat::zero(), |a, b| a + b)
}

/// `σ(h̄_I, (𝒪^×)ⁿ, χ)`: nonsingular measure of the exact pattern `I`; zero
/// for nontrivial characters.
pub fn sigma_i(faces: &[MultiPoly], pattern: &[usize], p: u64, chars: &[Character]) -> BigRational {
    if chars.iter().any(|c| !c.is_trivial()) {
        return BigRational::from_integer(0.into());
    }
    let mask = pattern.iter().fold(0u32, |m, &i| m | 1 << i);
    census(faces, p).measure(mask)
}

/// The four quantities entering `L_Δ` for the pair `(f_Δ, g_Δ)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaceCounts {
    /// Stationary-phase `ν`: points off both zero sets (trivial χ), or the
    /// twisted character sum.
    #[serde(serialize_with = "ser_cyc")]
    pub nu: CycRat,
    #[serde(rename = "N_f", serialize_with = "crate::arith::ser::rat")]
    pub n_f: BigRational,
    #[serde(rename = "N_g", serialize_with = "crate::arith::ser::rat")]
    pub n_g: BigRational,
    #[serde(rename = "N_fg", serialize_with = "crate::arith::ser::rat")]
    pub n_fg: BigRational,
}

pub fn ser_cyc<S: serde::Serializer>(c: &CycRat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&c.to_string())
}

pub fn face_counts_from_census(c: &Census) -> FaceCounts {
    FaceCounts { nu: CycRat::from_rational(c.measure(0)), n_f: c.measure(1), n_g: c.measure(2), n_fg: c.measure(3) }
}

pub fn face_counts(f_face: &MultiPoly, g_face: &MultiPoly, p: u64, chi: &Character) -> Result<FaceCounts> {
    let faces = [f_face.clone(), g_face.clone()];
    if chi.is_trivial() {
        return Ok(face_counts_from_census(&census(&faces, p)));
    }
    let zero = BigRational::from_integer(0.into());
    Ok(FaceCounts {
        nu: nu(&faces, &[chi.clone(), chi.inverse()], p)?,
        n_f: zero.clone(),
        n_g: zero.clone(),
        n_fg: zero,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyWitness {
    /// Cone id, `None` for the zero cone.
    pub cone: Option<usize>,
    pub pattern: Vec<&'static str>,
    pub point: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NondegVerdict {
    pub nondegenerate: bool,
    pub witness: Option<DegeneracyWitness>,
}

pub fn pattern_names(mask: u32) -> Vec<&'static str> {
    let mut v = Vec::new();
    if mask & 1 != 0 {
        v.push("f");
    }
    if mask & 2 != 0 {
        v.push("g");
    }
    v
}

/// Face pairs `(f_{b(Δ)}, g_{b(Δ)})` for `{0}` followed by every fan cone.
pub fn face_pairs(f: &MultiPoly, g: &MultiPoly, fan: &SimplicialFan) -> Vec<(Option<usize>, MultiPoly, MultiPoly)> {
    let mut out = vec![(None, f.clone(), g.clone())];
    for c in &fan.cones {
        let b = barycenter(c, fan.n);
        out.push((Some(c.id), f.face_function_int(&b), g.face_function_int(&b)));
    }
    out
}

/// Verdict from per-cone censuses (in the order of [`face_pairs`]).
pub fn verdict_from_censuses(cones: &[Option<usize>], censuses: &[Census]) -> NondegVerdict {
    for (cone, c) in cones.iter().zip(censuses) {
        if let Some((mask, z)) = c.first_singular() {
            return NondegVerdict {
                nondegenerate: false,
                witness: Some(DegeneracyWitness { cone: *cone, pattern: pattern_names(mask), point: z }),
            };
        }
    }
    NondegVerdict { nondegenerate: true, witness: None }
}

/// Checks the rank condition at every barycenter of `fan ∪ {0}`.
pub fn check_nondegenerate(f: &MultiPoly, g: &MultiPoly, fan: &SimplicialFan, p: u64) -> NondegVerdict {
    let pairs = face_pairs(f, g, fan);
    let cones: Vec<Option<usize>> = pairs.iter().map(|x| x.0).collect();
    let censuses: Vec<Census> = pairs.iter().map(|(_, a, b)| census(&[a.clone(), b.clone()], p)).collect();
    verdict_from_censuses(&cones, &censuses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::normal_subdivision;
    use crate::newton::{combined_polyhedron, NewtonPolyhedron};
    use crate::poly::parse_poly;
    use rand::{Rng, SeedableRng};

    fn vars() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn poly(s: &str) -> MultiPoly {
        parse_poly(s, &vars()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        arith::rational_from_i64(n, d)
    }

    fn fan_of(f: &MultiPoly, g: &MultiPoly) -> SimplicialFan {
        let gf = NewtonPolyhedron::build(&f.support()).unwrap();
        let gg = NewtonPolyhedron::build(&g.support()).unwrap();
        normal_subdivision(&combined_polyhedron(&gf, &gg).unwrap())
    }

    fn pts(v: &[[u64; 2]], p: u64) -> Vec<ResiduePoint> {
        v.iter().map(|z| ResiduePoint::new(z.to_vec(), p)).collect()
    }

    #[test]
    fn torus_solution_examples() {
        let s = torus_solutions(&[poly("x^2-y"), poly("x^2*y")], &[0], 3);
        assert_eq!(s.points, pts(&[[1, 1], [2, 1]], 3));
        assert!(s.singular_points.is_empty());
        let s = torus_solutions(&[poly("x^2+y^2"), poly("x^4+y^4")], &[0], 3);
        assert!(s.points.is_empty());
        let s = torus_solutions(&[poly("x^2-y")], &[], 3);
        assert_eq!(s.points, pts(&[[1, 2], [2, 2]], 3));
    }

    #[test]
    fn jacobian_rank_examples() {
        assert_eq!(jacobian_rank(&[poly("x^2-y")], &ResiduePoint::new(vec![1, 1], 3), 3), 1);
        assert_eq!(jacobian_rank(&[poly("(x+y)^2")], &ResiduePoint::new(vec![1, 2], 3), 3), 0);
        assert_eq!(jacobian_rank(&[], &ResiduePoint::new(vec![1, 2], 3), 3), 0);
        assert_eq!(rank_mod_p(vec![vec![1, 2], vec![2, 4]], 5), 1);
        assert_eq!(rank_mod_p(vec![vec![1, 2], vec![2, 1]], 3), 1);
        assert_eq!(rank_mod_p(vec![vec![1, 2], vec![2, 1]], 5), 2);
    }

    #[test]
    fn nondegeneracy_examples() {
        let (f, g) = (poly("x^2+y^2"), poly("x^4+y^4"));
        assert!(check_nondegenerate(&f, &g, &fan_of(&f, &g), 3).nondegenerate);
        let (f, g) = (poly("(x+y)^2"), poly("x*y"));
        let v = check_nondegenerate(&f, &g, &fan_of(&f, &g), 3);
        assert!(!v.nondegenerate);
        let w = v.witness.unwrap();
        assert_eq!(w.pattern, vec!["f"]);
        assert_eq!(w.point, vec![2, 1]);
        let (f, g) = (poly("x"), poly("y"));
        for p in [2, 3, 5, 7] {
            assert!(check_nondegenerate(&f, &g, &fan_of(&f, &g), p).nondegenerate);
        }
    }

    #[test]
    fn character_construction() {
        let chi = Character::parse("mult:e=1,M=2,k=1", 3).unwrap();
        assert_eq!(chi.generator, 2);
        assert_eq!(chi.value(2).unwrap(), CycRat::from_int(-1));
        assert_eq!(chi.value(1).unwrap(), CycRat::one());
        assert!(chi.value(3).is_none());
        assert!(Character::parse("mult:e=1,M=4,k=1", 3).is_err()); // order 4 ∤ 2
        assert!(Character::parse("mult:e=2,M=2,k=1", 3).is_err()); // conductor 1
        assert!(Character::parse("mult:e=2,M=3,k=1", 3).is_ok()); // order 3 on (ℤ/9)^×
        assert!(Character::parse("mult:e=1,M=2,k=2", 5).is_err()); // trivial
        assert!(Character::parse("mult:e=3,M=2,k=1", 2).is_err());
        assert!(Character::parse("mult:e=2,M=2,k=1", 2).is_ok());
        assert!(Character::parse("mult:e=1,M=1,k=0", 2).is_err());
        assert!(Character::parse("quadratic", 3).is_err());
        assert!(Character::parse("trivial", 3).unwrap().is_trivial());
    }

    #[test]
    fn character_homomorphism() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for (p, e, m, k) in [(3, 1, 2, 1), (5, 1, 4, 1), (7, 1, 6, 5), (3, 2, 6, 1), (5, 2, 5, 2), (2, 2, 2, 1)] {
            let chi = Character::new(p, e, m, k).unwrap();
            let md = chi.modulus();
            assert!(chi.value(1).unwrap().is_one());
            for _ in 0..100 {
                let u = loop {
                    let u = rng.gen_range(1..md);
                    if u % p != 0 {
                        break u;
                    }
                };
                let v = loop {
                    let v = rng.gen_range(1..md);
                    if v % p != 0 {
                        break v;
                    }
                };
                assert_eq!(chi.value(u * v % md).unwrap(), chi.value(u).unwrap() * chi.value(v).unwrap());
                assert!((chi.value(u).unwrap() * chi.inverse().value(u).unwrap()).is_one());
            }
            if e > 1 {
                // nontrivial on 1 + p^{e−1}
                let pe1 = p.pow(e - 1);
                assert!((1..p).any(|j| !chi.value(1 + j * pe1).unwrap().is_one()));
            }
        }
    }

    #[test]
    fn nu_examples() {
        let triv = Character::trivial(3);
        let v = nu(&[poly("x"), poly("y")], &[triv.clone(), triv], 3).unwrap();
        assert_eq!(v, CycRat::from_rational(rat(4, 9)));
        for p in [3u64, 5] {
            let chi = Character::new(p, 1, 2, 1).unwrap();
            let pair = [chi.clone(), chi.inverse()];
            assert!(nu(&[poly("x"), poly("y")], &pair, p).unwrap().is_zero());
            let v = nu(&[poly("-y"), poly("x^2*y")], &pair, p).unwrap();
            let sign = if p % 4 == 3 { -1 } else { 1 };
            assert_eq!(v, CycRat::from_rational(rat(sign * (p as i64 - 1).pow(2), (p * p) as i64)));
        }
    }

    #[test]
    fn sigma_and_face_counts() {
        let triv = Character::trivial(3);
        let faces = [poly("x^2-y"), poly("x^2*y")];
        assert_eq!(sigma_i(&faces, &[0], 3, &[triv.clone(), triv.clone()]), rat(2, 9));
        let chi = Character::new(3, 1, 2, 1).unwrap();
        assert_eq!(sigma_i(&faces, &[0], 3, &[chi.clone(), chi]), rat(0, 1));
        assert_eq!(sigma_i(&[poly("x^2+y^2")], &[0], 3, std::slice::from_ref(&triv)), rat(0, 1));

        let fc = face_counts(&faces[0], &faces[1], 3, &triv).unwrap();
        assert_eq!(fc.n_f, rat(2, 9));
        assert_eq!(fc.n_g, rat(0, 1));
        assert_eq!(fc.n_fg, rat(0, 1));
        assert_eq!(fc.nu, CycRat::from_rational(rat(2, 9)));

        for p in [3u64, 7] {
            let fc = face_counts(&poly("x^2+y^2"), &poly("x^4+y^4"), p, &Character::trivial(p)).unwrap();
            assert_eq!(fc.nu, CycRat::from_rational(rat((p as i64 - 1).pow(2), (p * p) as i64)));
            assert_eq!(fc.n_f + fc.n_g + fc.n_fg, rat(0, 1));
        }
    }

    #[test]
    fn census_partitions_the_torus() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let p = [3u64, 5, 7][rng.gen_range(0..3)];
            let terms = |rng: &mut rand_chacha::ChaCha8Rng| {
                MultiPoly::from_terms(
                    2,
                    (0..3).map(|_| (vec![rng.gen_range(0..4), rng.gen_range(0..4)], rng.gen_range(-3i64..4))),
                )
            };
            let (f, g) = (terms(&mut rng), terms(&mut rng));
            if f.is_zero() || g.is_zero() {
                continue;
            }
            let c = census(&[f, g], p);
            let total: u64 = c.by_pattern.values().map(|x| x.nonsingular + x.singular).sum();
            assert_eq!(total, (p - 1).pow(2));
        }
    }
}
