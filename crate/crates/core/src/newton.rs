//! Newton polyhedra `Γ(h) = conv(supp(h) + ℝ₊ⁿ)`.
//!
//! Facets are computed by the double description method on the homogenized
//! cone spanned by `(m, 1)` for support points `m` and `(e_i, 0)` for the
//! recession directions. Every facet of that cone other than the one at
//! infinity is `⟨w, x⟩ ≥ d` with `w ∈ ℕⁿ∖{0}` primitive.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice;
use crate::poly::ExponentVector;

/// A facet `⟨normal, x⟩ ≥ offset` with primitive normal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
    #[serde(skip)]
    pub supporting_support: Vec<ExponentVector>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonPolyhedron {
    pub n: usize,
    pub generators: Vec<ExponentVector>,
    pub vertices: Vec<ExponentVector>,
    pub facets: Vec<Facet>,
}

/// `σ(k) = Σ k_i`.
pub fn sigma(k: &[i64]) -> i64 {
    k.iter().sum()
}

fn normalize_ray(v: &mut [i128]) {
    let g = v.iter().fold(0i128, |acc, &x| acc.gcd(&x));
    if g > 1 {
        for x in v.iter_mut() {
            *x /= g;
        }
    }
}

/// Extreme rays of the pointed cone `{a : ⟨row, a⟩ ≥ 0 for every row}`.
///
/// Incremental double description with the algebraic adjacency test. Rows
/// must span the ambient space.
pub fn double_description(rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let d = rows[0].len();
    // pick a basis among the rows, in order
    let mut basis: Vec<usize> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut trial: Vec<Vec<i64>> = basis.iter().map(|&b| rows[b].clone()).collect();
        trial.push(r.clone());
        if lattice::rank(&trial) == trial.len() {
            basis.push(i);
            if basis.len() == d {
                break;
            }
        }
    }
    assert_eq!(basis.len(), d, "constraint rows must span the space");

    // initial rays: columns of B^{-1}, i.e. the kernels of all but one row
    let mut rays: Vec<Vec<i128>> = Vec::new();
    for skip in 0..d {
        let others: Vec<Vec<i64>> =
            basis.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &b)| rows[b].clone()).collect();
        let k = lattice::kernel(&others, d);
        debug_assert_eq!(k.len(), 1);
        let mut r: Vec<i128> = k[0].iter().map(|&x| x as i128).collect();
        let s = dot_i128(&rows[basis[skip]], &r);
        if s < 0 {
            r.iter_mut().for_each(|x| *x = -*x);
        }
        rays.push(r);
    }

    let mut processed: Vec<usize> = basis.clone();
    for (i, row) in rows.iter().enumerate() {
        if basis.contains(&i) {
            continue;
        }
        let vals: Vec<i128> = rays.iter().map(|r| dot_i128(row, r)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&j| vals[j] > 0).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&j| vals[j] < 0).collect();
        if neg.is_empty() {
            processed.push(i);
            continue;
        }
        let zero_sets: Vec<Vec<usize>> = rays
            .iter()
            .map(|r| processed.iter().copied().filter(|&c| dot_i128(&rows[c], r) == 0).collect())
            .collect();
        let mut new_rays: Vec<Vec<i128>> = Vec::new();
        for &a in &pos {
            for &b in &neg {
                let common: Vec<usize> =
                    zero_sets[a].iter().copied().filter(|c| zero_sets[b].contains(c)).collect();
                if common.len() + 2 < d {
                    continue;
                }
                let common_rows: Vec<Vec<i64>> = common.iter().map(|&c| rows[c].clone()).collect();
                if lattice::rank(&common_rows) != d - 2 {
                    continue;
                }
                let (va, vb) = (vals[a], vals[b]);
                let mut r: Vec<i128> =
                    rays[b].iter().zip(&rays[a]).map(|(&xb, &xa)| va * xb - vb * xa).collect();
                normalize_ray(&mut r);
                new_rays.push(r);
            }
        }
        let mut kept: Vec<Vec<i128>> =
            (0..rays.len()).filter(|&j| vals[j] >= 0).map(|j| rays[j].clone()).collect();
        kept.extend(new_rays);
        kept.sort();
        kept.dedup();
        rays = kept;
        processed.push(i);
    }
    rays.into_iter()
        .map(|r| r.into_iter().map(|x| i64::try_from(x).expect("ray coordinate overflow")).collect())
        .collect()
}

fn dot_i128(row: &[i64], r: &[i128]) -> i128 {
    row.iter().zip(r).map(|(&x, &y)| x as i128 * y).sum()
}

impl NewtonPolyhedron {
    /// Builds `Γ` from a nonempty support set.
    pub fn build(support: &[ExponentVector]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let n = support[0].dim();
        if support.iter().any(|m| m.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: support.iter().map(|m| m.dim()).find(|&d| d != n).unwrap() });
        }
        let generators: Vec<ExponentVector> =
            support.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();

        let mut rows: Vec<Vec<i64>> = Vec::new();
        for i in 0..n {
            let mut e = vec![0i64; n + 1];
            e[i] = 1;
            rows.push(e);
        }
        for m in &generators {
            let mut r = m.as_i64();
            r.push(1);
            rows.push(r);
        }
        let rays = double_description(&rows);

        let mut facets: Vec<Facet> = Vec::new();
        for ray in rays {
            let w: Vec<i64> = ray[..n].to_vec();
            if w.iter().all(|&x| x == 0) {
                continue; // the face at infinity
            }
            debug_assert!(w.iter().all(|&x| x >= 0));
            let g = crate::arith::gcd_slice(&w);
            let w: Vec<i64> = w.iter().map(|x| x / g).collect();
            let offset = generators.iter().map(|m| m.dot(&w)).min().unwrap();
            let supporting_support: Vec<ExponentVector> =
                generators.iter().filter(|m| m.dot(&w) == offset).cloned().collect();
            facets.push(Facet { normal: w, offset, supporting_support });
        }
        facets.sort();
        facets.dedup_by(|a, b| a.normal == b.normal);

        let vertices: Vec<ExponentVector> = generators
            .iter()
            .filter(|m| {
                let tight: Vec<Vec<i64>> =
                    facets.iter().filter(|f| m.dot(&f.normal) == f.offset).map(|f| f.normal.clone()).collect();
                !tight.is_empty() && lattice::rank(&tight) == n
            })
            .cloned()
            .collect();

        Ok(NewtonPolyhedron { n, generators, vertices, facets })
    }

    /// `d(k, Γ)` for a nonnegative rational weight.
    pub fn d_value(&self, k: &[BigRational]) -> Result<BigRational> {
        check_weight(k, self.n)?;
        Ok(self
            .generators
            .iter()
            .map(|m| weighted(m, k))
            .min()
            .expect("nonempty support"))
    }

    /// `d(k, Γ)` for an integer weight (assumed nonnegative).
    pub fn d_int(&self, k: &[i64]) -> i64 {
        self.generators.iter().map(|m| m.dot(k)).min().expect("nonempty support")
    }

    /// Support points of the first meet locus `F(k, Γ)`.
    pub fn first_meet_locus(&self, k: &[BigRational]) -> Result<Vec<ExponentVector>> {
        let d = self.d_value(k)?;
        Ok(self.generators.iter().filter(|m| weighted(m, k) == d).cloned().collect())
    }

    pub fn first_meet_locus_int(&self, k: &[i64]) -> Vec<ExponentVector> {
        let d = self.d_int(k);
        self.generators.iter().filter(|m| m.dot(k) == d).cloned().collect()
    }

    /// Membership of a rational point through the facet inequalities.
    pub fn contains(&self, x: &[BigRational]) -> bool {
        self.facets.iter().all(|f| {
            let v: BigRational = f
                .normal
                .iter()
                .zip(x)
                .map(|(&w, xi)| xi * BigInt::from(w))
                .fold(BigRational::zero(), |a, b| a + b);
            v >= BigRational::from_integer(BigInt::from(f.offset))
        })
    }

    pub fn normals(&self) -> Vec<Vec<i64>> {
        self.facets.iter().map(|f| f.normal.clone()).collect()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

fn check_weight(k: &[BigRational], n: usize) -> Result<()> {
    if k.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: k.len() });
    }
    if k.iter().any(|x| x.is_negative()) {
        return Err(Error::InvalidInput("weight vector has a negative entry".into()));
    }
    Ok(())
}

fn weighted(m: &ExponentVector, k: &[BigRational]) -> BigRational {
    m.0.iter()
        .zip(k)
        .map(|(&e, w)| w * BigInt::from(e))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// `Γ(f/g)`: the polyhedron of the Minkowski sum of both supports.
pub fn combined_polyhedron(gf: &NewtonPolyhedron, gg: &NewtonPolyhedron) -> Result<NewtonPolyhedron> {
    if gf.n != gg.n {
        return Err(Error::DimensionMismatch { expected: gf.n, found: gg.n });
    }
    let mut sum = BTreeSet::new();
    for a in &gf.vertices {
        for b in &gg.vertices {
            sum.insert(a.add(b));
        }
    }
    NewtonPolyhedron::build(&sum.into_iter().collect::<Vec<_>>())
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalData {
    #[serde(serialize_with = "crate::arith::ser::rat")]
    pub t0: BigRational,
    pub tau0_support: Vec<ExponentVector>,
    pub d_t0: Vec<Vec<i64>>,
    pub d_minus: Vec<Vec<i64>>,
    pub d_plus: Vec<Vec<i64>>,
    /// For each `w ∈ 𝒟(t₀)`: `(w, d(w,Γg) = 0, (t₀..t₀) ∈ F(w,Γf), d(w,Γf) = 0, (t₀..t₀) ∈ F(w,Γg))`.
    pub corollary_checks: Vec<CorollaryCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryCheck {
    pub normal: Vec<i64>,
    pub dg_zero: bool,
    pub diag_in_face_f: bool,
    pub df_zero: bool,
    pub diag_in_face_g: bool,
}

impl CorollaryCheck {
    pub fn consistent(&self) -> bool {
        self.dg_zero == self.diag_in_face_f && self.df_zero == self.diag_in_face_g
    }
}

/// Diagonal point `(t₀, …, t₀)` of `Γ(f/g)` and the facets through it.
pub fn diagonal_data(gfg: &NewtonPolyhedron, gf: &NewtonPolyhedron, gg: &NewtonPolyhedron) -> DiagonalData {
    let ratio = |f: &Facet| BigRational::new(BigInt::from(f.offset), BigInt::from(sigma(&f.normal)));
    let t0 = gfg.facets.iter().map(ratio).max().expect("polyhedron has facets");
    let d_t0: Vec<Vec<i64>> =
        gfg.facets.iter().filter(|f| ratio(f) == t0).map(|f| f.normal.clone()).collect();
    let tau0_support: Vec<ExponentVector> = gfg
        .generators
        .iter()
        .filter(|m| d_t0.iter().all(|w| m.dot(w) == gfg.d_int(w)))
        .cloned()
        .collect();
    let mut d_minus = Vec::new();
    let mut d_plus = Vec::new();
    let mut corollary_checks = Vec::new();
    for w in &d_t0 {
        let df = gf.d_int(w);
        let dg = gg.d_int(w);
        match df.cmp(&dg) {
            std::cmp::Ordering::Greater => d_minus.push(w.clone()),
            std::cmp::Ordering::Less => d_plus.push(w.clone()),
            std::cmp::Ordering::Equal => {}
        }
        let on_diag = |d: i64| t0.clone() * BigInt::from(sigma(w)) == BigRational::from_integer(BigInt::from(d));
        corollary_checks.push(CorollaryCheck {
            normal: w.clone(),
            dg_zero: dg == 0,
            diag_in_face_f: on_diag(df),
            df_zero: df == 0,
            diag_in_face_g: on_diag(dg),
        });
    }
    DiagonalData { t0, tau0_support, d_t0, d_minus, d_plus, corollary_checks }
}
