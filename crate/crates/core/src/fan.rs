//! Simplicial subdivision of `ℝ₊ⁿ∖{0}` subordinate to a Newton polyhedron.
//!
//! The maximal cones of the normal fan are the normal cones of the vertices,
//! spanned by the facet normals tight at each vertex. Each one is triangulated
//! by placing its rays in one global lexicographic order, so triangulations of
//! neighbouring cones agree on shared faces. The fan is the set of all faces
//! of the resulting simplices.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice;
use crate::newton::NewtonPolyhedron;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimplicialCone {
    pub id: usize,
    pub generators: Vec<Vec<i64>>,
}

impl SimplicialCone {
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    /// The zero cone `{0}` in dimension `n`.
    pub fn zero() -> Self {
        SimplicialCone { id: usize::MAX, generators: Vec::new() }
    }

    /// Coordinates `λ` of `k` in the generators, if `k` lies in their span.
    pub fn coordinates(&self, k: &[i64]) -> Option<Vec<BigRational>> {
        if self.generators.is_empty() {
            return k.iter().all(|&x| x == 0).then(Vec::new);
        }
        lattice::solve_in_span(&self.generators, k)
    }

    /// Whether `k` lies in the relatively open cone.
    pub fn contains_relative_interior(&self, k: &[i64]) -> bool {
        self.coordinates(k).is_some_and(|l| l.iter().all(|x| x.is_positive()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimplicialFan {
    pub n: usize,
    pub cones: Vec<SimplicialCone>,
}

/// `w_1 + … + w_l`; the zero vector for the zero cone.
pub fn barycenter(cone: &SimplicialCone, n: usize) -> Vec<i64> {
    let mut b = vec![0i64; n];
    for w in &cone.generators {
        for (bi, wi) in b.iter_mut().zip(w) {
            *bi += wi;
        }
    }
    b
}

/// Builds the simplicial subdivision for `Γ`.
pub fn normal_subdivision(gamma: &NewtonPolyhedron) -> SimplicialFan {
    let n = gamma.n;
    let mut simplices: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();
    for v in &gamma.vertices {
        let mut rays: Vec<Vec<i64>> = gamma
            .facets
            .iter()
            .filter(|f| v.dot(&f.normal) == f.offset)
            .map(|f| f.normal.clone())
            .collect();
        rays.sort();
        for s in placing_triangulation(&rays, n) {
            simplices.insert(s);
        }
    }
    let mut faces: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();
    for s in &simplices {
        let l = s.len();
        for mask in 1u32..(1 << l) {
            let face: Vec<Vec<i64>> = (0..l).filter(|i| mask >> i & 1 == 1).map(|i| s[i].clone()).collect();
            faces.insert(face);
        }
    }
    let mut ordered: Vec<Vec<Vec<i64>>> = faces.into_iter().collect();
    ordered.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let cones = ordered
        .into_iter()
        .enumerate()
        .map(|(id, generators)| SimplicialCone { id, generators })
        .collect();
    SimplicialFan { n, cones }
}

/// Placing triangulation of the cone over `rays` (already in the placing
/// order). Returns full-dimensional simplices as sorted generator lists.
fn placing_triangulation(rays: &[Vec<i64>], n: usize) -> Vec<Vec<Vec<i64>>> {
    let mut current: Vec<Vec<i64>> = Vec::new(); // rays used so far
    let mut simplices: Vec<Vec<Vec<i64>>> = vec![Vec::new()];
    let mut dim = 0usize;
    for p in rays {
        let mut trial = current.clone();
        trial.push(p.clone());
        if lattice::rank(&trial) > dim {
            for s in simplices.iter_mut() {
                s.push(p.clone());
            }
            dim += 1;
            current.push(p.clone());
            continue;
        }
        // p lies in the current span: cone over the boundary facets it sees
        let span: Vec<Vec<i64>> = current.clone();
        let mut added = Vec::new();
        for s in &simplices {
            for skip in 0..s.len() {
                let facet: Vec<Vec<i64>> =
                    s.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, r)| r.clone()).collect();
                if !is_boundary(&facet, &simplices) {
                    continue;
                }
                let u = facet_normal_in_span(&facet, &span, n);
                let side_o = dot(&u, &s[skip]);
                let side_p = dot(&u, p);
                if side_o.signum() * side_p.signum() < 0 {
                    let mut ns = facet.clone();
                    ns.push(p.clone());
                    added.push(ns);
                }
            }
        }
        if !added.is_empty() {
            current.push(p.clone());
        }
        simplices.extend(added);
    }
    debug_assert_eq!(dim, n);
    simplices
        .into_iter()
        .map(|mut s| {
            s.sort();
            s
        })
        .collect()
}

fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

fn is_boundary(facet: &[Vec<i64>], simplices: &[Vec<Vec<i64>>]) -> bool {
    simplices.iter().filter(|s| facet.iter().all(|r| s.contains(r))).count() == 1
}

/// A vector in `span` orthogonal to every ray of `facet` (a hyperplane of
/// codimension one inside the span).
fn facet_normal_in_span(facet: &[Vec<i64>], span: &[Vec<i64>], n: usize) -> Vec<i64> {
    let mut rows: Vec<Vec<i64>> = facet.to_vec();
    rows.extend(lattice::kernel(span, n)); // orthogonal complement of the span
    let k = lattice::kernel(&rows, n);
    debug_assert_eq!(k.len(), 1);
    k[0].clone()
}

#[derive(Clone, Debug, Serialize)]
pub struct FundamentalPoints {
    pub cone_id: usize,
    pub points: Vec<Vec<i64>>,
}

/// Lattice points of `{Σ λ_i w_i : 0 < λ_i ≤ 1}`.
///
/// With `B` a basis of `span ∩ ℤⁿ` and `W = M·B`, lattice points of the span
/// are `c·B` with `c ∈ ℤˡ`, and `λ = c·M⁻¹`. The Hermite form of `M` gives a
/// complete residue system of `ℤˡ / ℤˡM`; each representative is shifted
/// into the half-open box.
pub fn fundamental_points(cone: &SimplicialCone, n: usize) -> Result<FundamentalPoints> {
    let l = cone.generators.len();
    if l == 0 {
        return Ok(FundamentalPoints { cone_id: cone.id, points: vec![vec![0; n]] });
    }
    if lattice::rank(&cone.generators) != l {
        return Err(Error::DependentGenerators);
    }
    let basis = lattice::saturated_basis(&cone.generators, n);
    debug_assert_eq!(basis.len(), l);
    let basis_cols: Vec<Vec<i64>> = basis.clone();
    // M[i] = coordinates of w_i in the basis
    let m: Vec<Vec<BigInt>> = cone
        .generators
        .iter()
        .map(|w| {
            lattice::solve_in_span(&basis_cols, w)
                .expect("generator lies in its saturated span")
                .into_iter()
                .map(|x| {
                    debug_assert!(x.is_integer());
                    x.to_integer()
                })
                .collect()
        })
        .collect();
    let (h, _) = lattice::hermite_with_transform(&m);
    let diag: Vec<i64> = (0..l).map(|i| h[i][i].abs().to_i64().expect("small index")).collect();
    let m_inv = invert(&m);

    let mut points = Vec::new();
    let mut c = vec![0i64; l];
    loop {
        // λ = c · M⁻¹, shifted into (0,1]
        let lambda: Vec<BigRational> = (0..l)
            .map(|j| {
                let x = (0..l)
                    .map(|i| &m_inv[i][j] * BigInt::from(c[i]))
                    .fold(BigRational::zero(), |a, b| a + b);
                &x - x.ceil() + BigRational::one()
            })
            .collect();
        let mut t = vec![BigRational::zero(); n];
        for (lj, w) in lambda.iter().zip(&cone.generators) {
            for (ti, &wi) in t.iter_mut().zip(w) {
                *ti += lj * BigInt::from(wi);
            }
        }
        points.push(t.iter().map(|x| x.to_integer().to_i64().expect("fits")).collect());
        // next residue vector
        let mut i = 0;
        loop {
            if i == l {
                points.sort();
                return Ok(FundamentalPoints { cone_id: cone.id, points });
            }
            c[i] += 1;
            if c[i] < diag[i] {
                break;
            }
            c[i] = 0;
            i += 1;
        }
    }
}

fn invert(m: &[Vec<BigInt>]) -> Vec<Vec<BigRational>> {
    let l = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<BigRational> = row.iter().map(|x| BigRational::from_integer(x.clone())).collect();
            r.extend((0..l).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    let pivots = lattice::rref(&mut a);
    debug_assert_eq!(pivots, (0..l).collect::<Vec<_>>());
    a.into_iter().map(|r| r[l..].to_vec()).collect()
}

/// `|det|` for full cones, or the index of the generated sublattice.
pub fn lattice_index(cone: &SimplicialCone) -> BigInt {
    if cone.generators.is_empty() {
        return BigInt::one();
    }
    lattice::smith_diagonal(&cone.generators)
        .iter()
        .fold(BigInt::one(), |a, b| a * b.abs())
}
