//! Exact linear algebra over ℚ and ℤ for small matrices: ranks, solves,
//! kernels, saturation of sublattices and Smith normal form.

#![allow(clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type QMatrix = Vec<Vec<BigRational>>;

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn to_q_matrix(rows: &[Vec<i64>]) -> QMatrix {
    rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut QMatrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, piv);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in 0..cols {
                    let delta = &factor * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<i64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m = to_q_matrix(rows);
    rref(&mut m).len()
}

/// Determinant of a square integer matrix.
pub fn det(rows: &[Vec<i64>]) -> BigInt {
    let n = rows.len();
    let mut m = to_q_matrix(rows);
    let mut d = BigRational::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return BigInt::zero();
        };
        if piv != c {
            m.swap(piv, c);
            d = -d;
        }
        d *= &m[c][c];
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let factor = &m[i][c] / &m[c][c];
                for j in c..n {
                    let delta = &factor * &m[c][j];
                    m[i][j] -= delta;
                }
            }
        }
    }
    d.to_integer()
}

/// Basis of the rational kernel `{x : A x = 0}`, scaled to primitive integer
/// vectors.
pub fn kernel(rows: &[Vec<i64>], cols: usize) -> Vec<Vec<i64>> {
    if rows.is_empty() {
        return (0..cols)
            .map(|i| {
                let mut e = vec![0; cols];
                e[i] = 1;
                e
            })
            .collect();
    }
    let mut m = to_q_matrix(rows);
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![BigRational::zero(); cols];
            v[fc] = BigRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][fc].clone();
            }
            primitive_integer(&v)
        })
        .collect()
}

/// Clears denominators and divides by the content.
pub fn primitive_integer(v: &[BigRational]) -> Vec<i64> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.iter()
        .map(|x| {
            let y = if g.is_zero() { x.clone() } else { x / &g };
            y.to_i64().expect("coordinate fits in i64")
        })
        .collect()
}

/// Solves `Σ λ_i cols[i] = target` exactly; `None` if inconsistent.
/// The columns must be linearly independent.
pub fn solve_in_span(cols: &[Vec<i64>], target: &[i64]) -> Option<Vec<BigRational>> {
    let l = cols.len();
    let n = target.len();
    let mut m: QMatrix = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = cols.iter().map(|c| q(c[i])).collect();
            row.push(q(target[i]));
            row
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.contains(&l) {
        return None;
    }
    if pivots.len() < l {
        panic!("solve_in_span: columns are linearly dependent");
    }
    let mut lambda = vec![BigRational::zero(); l];
    for (r, &pc) in pivots.iter().enumerate() {
        lambda[pc] = m[r][l].clone();
    }
    Some(lambda)
}

/// Row-style Hermite reduction with a unimodular transform: returns `(H, U)`
/// with `U · A = H`, `H` in row echelon form with positive pivots.
pub fn hermite_with_transform(a: &[Vec<BigInt>]) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut h: Vec<Vec<BigInt>> = a.to_vec();
    let mut u: Vec<Vec<BigInt>> = (0..rows)
        .map(|i| (0..rows).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // Euclid on column c among rows r..
        loop {
            let nonzero: Vec<usize> = (r..rows).filter(|&i| !h[i][c].is_zero()).collect();
            if nonzero.is_empty() {
                break;
            }
            let piv = *nonzero.iter().min_by_key(|&&i| h[i][c].abs()).unwrap();
            h.swap(r, piv);
            u.swap(r, piv);
            let mut done = true;
            for i in r + 1..rows {
                if h[i][c].is_zero() {
                    continue;
                }
                let f = h[i][c].div_floor(&h[r][c]);
                for j in 0..cols {
                    let d = &f * &h[r][j];
                    h[i][j] -= d;
                }
                for j in 0..rows {
                    let d = &f * &u[r][j];
                    u[i][j] -= d;
                }
                if !h[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h[r][c].is_zero() {
            continue;
        }
        if h[r][c].is_negative() {
            for x in h[r].iter_mut() {
                *x = -x.clone();
            }
            for x in u[r].iter_mut() {
                *x = -x.clone();
            }
        }
        r += 1;
    }
    (h, u)
}

/// Integer basis of the saturated lattice `span_ℚ(gens) ∩ ℤⁿ`.
///
/// The lattice is the integer kernel of a matrix whose rows span the
/// orthogonal complement; the kernel is read off a Hermite transform.
pub fn saturated_basis(gens: &[Vec<i64>], n: usize) -> Vec<Vec<i64>> {
    let complement = kernel(gens, n);
    if complement.is_empty() {
        return (0..n)
            .map(|i| {
                let mut e = vec![0; n];
                e[i] = 1;
                e
            })
            .collect();
    }
    // ker_ℤ(C) where C is k×n: transpose to n×k, Hermite-reduce rows with
    // transform U; rows of U whose image row vanishes span the kernel.
    let ct: Vec<Vec<BigInt>> = (0..n)
        .map(|i| complement.iter().map(|row| BigInt::from(row[i])).collect())
        .collect();
    let (h, u) = hermite_with_transform(&ct);
    let mut basis = Vec::new();
    for (i, row) in h.iter().enumerate() {
        if row.iter().all(|x| x.is_zero()) {
            basis.push(u[i].iter().map(|x| x.to_i64().expect("fits")).collect());
        }
    }
    basis
}

/// Diagonal of the Smith normal form of an integer matrix (nonzero
/// elementary divisors only).
pub fn smith_diagonal(a: &[Vec<i64>]) -> Vec<BigInt> {
    let mut m: Vec<Vec<BigInt>> = a.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pick smallest nonzero entry in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !m[i][j].is_zero()
                    && best.is_none_or(|(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        m.swap(t, bi);
        for row in m.iter_mut() {
            row.swap(t, bj);
        }
        let mut clean = true;
        for i in t + 1..rows {
            if m[i][t].is_zero() {
                continue;
            }
            let f = m[i][t].div_floor(&m[t][t]);
            for j in t..cols {
                let d = &f * &m[t][j];
                m[i][j] -= d;
            }
            if !m[i][t].is_zero() {
                clean = false;
            }
        }
        for j in t + 1..cols {
            if m[t][j].is_zero() {
                continue;
            }
            let f = m[t][j].div_floor(&m[t][t]);
            for i in t..rows {
                let d = &f * &m[i][t];
                m[i][j] -= d;
            }
            if !m[t][j].is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // divisibility condition: pivot must divide the trailing block
        let mut fixed = true;
        'outer: for i in t + 1..rows {
            for j in t + 1..cols {
                if !(&m[i][j] % &m[t][t]).is_zero() {
                    for k in t..cols {
                        let v = m[i][k].clone();
                        m[t][k] += v;
                    }
                    fixed = false;
                    break 'outer;
                }
            }
        }
        if !fixed {
            continue;
        }
        diag.push(m[t][t].abs());
        t += 1;
    }
    diag
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_det_kernel() {
        assert_eq!(rank(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(det(&[vec![1, 1], vec![0, 2]]), BigInt::from(2));
        assert_eq!(det(&[vec![0, 1], vec![1, 0]]), BigInt::from(-1));
        let k = kernel(&[vec![1, 1, 0]], 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(v[0] + v[1], 0);
        }
    }

    #[test]
    fn saturation_of_sublattice() {
        // span of (2,2,0) saturates to (1,1,0)
        let b = saturated_basis(&[vec![2, 2, 0]], 3);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![1, 1, 0]);
        let b = saturated_basis(&[vec![1, 0, 2], vec![0, 1, 2]], 3);
        assert_eq!(b.len(), 2);
        assert_eq!(rank(&[b[0].clone(), b[1].clone(), vec![1, 0, 2], vec![0, 1, 2]]), 2);
    }

    #[test]
    fn smith_examples() {
        assert_eq!(smith_diagonal(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]),
            vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
        assert_eq!(smith_diagonal(&[vec![1, 0], vec![1, 2]]), vec![BigInt::from(1), BigInt::from(2)]);
        assert_eq!(smith_diagonal(&[vec![2], vec![2], vec![0]]), vec![BigInt::from(2)]);
    }

    #[test]
    fn solve_exact() {
        let l = solve_in_span(&[vec![1, 0], vec![1, 2]], &[1, 1]).unwrap();
        assert_eq!(l, vec![BigRational::new(1.into(), 2.into()), BigRational::new(1.into(), 2.into())]);
        assert!(solve_in_span(&[vec![1, 0, 0]], &[0, 1, 0]).is_none());
    }
}
