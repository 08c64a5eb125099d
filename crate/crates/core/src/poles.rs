//! Candidate poles, expected orders, the diagonal and largest/smallest real
//! pole theorems, and exact pole orders at real points of the reduced
//! rational function.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::rat_to_f64;
use crate::error::{Error, Result};
use crate::fan::SimplicialFan;
use crate::newton::{sigma, DiagonalData, NewtonPolyhedron};
use crate::residue::{Character, FaceCounts};
use crate::upoly::UPoly;
use crate::zeta::{circle_poly, Canonical, FactorReport};

#[derive(Clone, Debug, Serialize)]
pub struct TSets {
    pub d_fg: Vec<Vec<i64>>,
    pub t_plus: Vec<Vec<i64>>,
    pub t_minus: Vec<Vec<i64>>,
    #[serde(serialize_with = "crate::arith::ser::opt_rat")]
    pub alpha: Option<BigRational>,
    #[serde(serialize_with = "crate::arith::ser::opt_rat")]
    pub beta: Option<BigRational>,
}

/// `σ(w) / (d(w,Γg) − d(w,Γf))`, or `None` when the difference vanishes.
pub fn ratio(w: &[i64], gf: &NewtonPolyhedron, gg: &NewtonPolyhedron) -> Option<BigRational> {
    let diff = gg.d_int(w) - gf.d_int(w);
    (diff != 0).then(|| BigRational::new(BigInt::from(sigma(w)), BigInt::from(diff)))
}

pub fn t_sets(gf: &NewtonPolyhedron, gg: &NewtonPolyhedron, gfg: &NewtonPolyhedron) -> TSets {
    let d_fg = gfg.normals();
    let t_plus: Vec<Vec<i64>> = d_fg.iter().filter(|w| gg.d_int(w) > gf.d_int(w)).cloned().collect();
    let t_minus: Vec<Vec<i64>> = d_fg.iter().filter(|w| gf.d_int(w) > gg.d_int(w)).cloned().collect();
    let alpha = t_plus.iter().filter_map(|w| ratio(w, gf, gg)).min();
    let beta = t_minus.iter().filter_map(|w| ratio(w, gf, gg)).max();
    TSets { d_fg, t_plus, t_minus, alpha, beta }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum PoleSource {
    Normal(Vec<i64>),
    Trivial(&'static str),
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidatePole {
    #[serde(serialize_with = "crate::arith::ser::rat")]
    pub real_part: BigRational,
    pub sources: Vec<PoleSource>,
    /// `|d(w,Γg) − d(w,Γf)|` per normal source (spacing `2π/(D ln q)`); 1 for ±1.
    pub period_denominators: Vec<i64>,
    pub expected_order: u32,
}

/// `𝒫(k)`: normals in `T₊ ∪ T₋` whose ratio equals `k`.
pub fn p_set(k: &BigRational, ts: &TSets, gf: &NewtonPolyhedron, gg: &NewtonPolyhedron) -> Vec<Vec<i64>> {
    ts.t_plus
        .iter()
        .chain(&ts.t_minus)
        .filter(|w| ratio(w, gf, gg).as_ref() == Some(k))
        .cloned()
        .collect()
}

/// `ρ(k)`: the most generators of one fan cone lying in `𝒫(k)`.
pub fn rho(k: &BigRational, fan: &SimplicialFan, ts: &TSets, gf: &NewtonPolyhedron, gg: &NewtonPolyhedron) -> u32 {
    let p = p_set(k, ts, gf, gg);
    fan.cones
        .iter()
        .map(|c| c.generators.iter().filter(|w| p.contains(w)).count() as u32)
        .max()
        .unwrap_or(0)
}

/// Counts for `{0}` followed by the fan cones, in fan order.
pub struct ConeCounts<'a> {
    pub zero: &'a FaceCounts,
    pub cones: &'a [FaceCounts],
}

fn witness_neg(c: &FaceCounts) -> bool {
    !c.n_f.is_zero() || !c.n_fg.is_zero()
}

fn witness_pos(c: &FaceCounts) -> bool {
    !c.n_g.is_zero() || !c.n_fg.is_zero()
}

/// Expected order of a candidate real part.
///
/// Away from `±1`, or for nontrivial χ, this is `ρ(k)`. At `Re(s) = ∓1` with
/// trivial χ it is the maximum over `fan ∪ {0}` of the number of generators
/// in `𝒫(k)` plus one when the cone's `L_Δ` carries the factor vanishing at
/// `∓1` (`N_f` or `N_fg` for −1, `N_g` or `N_fg` for +1). This is the exact
/// upper bound read off the explicit formula.
pub fn expected_order(
    k: &BigRational,
    fan: &SimplicialFan,
    ts: &TSets,
    gf: &NewtonPolyhedron,
    gg: &NewtonPolyhedron,
    chi: &Character,
    counts: &ConeCounts<'_>,
) -> Result<u32> {
    let one = BigRational::one();
    let is_pm1 = *k == one || *k == -one.clone();
    let p = p_set(k, ts, gf, gg);
    if p.is_empty() && !(is_pm1 && chi.is_trivial()) {
        return Err(Error::InvalidInput(format!("{k} is not a candidate real part")));
    }
    if !is_pm1 || !chi.is_trivial() {
        return Ok(rho(k, fan, ts, gf, gg));
    }
    let wit: fn(&FaceCounts) -> bool = if k.is_negative() { witness_neg } else { witness_pos };
    let mut best = wit(counts.zero) as u32;
    for (c, fc) in fan.cones.iter().zip(counts.cones) {
        let m = c.generators.iter().filter(|w| p.contains(w)).count() as u32;
        best = best.max(m + wit(fc) as u32);
    }
    Ok(best)
}

pub fn candidate_poles(
    ts: &TSets,
    fan: &SimplicialFan,
    gf: &NewtonPolyhedron,
    gg: &NewtonPolyhedron,
    chi: &Character,
    counts: &ConeCounts<'_>,
) -> Vec<CandidatePole> {
    let mut by_part: std::collections::BTreeMap<BigRational, (Vec<PoleSource>, Vec<i64>)> = Default::default();
    if chi.is_trivial() {
        by_part.insert(-BigRational::one(), (vec![PoleSource::Trivial("-1")], vec![1]));
        by_part.insert(BigRational::one(), (vec![PoleSource::Trivial("+1")], vec![1]));
    }
    for w in ts.t_plus.iter().chain(&ts.t_minus) {
        let r = ratio(w, gf, gg).expect("T-set normals have nonzero difference");
        let e = by_part.entry(r).or_default();
        e.0.push(PoleSource::Normal(w.clone()));
        e.1.push((gg.d_int(w) - gf.d_int(w)).abs());
    }
    by_part
        .into_iter()
        .map(|(real_part, (sources, period_denominators))| {
            let expected_order = expected_order(&real_part, fan, ts, gf, gg, chi, counts).expect("candidate");
            CandidatePole { real_part, sources, period_denominators, expected_order }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtremePole {
    #[serde(serialize_with = "crate::arith::ser::opt_rat")]
    pub value: Option<BigRational>,
    pub order: Option<u32>,
    pub justification: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalVerdict {
    pub applies: bool,
    pub witness_normal: Option<Vec<i64>>,
    #[serde(serialize_with = "crate::arith::ser::rat")]
    pub value: BigRational,
    pub expected_order: u32,
    /// Pole guaranteed with this exact order (trivial χ, `t₀ > 1`).
    pub guaranteed_order: Option<u32>,
    pub justification: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonPoleRemark {
    pub applies: bool,
    #[serde(serialize_with = "crate::arith::ser::rat_vec")]
    pub excluded: Vec<BigRational>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ActualPole {
    #[serde(serialize_with = "crate::arith::ser::rat")]
    pub real_part: BigRational,
    /// Exact order at the real point `t = q^{-c}`; 0 when only non-real
    /// points of the circle survive.
    pub order: u32,
    /// Upper bound for the other points of the circle.
    pub other_points_order_bound: u32,
    pub conservative: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleReport {
    pub tsets: TSets,
    pub candidates: Vec<CandidatePole>,
    pub diagonal: DiagonalData,
    pub diagonal1: DiagonalVerdict,
    pub diagonal2: DiagonalVerdict,
    pub non_pole_remark: NonPoleRemark,
    pub largest_negative: ExtremePole,
    pub smallest_positive: ExtremePole,
    pub actual_real_poles: Vec<ActualPole>,
    pub classification: String,
}

/// Inclusion `Γ(b) ⊆ Γ(a)`: every generator of `b` satisfies all facet
/// inequalities of `a`.
pub fn polyhedron_contains(a: &NewtonPolyhedron, b: &NewtonPolyhedron) -> bool {
    a.facets.iter().all(|f| b.d_int(&f.normal) >= f.offset)
}

pub fn classify(gf: &NewtonPolyhedron, gg: &NewtonPolyhedron, chi: &Character, counts: &ConeCounts<'_>) -> String {
    let g_in_f = polyhedron_contains(gf, gg);
    let f_in_g = polyhedron_contains(gg, gf);
    match (g_in_f, f_in_g) {
        (true, true) => {
            let all_zero = std::iter::once(counts.zero)
                .chain(counts.cones.iter())
                .all(|c| c.n_f.is_zero() && c.n_g.is_zero() && c.n_fg.is_zero());
            if all_zero && chi.is_trivial() {
                "Remark-Char-iv".into()
            } else {
                "Remark-Char-iii".into()
            }
        }
        (true, false) => "Remark-Char-i".into(),
        (false, true) => "Remark-Char-ii".into(),
        (false, false) => "none".into(),
    }
}

fn any_witness(counts: &ConeCounts<'_>, wit: fn(&FaceCounts) -> bool) -> bool {
    wit(counts.zero) || counts.cones.iter().any(wit)
}

#[allow(clippy::too_many_arguments)]
fn extreme(
    negative: bool,
    ts: &TSets,
    fan: &SimplicialFan,
    gf: &NewtonPolyhedron,
    gg: &NewtonPolyhedron,
    chi: &Character,
    counts: &ConeCounts<'_>,
) -> ExtremePole {
    let (tag, wit): (&str, fn(&FaceCounts) -> bool) =
        if negative { ("Thm-negative", witness_neg) } else { ("Thm-positive", witness_pos) };
    let prime = if negative { "" } else { "'" };
    if !chi.is_trivial() {
        return ExtremePole { value: None, order: None, justification: format!("{tag}-not-applicable-twisted") };
    }
    let one = BigRational::one();
    let unit = if negative { -one.clone() } else { one.clone() };
    let bound = if negative { ts.beta.clone() } else { ts.alpha.clone() };
    let Some(b) = bound else {
        return if any_witness(counts, wit) {
            ExtremePole { value: Some(unit), order: Some(1), justification: format!("{tag}-(2{prime})") }
        } else {
            ExtremePole { value: None, order: None, justification: format!("{tag}-(2{prime})-no-pole") }
        };
    };
    let r = rho(&b, fan, ts, gf, gg);
    // |b| relative to 1
    let inside = if negative { b > unit } else { b < unit };
    if inside {
        return ExtremePole { value: Some(b), order: Some(r), justification: format!("{tag}-(1.a{prime})") };
    }
    if b != unit {
        return if any_witness(counts, wit) {
            ExtremePole { value: Some(unit), order: Some(1), justification: format!("{tag}-(1.b{prime})") }
        } else {
            ExtremePole { value: Some(b), order: Some(r), justification: format!("{tag}-(1.b{prime})") }
        };
    }
    // b = ∓1: order ρ+1 when some cone of ℳ_ρ(b) carries the L-factor
    let p = p_set(&b, ts, gf, gg);
    let bumped = fan.cones.iter().zip(counts.cones).any(|(c, fc)| {
        c.generators.iter().filter(|w| p.contains(w)).count() as u32 == r && wit(fc)
    });
    ExtremePole {
        value: Some(b),
        order: Some(if bumped { r + 1 } else { r }),
        justification: format!("{tag}-(1.c{prime})"),
    }
}

#[allow(clippy::too_many_arguments)]
fn diagonal_verdict(
    negative: bool,
    dd: &DiagonalData,
    ts: &TSets,
    fan: &SimplicialFan,
    gf: &NewtonPolyhedron,
    gg: &NewtonPolyhedron,
    chi: &Character,
    counts: &ConeCounts<'_>,
) -> DiagonalVerdict {
    let inv = dd.t0.recip();
    let value = if negative { -inv } else { inv };
    let witness_normal = dd
        .corollary_checks
        .iter()
        .find(|c| if negative { c.diag_in_face_f } else { c.diag_in_face_g })
        .map(|c| c.normal.clone());
    let name = if negative { "Diagonal1" } else { "Diagonal2" };
    let applies = witness_normal.is_some();
    let r = rho(&value, fan, ts, gf, gg);
    let one = BigRational::one();
    let expected_order = if applies && dd.t0 == one && chi.is_trivial() {
        let wit = if negative { witness_neg } else { witness_pos };
        let p = p_set(&value, ts, gf, gg);
        let bumped = fan.cones.iter().zip(counts.cones).any(|(c, fc)| {
            c.generators.iter().filter(|w| p.contains(w)).count() as u32 == r && wit(fc)
        });
        r + bumped as u32
    } else {
        r
    };
    let guaranteed_order = (applies && chi.is_trivial() && dd.t0 > one).then_some(r);
    DiagonalVerdict {
        applies,
        witness_normal,
        value,
        expected_order,
        guaranteed_order,
        justification: if applies { name.to_string() } else { format!("{name}-hypothesis-fails") },
    }
}

/// Outcome of testing whether `t* = q^{r/v}` is a root of a divisor of
/// `t^v − q^r`.
fn real_root_test(h: &UPoly, r: i64, v: i64, q: u64) -> Option<bool> {
    let deg = h.degree().unwrap_or(0);
    if deg == 0 {
        return Some(false);
    }
    if deg as i64 == v {
        return Some(true);
    }
    if h.is_rational() {
        // t^v − q^r is irreducible over ℚ, so a proper rational divisor is 1
        return Some(false);
    }
    // h(t* u)/t*^deg = ∏_{j∈J}(u − ζ_v^j), evaluated at u = 1
    let ts = (q as f64).powf(r as f64 / v as f64);
    let mut val = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for (i, c) in h.coeffs().iter().enumerate() {
        let term = c.to_complex() * ts.powi(i as i32 - deg as i32);
        mag += term.norm();
        val += term;
    }
    let mut gaps: Vec<f64> =
        (1..v).map(|j| 2.0 * (std::f64::consts::PI * j as f64 / v as f64).sin().abs()).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lower: f64 = gaps.iter().take(deg).product();
    let err = 1e-9 * mag.max(1.0);
    if err >= lower / 4.0 {
        return None;
    }
    Some(val.norm() < lower / 2.0)
}

/// Order of vanishing of `p` at `t* = q^{r/v}`, or `None` when the numeric
/// separation test is inconclusive.
fn order_at_real_point(p: &UPoly, r: i64, v: i64, q: u64) -> Option<u32> {
    let m = circle_poly(r, v, 1, q);
    let mut rest = p.clone();
    let mut ord = 0;
    loop {
        if rest.is_zero() {
            return None;
        }
        let h = rest.gcd(&m);
        if h.degree().unwrap_or(0) == 0 {
            return Some(ord);
        }
        if !real_root_test(&h, r, v, q)? {
            return Some(ord);
        }
        ord += 1;
        rest = rest.exact_div(&h).expect("gcd divides");
    }
}

/// Poles on each circle of the reduced denominator: exact order at the
/// real point, conservative bound elsewhere.
pub fn actual_real_poles(canonical: &Canonical, factors: &FactorReport, q: u64) -> Vec<ActualPole> {
    let mut parts: Vec<(BigRational, i64, i64)> =
        factors.circles.iter().map(|c| (c.real_part.clone(), c.r, c.v)).collect();
    parts.sort();
    parts.dedup();
    let mut out = Vec::new();
    for (real_part, r, v) in parts {
        let on_circle: Vec<_> = factors.circles.iter().filter(|c| c.real_part == real_part).collect();
        let d_ord = order_at_real_point(&canonical.den, r, v, q);
        let n_ord = order_at_real_point(&canonical.num, r, v, q);
        let (order, exact) = match (d_ord, n_ord) {
            (Some(d), Some(n)) => (d.saturating_sub(n), true),
            _ => {
                let m = on_circle.iter().filter(|c| c.d == 1).map(|c| c.multiplicity).max().unwrap_or(0);
                (m, false)
            }
        };
        let other = on_circle
            .iter()
            .map(|c| if c.d == 1 && v == 1 { 0 } else { c.multiplicity })
            .max()
            .unwrap_or(0);
        if order == 0 && other == 0 {
            continue;
        }
        out.push(ActualPole {
            real_part,
            order,
            other_points_order_bound: other,
            conservative: other > 0 || !exact,
        });
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn real_pole_analysis(
    gf: &NewtonPolyhedron,
    gg: &NewtonPolyhedron,
    gfg: &NewtonPolyhedron,
    fan: &SimplicialFan,
    diagonal: &DiagonalData,
    chi: &Character,
    counts: &ConeCounts<'_>,
    canonical: &Canonical,
    factors: &FactorReport,
) -> PoleReport {
    let ts = t_sets(gf, gg, gfg);
    let candidates = candidate_poles(&ts, fan, gf, gg, chi, counts);
    let diagonal1 = diagonal_verdict(true, diagonal, &ts, fan, gf, gg, chi, counts);
    let diagonal2 = diagonal_verdict(false, diagonal, &ts, fan, gf, gg, chi, counts);
    let applies = diagonal.corollary_checks.iter().all(|c| !c.df_zero && !c.dg_zero);
    let inv = diagonal.t0.recip();
    let non_pole_remark = NonPoleRemark {
        applies,
        excluded: if applies { vec![-inv.clone(), inv] } else { vec![] },
    };
    let largest_negative = extreme(true, &ts, fan, gf, gg, chi, counts);
    let smallest_positive = extreme(false, &ts, fan, gf, gg, chi, counts);
    let actual_real_poles = actual_real_poles(canonical, factors, chi.p);
    let classification = classify(gf, gg, chi, counts);
    PoleReport {
        tsets: ts,
        candidates,
        diagonal: diagonal.clone(),
        diagonal1,
        diagonal2,
        non_pole_remark,
        largest_negative,
        smallest_positive,
        actual_real_poles,
        classification,
    }
}

/// Approximate real value of a rational for display.
pub fn approx(r: &BigRational) -> f64 {
    rat_to_f64(r)
}
