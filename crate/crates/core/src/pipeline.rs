//! End-to-end analysis of a pair `(f, g)`: polyhedra, fan, non-degeneracy,
//! explicit formula and pole report.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fan::{normal_subdivision, SimplicialFan};
use crate::newton::{combined_polyhedron, diagonal_data, DiagonalData, NewtonPolyhedron};
use crate::poles::{real_pole_analysis, t_sets, ConeCounts, PoleReport};
use crate::poly::{parse_poly, MultiPoly};
use crate::residue::{census, face_counts, face_counts_from_census, face_pairs, verdict_from_censuses, Census, Character, FaceCounts, NondegVerdict};
use crate::zeta::{explicit_formula_rational, holomorphy_band, Bound, ConeInput, RationalZeta};

pub const DEFAULT_MAX_EVALS: u128 = 50_000_000;

#[derive(Clone, Debug)]
pub struct Config {
    pub f: MultiPoly,
    pub g: MultiPoly,
    pub chi: Character,
    pub max_evals: u128,
    pub seed: u64,
    pub allow_degenerate: bool,
}

impl Config {
    /// Builds a config from polynomial text. Without `vars`, the smallest
    /// prefix (at least two) of `x, y, z, w` covering both inputs is used.
    pub fn parse(f: &str, g: &str, vars: Option<&[String]>, p: u64, chi: &str) -> Result<Self> {
        if !crate::arith::is_prime(p) {
            return Err(Error::InvalidInput(format!("p = {p} is not prime")));
        }
        let vars: Vec<String> = match vars {
            Some(v) => v.to_vec(),
            None => {
                let text = format!("{f} {g}");
                let n = ['x', 'y', 'z', 'w'].iter().rposition(|c| text.contains(*c)).map_or(2, |i| (i + 1).max(2));
                MultiPoly::default_vars(n)
            }
        };
        Ok(Config {
            f: parse_poly(f, &vars)?,
            g: parse_poly(g, &vars)?,
            chi: Character::parse(chi, p)?,
            max_evals: DEFAULT_MAX_EVALS,
            seed: 0,
            allow_degenerate: false,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Polyhedra {
    pub gamma_f: NewtonPolyhedron,
    pub gamma_g: NewtonPolyhedron,
    pub gamma_fg: NewtonPolyhedron,
    pub diagonal: DiagonalData,
}

pub fn polyhedra(f: &MultiPoly, g: &MultiPoly) -> Result<Polyhedra> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: g.dim() });
    }
    let gamma_f = NewtonPolyhedron::build(&f.support())?;
    let gamma_g = NewtonPolyhedron::build(&g.support())?;
    let gamma_fg = combined_polyhedron(&gamma_f, &gamma_g)?;
    let diagonal = diagonal_data(&gamma_fg, &gamma_f, &gamma_g);
    Ok(Polyhedra { gamma_f, gamma_g, gamma_fg, diagonal })
}

/// Residue evaluations needed for the censuses and character sums.
pub fn evaluation_cost(n: usize, fan: &SimplicialFan, chi: &Character) -> u128 {
    let p = chi.p as u128;
    let cones = fan.cones.len() as u128 + 1;
    let mut cost = (p - 1).saturating_pow(n as u32).saturating_mul(cones);
    if !chi.is_trivial() {
        let units = chi.modulus() as u128 / p * (p - 1);
        cost = cost.saturating_add(units.saturating_pow(n as u32).saturating_mul(cones));
    }
    cost
}

pub fn check_budget(needed: u128, budget: u128) -> Result<()> {
    if needed > budget {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub polyhedra: Polyhedra,
    pub fan: SimplicialFan,
    pub verdict: NondegVerdict,
    /// Counts for `{0}`.
    pub zero_counts: FaceCounts,
    /// Counts per fan cone, in fan order.
    pub cone_counts: Vec<FaceCounts>,
    pub zeta: RationalZeta,
    pub band: (Bound, Bound),
    pub poles: PoleReport,
}

impl Analysis {
    pub fn counts(&self) -> ConeCounts<'_> {
        ConeCounts { zero: &self.zero_counts, cones: &self.cone_counts }
    }
}

/// Polyhedra, fan and non-degeneracy verdict, with the trivial censuses.
pub fn nondegeneracy(cfg: &Config) -> Result<(Polyhedra, SimplicialFan, NondegVerdict, Vec<Census>)> {
    cfg.f.admit(cfg.chi.p)?;
    cfg.g.admit(cfg.chi.p)?;
    let polys = polyhedra(&cfg.f, &cfg.g)?;
    let fan = normal_subdivision(&polys.gamma_fg);
    check_budget(evaluation_cost(cfg.f.dim(), &fan, &cfg.chi), cfg.max_evals)?;
    let pairs = face_pairs(&cfg.f, &cfg.g, &fan);
    let censuses: Vec<Census> =
        pairs.par_iter().map(|(_, a, b)| census(&[a.clone(), b.clone()], cfg.chi.p)).collect();
    let ids: Vec<Option<usize>> = pairs.iter().map(|x| x.0).collect();
    let verdict = verdict_from_censuses(&ids, &censuses);
    Ok((polys, fan, verdict, censuses))
}

pub fn analyze(cfg: &Config) -> Result<Analysis> {
    let (polyhedra, fan, verdict, censuses) = nondegeneracy(cfg)?;
    if !verdict.nondegenerate && !cfg.allow_degenerate {
        let w = verdict.witness.as_ref().expect("degenerate verdict has a witness");
        return Err(Error::Degenerate(format!(
            "cone {} pattern {:?} point {:?}",
            w.cone.map_or("{0}".to_string(), |c| c.to_string()),
            w.pattern,
            w.point
        )));
    }
    let pairs = face_pairs(&cfg.f, &cfg.g, &fan);
    let counts: Vec<FaceCounts> = if cfg.chi.is_trivial() {
        censuses.iter().map(face_counts_from_census).collect()
    } else {
        pairs
            .par_iter()
            .map(|(_, a, b)| face_counts(a, b, cfg.chi.p, &cfg.chi))
            .collect::<Result<_>>()?
    };
    let zero_counts = counts[0].clone();
    let cone_counts = counts[1..].to_vec();
    let mut inputs = vec![ConeInput { cone: None, counts: zero_counts.clone() }];
    inputs.extend(fan.cones.iter().zip(&cone_counts).map(|(c, k)| ConeInput { cone: Some(c), counts: k.clone() }));
    let Polyhedra { gamma_f, gamma_g, gamma_fg, diagonal } = &polyhedra;
    let zeta = explicit_formula_rational(&inputs, gamma_f, gamma_g, &cfg.chi, cfg.seed)?;
    let ts = t_sets(gamma_f, gamma_g, gamma_fg);
    let band = holomorphy_band(&ts, &cfg.chi);
    let cc = ConeCounts { zero: &zero_counts, cones: &cone_counts };
    let poles = real_pole_analysis(
        gamma_f,
        gamma_g,
        gamma_fg,
        &fan,
        diagonal,
        &cfg.chi,
        &cc,
        &zeta.canonical,
        &zeta.factors,
    );
    Ok(Analysis { polyhedra, fan, verdict, zero_counts, cone_counts, zeta, band, poles })
}
