use std::fmt::Write;

use nzeta::arith::rat_to_f64;
use nzeta::fan::{barycenter, fundamental_points, SimplicialFan};
use nzeta::newton::{DiagonalData, NewtonPolyhedron};
use nzeta::oracle::{ser_complex, truncated_zeta, ValuationFiberTable};
use nzeta::pipeline::{Analysis, Config, Polyhedra};
use nzeta::poles::PoleReport;
use nzeta::residue::{CharacterInfo, FaceCounts, NondegVerdict};
use nzeta::zeta::{Bound, CircleFactor, SpotCheck};
use nzeta::Error;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;

/// Result of comparing the truncated integral with the formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Agree,
    /// Some samples had no certified bound; the rest agree.
    Uncertified,
    /// Some certified bound was exceeded.
    Disagree,
}

pub struct Failure {
    pub module: &'static str,
    pub error: Error,
}

impl Failure {
    pub fn new(module: &'static str, error: Error) -> Self {
        Failure { module, error }
    }
}

#[derive(Serialize)]
pub struct Input {
    f: String,
    g: String,
    vars: Vec<String>,
    p: u64,
    character: CharacterInfo,
    seed: u64,
}

#[derive(Serialize)]
struct FacetOut {
    normal: Vec<i64>,
    offset: i64,
}

#[derive(Serialize)]
struct PolyOut {
    vertices: Vec<Vec<u32>>,
    facets: Vec<FacetOut>,
}

impl PolyOut {
    fn new(p: &NewtonPolyhedron) -> Self {
        let mut facets: Vec<FacetOut> =
            p.facets.iter().map(|f| FacetOut { normal: f.normal.clone(), offset: f.offset }).collect();
        facets.sort_by(|a, b| a.normal.cmp(&b.normal));
        let mut vertices: Vec<Vec<u32>> = p.vertices.iter().map(|v| v.0.clone()).collect();
        vertices.sort();
        PolyOut { vertices, facets }
    }
}

#[derive(Serialize)]
struct PolyhedraOut {
    gamma_f: PolyOut,
    gamma_g: PolyOut,
    gamma_fg: PolyOut,
    diagonal: DiagonalData,
}

#[derive(Serialize)]
struct ConeOut {
    id: usize,
    generators: Vec<Vec<i64>>,
    barycenter: Vec<i64>,
    fundamental_points: usize,
    face_f: String,
    face_g: String,
}

#[derive(Serialize)]
struct FanOut {
    n: usize,
    cones: Vec<ConeOut>,
}

#[derive(Serialize)]
struct SOut {
    /// `[σ, d_f − d_g, count]` per fundamental-point class.
    numerator: Vec<[i64; 3]>,
    /// `[σ, d_f − d_g, multiplicity]`.
    denominator: Vec<[i64; 3]>,
}

#[derive(Serialize)]
struct TermOut {
    cone: Option<usize>,
    generators: Vec<Vec<i64>>,
    #[serde(rename = "L")]
    l: FaceCounts,
    #[serde(rename = "S")]
    s: SOut,
}

#[derive(Serialize)]
struct CanonicalOut {
    /// Coefficients of `N(t)` from degree 0 upward.
    numerator: Vec<String>,
    /// Coefficients of the monic `D(t)` from degree 0 upward.
    denominator: Vec<String>,
    numerator_text: String,
    denominator_text: String,
    t_power: usize,
    factors: Vec<CircleFactor>,
    residual_degree: usize,
}

#[derive(Serialize)]
struct ZetaOut {
    terms: Vec<TermOut>,
    canonical: CanonicalOut,
    spot_checks: Vec<SpotCheck>,
}

#[derive(Serialize)]
struct BandOut {
    lower: Bound,
    upper: Bound,
}

#[derive(Serialize)]
struct SampleOut {
    #[serde(serialize_with = "ser_complex")]
    s: Complex64,
    #[serde(serialize_with = "ser_complex")]
    truncated: Complex64,
    #[serde(serialize_with = "ser_complex")]
    formula: Complex64,
    difference: f64,
    bound: Option<f64>,
    within_bound: bool,
    /// `ok`, `exceeds-bound` or `uncertified`.
    status: &'static str,
}

#[derive(Serialize)]
struct VerifyOut {
    depth: u32,
    table: ValuationFiberTable,
    samples: Vec<SampleOut>,
}

#[derive(Serialize)]
pub struct Report {
    command: String,
    input: Input,
    #[serde(skip_serializing_if = "Option::is_none")]
    polyhedra: Option<PolyhedraOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fan: Option<FanOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nondegeneracy: Option<NondegVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zeta: Option<ZetaOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    band: Option<BandOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    poles: Option<PoleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: Option<VerifyOut>,
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `bi+a` (whitespace ignored).
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    let mut parts = Vec::new();
    let mut start = 0;
    let bytes = t.as_bytes();
    for i in 1..bytes.len() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            parts.push(&t[start..i]);
            start = i;
        }
    }
    parts.push(&t[start..]);
    let mut z = Complex64::new(0.0, 0.0);
    for part in parts {
        if let Some(im) = part.strip_suffix('i') {
            let v = match im {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => im.parse().ok()?,
            };
            z.im += v;
        } else {
            z.re += part.parse::<f64>().ok()?;
        }
    }
    Some(z)
}

fn in_band(band: &(Bound, Bound), re: f64) -> bool {
    let Some(x) = BigRational::from_float(re) else { return false };
    band.0.lt(&x) && band.1.gt(&x)
}

impl Report {
    pub fn new(command: &str, f: String, g: String, vars: Vec<String>, cfg: &Config) -> Self {
        Report {
            command: command.to_string(),
            input: Input { f, g, vars, p: cfg.chi.p, character: cfg.chi.info(), seed: cfg.seed },
            polyhedra: None,
            fan: None,
            nondegeneracy: None,
            zeta: None,
            band: None,
            poles: None,
            verify: None,
        }
    }

    pub fn set_polyhedra(&mut self, p: &Polyhedra) {
        self.polyhedra = Some(PolyhedraOut {
            gamma_f: PolyOut::new(&p.gamma_f),
            gamma_g: PolyOut::new(&p.gamma_g),
            gamma_fg: PolyOut::new(&p.gamma_fg),
            diagonal: p.diagonal.clone(),
        });
    }

    pub fn set_fan(&mut self, fan: &SimplicialFan, cfg: &Config, vars: &[String]) -> Result<(), Error> {
        let mut cones = Vec::new();
        for c in &fan.cones {
            let b = barycenter(c, fan.n);
            cones.push(ConeOut {
                id: c.id,
                generators: c.generators.clone(),
                fundamental_points: fundamental_points(c, fan.n)?.points.len(),
                face_f: cfg.f.face_function_int(&b).to_string_with(vars),
                face_g: cfg.g.face_function_int(&b).to_string_with(vars),
                barycenter: b,
            });
        }
        self.fan = Some(FanOut { n: fan.n, cones });
        Ok(())
    }

    pub fn set_verdict(&mut self, v: &NondegVerdict) {
        self.nondegeneracy = Some(v.clone());
    }

    pub fn set_band(&mut self, a: &Analysis) {
        self.band = Some(BandOut { lower: a.band.0.clone(), upper: a.band.1.clone() });
    }

    pub fn set_zeta(&mut self, a: &Analysis) {
        let terms = a
            .zeta
            .terms
            .iter()
            .map(|t| {
                let mut den: Vec<[i64; 3]> = Vec::new();
                for &(sig, b) in &t.s.denominator {
                    match den.iter_mut().find(|x| x[0] == sig && x[1] == b) {
                        Some(x) => x[2] += 1,
                        None => den.push([sig, b, 1]),
                    }
                }
                den.sort();
                TermOut {
                    cone: t.cone,
                    generators: t.generators.clone(),
                    l: t.counts.clone(),
                    s: SOut { numerator: t.s.numerator.iter().map(|&(a, b, c)| [a, b, c as i64]).collect(), denominator: den },
                }
            })
            .collect();
        let c = &a.zeta.canonical;
        let canonical = CanonicalOut {
            numerator: c.num.coeffs().iter().map(|x| x.to_string()).collect(),
            denominator: c.den.coeffs().iter().map(|x| x.to_string()).collect(),
            numerator_text: c.num.to_string_var("t"),
            denominator_text: c.den.to_string_var("t"),
            t_power: a.zeta.factors.t_power,
            factors: a.zeta.factors.circles.clone(),
            residual_degree: a.zeta.factors.residual_degree,
        };
        self.zeta = Some(ZetaOut { terms, canonical, spot_checks: a.zeta.spot_checks.clone() });
        self.set_band(a);
    }

    pub fn set_poles(&mut self, a: &Analysis) {
        self.poles = Some(a.poles.clone());
    }

    pub fn set_verify(&mut self, a: &Analysis, cfg: &Config, depth: u32, samples: &str) -> Result<Outcome, Failure> {
        let input = |msg: String| Failure::new("oracle", Error::InvalidInput(msg));
        let mut s = Vec::new();
        for part in samples.split(',') {
            let z = parse_complex(part).ok_or_else(|| input(format!("cannot parse s-sample `{part}`")))?;
            if !in_band(&a.band, z.re) {
                return Err(input(format!(
                    "s-sample {part} lies outside the holomorphy band ({}, {})",
                    a.band.0, a.band.1
                )));
            }
            s.push(z);
        }
        let rep = truncated_zeta(&cfg.f, &cfg.g, &cfg.chi, depth, &s, cfg.max_evals)
            .map_err(|e| Failure::new("oracle", e))?;
        let mut outcome = Outcome::Agree;
        let samples = rep
            .values
            .iter()
            .map(|v| {
                let formula = a.zeta.canonical.eval_at_s(v.s, cfg.chi.p);
                let difference = (v.value - formula).norm();
                let within_bound = v.bound.is_some_and(|b| difference <= b);
                let status = match v.bound {
                    None => {
                        if outcome == Outcome::Agree {
                            outcome = Outcome::Uncertified;
                        }
                        "uncertified"
                    }
                    Some(_) if within_bound => "ok",
                    Some(_) => {
                        outcome = Outcome::Disagree;
                        "exceeds-bound"
                    }
                };
                SampleOut { s: v.s, truncated: v.value, formula, difference, bound: v.bound, within_bound, status }
            })
            .collect();
        self.verify = Some(VerifyOut { depth, table: rep.table, samples });
        Ok(outcome)
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let i = &self.input;
        let chi = if i.character.kind == "trivial" {
            "trivial".to_string()
        } else {
            format!("e={}, M={}, k={}", i.character.conductor, i.character.order, i.character.k)
        };
        let _ = writeln!(o, "f = {}    g = {}    p = {}    χ: {}", i.f, i.g, i.p, chi);
        if let Some(p) = &self.polyhedra {
            for (name, poly) in [("Γ(f)", &p.gamma_f), ("Γ(g)", &p.gamma_g), ("Γ(f/g)", &p.gamma_fg)] {
                let _ = writeln!(o, "\n{name}: vertices {:?}", poly.vertices);
                for f in &poly.facets {
                    let _ = writeln!(o, "  facet {:?} · x ≥ {}", f.normal, f.offset);
                }
            }
            let d = &p.diagonal;
            let _ = writeln!(o, "\nt0 = {}    D(t0) = {:?}", d.t0, d.d_t0);
            let _ = writeln!(o, "  D+ = {:?}    D- = {:?}", d.d_plus, d.d_minus);
        }
        if let Some(fan) = &self.fan {
            let _ = writeln!(o, "\nfan ({} cones)", fan.cones.len());
            for c in &fan.cones {
                let _ = writeln!(
                    o,
                    "  #{:<3} {:<24} pts={:<3} f_Δ = {:<16} g_Δ = {}",
                    c.id,
                    format!("{:?}", c.generators),
                    c.fundamental_points,
                    c.face_f,
                    c.face_g
                );
            }
        }
        if let Some(v) = &self.nondegeneracy {
            match &v.witness {
                None => {
                    let _ = writeln!(o, "\nnon-degenerate: yes");
                }
                Some(w) => {
                    let cone = w.cone.map_or("{0}".to_string(), |c| format!("#{c}"));
                    let _ = writeln!(
                        o,
                        "\nnon-degenerate: no    witness: cone {cone}, zero pattern {:?}, point {:?}",
                        w.pattern, w.point
                    );
                }
            }
        }
        if let Some(z) = &self.zeta {
            let _ = writeln!(o, "\ncone terms");
            for t in &z.terms {
                let cone = t.cone.map_or("{0}".to_string(), |c| format!("#{c}"));
                let _ = writeln!(
                    o,
                    "  {cone:<5} ν = {:<10} N_f = {:<8} N_g = {:<8} N_fg = {:<8} S: num {:?} den {:?}",
                    t.l.nu.to_string(),
                    t.l.n_f.to_string(),
                    t.l.n_g.to_string(),
                    t.l.n_fg.to_string(),
                    t.s.numerator,
                    t.s.denominator
                );
            }
            let c = &z.canonical;
            let _ = writeln!(o, "\nZ(s) = N(t)/D(t), t = q^-s");
            let _ = writeln!(o, "  N(t) = {}", c.numerator_text);
            let _ = writeln!(o, "  D(t) = {}", c.denominator_text);
            let _ = writeln!(o, "  t-power in D: {}    residual degree: {}", c.t_power, c.residual_degree);
            for f in &c.factors {
                let _ = writeln!(
                    o,
                    "  circle Re(s) = {:<6} Φ_{}(q^{} t^{})  multiplicity {}",
                    f.real_part.to_string(),
                    f.d,
                    -f.r,
                    f.v,
                    f.multiplicity
                );
            }
            let agree = z.spot_checks.iter().filter(|s| s.agrees).count();
            let _ = writeln!(o, "  spot checks: {agree}/{} agree", z.spot_checks.len());
        }
        if let Some(b) = &self.band {
            let _ = writeln!(o, "\nholomorphy band: {} < Re(s) < {}", b.lower, b.upper);
        }
        if let Some(p) = &self.poles {
            let _ = writeln!(o, "\ncandidate poles");
            for c in &p.candidates {
                let _ = writeln!(
                    o,
                    "  Re(s) = {:<6} expected order {}  period denominators {:?}",
                    c.real_part.to_string(),
                    c.expected_order,
                    c.period_denominators
                );
            }
            let ext = |e: &nzeta::poles::ExtremePole| match (&e.value, e.order) {
                (Some(v), Some(k)) => format!("{v} (order {k})  [{}]", e.justification),
                _ => format!("none  [{}]", e.justification),
            };
            let _ = writeln!(o, "largest negative pole: {}", ext(&p.largest_negative));
            let _ = writeln!(o, "smallest positive pole: {}", ext(&p.smallest_positive));
            for d in [&p.diagonal1, &p.diagonal2] {
                let g = d.guaranteed_order.map_or(String::new(), |k| format!(", guaranteed pole of order {k}"));
                let _ = writeln!(
                    o,
                    "{}: value {}, expected order {}{g}",
                    d.justification, d.value, d.expected_order
                );
            }
            if p.non_pole_remark.applies {
                let ex: Vec<String> = p.non_pole_remark.excluded.iter().map(|r| r.to_string()).collect();
                let _ = writeln!(o, "non-pole remark: excluded {}", ex.join(", "));
            }
            let _ = writeln!(o, "classification: {}", p.classification);
            let _ = writeln!(o, "actual real poles");
            if p.actual_real_poles.is_empty() {
                let _ = writeln!(o, "  none");
            }
            for a in &p.actual_real_poles {
                let flag = if a.conservative {
                    format!("  (other points on the circle: order ≤ {})", a.other_points_order_bound)
                } else {
                    String::new()
                };
                let _ = writeln!(o, "  Re(s) = {:<6} order {}{flag}", a.real_part.to_string(), a.order);
            }
        }
        if let Some(v) = &self.verify {
            let _ = writeln!(
                o,
                "\noracle at depth {}: unresolved mass {} ({:.3e})",
                v.depth,
                v.table.unresolved,
                rat_to_f64(&v.table.unresolved)
            );
            for s in &v.samples {
                let bound = s.bound.map_or("uncertified".to_string(), |b| format!("{b:.3e}"));
                let _ = writeln!(
                    o,
                    "  s = {:+.4}{:+.4}i  truncated {:+.9}{:+.9}i  formula {:+.9}{:+.9}i  |diff| {:.3e}  bound {}  {}",
                    s.s.re,
                    s.s.im,
                    s.truncated.re,
                    s.truncated.im,
                    s.formula.re,
                    s.formula.im,
                    s.difference,
                    bound,
                    s.status
                );
            }
        }
        o.trim_end().to_string()
    }
}
