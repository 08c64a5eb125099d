use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nzeta::pipeline::{analyze, nondegeneracy, polyhedra, Config, DEFAULT_MAX_EVALS};
use nzeta::poly::{parse_poly, MultiPoly};
use nzeta::residue::Character;
use nzeta::Error;

mod report;

use report::{Failure, Outcome, Report};

/// Exact local zeta functions of non-degenerate rational functions over ℚ_p.
#[derive(Parser, Debug)]
#[command(name = "nzeta", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Newton polyhedra of f, g, f·g and the diagonal data.
    Polyhedron(Common),
    /// Simplicial fan subordinate to Γ(f·g).
    Fan(Common),
    /// Non-degeneracy verdict with a witness when it fails.
    Nondeg(Common),
    /// Explicit formula: per-cone terms and the reduced rational function.
    Zeta(Common),
    /// Candidate poles, theorem verdicts and actual real poles.
    Poles(Common),
    /// Cross-check against the truncated p-adic integral.
    Verify(Common),
    /// Everything above.
    All(Common),
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Numerator polynomial.
    #[arg(long = "f", allow_hyphen_values = true)]
    f: String,
    /// Denominator polynomial.
    #[arg(long = "g", allow_hyphen_values = true)]
    g: String,
    /// Comma-separated variable names (default: x,y[,z,w] as needed).
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
    /// Residue characteristic.
    #[arg(long)]
    p: u64,
    /// `trivial` or `mult:e=<int>,M=<int>,k=<int>`.
    #[arg(long = "char", default_value = "trivial")]
    character: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Truncation depth for `verify`.
    #[arg(long, default_value_t = 4)]
    depth: u32,
    /// Comma-separated complex samples for `verify`, e.g. "0.2,0.1+0.5i".
    #[arg(long = "s-samples", default_value = "0", allow_hyphen_values = true)]
    s_samples: String,
    /// Budget on residue evaluations.
    #[arg(long = "max-evals", env = "NZETA_MAX_EVALS", default_value_t = DEFAULT_MAX_EVALS)]
    max_evals: u128,
    /// Seed for the spot-check points of the canonical form.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Continue past a failed non-degeneracy check.
    #[arg(long = "allow-degenerate")]
    allow_degenerate: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Degenerate(_) => 2,
        Error::BudgetExceeded { .. } => 3,
        _ => 1,
    }
}

fn config(c: &Common) -> Result<(Config, Vec<String>), Failure> {
    let at = |e| Failure::new("poly", e);
    if !nzeta::arith::is_prime(c.p) {
        return Err(Failure::new("cli", Error::InvalidInput(format!("p = {} is not prime", c.p))));
    }
    let vars = match &c.vars {
        Some(v) => v.clone(),
        None => {
            let text = format!("{} {}", c.f, c.g);
            let n = ['x', 'y', 'z', 'w'].iter().rposition(|ch| text.contains(*ch)).map_or(2, |i| (i + 1).max(2));
            MultiPoly::default_vars(n)
        }
    };
    let f = parse_poly(&c.f, &vars).map_err(at)?;
    let g = parse_poly(&c.g, &vars).map_err(at)?;
    let chi = Character::parse(&c.character, c.p).map_err(|e| Failure::new("residue", e))?;
    f.admit(c.p).map_err(at)?;
    g.admit(c.p).map_err(at)?;
    Ok((
        Config { f, g, chi, max_evals: c.max_evals, seed: c.seed, allow_degenerate: c.allow_degenerate },
        vars,
    ))
}

fn run(cmd: &Command) -> Result<(Report, u8), Failure> {
    let (name, c) = match cmd {
        Command::Polyhedron(c) => ("polyhedron", c),
        Command::Fan(c) => ("fan", c),
        Command::Nondeg(c) => ("nondeg", c),
        Command::Zeta(c) => ("zeta", c),
        Command::Poles(c) => ("poles", c),
        Command::Verify(c) => ("verify", c),
        Command::All(c) => ("all", c),
    };
    let (cfg, vars) = config(c)?;
    let mut rep = Report::new(name, c.f.clone(), c.g.clone(), vars.clone(), &cfg);
    match name {
        "polyhedron" => {
            let p = polyhedra(&cfg.f, &cfg.g).map_err(|e| Failure::new("newton", e))?;
            rep.set_polyhedra(&p);
            return Ok((rep, 0));
        }
        "fan" | "nondeg" => {
            let (p, fan, verdict, _) = nondegeneracy(&cfg).map_err(|e| Failure::new("residue", e))?;
            if name == "fan" {
                rep.set_fan(&fan, &cfg, &vars).map_err(|e| Failure::new("fan", e))?;
                return Ok((rep, 0));
            }
            rep.set_polyhedra(&p);
            let code = if verdict.nondegenerate { 0 } else { 2 };
            rep.set_verdict(&verdict);
            return Ok((rep, code));
        }
        _ => {}
    }
    eprintln!("warning: f and g are assumed coprime; this is not checked");
    let a = analyze(&cfg).map_err(|e| match e {
        Error::Degenerate(_) => Failure::new("residue", e),
        Error::BudgetExceeded { .. } => Failure::new("residue", e),
        _ => Failure::new("zeta", e),
    })?;
    if !a.verdict.nondegenerate {
        eprintln!("warning: the pair is degenerate; continuing because --allow-degenerate is set");
    }
    let mut code = 0;
    match name {
        "zeta" => rep.set_zeta(&a),
        "poles" => {
            rep.set_band(&a);
            rep.set_poles(&a);
        }
        "verify" => {
            rep.set_band(&a);
            code = verify_code(rep.set_verify(&a, &cfg, c.depth, &c.s_samples)?);
        }
        _ => {
            rep.set_polyhedra(&a.polyhedra);
            rep.set_fan(&a.fan, &cfg, &vars).map_err(|e| Failure::new("fan", e))?;
            rep.set_verdict(&a.verdict);
            rep.set_zeta(&a);
            rep.set_poles(&a);
            code = verify_code(rep.set_verify(&a, &cfg, c.depth, &c.s_samples)?);
        }
    }
    Ok((rep, code))
}

fn verify_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Agree => 0,
        Outcome::Uncertified => {
            eprintln!("warning: no certified tail bound for some samples; they were not checked");
            0
        }
        Outcome::Disagree => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors are input errors; exit code 2 is reserved for degeneracy.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let format = match &cli.command {
        Command::Polyhedron(c)
        | Command::Fan(c)
        | Command::Nondeg(c)
        | Command::Zeta(c)
        | Command::Poles(c)
        | Command::Verify(c)
        | Command::All(c) => c.format,
    };
    match run(&cli.command) {
        Ok((rep, code)) => {
            let out = match format {
                Format::Json => serde_json::to_string_pretty(&rep).expect("serializable"),
                Format::Text => rep.to_text(),
            };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{out}");
            if code == 1 {
                eprintln!("error [oracle]: truncated integral disagrees with the explicit formula");
            }
            ExitCode::from(code)
        }
        Err(fail) => {
            eprintln!("error [{}]: {}", fail.module, fail.error);
            ExitCode::from(exit_code(&fail.error))
        }
    }
}
