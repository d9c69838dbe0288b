//! Command-line front end over JSON module descriptions.
//!
//! Exit codes: 0 success, 1 inconclusive verdict, 2 error.

use clap::{Parser, Subcommand};
use num::rational::BigRational;
use padic_annuli::error::Result;
use padic_annuli::exponent::{
    default_shift_bound, exponent_digits, sigma_unipotent_check, SigmaParams, SigmaVerdict,
};
use padic_annuli::format::{
    corpus_module, load_module, save_module, ModuleDescription, CORPUS_NAMES,
};
use padic_annuli::frobenius::{antecedent, verify_antecedent_radius};
use padic_annuli::padic::parse_ratio;
use padic_annuli::profile::{
    classify, default_grid, grid_in, profile_csv, sample_profile, BreakVerdict,
};
use padic_annuli::relative::{cut_experiment, CutParams, RelModule, SpecPoint};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "padic-annuli",
    version,
    about = "Exact convergence radii, ramification breaks, Frobenius antecedents and exponents \
             for differential modules on p-adic annuli"
)]
struct Cli {
    /// Seed for randomized searches (cyclic vectors); also read from
    /// PADIC_ANNULI_SEED.
    #[arg(long, global = true, env = "PADIC_ANNULI_SEED", default_value_t = 0)]
    seed: u64,
    /// Truncation order for radius estimation; defaults to
    /// max(p^3, 4*rank*p). Also read from PADIC_ANNULI_N.
    #[arg(long, global = true, env = "PADIC_ANNULI_N")]
    n: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the radius profile r -> f(r) and emit CSV.
    Radius {
        file: PathBuf,
        /// Comma-separated log-radii, e.g. "1/2,1/4,1/8".
        #[arg(long)]
        grid: Option<String>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Classify solvability and the highest ramification break.
    Break { file: PathBuf },
    /// Compute the Frobenius antecedent and verify the radius law.
    Antecedent {
        file: PathBuf,
        /// Write the antecedent module description here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the exponent digits mod p^height.
    Exponent {
        file: PathBuf,
        #[arg(long)]
        height: u32,
        /// Reference log-radius (defaults to the interval midpoint).
        #[arg(long)]
        r0: Option<String>,
        /// Resolvent truncation order.
        #[arg(long)]
        n_resolvent: Option<usize>,
    },
    /// Composite Sigma-unipotence check (Robba + exponent membership).
    CheckSigma {
        file: PathBuf,
        /// Comma-separated rationals, e.g. "0,1/2".
        #[arg(long)]
        sigma: String,
        #[arg(long)]
        height: u32,
        /// Integer-shift tolerance for membership (default p^height/4).
        #[arg(long)]
        shift_bound: Option<String>,
    },
    /// Substitute z at an integer point and write the fiber module.
    Specialize {
        file: PathBuf,
        #[arg(long)]
        point: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Specialize at many points and report agreement with the generic
    /// verdict.
    CutReport {
        file: PathBuf,
        /// Comma-separated integer points, e.g. "0,1,2".
        #[arg(long)]
        points: String,
        #[arg(long)]
        sigma: Option<String>,
        #[arg(long, default_value_t = 2)]
        height: u32,
    },
    /// List or emit the bundled example modules.
    Corpus {
        #[command(subcommand)]
        action: CorpusCmd,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    List,
    Emit {
        name: String,
        /// Twist parameter for the m_xi family.
        #[arg(long)]
        xi: Option<String>,
        /// Output directory (default "corpus").
        #[arg(long, default_value = "corpus")]
        dir: PathBuf,
    },
}

fn parse_grid(s: &str) -> Result<Vec<BigRational>> {
    s.split(',').map(parse_ratio).collect()
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn run(cli: Cli) -> Result<u8> {
    let _seed = cli.seed;
    match cli.cmd {
        Cmd::Radius { file, grid, csv } => {
            let (m, _) = load_module(&file)?;
            let grid = match grid {
                Some(g) => parse_grid(&g)?,
                None => grid_in(m.interval(), &default_grid()),
            };
            let n = cli.n.unwrap_or_else(|| m.default_n());
            let profile = sample_profile(&m, &grid, n)?;
            let text = profile_csv(&profile);
            match csv {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Cmd::Break { file } => {
            let (m, _) = load_module(&file)?;
            let n = cli.n.unwrap_or_else(|| m.default_n());
            let grid = grid_in(m.interval(), &default_grid());
            let profile = sample_profile(&m, &grid, n)?;
            let verdict = classify(&profile);
            print_json(&verdict);
            Ok(match verdict {
                BreakVerdict::Inconclusive { .. } => 1,
                _ => 0,
            })
        }
        Cmd::Antecedent { file, out } => {
            let (m, _) = load_module(&file)?;
            let ante = antecedent(&m, None)?;
            let n = cli.n.unwrap_or_else(|| m.default_n());
            let grid = grid_in(m.interval(), &default_grid());
            let report = verify_antecedent_radius(&m, &ante, &grid, n)?;
            if let Some(path) = out {
                save_module(&path, &ante.module)?;
            } else {
                print!("{}", ModuleDescription::from_module(&ante.module).emit());
            }
            let payload = serde_json::json!({
                "basis": padic_annuli::format::matrix_terms(&ante.basis),
                "report": report,
            });
            print_json(&payload);
            Ok(if report.pass() { 0 } else { 1 })
        }
        Cmd::Exponent {
            file,
            height,
            r0,
            n_resolvent,
        } => {
            let (m, _) = load_module(&file)?;
            let r0 = match r0 {
                Some(s) => parse_ratio(&s)?,
                None => m.interval().midpoint(),
            };
            let cand = exponent_digits(&m, &r0, height, n_resolvent, cli.n)?;
            print_json(&cand);
            Ok(0)
        }
        Cmd::CheckSigma {
            file,
            sigma,
            height,
            shift_bound,
        } => {
            let (m, _) = load_module(&file)?;
            let sigma = parse_grid(&sigma)?;
            let mut params = SigmaParams::new(height);
            params.n_radius = cli.n;
            params.shift_bound = match shift_bound {
                Some(s) => Some(parse_ratio(&s)?),
                None => Some(default_shift_bound(m.prime(), height)),
            };
            let report = sigma_unipotent_check(&m, &sigma, &params)?;
            print_json(&report);
            Ok(match report.verdict {
                SigmaVerdict::Inconclusive { .. } => 1,
                _ => 0,
            })
        }
        Cmd::Specialize { file, point, out } => {
            let (m, _) = load_module(&file)?;
            let fiber = RelModule::new(m).specialize(SpecPoint(point))?;
            match out {
                Some(path) => save_module(&path, &fiber)?,
                None => print!("{}", ModuleDescription::from_module(&fiber).emit()),
            }
            Ok(0)
        }
        Cmd::CutReport {
            file,
            points,
            sigma,
            height,
        } => {
            let (m, _) = load_module(&file)?;
            let points: Vec<SpecPoint> = points
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .map(SpecPoint)
                        .map_err(|_| padic_annuli::Error::Parse(format!("bad point {t:?}")))
                })
                .collect::<Result<_>>()?;
            let params = CutParams {
                n_radius: cli.n,
                sigma: match sigma {
                    Some(s) => Some(parse_grid(&s)?),
                    None => None,
                },
                h_max: height,
                r0: None,
                n_resolvent: None,
            };
            let report = cut_experiment(&RelModule::new(m), &points, &params)?;
            print_json(&report);
            let inconclusive = matches!(report.generic_break, BreakVerdict::Inconclusive { .. })
                || report
                    .points
                    .iter()
                    .any(|p| matches!(p.break_verdict, BreakVerdict::Inconclusive { .. }));
            Ok(if inconclusive { 1 } else { 0 })
        }
        Cmd::Corpus { action } => match action {
            CorpusCmd::List => {
                for name in CORPUS_NAMES {
                    println!("{name}");
                }
                println!("m_xi (requires --xi)");
                Ok(0)
            }
            CorpusCmd::Emit { name, xi, dir } => {
                let xi = match xi {
                    Some(s) => Some(parse_ratio(&s)?),
                    None => None,
                };
                let m = corpus_module(&name, xi.as_ref())?;
                std::fs::create_dir_all(&dir)?;
                let path = dir.join(format!("{name}.json"));
                save_module(&path, &m)?;
                println!("{}", path.display());
                Ok(0)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
