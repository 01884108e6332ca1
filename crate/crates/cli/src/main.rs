//! `fcrm`: batch front-end for model validation, law evaluation, density
//! recovery and oracle comparisons.
//!
//! Exit codes: 0 success, 2 parse error, 3 validation failure, 4 numerical
//! failure, 5 KS threshold exceeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fcrm::bijection::bp_unmap;
use fcrm::fcrm::{check_additivity, classical_counterpart_law, g_law, FcrmModel, OracleSettings, RegionSet};
use fcrm::inversion::{classical_density, free_density, ks_between, DensityTable, GridSpec};
use fcrm::levy::{validate_levy, CharTriplet, Kind};
use fcrm::oracle::{free_add_oracle, sample_classical_triplet, EmpiricalSpectrum, MatrixModelSpec};
use fcrm::Error;

const DEFAULT_GRID_POINTS: usize = 801;

#[derive(Parser)]
#[command(name = "fcrm", version, about = "Free completely random measures: laws, densities and oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model or triplet file and print a report.
    Validate(Input),
    /// Write the free triplet of G(E) as JSON.
    Law {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: Output,
    },
    /// Write the density table of a triplet (or of G(E)) as CSV.
    Density {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Write the density table of the classical counterpart law as CSV.
    Classical {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Compare the analytic CDF with a random-matrix (or Monte Carlo) sample.
    OracleCompare {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        grid: GridArgs,
        /// Matrix size for the free oracle.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Scalar replicates for the classical oracle.
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compare the classical counterpart against Monte Carlo instead.
        #[arg(long)]
        classical: bool,
        /// Jump truncation level for infinite-activity measures.
        #[arg(long)]
        truncation: Option<f64>,
        /// Fail with exit code 5 when the KS distance exceeds this value.
        #[arg(long)]
        ks_max: Option<f64>,
        /// Also write the sampled spectrum as CSV.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Check additivity of G over disjoint regions (repeat --set per part).
    Additivity {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "set", required = true)]
        sets: Vec<String>,
        /// Matrix size for an optional oracle check of the union.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Input {
    /// Model JSON (`alpha`, `nu_E`, `nu_B`, `fixed_atoms`).
    #[arg(long, conflicts_with = "triplet")]
    model: Option<PathBuf>,
    /// Triplet JSON (`kind`, `a`, `eta`, `nu`).
    #[arg(long)]
    triplet: Option<PathBuf>,
    /// Region `[a,b)+[c,d)`; required with --model except for validate.
    #[arg(long)]
    set: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    /// `lo:hi:n`; defaults to a grid around the bulk of the law.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Smallest Stieltjes offset.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) => 2,
            ref e if e.is_numerical() => 4,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path).map_err(|e| fail(2, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| fail(2, format!("{}: {e}", path.display())))
}

fn write_out(out: &Output, content: &str) -> Outcome {
    match &out.out {
        Some(p) => fs::write(p, content).map_err(|e| fail(2, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_model(path: &Path) -> Outcome<FcrmModel> {
    let model: FcrmModel = read_json(path)?;
    let problems = model.problems();
    if problems.is_empty() {
        Ok(model)
    } else {
        Err(fail(3, format!("invalid model:\n  {}", problems.join("\n  "))))
    }
}

fn parse_triplet(path: &Path) -> Outcome<CharTriplet> {
    let t: CharTriplet = read_json(path)?;
    t.validate()?;
    Ok(t)
}

fn parse_region(s: &str) -> Outcome<RegionSet> {
    Ok(s.parse::<RegionSet>()?)
}

enum Source {
    Model(FcrmModel, RegionSet),
    Triplet(CharTriplet),
}

impl Source {
    fn load(input: &Input) -> Outcome<Source> {
        match (&input.model, &input.triplet) {
            (Some(m), None) => {
                let set = input.set.as_deref().ok_or_else(|| fail(2, "--model needs --set REGION"))?;
                Ok(Source::Model(parse_model(m)?, parse_region(set)?))
            }
            (None, Some(t)) => Ok(Source::Triplet(parse_triplet(t)?)),
            _ => Err(fail(2, "pass exactly one of --model or --triplet")),
        }
    }

    /// The free law: `G(E)` for a model, the triplet itself (or `Λ` of it) otherwise.
    fn free_law(&self) -> Outcome<CharTriplet> {
        match self {
            Source::Model(m, e) => Ok(g_law(m, e)?),
            Source::Triplet(t) => Ok(t.with_kind(Kind::Free)),
        }
    }

    fn classical_law(&self) -> Outcome<CharTriplet> {
        match self {
            Source::Model(m, e) => Ok(classical_counterpart_law(m, e)?),
            Source::Triplet(t) if t.kind == Kind::Free => Ok(bp_unmap(t)?),
            Source::Triplet(t) => Ok(t.clone()),
        }
    }
}

fn grid_for(args: &GridArgs, t: &CharTriplet) -> Outcome<GridSpec> {
    let g = match &args.grid {
        Some(s) => GridSpec::parse(s)?,
        None => GridSpec::around(t, DEFAULT_GRID_POINTS)?,
    };
    Ok(match args.eps {
        Some(e) => g.with_eps(e)?,
        None => g,
    })
}

fn density_of(t: &CharTriplet, g: &GridSpec) -> Outcome<DensityTable> {
    Ok(match t.kind {
        Kind::Free => free_density(t, g)?,
        Kind::Classical => classical_density(t, g)?,
    })
}

fn validate(input: &Input) -> Outcome {
    let (ok, report) = match (&input.model, &input.triplet) {
        (Some(m), None) => {
            let model: FcrmModel = read_json(m)?;
            let problems = model.problems();
            (problems.is_empty(), serde_json::json!({ "ok": problems.is_empty(), "messages": problems }))
        }
        (None, Some(t)) => {
            let t: CharTriplet = read_json(t)?;
            let mut messages = Vec::new();
            if let Err(e) = t.validate() {
                messages.push(e.to_string());
            }
            let levy = validate_levy(&t.nu);
            (
                messages.is_empty(),
                serde_json::json!({ "ok": messages.is_empty(), "messages": messages, "levy": levy }),
            )
        }
        _ => return Err(fail(2, "pass exactly one of --model or --triplet")),
    };
    print!("{}", to_json(&report));
    if ok {
        Ok(())
    } else {
        Err(fail(3, "validation failed"))
    }
}

fn oracle_compare(
    input: &Input,
    grid: &GridArgs,
    settings: (usize, usize, u64, bool, Option<f64>),
    ks_max: Option<f64>,
    spectrum_out: Option<&Path>,
    out: &Output,
) -> Outcome {
    let (n, reps, seed, classical, truncation) = settings;
    let source = Source::load(input)?;
    let (table, sample): (DensityTable, EmpiricalSpectrum) = if classical {
        let t = source.classical_law()?;
        let g = grid_for(grid, &t)?;
        (classical_density(&t, &g)?, sample_classical_triplet(&t, reps, seed, truncation)?)
    } else {
        let t = source.free_law()?;
        let g = grid_for(grid, &t)?;
        let spec = MatrixModelSpec::from_free_triplet(&t, truncation.unwrap_or(fcrm::oracle::DEFAULT_TRUNCATION))?;
        (free_density(&t, &g)?, free_add_oracle(&[spec], n, seed)?)
    };
    let ks = ks_between(&table, &sample);

    let mut csv = String::from("x,analytic_cdf,empirical_cdf\n");
    let m = sample.values.len() as f64;
    for (k, x) in table.xs.iter().enumerate() {
        let emp = sample.values.partition_point(|v| v <= x) as f64 / m;
        let ana = (table.mass_below(*x) + table.atoms.iter().filter(|a| a.0 == *x).map(|a| a.1).sum::<f64>()).clamp(0.0, 1.0);
        let _ = writeln!(csv, "{:.16e},{ana:.16e},{emp:.16e}", table.xs[k]);
    }
    let _ = writeln!(csv, "# ks,{ks:.16e}");
    let _ = writeln!(csv, "# {},{},{}", sample.model_tag, sample.n, sample.seed);
    write_out(out, &csv)?;
    if let Some(p) = spectrum_out {
        fs::write(p, sample.to_csv()).map_err(|e| fail(2, format!("cannot write {}: {e}", p.display())))?;
    }
    eprintln!("ks = {ks:.6}");
    match ks_max {
        Some(limit) if ks > limit => Err(fail(5, format!("KS distance {ks:.6} exceeds {limit}"))),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate(input) => validate(&input),
        Command::Law { input, out } => {
            let t = Source::load(&input)?.free_law()?;
            write_out(&out, &to_json(&t))
        }
        Command::Density { input, grid, out } => {
            let t = match Source::load(&input)? {
                Source::Triplet(t) => t,
                s => s.free_law()?,
            };
            let table = density_of(&t, &grid_for(&grid, &t)?)?;
            write_out(&out, &table.to_csv())
        }
        Command::Classical { input, grid, out } => {
            let t = Source::load(&input)?.classical_law()?;
            let table = classical_density(&t, &grid_for(&grid, &t)?)?;
            write_out(&out, &table.to_csv())
        }
        Command::OracleCompare {
            input,
            grid,
            n,
            reps,
            seed,
            classical,
            truncation,
            ks_max,
            spectrum,
            out,
        } => oracle_compare(
            &input,
            &grid,
            (n, reps, seed, classical, truncation),
            ks_max,
            spectrum.as_deref(),
            &out,
        ),
        Command::Additivity {
            model,
            sets,
            n,
            seed,
            grid,
            out,
        } => {
            let model = parse_model(&model)?;
            let parts: Vec<RegionSet> = sets.iter().map(|s| parse_region(s)).collect::<Outcome<_>>()?;
            let oracle = match n {
                Some(n) => {
                    let grid = match &grid.grid {
                        Some(s) => Some(GridSpec::parse(s)?),
                        None => None,
                    };
                    Some(OracleSettings { n, seed, grid })
                }
                None => None,
            };
            let report = check_additivity(&model, &parts, oracle)?;
            write_out(&out, &to_json(&report))?;
            if report.exact {
                Ok(())
            } else {
                Err(fail(4, format!("additivity discrepancy {:.3e}", report.discrepancy)))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fcrm: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
