use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use circle_derivs::circle_dist::{CircleLaw, SeedSpec};
use circle_derivs::experiments::{
    lemma7_selftest, pairing_report, parse_config, points_csv, random_sz_nagy, run_convergence, to_csv,
    to_json, ExperimentConfig, SchemeSpec, DEFAULT_SZ_CAP,
};
use circle_derivs::measure::{prohorov, EmpiricalMeasure};
use circle_derivs::parse::fmt_real;
use circle_derivs::polynomial::{RootPoly, WeightScheme};
use circle_derivs::rootfind::{derived_zeros, kth_derivative_zeros};
use circle_derivs::Error;

#[derive(Parser)]
#[command(name = "circle-derivs", version, about = "Zeros of derivatives of random polynomials with zeros on the unit circle")]
struct Cli {
    /// Base RNG seed [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// RNG stream index [default: 0].
    #[arg(long, global = true)]
    stream: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample i.i.d. zeros from a circle law.
    Sample {
        #[arg(long, default_value = "uniform")]
        law: String,
        #[arg(long)]
        n: usize,
    },
    /// Zeros of the k-th derivative or a generalized derivative.
    Derive(DeriveArgs),
    /// Prohorov distance between two measure CSV files.
    Prohorov { a: PathBuf, b: PathBuf },
    /// Convergence sweep over degrees and seeds.
    Converge(ConvergeArgs),
    /// Random three-way power-sum agreement check.
    #[command(name = "lemma7-selftest")]
    Lemma7Selftest {
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Fractions of zeros near critical points and vice versa.
    Pairing {
        #[command(flatten)]
        derive: DeriveArgs,
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        /// Zeros CSV; with --crit, skips sampling.
        #[arg(long, requires = "crit")]
        zeros: Option<PathBuf>,
        /// Critical-point CSV.
        #[arg(long, requires = "zeros")]
        crit: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long, default_value = "uniform")]
    law: String,
    /// Explicit roots `re+imi,...` instead of sampling.
    #[arg(long, conflicts_with = "law")]
    roots: Option<String>,
    /// ordinary, polar:XI, sznagy:L1,...,Ln or sznagy (random weights).
    #[arg(long, default_value = "ordinary")]
    scheme: String,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SZ_CAP)]
    sz_cap: f64,
}

#[derive(Args)]
struct ConvergeArgs {
    /// `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    law: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated degrees.
    #[arg(long)]
    n: Option<String>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    seed_list: Option<String>,
    #[arg(long)]
    p_max: Option<String>,
    #[arg(long)]
    disk_r: Option<String>,
    #[arg(long)]
    eps0: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    target_atoms: Option<String>,
    /// `x,y;x,y;...`
    #[arg(long)]
    char_grid: Option<String>,
    #[arg(long)]
    sz_cap: Option<String>,
}

impl Cli {
    fn seed_spec(&self) -> SeedSpec {
        SeedSpec::new(self.seed.unwrap_or(0), self.stream.unwrap_or(0))
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("usage error"));
            return ExitCode::from(1);
        }
    };
    match run(&cli).and_then(|text| emit(&cli, &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn points_json(points: &[Complex64]) -> String {
    let v: Vec<[f64; 2]> = points.iter().map(|z| [z.re, z.im]).collect();
    format!("{}\n", json!({ "points": v }))
}

fn points_out(cli: &Cli, points: &[Complex64]) -> String {
    match cli.format {
        Format::Csv => points_csv(points),
        Format::Json => points_json(points),
    }
}

/// Roots and the derived zeros requested by `args`.
fn derive(cli: &Cli, args: &DeriveArgs) -> Result<(Vec<Complex64>, Vec<Complex64>), Failure> {
    let seed = cli.seed_spec();
    let mut rng = seed.rng();
    let roots = match &args.roots {
        Some(r) => circle_derivs::experiments::parse_points(r)?,
        None => {
            if args.n == 0 {
                return Err(Failure::Usage("--n must be positive".into()));
            }
            args.law.parse::<CircleLaw>()?.sample_with(args.n, &mut rng)
        }
    };
    let n = roots.len();
    let scheme = match args.scheme.parse::<SchemeSpec>()? {
        SchemeSpec::Fixed(s) => s,
        SchemeSpec::RandomSzNagy => WeightScheme::sz_nagy(random_sz_nagy(n, args.sz_cap, &mut rng)?)?,
    };
    let poly = RootPoly::new(roots)?;
    let zeros = if args.k == 1 {
        derived_zeros(&poly, &scheme)?.zeros
    } else if scheme == WeightScheme::Ordinary {
        kth_derivative_zeros(&poly, args.k)?.zeros
    } else {
        return Err(Failure::Usage("--k above 1 needs the ordinary scheme".into()));
    };
    Ok((poly.roots().to_vec(), zeros))
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.cmd {
        Cmd::Sample { law, n } => {
            let law: CircleLaw = law.parse()?;
            Ok(points_out(cli, &law.sample(*n, cli.seed_spec())))
        }
        Cmd::Derive(args) => Ok(points_out(cli, &derive(cli, args)?.1)),
        Cmd::Prohorov { a, b } => {
            let m1 = EmpiricalMeasure::from_csv(&read(a)?)?;
            let m2 = EmpiricalMeasure::from_csv(&read(b)?)?;
            let r = prohorov(&m1, &m2, 1e-9)?;
            Ok(match cli.format {
                Format::Csv => format!("{}\n", fmt_real(r.distance)),
                Format::Json => format!("{}\n", serde_json::to_string(&r).expect("serializable")),
            })
        }
        Cmd::Converge(args) => {
            let cfg = converge_config(cli, args)?;
            let rows = run_convergence(&cfg)?;
            Ok(match cli.format {
                Format::Csv => to_csv(&cfg, &rows),
                Format::Json => to_json(&cfg, &rows),
            })
        }
        Cmd::Lemma7Selftest { trials } => {
            let r = lemma7_selftest(*trials, cli.seed.unwrap_or(0))?;
            let text = match cli.format {
                Format::Csv => format!(
                    "trials,seed,max_discrepancy,errors,pass\n{},{},{},{},{}\n",
                    r.trials,
                    r.seed,
                    fmt_real(r.max_discrepancy),
                    r.errors.len(),
                    r.pass
                ),
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&r).expect("serializable")),
            };
            if r.pass {
                Ok(text)
            } else {
                // Report still goes out; the exit code flags the failure.
                emit(cli, &text)?;
                Err(Failure::Numerical(format!(
                    "max discrepancy {} with {} errored trials",
                    r.max_discrepancy,
                    r.errors.len()
                )))
            }
        }
        Cmd::Pairing {
            derive: args,
            eps0,
            zeros,
            crit,
        } => {
            let (z, w) = match (zeros, crit) {
                (Some(zp), Some(cp)) => (
                    EmpiricalMeasure::from_csv(&read(zp)?)?.atoms().to_vec(),
                    EmpiricalMeasure::from_csv(&read(cp)?)?.atoms().to_vec(),
                ),
                _ => derive(cli, args)?,
            };
            let (pz, pc) = pairing_report(&z, &w, *eps0)?;
            Ok(match cli.format {
                Format::Csv => format!("pair_zeros,pair_crit\n{},{}\n", fmt_real(pz), fmt_real(pc)),
                Format::Json => format!("{}\n", json!({ "pair_zeros": pz, "pair_crit": pc, "eps0": eps0 })),
            })
        }
    }
}

fn converge_config(cli: &Cli, a: &ConvergeArgs) -> Result<ExperimentConfig, Failure> {
    let mut pairs = match &a.config {
        Some(path) => parse_config(&read(path)?)?,
        None => Vec::new(),
    };
    let flags: Vec<(&str, Option<String>)> = vec![
        ("law", a.law.clone()),
        ("scheme", a.scheme.clone()),
        ("k", a.k.clone()),
        ("n", a.n.clone()),
        ("seeds", a.seeds.clone()),
        ("seed_list", a.seed_list.clone()),
        ("p_max", a.p_max.clone()),
        ("disk_r", a.disk_r.clone()),
        ("eps0", a.eps0.clone()),
        ("q", a.q.clone()),
        ("target_atoms", a.target_atoms.clone()),
        ("char_grid", a.char_grid.clone()),
        ("sz_cap", a.sz_cap.clone()),
        ("seed", cli.seed.map(|s| s.to_string())),
        ("stream", cli.stream.map(|s| s.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            pairs.push((k.to_string(), v));
        }
    }
    Ok(ExperimentConfig::from_pairs(&pairs)?)
}
