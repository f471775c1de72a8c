use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use swipt_cli::histogram::{run_histogram, write_csv};
use swipt_cli::report::{Entry, SolutionReport};
use swipt_cli::sweep::run_sweep;
use swipt_cli::{seeds, CliError, ScenarioFile, SweepSpec};
use swipt_core::complexity::estimate;
use swipt_core::quadforms::BeamformerSet;
use swipt_core::solution::{assemble, default_settings, design, standard_error, validate_beamformers, Method, OutageReport};
use swipt_core::{ComplexVector, C64};

/// Outage-constrained secure beamforming experiments.
///
/// Set SWIPT_THREADS to bound the worker pool.
#[derive(Parser)]
#[command(name = "swipt", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one design and write it as JSON.
    Design {
        #[arg(long)]
        config: PathBuf,
        /// method1, method2 (= method2-soc), method2-lmi, baseline1, baseline2, benchmark
        #[arg(long, default_value = "method2")]
        method: String,
        #[arg(long)]
        out: PathBuf,
        /// Override the channel seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Also validate with this many Monte-Carlo draws.
        #[arg(long, default_value_t = 0)]
        draws: usize,
        /// Print solver progress to stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Run a parameter sweep and write one CSV row per method and grid value.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the master seed of the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Average leakage SINR per realization for method 1, method 2 and the baseline.
    Histogram {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        realizations: usize,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Empirical outage rates of a design, solved here or read from a JSON solution.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "method2")]
        method: String,
        /// Solution written by `design`; the channels still come from the config.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the conic program of a design in SDPA sparse format.
    ExportSdpa {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "method2")]
        method: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Worst-case interior-point cost of both methods as CSV on stdout.
    Complexity {
        #[arg(long, default_value_t = 2)]
        users: usize,
        #[arg(long, default_value_t = 2)]
        ers: usize,
        /// Antenna counts, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [6usize])]
        antennas: Vec<usize>,
        #[arg(long, default_value_t = 1e-7)]
        epsilon: f64,
    },
}

fn method(name: &str) -> Result<Method, CliError> {
    Method::parse(name).ok_or_else(|| CliError::Config(format!("unknown method `{name}`")))
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioFile, CliError> {
    let mut f = ScenarioFile::load(path)?;
    if let Some(s) = seed {
        f.seed = s;
    }
    Ok(f)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    match out {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Deserialize)]
struct StoredVectors {
    w: Vec<Vec<Entry>>,
    v: Vec<Vec<Entry>>,
}

fn vectors(rows: &[Vec<Entry>]) -> Vec<ComplexVector> {
    rows.iter()
        .map(|r| ComplexVector::from_vec(r.iter().map(|[re, im]| C64::new(*re, *im)).collect()))
        .collect()
}

#[derive(Serialize)]
struct ValidationReport {
    method: String,
    seed: u64,
    validation_seed: u64,
    #[serde(flatten)]
    outage: OutageReport,
    /// Every rate within three standard errors of its tolerance.
    within_tolerance: bool,
    standard_errors: Vec<f64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Design { config, method: m, out, seed, draws, verbose } => {
            let f = load(&config, seed)?;
            let sc = f.scenario()?;
            let mut settings = default_settings();
            settings.verbose = verbose;
            let sol = design(&sc, method(&m)?, &settings)?;
            let mut rep = SolutionReport::new(&sol, f.seed);
            if draws > 0 {
                rep.outage = Some(swipt_core::solution::validate_outage(&sol, &sc, draws, seeds::validation(f.seed))?);
            }
            write_json(&rep, Some(&out))
        }
        Cmd::Sweep { spec, out, seed } => {
            let mut s = SweepSpec::load(&spec)?;
            if let Some(v) = seed {
                s.seed = v;
            }
            run_sweep(&s, create(&out)?).map(|_| ())
        }
        Cmd::Histogram { config, realizations, draws, out, seed } => {
            let f = load(&config, seed)?;
            let (rows, kept) = run_histogram(&f, realizations, draws)?;
            if kept < realizations {
                eprintln!("{} of {realizations} realizations infeasible for some method; skipped", realizations - kept);
            }
            write_csv(&rows, create(&out)?)
        }
        Cmd::Validate { config, method: m, solution, draws, seed, out } => {
            let f = load(&config, seed)?;
            let sc = f.scenario()?;
            let (name, bf) = match solution {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                    let stored: StoredVectors = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
                    let bf = BeamformerSet::from_vectors(&vectors(&stored.w), &vectors(&stored.v));
                    bf.validate(&sc.config)?;
                    (p.display().to_string(), bf)
                }
                None => {
                    let sol = design(&sc, method(&m)?, &default_settings())?;
                    (sol.method.name().to_string(), sol.vectors())
                }
            };
            let vs = seeds::validation(f.seed);
            let outage = validate_beamformers(&bf, &sc, draws, vs)?;
            let report = ValidationReport {
                method: name,
                seed: f.seed,
                validation_seed: vs,
                within_tolerance: outage.within(&sc, 3.0),
                standard_errors: outage.pairs(&sc).iter().map(|&(_, tol)| standard_error(tol, draws)).collect(),
                outage,
            };
            write_json(&report, out.as_deref())
        }
        Cmd::ExportSdpa { config, method: m, out, seed } => {
            let f = load(&config, seed)?;
            let (problem, _) = assemble(&f.scenario()?, method(&m)?)?;
            let text = conic::sdpa::export(&problem)?;
            let mut w = create(&out)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
            Ok(())
        }
        Cmd::Complexity { users, ers, antennas, epsilon } => {
            let mut wtr = csv::Writer::from_writer(std::io::stdout());
            for m in antennas {
                for k in [1, 2] {
                    wtr.serialize(estimate(k, users, ers, m, epsilon)?)?;
                }
            }
            wtr.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("SWIPT_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: SWIPT_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(1);
            }
        }
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
