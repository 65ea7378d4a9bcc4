//! `qcbounds`: simulate shadow data, certify bounds, regenerate figure
//! tables and run validation suites.
//!
//! Exit codes: 0 on success, 1 on a failed validation or runtime error,
//! 2 on a configuration error.

mod config;
mod output;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qcbounds::bounds::{
    frame_potential_bounds, purity_lower_l, purity_upper, vn_lower_subsystem, vn_upper,
    BoundResult, Constraint, ConstraintSet, Dataset, Mode, Provenance,
};
use qcbounds::ensemble::ExactEnsemble;
use qcbounds::experiment::{certify, run_figure, truth, Benchmark, EvalSettings, Figure, Target};
use qcbounds::oracle::{true_average, true_frame_potential, ExactReport, Quantity};
use qcbounds::shadows::{read_records, simulate_records, write_records, ShadowRecord};
use qcbounds::validation::{self, Suite};

use config::{ConfigError, QuantityName, RunConfig};
use output::Format;

#[derive(Parser, Debug)]
#[command(name = "qcbounds", version, about = "Certified bounds on projected-ensemble averages")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of every random draw. Required unless given in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of experimental repetitions M.
    #[arg(long, global = true)]
    shots: Option<usize>,
    /// Output file (standard output if absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// One-sided confidence level of empirical bounds.
    #[arg(long, global = true)]
    confidence: Option<f64>,
    /// Eigenvalue threshold of the regularized entropy bound.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Empirical,
    Asymptotic,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Empirical => Mode::Empirical,
            ModeArg::Asymptotic => Mode::Asymptotic,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample shadow records of the configured ensemble at period `t`.
    Simulate,
    /// Certify bounds for the configured quantities.
    Bound {
        /// Shadow records to use instead of simulating.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Quantities (overrides the config list).
        #[arg(long, value_enum, value_delimiter = ',')]
        quantities: Vec<QuantityName>,
    },
    /// Regenerate a figure table.
    Figure {
        #[arg(value_parser = parse_figure)]
        name: Figure,
    },
    /// Run a validation suite and emit a pass/fail report.
    Validate {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        /// Number of random instances.
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
    /// Compare exact values with asymptotic bounds at the configured point.
    Oracle {
        #[arg(long, value_enum, value_delimiter = ',')]
        quantities: Vec<QuantityName>,
    },
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    s.parse().map_err(|e: qcbounds::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: qcbounds::Error| e.to_string())
}

enum Failure {
    Config(String),
    Validation(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<qcbounds::Error> for Failure {
    fn from(e: qcbounds::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("validation failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(m) = cli.shots {
        cfg.shots = m;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m.into();
    }
    if let Some(c) = cli.confidence {
        cfg.confidence = c;
    }
    if let Some(e) = cli.epsilon {
        cfg.epsilon = e;
    }
    let cfg = cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

fn open_out(cli: &Cli) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cli.out {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = effective_config(&cli)?;
    let hash = cfg.hash();
    match &cli.command {
        Command::Simulate => {
            let ens = ensemble(&cfg)?;
            let records = simulate_records(&ens, cfg.shots, cfg.seed())?;
            let mut out = open_out(&cli)?;
            writeln!(out, "# seed={} shots={} t={} config_hash={hash}", cfg.seed(), cfg.shots, cfg.t)?;
            write_records(&mut out, &records)?;
        }
        Command::Bound { records, quantities } => {
            let quantities = if quantities.is_empty() { &cfg.quantities } else { quantities };
            let ens = ensemble(&cfg)?;
            let ds = match (cfg.mode, records) {
                (Mode::Asymptotic, _) => Dataset::asymptotic(&ens),
                (Mode::Empirical, Some(path)) => {
                    let file = File::open(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
                    let recs: Vec<ShadowRecord> = read_records(BufReader::new(file))?;
                    Dataset::empirical(&recs, &ens)?
                }
                (Mode::Empirical, None) => {
                    let recs = simulate_records(&ens, cfg.shots, cfg.seed())?;
                    Dataset::empirical(&recs, &ens)?
                }
            };
            let shots = match cfg.mode {
                Mode::Asymptotic => None,
                Mode::Empirical => Some(ds.n_rows()),
            };
            let ds = ds
                .with_confidence(cfg.confidence)
                .with_provenance(Provenance { seed: cfg.seed, shots, config_hash: Some(hash.clone()) });
            let mut results = Vec::new();
            for q in quantities {
                for mut r in bound_quantity(&ds, &ens, *q, cfg.epsilon)? {
                    r.quantity = q.name().to_string();
                    r.seed = cfg.seed;
                    r.shots = shots;
                    r.config_hash = Some(hash.clone());
                    results.push(r);
                }
            }
            output::write_table(open_out(&cli)?, cli.format.unwrap_or(Format::Csv), &results)?;
        }
        Command::Figure { name } => {
            let settings = EvalSettings { confidence: cfg.confidence, seed: cfg.seed(), config_hash: hash };
            let rows = run_figure(*name, &cfg.model, &cfg.sweep, &settings)?;
            output::write_table(open_out(&cli)?, cli.format.unwrap_or(Format::Csv), &rows)?;
        }
        Command::Validate { suite, instances } => {
            let report = validation::run(*suite, cfg.seed(), *instances);
            let out = open_out(&cli)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => output::write_json(out, &report)?,
                Format::Csv => output::write_table(out, Format::Csv, &report.properties)?,
            }
            if !report.passed {
                let failed: Vec<&str> =
                    report.properties.iter().filter(|p| !p.passed()).map(|p| p.name.as_str()).collect();
                return Err(Failure::Validation(format!("{suite}: {}", failed.join(", "))));
            }
        }
        Command::Oracle { quantities } => {
            let quantities = if quantities.is_empty() { &cfg.quantities } else { quantities };
            let ens = ensemble(&cfg)?;
            let mut reports = Vec::new();
            for q in quantities {
                reports.push(exact_report(&ens, *q, cfg.epsilon)?);
            }
            output::write_table(open_out(&cli)?, cli.format.unwrap_or(Format::Csv), &reports)?;
            let bad: Vec<&str> = reports.iter().filter(|r| !r.contained).map(|r| r.quantity.as_str()).collect();
            if !bad.is_empty() {
                return Err(Failure::Validation(format!("not contained: {}", bad.join(", "))));
            }
        }
    }
    Ok(())
}

/// Projected ensemble of the configured model at period `t`.
fn ensemble(cfg: &RunConfig) -> Result<ExactEnsemble, Failure> {
    let bench = Benchmark::new(cfg.model.clone(), cfg.t)?;
    Ok(bench.ensembles(&[cfg.t], cfg.model.f)?.pop().expect("one period"))
}

fn target(q: QuantityName) -> Option<Target> {
    match q {
        QuantityName::Gbar => Some(Target::Gbar),
        QuantityName::Purity => Some(Target::Purity),
        QuantityName::DesignDistance => Some(Target::DesignDistance),
        _ => None,
    }
}

fn bound_quantity(
    ds: &Dataset,
    ens: &ExactEnsemble,
    q: QuantityName,
    epsilon: f64,
) -> Result<Vec<BoundResult>, Failure> {
    if let Some(t) = target(q) {
        let (lo, hi) = certify(ds, ens, t)?;
        return Ok(vec![lo, hi]);
    }
    Ok(match q {
        QuantityName::PurityGram => {
            let lo = purity_lower_l(ds, &ConstraintSet::new(vec![Constraint::Correlator]))?;
            let hi = purity_upper(1, ens.max_probability(), ds.dim(), ds.mode())?;
            vec![lo, hi]
        }
        QuantityName::Vn => vec![vn_upper(ds, epsilon, true)?],
        QuantityName::VnSub => {
            if ds.dim() < 4 {
                return Err(Failure::Config("vn_sub needs at least two unmeasured qubits".into()));
            }
            vec![vn_lower_subsystem(ds, &[0], [1.0, 1.0], true)?]
        }
        QuantityName::FramePotential => {
            let (lo, hi) = frame_potential_bounds(ds, 2)?;
            vec![lo, hi]
        }
        _ => unreachable!("handled by target"),
    })
}

fn exact_report(ens: &ExactEnsemble, q: QuantityName, epsilon: f64) -> Result<ExactReport, Failure> {
    let ds = Dataset::asymptotic(ens);
    let (exact, lo, hi) = if let Some(t) = target(q) {
        let (lo, hi) = certify(&ds, ens, t)?;
        (truth(ens, t)?, lo.value, hi.value)
    } else {
        let results = bound_quantity(&ds, ens, q, epsilon)?;
        let lo = results.iter().find(|r| r.side == qcbounds::shadows::Side::Lower).map_or(0.0, |r| r.value);
        let hi = results.iter().find(|r| r.side == qcbounds::shadows::Side::Upper).map_or(trivial_entropy_upper(ens, q), |r| r.value);
        let exact = match q {
            QuantityName::PurityGram => true_average(ens, &Quantity::Purity)?,
            QuantityName::Vn => true_average(ens, &Quantity::Vn)?,
            QuantityName::VnSub => true_average(ens, &Quantity::VnSub(vec![0]))?,
            QuantityName::FramePotential => true_frame_potential(ens, 2)?,
            _ => unreachable!("handled by target"),
        };
        (exact, lo, hi)
    };
    Ok(ExactReport::new(q.name(), exact, lo, hi))
}

/// `log` of the dimension the entropy lives on; only entropies lack a certified side.
fn trivial_entropy_upper(ens: &ExactEnsemble, q: QuantityName) -> f64 {
    match q {
        QuantityName::VnSub => 2f64.ln(),
        _ => (ens.dim as f64).ln(),
    }
}
