//! Command-line front end. [`run`] returns the process exit code so the
//! binary stays a one-liner and tests can drive it directly.
//!
//! Exit codes: `0` success, `1` the property or verification failed (the
//! report is still written), `2` bad input or an infeasible request.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cycles::{
    default_threshold, find_nondegenerate_cycle, modulus_power_traces, moment_identities, ncycle_trace_sum,
    support_digraph, Cycle, MomentReport, PowerTraceReport, TraceSumReport,
};
use crate::descriptor::{resolve, to_json, InputFile, Resolved};
use crate::increasing_spectrum::{check_increasing_spectrum, quasinilpotence_dichotomy, radius_profile, CheckMode};
use crate::measure_space::{nested_chain, StandardSet};
use crate::operators::FiniteRankOperator;
use crate::spectral::eigenvalues;
use crate::triangularize::{
    increasing_spectrum_block_form, nilpotent_block_form, nilpotent_block_form_dense, scc_triangularize,
    verify_certificate, TriangularizationCertificate,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "ideal-tri", version, about = "Standard triangularization diagnostics for kernel operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Operator descriptor (JSON).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Report destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Scc,
    Nilpotent,
    Increasing,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of the whole operator.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Check that spectra of standard compressions increase with the set.
    CheckIncreasing {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        max_points: usize,
        /// Check this many random pairs instead of all of them.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Support digraph, shortest non-degenerate cycle and trace identities.
    Cycles {
        #[command(flatten)]
        common: Common,
        /// Power for the block trace expansion over the input's sets.
        #[arg(long, default_value_t = 2)]
        power: usize,
    },
    /// Moment-matrix trace identities for a finite-rank operator.
    Moments {
        #[command(flatten)]
        common: Common,
    },
    /// Build a block triangular certificate.
    Triangularize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Kind::Scc)]
        kind: Kind,
    },
    /// Check a certificate against the operator.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Spectral radius along the chain of initial intervals.
    RadiusProfile {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        steps: usize,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Spectrum { common }
            | Command::CheckIncreasing { common, .. }
            | Command::Cycles { common, .. }
            | Command::Moments { common }
            | Command::Triangularize { common, .. }
            | Command::Verify { common, .. }
            | Command::RadiusProfile { common, .. } => common,
        }
    }
}

/// A finished command: JSON text plus whether the property held.
struct Outcome {
    json: String,
    ok: bool,
}

impl Outcome {
    fn new<T: Serialize>(value: &T, ok: bool) -> Result<Self> {
        Ok(Outcome { json: to_json(value)?, ok })
    }
}

#[derive(Serialize)]
struct CyclesReport {
    threshold: f64,
    arcs: usize,
    acyclic: bool,
    cycle: Option<Cycle>,
    modulus_traces: Option<PowerTraceReport>,
    trace_sum: Option<TraceSumReport>,
}

#[derive(Serialize)]
struct ProfileReport {
    steps: usize,
    profile: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dichotomy: Option<crate::increasing_spectrum::DichotomyReport>,
}

#[derive(Serialize)]
struct FailureReport {
    error: String,
}

fn input_sets(input: &InputFile, p: usize) -> Result<Option<Vec<StandardSet>>> {
    input.sets.as_ref().map(|sets| sets.iter().map(|s| StandardSet::from_indices(p, s)).collect()).transpose()
}

fn execute(command: &Command, input: &InputFile, resolved: &Resolved) -> Result<Outcome> {
    let k = &resolved.operator;
    let tol = command.common().tol;
    match command {
        Command::Spectrum { .. } => Outcome::new(&eigenvalues(k, tol)?, true),
        Command::CheckIncreasing { max_points, sample, seed, .. } => {
            let mode = match sample {
                Some(random_pairs) => CheckMode::Sampled { random_pairs: *random_pairs, seed: *seed },
                None => CheckMode::Exhaustive { max_points: *max_points },
            };
            let report = check_increasing_spectrum(k, tol, mode)?;
            Outcome::new(&report, report.verdict)
        }
        Command::Cycles { power, .. } => {
            let threshold = default_threshold(k);
            let graph = support_digraph(k, threshold);
            let trace_sum = match input_sets(input, k.dim())? {
                Some(sets) => Some(ncycle_trace_sum(k, &sets, *power)?),
                None => None,
            };
            let modulus_traces = match k.kernel() {
                Some(_) => Some(modulus_power_traces(k, k.dim().min(6), tol)?),
                None => None,
            };
            let report = CyclesReport {
                threshold,
                arcs: graph.arc_count(),
                acyclic: graph.is_acyclic(),
                cycle: find_nondegenerate_cycle(k, threshold),
                modulus_traces,
                trace_sum,
            };
            Outcome::new(&report, true)
        }
        Command::Moments { .. } => {
            let kfr = match &resolved.finite_rank {
                Some(kfr) => kfr.clone(),
                None => FiniteRankOperator::from_operator(k)?,
            };
            let sets = match input_sets(input, k.dim())? {
                Some(sets) => sets,
                None => (0..k.dim()).map(|i| StandardSet::from_indices(k.dim(), &[i])).collect::<Result<_>>()?,
            };
            let report: MomentReport = moment_identities(&kfr, &sets, tol)?;
            Outcome::new(&report, report.passed)
        }
        Command::Triangularize { kind, .. } => {
            let cert = match kind {
                Kind::Scc => scc_triangularize(k, tol),
                Kind::Nilpotent => match &resolved.finite_rank {
                    Some(kfr) => nilpotent_block_form(kfr, tol)?,
                    None => nilpotent_block_form_dense(k, tol)?,
                },
                Kind::Increasing => increasing_spectrum_block_form(k, tol)?,
            };
            Outcome::new(&cert, true)
        }
        Command::Verify { cert, .. } => {
            let text = fs::read_to_string(cert)?;
            let cert: TriangularizationCertificate = serde_json::from_str(&text)?;
            let report = verify_certificate(k, &cert, tol);
            Outcome::new(&report, report.passed)
        }
        Command::RadiusProfile { steps, .. } => {
            let chain = nested_chain(k.space(), *steps)?;
            let profile = radius_profile(k, &chain)?;
            let dichotomy =
                if k.space().num_atoms() == 0 { Some(quasinilpotence_dichotomy(k, &chain, tol)?) } else { None };
            Outcome::new(&ProfileReport { steps: *steps, profile, dichotomy }, true)
        }
    }
}

/// Errors that report a failed hypothesis rather than a bad request.
fn is_property_failure(e: &Error) -> bool {
    matches!(e, Error::NotNilpotent { .. } | Error::TheoremViolation(_) | Error::NonvanishingDiagonal { .. })
}

fn emit(out: &Option<PathBuf>, json: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, json),
        None => std::io::stdout().lock().write_all(json.as_bytes()),
    }
}

/// Parse `args` (including the program name) and run.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    run_command(&cli.command)
}

pub fn run_command(command: &Command) -> i32 {
    let common = command.common();
    let loaded = fs::read_to_string(&common.input)
        .map_err(Error::from)
        .and_then(|text| InputFile::parse(&text))
        .and_then(|input| resolve(&input).map(|r| (input, r)));
    let (input, resolved) = match loaded {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {}: {e}", common.input.display());
            return 2;
        }
    };
    let (json, code) = match execute(command, &input, &resolved) {
        Ok(outcome) => (outcome.json, if outcome.ok { 0 } else { 1 }),
        Err(e) if is_property_failure(&e) => {
            eprintln!("error: {e}");
            match to_json(&FailureReport { error: e.to_string() }) {
                Ok(json) => (json, 1),
                Err(_) => return 1,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Err(e) = emit(&common.out, &json) {
        eprintln!("error: writing report: {e}");
        return 2;
    }
    code
}
