use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use nonlocal_core::jamming::{
    jam_statistics, JamChoice, JamReport, MeasurementOrder, JAM_CSV_HEADER,
};
use nonlocal_core::qlin::{maximize_chsh, BellState};

use crate::error::{CliError, CliResult};
use crate::output::{num, write_csv, write_json, Format};
use crate::parse::parse_angles;

const SCHEMA: &str = "\
JSON output:
  choice, order, angles, n_samples, seed
  analytic     per Jim outcome (+1 first): {jim_outcome, probability,
               correlators {c: [[C00, C01], [C10, C11]]}, signed_s}
  binned       sampled per Jim outcome: {jim_outcome, trials, counts,
               correlators, standard_errors, signed_s, s_standard_error}
  unbinned     same fields over all samples, jim_outcome = null
  reduced_state_discrepancy  max entry gap between the pair states left
               by Jim's z and x measurements and the GHZ partial trace
  no_signalling              true when that gap is at most 1e-12
  no_signalling_check        \"pass\" or \"fail\"
  optimized    true when the angles came from --optimize

--format csv columns: jim_choice,jim_outcome,C00,C01,C10,C11,signed_S
  (jim_outcome is +1, -1 or \"all\" for the unbinned row)";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Choice {
    X,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Order {
    JimFirst,
    PairFirst,
}

/// GHZ jamming: Jim measures his qubit along z or x; Alice and Bob run a
/// CHSH test and sort the data by Jim's outcome.
#[derive(Args, Debug, Clone)]
#[command(after_long_help = SCHEMA)]
pub struct JamArgs {
    #[arg(long, value_enum)]
    pub choice: Choice,

    /// Alice and Bob's xy-plane angles, radians
    #[arg(
        long,
        value_name = "A,A',B,B'",
        allow_hyphen_values = true,
        required_unless_present = "optimize"
    )]
    pub angles: Option<String>,

    /// Use the angles that maximise |S| on the x-binned state
    #[arg(long, conflicts_with = "angles")]
    pub optimize: bool,

    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Sampling order; both give the same statistics
    #[arg(long, value_enum, default_value_t = Order::JimFirst)]
    pub order: Order,

    #[arg(long)]
    pub workers: Option<usize>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct JamOutput {
    #[serde(flatten)]
    pub report: JamReport,
    pub no_signalling_check: &'static str,
    pub optimized: bool,
}

pub fn execute(args: &JamArgs) -> CliResult<JamOutput> {
    if args.workers == Some(0) {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let angles = if args.optimize {
        // Jim's +1 branch is Φ−; the −1 branch Φ+ saturates with the same angles up to sign
        maximize_chsh(&BellState::PhiMinus.state())?.angles
    } else {
        parse_angles(
            args.angles
                .as_deref()
                .expect("clap requires --angles without --optimize"),
        )?
    };
    let choice = match args.choice {
        Choice::X => JamChoice::X,
        Choice::Z => JamChoice::Z,
    };
    let order = match args.order {
        Order::JimFirst => MeasurementOrder::JimFirst,
        Order::PairFirst => MeasurementOrder::PairFirst,
    };
    let report = jam_statistics(choice, angles, args.samples, args.seed, order, args.workers)?;
    Ok(JamOutput {
        no_signalling_check: if report.no_signalling { "pass" } else { "fail" },
        report,
        optimized: args.optimize,
    })
}

pub fn run(args: JamArgs) -> CliResult<()> {
    let out = execute(&args)?;
    let r = &out.report;
    for b in &r.binned {
        eprintln!(
            "jim {}: S = {}",
            b.jim_outcome.map_or("all".into(), |o| o.to_string()),
            b.signed_s
        );
    }
    eprintln!("unbinned: S = {}", r.unbinned.signed_s);
    eprintln!("no-signalling: {}", out.no_signalling_check);
    match args.format {
        Format::Json => write_json(args.output.as_deref(), &out),
        Format::Csv => {
            let rows: Vec<Vec<String>> = r
                .binned
                .iter()
                .chain(std::iter::once(&r.unbinned))
                .map(|e| {
                    let c = e.correlators.c;
                    vec![
                        r.choice.label().to_string(),
                        e.jim_outcome
                            .map_or("all".to_string(), |o| o.value().to_string()),
                        num(c[0][0]),
                        num(c[0][1]),
                        num(c[1][0]),
                        num(c[1][1]),
                        num(e.signed_s),
                    ]
                })
                .collect();
            write_csv(args.output.as_deref(), &JAM_CSV_HEADER, &rows)
        }
    }
}
