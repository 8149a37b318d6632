use std::path::PathBuf;

use clap::{Args, ValueEnum};

use nonlocal_core::boxmodel::make_noisy_pr;
use nonlocal_core::signaling::{extreme_event_probabilities, EXTREME_MAX_N};

use crate::commands::signal::{
    execute as run_signal, summary_header, summary_row, Scaling, SignalArgs, SourceKind,
};
use crate::error::{CliError, CliResult};
use crate::output::{num, write_csv, Format};
use crate::parse::linear_grid;

const SCHEMA: &str = "\
CSV output, one row per grid point:
  signal-sigma  sigma first, then the signal summary columns
                (kind,N,n_blocks,sigma,effective_sigma,seed,n_informative,
                n_correct,accuracy,ci_low,ci_high,accuracy_all_blocks,
                mutual_information_bits)
  signal-n      N first, then the same summary columns
  noisy-pr      p,chsh,class
  extreme       N, then analytic_*, empirical_*, se_* for b_one,
                both_one_given_a, opposite_given_a, both_one_given_aprime,
                opposite_given_aprime, then max_z
Every grid point reuses --seed.

Ranges: --from, --to and --steps (number of intervals, endpoints included),
or an explicit comma-separated --values list. signal-n and extreme need
integer values.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    SignalSigma,
    SignalN,
    NoisyPr,
    Extreme,
}

/// Parameter sweeps written as CSV.
#[derive(Args, Debug)]
#[command(after_long_help = SCHEMA)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,

    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,

    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,

    #[arg(long, default_value_t = 10)]
    pub steps: usize,

    /// Explicit grid, overrides --from/--to/--steps
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,

    /// Signal source for signal-* sweeps
    #[arg(long, value_enum, default_value_t = SourceKind::Pr)]
    pub kind: SourceKind,

    /// Block size for signal-sigma
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    /// Blocks for signal-* sweeps
    #[arg(long, default_value_t = 1000)]
    pub m: usize,

    /// Noise for signal-n
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,

    #[arg(long, value_enum, default_value_t = Scaling::Fixed)]
    pub sigma_scaling: Scaling,

    /// Blocks per Alice bit for extreme
    #[arg(long, default_value_t = 100_000)]
    pub blocks: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub workers: Option<usize>,

    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn grid(args: &SweepArgs) -> CliResult<Vec<f64>> {
    let g = match (&args.values, args.from, args.to) {
        (Some(v), _, _) => v.clone(),
        (None, Some(from), Some(to)) => linear_grid(from, to, args.steps)?,
        _ => return Err(CliError::usage("give --values or both --from and --to")),
    };
    if g.is_empty() || g.iter().any(|v| !v.is_finite()) {
        return Err(CliError::usage("grid must contain finite values"));
    }
    Ok(g)
}

fn integer_grid(values: &[f64], min: usize, max: usize) -> CliResult<Vec<usize>> {
    values
        .iter()
        .map(|&v| {
            if v.fract() != 0.0 || v < min as f64 || v > max as f64 {
                Err(CliError::usage(format!(
                    "grid value {v} must be an integer in {min}..={max}"
                )))
            } else {
                Ok(v as usize)
            }
        })
        .collect()
}

fn signal_args(args: &SweepArgs, n: usize, sigma: f64) -> SignalArgs {
    SignalArgs {
        kind: args.kind,
        n,
        m: args.m,
        sigma,
        sigma_scaling: args.sigma_scaling,
        seed: args.seed,
        workers: args.workers,
        program: None,
        convention: None,
        blocks_csv: None,
        format: Format::Json,
        output: None,
    }
}

pub fn rows(args: &SweepArgs) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    if args.workers == Some(0) {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let values = grid(args)?;
    let mut header: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    match args.experiment {
        Experiment::SignalSigma | Experiment::SignalN => {
            let param = if args.experiment == Experiment::SignalSigma {
                "sweep_sigma"
            } else {
                "sweep_N"
            };
            header.push(param.into());
            header.extend(summary_header().iter().map(|s| s.to_string()));
            let points: Vec<(usize, f64, String)> = if args.experiment == Experiment::SignalSigma {
                values.iter().map(|&s| (args.n, s, num(s))).collect()
            } else {
                integer_grid(&values, 1, usize::MAX)?
                    .into_iter()
                    .map(|n| (n, args.sigma, n.to_string()))
                    .collect()
            };
            for (n, sigma, label) in points {
                let (report, _) = run_signal(&signal_args(args, n, sigma))?;
                let mut row = vec![label];
                row.extend(summary_row(&report));
                rows.push(row);
            }
        }
        Experiment::NoisyPr => {
            header.extend(["p", "chsh", "class"].map(String::from));
            for p in values {
                let t = make_noisy_pr(p)?;
                rows.push(vec![
                    num(p),
                    num(t.chsh_value()),
                    t.classify()?.label().to_string(),
                ]);
            }
        }
        Experiment::Extreme => {
            let names = [
                "b_one",
                "both_one_given_a",
                "opposite_given_a",
                "both_one_given_aprime",
                "opposite_given_aprime",
            ];
            header.push("N".into());
            for prefix in ["analytic", "empirical", "se"] {
                header.extend(names.iter().map(|n| format!("{prefix}_{n}")));
            }
            header.push("max_z".into());
            for n in integer_grid(&values, 1, EXTREME_MAX_N)? {
                let r = extreme_event_probabilities(n, args.blocks, args.seed, args.workers)?;
                let mut row = vec![n.to_string()];
                for part in [&r.analytic, &r.empirical, &r.standard_errors] {
                    row.extend(part.as_array().iter().map(|&v| num(v)));
                }
                row.push(num(r.max_z_score()));
                rows.push(row);
            }
        }
    }
    Ok((header, rows))
}

pub fn run(args: SweepArgs) -> CliResult<()> {
    let (header, rows) = rows(&args)?;
    eprintln!("{} rows", rows.len());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(args.output.as_deref(), &header, &rows)
}
