use std::path::PathBuf;

use clap::{Args, ValueEnum};

use nonlocal_core::boxmodel::DeterministicProgram;
use nonlocal_core::retrobox::RetroSource;
use nonlocal_core::signaling::{
    run_experiment, BlockRecord, ExperimentConfig, LhvSource, NoiseScaling, PrSource, SignalReport,
    BLOCK_CSV_HEADER,
};

use crate::error::{CliError, CliResult};
use crate::output::{num, write_csv, write_json, Format};
use crate::parse::parse_convention;

const SCHEMA: &str = "\
JSON output (SignalReport):
  kind                     pr | lhv | retro
  N, n_blocks              pairs per block, number of blocks
  sigma, sigma_scaling     noise flag and how it scales (fixed | inverse-sqrt-n)
  effective_sigma          standard deviation actually added to B and B'
  seed                     64-bit seed
  n_informative            blocks with B*B' != 0
  n_correct                informative blocks where Bob's guess equals Alice's bit
  accuracy, wilson_ci      n_correct / n_informative and its 95% Wilson interval
  accuracy_all_blocks      accuracy counting coin-flip guesses on B*B' = 0 blocks
  mutual_information_bits  plug-in I(alice_bit; bob_guess) over informative blocks
  confusion                [[bit 0 -> guess 0, bit 0 -> guess 1], [bit 1 -> ...]]

--blocks-csv columns: block_index,alice_bit,exact_B,exact_Bprime,noisy_B,noisy_Bprime,bob_guess,informative
--format csv: one summary row with kind,N,n_blocks,sigma,effective_sigma,seed,
  n_informative,n_correct,accuracy,ci_low,ci_high,accuracy_all_blocks,mutual_information_bits";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SourceKind {
    Pr,
    Lhv,
    Retro,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Scaling {
    #[default]
    Fixed,
    InverseSqrtN,
}

impl From<Scaling> for NoiseScaling {
    fn from(s: Scaling) -> Self {
        match s {
            Scaling::Fixed => NoiseScaling::Fixed,
            Scaling::InverseSqrtN => NoiseScaling::InverseSqrtN,
        }
    }
}

/// Block-signaling experiment: Alice encodes one bit per block of N pairs,
/// Bob decodes it from the sign of B*B'.
#[derive(Args, Debug, Clone)]
#[command(after_long_help = SCHEMA)]
pub struct SignalArgs {
    #[arg(long, value_enum, default_value_t = SourceKind::Pr)]
    pub kind: SourceKind,

    /// Pairs per block
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    /// Number of blocks
    #[arg(long, default_value_t = 1000)]
    pub m: usize,

    /// Standard deviation of Gaussian readout noise on B and B'
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,

    #[arg(long, value_enum, default_value_t = Scaling::Fixed)]
    pub sigma_scaling: Scaling,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads; results do not depend on it
    #[arg(long)]
    pub workers: Option<usize>,

    /// lhv only: fixed deterministic program (signs a a' b b'); default samples all 16 uniformly
    #[arg(long, value_name = "SIGNS")]
    pub program: Option<String>,

    /// retro only: PR sign convention 0..=7
    #[arg(long)]
    pub convention: Option<String>,

    /// Write per-block records here
    #[arg(long, value_name = "PATH")]
    pub blocks_csv: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl SignalArgs {
    pub fn config(&self) -> CliResult<ExperimentConfig> {
        if self.workers == Some(0) {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        Ok(ExperimentConfig {
            scaling: self.sigma_scaling.into(),
            workers: self.workers,
            ..ExperimentConfig::new(self.n, self.m, self.sigma, self.seed)
        })
    }
}

pub fn execute(args: &SignalArgs) -> CliResult<(SignalReport, Vec<BlockRecord>)> {
    let config = args.config()?;
    if args.program.is_some() && args.kind != SourceKind::Lhv {
        return Err(CliError::usage("--program only applies to --kind lhv"));
    }
    if args.convention.is_some() && args.kind != SourceKind::Retro {
        return Err(CliError::usage("--convention only applies to --kind retro"));
    }
    let result = match args.kind {
        SourceKind::Pr => run_experiment(&PrSource, &config)?,
        SourceKind::Lhv => {
            let source = match &args.program {
                Some(p) => LhvSource::constant(p.parse::<DeterministicProgram>()?),
                None => LhvSource::uniform(),
            };
            run_experiment(&source, &config)?
        }
        SourceKind::Retro => {
            let convention = args
                .convention
                .as_deref()
                .map(parse_convention)
                .transpose()?
                .unwrap_or_default();
            run_experiment(&RetroSource { convention }, &config)?
        }
    };
    Ok(result)
}

pub fn summary_header() -> [&'static str; 13] {
    [
        "kind",
        "N",
        "n_blocks",
        "sigma",
        "effective_sigma",
        "seed",
        "n_informative",
        "n_correct",
        "accuracy",
        "ci_low",
        "ci_high",
        "accuracy_all_blocks",
        "mutual_information_bits",
    ]
}

pub fn summary_row(r: &SignalReport) -> Vec<String> {
    vec![
        r.kind.clone(),
        r.n.to_string(),
        r.n_blocks.to_string(),
        num(r.sigma),
        num(r.effective_sigma),
        r.seed.to_string(),
        r.n_informative.to_string(),
        r.n_correct.to_string(),
        num(r.accuracy),
        num(r.wilson_ci.0),
        num(r.wilson_ci.1),
        num(r.accuracy_all_blocks),
        num(r.mutual_information_bits),
    ]
}

pub fn run(args: SignalArgs) -> CliResult<()> {
    let (report, records) = execute(&args)?;
    eprintln!(
        "{}: accuracy {} over {} informative blocks",
        report.kind, report.accuracy, report.n_informative
    );
    if let Some(path) = &args.blocks_csv {
        let rows: Vec<Vec<String>> = records
            .iter()
            .enumerate()
            .map(|(i, b)| {
                vec![
                    i.to_string(),
                    b.alice_bit.index().to_string(),
                    num(b.exact_b),
                    num(b.exact_bprime),
                    num(b.noisy_b),
                    num(b.noisy_bprime),
                    b.bob_guess.index().to_string(),
                    b.informative.to_string(),
                ]
            })
            .collect();
        write_csv(Some(path), &BLOCK_CSV_HEADER, &rows)?;
    }
    match args.format {
        Format::Json => write_json(args.output.as_deref(), &report),
        Format::Csv => write_csv(
            args.output.as_deref(),
            &summary_header(),
            &[summary_row(&report)],
        ),
    }
}
