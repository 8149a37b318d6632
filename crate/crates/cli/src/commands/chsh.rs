use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use nonlocal_core::boxmodel::{BehaviorTable, ChshClass, CorrelatorMatrix, NoSignallingCheck};
use nonlocal_core::qlin::{maximize_chsh, quantum_box_xy};
use nonlocal_core::{Error, PROB_TOL};

use crate::error::{CliError, CliResult};
use crate::output::{num, write_csv, write_json, Format};
use crate::parse::{parse_angles, parse_box_spec, BoxSpec};

const SCHEMA: &str = "\
JSON output:
  box            the --box argument as given
  table          {\"p\": [16 probabilities]}, index = 8x + 4y + 2a + b,
                 x,y = 0 unprimed / 1 primed, a,b = 0 for +1 / 1 for -1
  correlators    [[C00, C01], [C10, C11]], C(x,y) = E[a*b]
  chsh_signed    C00 + C01 + C10 - C11
  chsh           |chsh_signed|
  class          local-range | quantum-range | superquantum (tolerance 1e-9)
  no_signalling  {passed, max_violation}
  angles         [a, a', b, b'] in radians (quantum boxes only)
  optimized      true when the angles came from --optimize

CSV output (--format csv): box,C00,C01,C10,C11,chsh_signed,chsh,class";

/// Correlators, CHSH value and classification of a box.
#[derive(Args, Debug)]
#[command(after_long_help = SCHEMA)]
pub struct ChshArgs {
    /// pr | pr:<0-7> | deterministic:<a a' b b' signs, e.g. ++-+> | noisy-pr:<p> |
    /// quantum:<phi+|phi-|psi+|psi-|singlet|upup>[:<a,a',b,b'>] | file:<table.json>
    #[arg(long = "box", value_name = "SPEC")]
    pub box_spec: String,

    /// Measurement angles for quantum boxes, radians; `pi/4` style allowed
    #[arg(long, value_name = "A,A',B,B'", allow_hyphen_values = true)]
    pub angles: Option<String>,

    /// Search the xy-plane angles that maximise |S| (quantum boxes)
    #[arg(long)]
    pub optimize: bool,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Output file; stdout when omitted
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct ChshReport {
    #[serde(rename = "box")]
    pub box_spec: String,
    pub table: BehaviorTable,
    pub correlators: [[f64; 2]; 2],
    pub chsh_signed: f64,
    pub chsh: f64,
    pub class: ChshClass,
    pub no_signalling: NoSignallingCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<[f64; 4]>,
    pub optimized: bool,
}

#[derive(Deserialize)]
struct RawFile {
    p: Vec<f64>,
}

/// Reads `{"p": [16 numbers]}`. Signalling or unnormalised tables are
/// rejected as invalid objects.
pub fn read_table(path: &str) -> CliResult<BehaviorTable> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{path}: {e}")))?;
    let raw: RawFile =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{path}: {e}")))?;
    let p: [f64; 16] = raw.p.try_into().map_err(|v: Vec<f64>| {
        CliError::from(Error::WrongLength {
            expected: 16,
            got: v.len(),
        })
    })?;
    Ok(BehaviorTable::new(p)?)
}

pub fn build_report(args: &ChshArgs) -> CliResult<ChshReport> {
    let flag_angles = args.angles.as_deref().map(parse_angles).transpose()?;
    let (table, angles, optimized) = match parse_box_spec(&args.box_spec)? {
        BoxSpec::Table(t) => {
            if flag_angles.is_some() || args.optimize {
                return Err(CliError::usage(
                    "--angles and --optimize only apply to quantum boxes",
                ));
            }
            (t, None, false)
        }
        BoxSpec::Quantum { state, angles } => {
            if state.dim() != 4 {
                return Err(CliError::usage("quantum boxes need a two-qubit state"));
            }
            let angles = if args.optimize {
                maximize_chsh(&state)?.angles
            } else {
                flag_angles.or(angles).ok_or_else(|| {
                    CliError::usage("quantum boxes need angles (quantum:<state>:<angles> or --angles) or --optimize")
                })?
            };
            (quantum_box_xy(&state, angles)?, Some(angles), args.optimize)
        }
    };
    let check = table.check_no_signalling(PROB_TOL);
    let class = table.classify()?;
    let CorrelatorMatrix { c } = table.correlators();
    Ok(ChshReport {
        box_spec: args.box_spec.clone(),
        correlators: c,
        chsh_signed: table.chsh_signed(),
        chsh: table.chsh_value(),
        class,
        no_signalling: check,
        angles,
        optimized,
        table,
    })
}

pub fn run(args: ChshArgs) -> CliResult<()> {
    let report = build_report(&args)?;
    eprintln!("S = {} ({})", report.chsh, report.class.label());
    match args.format {
        Format::Json => write_json(args.output.as_deref(), &report),
        Format::Csv => {
            let c = report.correlators;
            write_csv(
                args.output.as_deref(),
                &[
                    "box",
                    "C00",
                    "C01",
                    "C10",
                    "C11",
                    "chsh_signed",
                    "chsh",
                    "class",
                ],
                &[vec![
                    report.box_spec.clone(),
                    num(c[0][0]),
                    num(c[0][1]),
                    num(c[1][0]),
                    num(c[1][1]),
                    num(report.chsh_signed),
                    num(report.chsh),
                    report.class.label().to_string(),
                ]],
            )
        }
    }
}
