use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use nonlocal_core::abl::{
    abl_distribution, abl_distribution_timesym, reverse_epr_demo, AblScenario,
};
use nonlocal_core::boxmodel::Outcome;
use nonlocal_core::qlin::{MeasurementBasis, OperatorKind, QOperator, QState};

use crate::error::{CliError, CliResult};
use crate::output::{num, write_csv, write_json, Format};
use crate::parse::{named_state, parse_angle};

const SCHEMA: &str = "\
Scenario file (JSON):
  initial   state at t0
  final     post-selected state
  basis     \"bell\" | \"computational\" | [state, ...] (orthonormal, complete)
  u_pre     \"identity\" | matrix, evolution from t0 to the intermediate time
  u_post    \"identity\" | matrix, evolution taking the final state back to
            the intermediate time (optional, default identity)
  A state is a name (phi+, phi-, psi+, psi-, singlet, upup, bell-uniform, up,
  down, basis<dim>/<k>) or a list of [re, im] amplitudes. A matrix is a list
  of rows of [re, im] entries.

JSON output:
  dimension        Hilbert space dimension
  forward          probabilities from the forward-propagated form
  time_symmetric   probabilities with both boundary states brought to the
                   intermediate time
  max_difference   max |forward - time_symmetric|
  sum_forward, sum_time_symmetric
  j                {index, forward, time_symmetric} when --j is given

--demo output adds alice_angle, bob_angle, alice_out, bob_out and labels
(phi+, phi-, psi+, psi-) for a Bell measurement preceded by the uniform
Bell superposition.

--format csv columns: j,forward,time_symmetric

Exit code 4 when the post-selection has probability zero.";

/// Probabilities of an intermediate measurement given pre- and
/// post-selection, in forward and time-symmetric form.
#[derive(Args, Debug)]
#[command(after_long_help = SCHEMA)]
pub struct AblArgs {
    /// Scenario file
    #[arg(
        long,
        value_name = "PATH",
        required_unless_present = "demo",
        conflicts_with = "demo"
    )]
    pub scenario: Option<PathBuf>,

    /// Report the probability of this outcome index as well
    #[arg(long)]
    pub j: Option<usize>,

    /// Bell measurement after Alice and Bob post-select xy-plane results
    #[arg(long)]
    pub demo: bool,

    #[arg(
        long,
        default_value = "0",
        allow_hyphen_values = true,
        requires = "demo"
    )]
    pub alice_angle: String,

    #[arg(
        long,
        default_value = "0",
        allow_hyphen_values = true,
        requires = "demo"
    )]
    pub bob_angle: String,

    /// +1 or -1
    #[arg(
        long,
        default_value_t = 1,
        allow_hyphen_values = true,
        requires = "demo"
    )]
    pub alice_out: i8,

    #[arg(
        long,
        default_value_t = 1,
        allow_hyphen_values = true,
        requires = "demo"
    )]
    pub bob_out: i8,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateSpec {
    Named(String),
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BasisSpec {
    Named(String),
    Vectors(Vec<StateSpec>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OperatorSpec {
    Named(String),
    Rows(Vec<Vec<[f64; 2]>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    initial: StateSpec,
    #[serde(rename = "final")]
    final_state: StateSpec,
    basis: BasisSpec,
    #[serde(default)]
    u_pre: Option<OperatorSpec>,
    #[serde(default)]
    u_post: Option<OperatorSpec>,
}

fn state(spec: StateSpec) -> CliResult<QState> {
    match spec {
        StateSpec::Named(n) => named_state(&n),
        StateSpec::Amplitudes(a) => Ok(QState::try_from(a)?),
    }
}

fn operator(spec: Option<OperatorSpec>, dim: usize) -> CliResult<QOperator> {
    match spec {
        None => Ok(QOperator::identity(dim)?),
        Some(OperatorSpec::Named(n)) if n == "identity" => Ok(QOperator::identity(dim)?),
        Some(OperatorSpec::Named(n)) => Err(CliError::usage(format!("unknown operator {n:?}"))),
        Some(OperatorSpec::Rows(rows)) => Ok(QOperator::from_rows(&rows, OperatorKind::General)?),
    }
}

pub fn load_scenario(path: &std::path::Path) -> CliResult<AblScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let initial = state(file.initial)?;
    let dim = initial.dim();
    let basis = match file.basis {
        BasisSpec::Named(n) if n == "bell" => MeasurementBasis::bell(),
        BasisSpec::Named(n) if n == "computational" => MeasurementBasis::computational(dim)?,
        BasisSpec::Named(n) => return Err(CliError::usage(format!("unknown basis {n:?}"))),
        BasisSpec::Vectors(v) => {
            MeasurementBasis::new(v.into_iter().map(state).collect::<CliResult<_>>()?)?
        }
    };
    Ok(AblScenario::new(
        initial,
        state(file.final_state)?,
        basis,
        operator(file.u_pre, dim)?,
        operator(file.u_post, dim)?,
    )?)
}

#[derive(Debug, Serialize)]
pub struct OutcomeProbability {
    pub index: usize,
    pub forward: f64,
    pub time_symmetric: f64,
}

#[derive(Debug, Serialize)]
pub struct AblReport {
    pub dimension: usize,
    pub forward: Vec<f64>,
    pub time_symmetric: Vec<f64>,
    pub max_difference: f64,
    pub sum_forward: f64,
    pub sum_time_symmetric: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<OutcomeProbability>,
}

#[derive(Debug, Serialize)]
pub struct DemoReport {
    pub alice_angle: f64,
    pub bob_angle: f64,
    pub alice_out: Outcome,
    pub bob_out: Outcome,
    pub labels: [&'static str; 4],
    #[serde(flatten)]
    pub distribution: AblReport,
}

pub fn evaluate(scenario: &AblScenario, j: Option<usize>) -> CliResult<AblReport> {
    let forward = abl_distribution(scenario)?;
    let time_symmetric = abl_distribution_timesym(scenario)?;
    let max_difference = forward
        .iter()
        .zip(&time_symmetric)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let j = match j {
        Some(index) if index >= forward.len() => {
            return Err(CliError::usage(format!(
                "--j {index} is out of range for {} outcomes",
                forward.len()
            )))
        }
        Some(index) => Some(OutcomeProbability {
            index,
            forward: forward[index],
            time_symmetric: time_symmetric[index],
        }),
        None => None,
    };
    Ok(AblReport {
        dimension: forward.len(),
        sum_forward: forward.iter().sum(),
        sum_time_symmetric: time_symmetric.iter().sum(),
        forward,
        time_symmetric,
        max_difference,
        j,
    })
}

fn outcome(v: i8) -> CliResult<Outcome> {
    Outcome::try_from(v).map_err(|_| CliError::usage(format!("outcome must be 1 or -1, got {v}")))
}

fn write(args: &AblArgs, report: &AblReport, json: &impl Serialize) -> CliResult<()> {
    match args.format {
        Format::Json => write_json(args.output.as_deref(), json),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .forward
                .iter()
                .zip(&report.time_symmetric)
                .enumerate()
                .map(|(i, (f, t))| vec![i.to_string(), num(*f), num(*t)])
                .collect();
            write_csv(
                args.output.as_deref(),
                &["j", "forward", "time_symmetric"],
                &rows,
            )
        }
    }
}

pub fn run(args: AblArgs) -> CliResult<()> {
    if args.demo {
        let (alice_angle, bob_angle) = (
            parse_angle(&args.alice_angle)?,
            parse_angle(&args.bob_angle)?,
        );
        let (alice_out, bob_out) = (outcome(args.alice_out)?, outcome(args.bob_out)?);
        // the library routine, plus the explicit scenario for the time-symmetric column
        let direct = reverse_epr_demo(alice_angle, bob_angle, alice_out, bob_out, None)?;
        let scenario = AblScenario::without_evolution(
            nonlocal_core::abl::uniform_bell_superposition(),
            nonlocal_core::abl::xy_product_state(alice_angle, bob_angle, alice_out, bob_out),
            MeasurementBasis::bell(),
        )?;
        let distribution = evaluate(&scenario, args.j)?;
        debug_assert!(direct
            .iter()
            .zip(&distribution.forward)
            .all(|(a, b)| a == b));
        eprintln!(
            "max |forward - time_symmetric| = {:e}",
            distribution.max_difference
        );
        let report = DemoReport {
            alice_angle,
            bob_angle,
            alice_out,
            bob_out,
            labels: ["phi+", "phi-", "psi+", "psi-"],
            distribution,
        };
        return write(&args, &report.distribution, &report);
    }
    let path = args
        .scenario
        .as_deref()
        .expect("clap enforces --scenario without --demo");
    let report = evaluate(&load_scenario(path)?, args.j)?;
    eprintln!(
        "max |forward - time_symmetric| = {:e}",
        report.max_difference
    );
    write(&args, &report, &report)
}
