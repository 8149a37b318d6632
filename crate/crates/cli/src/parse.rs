//! Parsers for box specs, named states and angle lists.

use std::f64::consts::PI;

use nonlocal_core::abl::uniform_bell_superposition;
use nonlocal_core::boxmodel::{
    make_local_deterministic, make_noisy_pr, make_pr_box_with, BehaviorTable, DeterministicProgram,
    PrConvention,
};
use nonlocal_core::qlin::{bell_states, singlet, QState};

use crate::error::{CliError, CliResult};

/// Box selected on the command line.
#[derive(Clone, Debug)]
pub enum BoxSpec {
    Table(BehaviorTable),
    Quantum {
        state: QState,
        angles: Option<[f64; 4]>,
    },
}

pub fn parse_box_spec(spec: &str) -> CliResult<BoxSpec> {
    let (head, rest) = match spec.split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (spec, None),
    };
    match (head, rest) {
        ("pr", None) => Ok(BoxSpec::Table(make_pr_box_with(PrConvention::STANDARD))),
        ("pr", Some(k)) => Ok(BoxSpec::Table(make_pr_box_with(parse_convention(k)?))),
        ("deterministic", Some(p)) => {
            let program: DeterministicProgram = p.parse()?;
            Ok(BoxSpec::Table(make_local_deterministic(&program)))
        }
        ("noisy-pr", Some(p)) => {
            let p: f64 = p
                .parse()
                .map_err(|_| CliError::usage(format!("noisy-pr strength {p:?} is not a number")))?;
            Ok(BoxSpec::Table(make_noisy_pr(p)?))
        }
        ("quantum", Some(r)) => {
            let (name, angles) = match r.split_once(':') {
                Some((n, a)) => (n, Some(parse_angles(a)?)),
                None => (r, None),
            };
            Ok(BoxSpec::Quantum {
                state: named_state(name)?,
                angles,
            })
        }
        ("file", Some(path)) => Ok(BoxSpec::Table(crate::commands::chsh::read_table(path)?)),
        _ => Err(CliError::usage(format!(
            "unrecognised box spec {spec:?}; expected pr, pr:<0-7>, deterministic:<signs>, \
             noisy-pr:<p>, quantum:<state>[:<angles>] or file:<path>"
        ))),
    }
}

pub fn parse_convention(s: &str) -> CliResult<PrConvention> {
    s.parse::<usize>()
        .ok()
        .and_then(PrConvention::from_index)
        .ok_or_else(|| {
            CliError::usage(format!("PR convention must be an integer 0..=7, got {s:?}"))
        })
}

/// Two-qubit states by name, plus single-qubit `up`/`down`.
pub fn named_state(name: &str) -> CliResult<QState> {
    let bell = bell_states();
    let state = match name.to_ascii_lowercase().as_str() {
        "phi+" => bell[0].clone(),
        "phi-" => bell[1].clone(),
        "psi+" => bell[2].clone(),
        "psi-" => bell[3].clone(),
        "singlet" => singlet(),
        "bell-uniform" => uniform_bell_superposition(),
        "upup" => QState::basis(4, 0)?,
        "up" => QState::up(),
        "down" => QState::down(),
        other => {
            if let Some(k) = other.strip_prefix("basis") {
                // basis<dim>:<k>, e.g. basis4:2
                let (d, k) = k.split_once('/').ok_or_else(|| {
                    CliError::usage(format!("expected basis<dim>/<k>, got {name:?}"))
                })?;
                let d: usize = d
                    .parse()
                    .map_err(|_| CliError::usage(format!("bad dimension in {name:?}")))?;
                let k: usize = k
                    .parse()
                    .map_err(|_| CliError::usage(format!("bad index in {name:?}")))?;
                QState::basis(d, k)?
            } else {
                return Err(CliError::usage(format!(
                    "unknown state {name:?}; expected phi+, phi-, psi+, psi-, singlet, upup, bell-uniform, \
                     up, down or basis<dim>/<k>"
                )));
            }
        }
    };
    Ok(state)
}

/// One angle in radians: a number, or a multiple of pi such as `pi/4`,
/// `-3pi/4`, `0.5pi`.
pub fn parse_angle(s: &str) -> CliResult<f64> {
    let t = s.trim();
    let bad = || CliError::usage(format!("cannot parse angle {s:?}"));
    let Some(pos) = t.find("pi") else {
        let v: f64 = t.parse().map_err(|_| bad())?;
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    };
    let coeff = match t[..pos].trim_end_matches('*') {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let tail = &t[pos + 2..];
    let denom = if tail.is_empty() {
        1.0
    } else {
        tail.strip_prefix('/')
            .ok_or_else(bad)?
            .parse::<f64>()
            .map_err(|_| bad())?
    };
    if denom == 0.0 {
        return Err(bad());
    }
    Ok(coeff * PI / denom)
}

/// `α,α',β,β'`.
pub fn parse_angles(s: &str) -> CliResult<[f64; 4]> {
    let parts: Vec<f64> = s.split(',').map(parse_angle).collect::<CliResult<_>>()?;
    parts.try_into().map_err(|v: Vec<f64>| {
        CliError::usage(format!(
            "expected 4 comma-separated angles, got {}",
            v.len()
        ))
    })
}

/// Linear grid from `from` to `to` inclusive with `steps` intervals.
pub fn linear_grid(from: f64, to: f64, steps: usize) -> CliResult<Vec<f64>> {
    if !from.is_finite() || !to.is_finite() {
        return Err(CliError::usage("range bounds must be finite"));
    }
    if steps == 0 {
        return Ok(vec![from]);
    }
    Ok((0..=steps)
        .map(|i| {
            if i == steps {
                to
            } else {
                from + (to - from) * i as f64 / steps as f64
            }
        })
        .collect())
}
