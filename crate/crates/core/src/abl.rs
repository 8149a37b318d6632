//! Probabilities of an intermediate measurement between a pre-selected
//! and a post-selected state.
//!
//! For a measurement at `t_C` in the orthonormal basis `{|B_i⟩}`, between
//! preparation `|0⟩` at `t_0` and post-selection `⟨ξ|` at `t_AB`,
//!
//! ```text
//!             |⟨ξ|U(t_AB - t_C)|B_j⟩ ⟨B_j|U(t_C - t_0)|0⟩|²
//! prob(B_j) = ----------------------------------------------
//!             Σ_i |⟨ξ|U(t_AB - t_C)|B_i⟩ ⟨B_i|U(t_C - t_0)|0⟩|²
//! ```
//!
//! The forward form applies `U(t_AB - t_C) = U(t_C - t_AB)†` to each basis
//! vector. The time-symmetric form instead evolves `|0⟩` forward and `|ξ⟩`
//! backward to `t_C` and overlaps both with the basis there. The two are the
//! same number; they are computed along different paths so that each
//! checks the other.

use serde::Serialize;

use crate::boxmodel::{flat_index, BehaviorTable, Outcome, Setting};
use crate::qlin::{xy_eigenstate, MeasurementBasis, OperatorKind, QOperator, QState, C64};
use crate::{Error, Result, LINALG_TOL};

/// Pre-selection, post-selection, intermediate basis and the two
/// evolutions around the intermediate measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblScenario {
    /// State at `t_0`.
    pub initial: QState,
    /// Post-selected state at `t_AB`.
    #[serde(rename = "final")]
    pub final_state: QState,
    pub basis: MeasurementBasis,
    /// `U(t_C - t_0)`.
    pub u_pre: QOperator,
    /// `U(t_C - t_AB)`, which carries the final state back to `t_C`.
    pub u_post: QOperator,
}

impl AblScenario {
    /// Checks dimensions, unitarity and that post-selection is possible.
    pub fn new(
        initial: QState,
        final_state: QState,
        basis: MeasurementBasis,
        u_pre: QOperator,
        u_post: QOperator,
    ) -> Result<Self> {
        let dim = initial.dim();
        for d in [final_state.dim(), basis.dim(), u_pre.dim(), u_post.dim()] {
            if d != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: d,
                });
            }
        }
        for u in [&u_pre, &u_post] {
            let deviation = u.unitarity_deviation();
            if deviation > LINALG_TOL {
                return Err(Error::NotUnitary { deviation });
            }
        }
        let s = AblScenario {
            initial,
            final_state,
            basis,
            u_pre: QOperator::new(dim, u_pre.entries().to_vec(), OperatorKind::Unitary)?,
            u_post: QOperator::new(dim, u_post.entries().to_vec(), OperatorKind::Unitary)?,
        };
        let denominator: f64 = s.forward_weights().iter().sum();
        if !(denominator > LINALG_TOL) {
            return Err(Error::VanishingDenominator { denominator });
        }
        Ok(s)
    }

    /// Identity evolution on both sides.
    pub fn without_evolution(
        initial: QState,
        final_state: QState,
        basis: MeasurementBasis,
    ) -> Result<Self> {
        let dim = initial.dim();
        AblScenario::new(
            initial,
            final_state,
            basis,
            QOperator::identity(dim)?,
            QOperator::identity(dim)?,
        )
    }

    /// `|⟨ξ|U(t_AB−t_C)|B_i⟩⟨B_i|U(t_C−t_0)|0⟩|²` with the backward
    /// propagator formed explicitly as a matrix.
    fn forward_weights(&self) -> Vec<f64> {
        let back = self.u_post.adjoint();
        let evolved_initial = self
            .u_pre
            .apply_raw(&self.initial)
            .expect("dimensions checked");
        self.basis
            .vectors()
            .iter()
            .map(|b| {
                let propagated = back.apply_raw(b).expect("dimensions checked");
                let post = overlap(self.final_state.amplitudes(), &propagated);
                let pre = overlap(b.amplitudes(), &evolved_initial);
                (post * pre).norm_sqr()
            })
            .collect()
    }

    /// Same weights with both boundary states brought to `t_C` first.
    fn symmetric_weights(&self) -> Vec<f64> {
        let forward = self
            .u_pre
            .apply_raw(&self.initial)
            .expect("dimensions checked");
        let backward = self
            .u_post
            .apply_raw(&self.final_state)
            .expect("dimensions checked");
        self.basis
            .vectors()
            .iter()
            .map(|b| {
                let post = overlap(&backward, b.amplitudes());
                let pre = overlap(b.amplitudes(), &forward);
                (post * pre).norm_sqr()
            })
            .collect()
    }
}

fn overlap(bra: &[C64], ket: &[C64]) -> C64 {
    bra.iter().zip(ket).map(|(b, k)| b.conj() * k).sum()
}

fn normalise(weights: Vec<f64>) -> Result<Vec<f64>> {
    let denominator: f64 = weights.iter().sum();
    if !(denominator > LINALG_TOL) {
        return Err(Error::VanishingDenominator { denominator });
    }
    Ok(weights.into_iter().map(|w| w / denominator).collect())
}

/// Full distribution over the intermediate basis, forward form.
pub fn abl_distribution(s: &AblScenario) -> Result<Vec<f64>> {
    normalise(s.forward_weights())
}

/// Full distribution over the intermediate basis, time-symmetric form.
pub fn abl_distribution_timesym(s: &AblScenario) -> Result<Vec<f64>> {
    normalise(s.symmetric_weights())
}

fn pick(dist: Vec<f64>, j: usize) -> Result<f64> {
    let len = dist.len();
    dist.get(j)
        .copied()
        .ok_or(Error::IndexOutOfRange { index: j, len })
}

/// `prob(B_j)`; `j` is 0-based.
pub fn abl_probability(s: &AblScenario, j: usize) -> Result<f64> {
    pick(abl_distribution(s)?, j)
}

/// `prob(B_j)` from the time-symmetric form; `j` is 0-based.
pub fn abl_probability_timesym(s: &AblScenario, j: usize) -> Result<f64> {
    pick(abl_distribution_timesym(s)?, j)
}

/// Uniform superposition of the four Bell states, `Σ_i |B_i⟩ / 2`.
pub fn uniform_bell_superposition() -> QState {
    let mut amps = vec![C64::new(0.0, 0.0); 4];
    for b in crate::qlin::bell_states() {
        for (acc, z) in amps.iter_mut().zip(b.amplitudes()) {
            *acc += z * 0.5;
        }
    }
    QState::normalized(amps).expect("nonzero superposition")
}

/// Post-selected product state `|ξ_A ξ'_B⟩`: the eigenstates of the two
/// xy-plane spin measurements with the observed eigenvalues.
pub fn xy_product_state(
    alice_angle: f64,
    bob_angle: f64,
    alice_out: Outcome,
    bob_out: Outcome,
) -> QState {
    xy_eigenstate(alice_angle, alice_out)
        .tensor(&xy_eigenstate(bob_angle, bob_out))
        .expect("two qubits")
}

/// Distribution over `(Φ+, Φ−, Ψ+, Ψ−)` for a Bell measurement at the
/// meeting point, given Alice's and Bob's xy-plane results and a
/// pre-selected state (the uniform Bell superposition by default).
pub fn reverse_epr_demo(
    alice_angle: f64,
    bob_angle: f64,
    alice_out: Outcome,
    bob_out: Outcome,
    initial: Option<QState>,
) -> Result<[f64; 4]> {
    let initial = initial.unwrap_or_else(uniform_bell_superposition);
    let final_state = xy_product_state(alice_angle, bob_angle, alice_out, bob_out);
    let scenario = AblScenario::without_evolution(initial, final_state, MeasurementBasis::bell())?;
    let d = abl_distribution(&scenario)?;
    Ok([d[0], d[1], d[2], d[3]])
}

/// Correlations a Bell-measuring party recovers by binning the results
/// of Alice and Bob (angles `[α, α', β, β']`) on Bell outcome `bell_index`.
///
/// Each setting's outcome pair is taken equally likely before binning,
/// which is the case when the incoming pairs are maximally mixed. The
/// binned table is then the Bayes inversion of [`reverse_epr_demo`].
pub fn binned_table_from_abl(angles: [f64; 4], bell_index: usize) -> Result<BehaviorTable> {
    if bell_index >= 4 {
        return Err(Error::IndexOutOfRange {
            index: bell_index,
            len: 4,
        });
    }
    let mut p = [0.0; 16];
    for x in Setting::BOTH {
        for y in Setting::BOTH {
            let mut joint = [0.0; 4];
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    let dist =
                        reverse_epr_demo(angles[x.index()], angles[2 + y.index()], a, b, None)?;
                    joint[a.index() * 2 + b.index()] = 0.25 * dist[bell_index];
                }
            }
            let total: f64 = joint.iter().sum();
            if !(total > LINALG_TOL) {
                return Err(Error::VanishingDenominator { denominator: total });
            }
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    p[flat_index(a, b, x, y)] = joint[a.index() * 2 + b.index()] / total;
                }
            }
        }
    }
    BehaviorTable::new(p)
}
