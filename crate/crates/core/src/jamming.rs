//! GHZ jamming: Jim's measurement on the third qubit of
//! `(|↑↑↑⟩ − |↓↓↓⟩)/√2` decides the kind of state Alice and Bob share.
//!
//! Measuring `σ_z` leaves the pair in `|↑↑⟩` or `|↓↓⟩`; measuring `σ_x`
//! leaves it in `Φ−` (Jim reads `+1`) or `Φ+` (Jim reads `−1`). Both
//! mixtures have the same reduced density matrix, so Alice and Bob learn
//! nothing about Jim's choice until they can sort their data by Jim's
//! results.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boxmodel::{flat_index, CorrelatorMatrix, Outcome, Setting};
use crate::qlin::{
    binary_projectors, ghz_state, partial_trace, pauli_xy, quantum_box_xy, OperatorKind, QOperator,
    QState, C64,
};
use crate::rng::{stream_rng, with_workers};
use crate::{Error, Result, LINALG_TOL};

/// Which spin component Jim measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JamChoice {
    Z,
    X,
}

impl JamChoice {
    /// Jim's eigenstates for outcomes `(+1, −1)`.
    pub fn eigenstates(self) -> [QState; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            JamChoice::Z => [QState::up(), QState::down()],
            JamChoice::X => [
                QState::new(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).expect("normalised"),
                QState::new(vec![C64::new(h, 0.0), C64::new(-h, 0.0)]).expect("normalised"),
            ],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            JamChoice::Z => "z",
            JamChoice::X => "x",
        }
    }
}

/// One of Jim's outcomes with its probability and the pair state it leaves.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub probability: f64,
    pub state: QState,
    pub jim_outcome: Outcome,
}

/// Alice–Bob ensemble conditioned on Jim's outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalEnsemble {
    pub choice: JamChoice,
    pub branches: Vec<Branch>,
}

/// Projects the GHZ state onto each of Jim's eigenstates.
pub fn jim_measure(choice: JamChoice) -> ConditionalEnsemble {
    let ghz = ghz_state();
    let branches = Outcome::BOTH
        .iter()
        .zip(choice.eigenstates())
        .map(|(&jim_outcome, e)| {
            // (I ⊗ I ⊗ ⟨e|)|GHZ⟩
            let amps: Vec<C64> = (0..4)
                .map(|ab| {
                    (0..2)
                        .map(|j| e.amplitude(j).conj() * ghz.amplitude(ab * 2 + j))
                        .sum()
                })
                .collect();
            let probability: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
            Branch {
                probability,
                state: QState::normalized(amps).expect("both branches occur"),
                jim_outcome,
            }
        })
        .collect();
    ConditionalEnsemble { choice, branches }
}

/// `Σ_k p_k |ψ_k⟩⟨ψ_k|`: what Alice and Bob hold without Jim's results.
pub fn unbinned_state(choice: JamChoice) -> QOperator {
    let ensemble = jim_measure(choice);
    let mut m = vec![C64::new(0.0, 0.0); 16];
    for branch in &ensemble.branches {
        for (acc, z) in m.iter_mut().zip(branch.state.density().entries()) {
            *acc += z * branch.probability;
        }
    }
    QOperator::new(4, m, OperatorKind::Density).expect("mixture of pure states")
}

/// Reduced state of the pair obtained by tracing Jim out of the GHZ state.
pub fn ghz_reduced_state() -> QOperator {
    partial_trace(&ghz_state().density(), &[0, 1]).expect("keep A and B")
}

/// Largest entrywise gap among `unbinned_state(Z)`, `unbinned_state(X)` and
/// the GHZ partial trace.
pub fn reduced_state_discrepancy() -> f64 {
    let reference = ghz_reduced_state();
    let z = unbinned_state(JamChoice::Z);
    let x = unbinned_state(JamChoice::X);
    [
        z.max_abs_diff(&x),
        z.max_abs_diff(&reference),
        x.max_abs_diff(&reference),
    ]
    .into_iter()
    .map(|d| d.expect("all 4x4"))
    .fold(0.0, f64::max)
}

/// CHSH data of one bin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchChsh {
    pub jim_outcome: Outcome,
    pub probability: f64,
    pub correlators: CorrelatorMatrix,
    pub signed_s: f64,
}

/// Signed CHSH value of each branch for xy-plane angles `[α, α', β, β']`.
pub fn binned_chsh(choice: JamChoice, angles: [f64; 4]) -> Result<Vec<BranchChsh>> {
    jim_measure(choice)
        .branches
        .iter()
        .map(|b| {
            let correlators = quantum_box_xy(&b.state, angles)?.correlators();
            Ok(BranchChsh {
                jim_outcome: b.jim_outcome,
                probability: b.probability,
                correlators,
                signed_s: correlators.chsh_signed(),
            })
        })
        .collect()
}

/// Whose measurement is sampled first. Both orders draw from the same
/// joint distribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementOrder {
    /// Jim measures before Alice and Bob.
    #[default]
    JimFirst,
    /// Alice and Bob measure before Jim.
    PairFirst,
}

/// `joint[x][y][a][b][j] = ⟨GHZ|P_a^x ⊗ P_b^y ⊗ Q_j|GHZ⟩`, read off the
/// three-qubit state directly.
pub type JointTable = [[[[[f64; 2]; 2]; 2]; 2]; 2];

pub fn joint_distribution(choice: JamChoice, angles: [f64; 4]) -> Result<JointTable> {
    let ghz = ghz_state();
    let alice = [
        binary_projectors(&pauli_xy(angles[0]))?,
        binary_projectors(&pauli_xy(angles[1]))?,
    ];
    let bob = [
        binary_projectors(&pauli_xy(angles[2]))?,
        binary_projectors(&pauli_xy(angles[3]))?,
    ];
    let jim: Vec<QOperator> = choice.eigenstates().iter().map(QState::density).collect();
    let mut joint = [[[[[0.0; 2]; 2]; 2]; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let pair = alice[x][a].kron(&bob[y][b])?;
                    for (j, q) in jim.iter().enumerate() {
                        let p = pair.kron(q)?.expectation(&ghz)?.re;
                        joint[x][y][a][b][j] = p.max(0.0);
                    }
                }
            }
        }
    }
    Ok(joint)
}

/// For each setting pair, the two-stage sampling law in the requested
/// order: the first-stage marginal and the second stage conditioned on it.
/// Composing them reproduces the joint table.
#[derive(Clone, Debug, PartialEq)]
pub struct SequentialLaw {
    pub order: MeasurementOrder,
    /// `first[x][y][k]`: Jim's outcome `k` (JimFirst) or the pair outcome
    /// `k = 2a + b` (PairFirst).
    pub first: [[Vec<f64>; 2]; 2],
    /// `second[x][y][k][l]`: probability of second-stage outcome `l` given `k`.
    pub second: [[Vec<Vec<f64>>; 2]; 2],
}

impl SequentialLaw {
    pub fn new(joint: &JointTable, order: MeasurementOrder) -> Self {
        let mut first: [[Vec<f64>; 2]; 2] = Default::default();
        let mut second: [[Vec<Vec<f64>>; 2]; 2] = Default::default();
        for x in 0..2 {
            for y in 0..2 {
                // rows indexed by the first stage, columns by the second
                let grid: Vec<Vec<f64>> = match order {
                    MeasurementOrder::JimFirst => (0..2)
                        .map(|j| (0..4).map(|ab| joint[x][y][ab / 2][ab % 2][j]).collect())
                        .collect(),
                    MeasurementOrder::PairFirst => (0..4)
                        .map(|ab| (0..2).map(|j| joint[x][y][ab / 2][ab % 2][j]).collect())
                        .collect(),
                };
                let marginal: Vec<f64> = grid.iter().map(|row| row.iter().sum()).collect();
                let conditional = grid
                    .iter()
                    .zip(&marginal)
                    .map(|(row, &m)| {
                        if m > 0.0 {
                            row.iter().map(|v| v / m).collect()
                        } else {
                            vec![1.0 / row.len() as f64; row.len()]
                        }
                    })
                    .collect();
                first[x][y] = marginal;
                second[x][y] = conditional;
            }
        }
        SequentialLaw {
            order,
            first,
            second,
        }
    }

    /// Joint table rebuilt as `first × second`.
    pub fn recompose(&self) -> JointTable {
        let mut joint = [[[[[0.0; 2]; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                for (k, pk) in self.first[x][y].iter().enumerate() {
                    for (l, pl) in self.second[x][y][k].iter().enumerate() {
                        let (ab, j) = match self.order {
                            MeasurementOrder::JimFirst => (l, k),
                            MeasurementOrder::PairFirst => (k, l),
                        };
                        joint[x][y][ab / 2][ab % 2][j] = pk * pl;
                    }
                }
            }
        }
        joint
    }

    /// One trial at settings `(x, y)`: returns `(a, b, jim)` indices.
    fn sample<R: Rng + ?Sized>(&self, x: usize, y: usize, rng: &mut R) -> (usize, usize, usize) {
        let k = draw(&self.first[x][y], rng);
        let l = draw(&self.second[x][y][k], rng);
        let (ab, j) = match self.order {
            MeasurementOrder::JimFirst => (l, k),
            MeasurementOrder::PairFirst => (k, l),
        };
        (ab / 2, ab % 2, j)
    }
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Sampled correlators for one bin (or for the unbinned data).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalCorrelators {
    /// `None` for the unbinned row.
    pub jim_outcome: Option<Outcome>,
    pub trials: u64,
    pub counts: [[u64; 2]; 2],
    pub correlators: CorrelatorMatrix,
    /// Standard error of each correlator, `sqrt((1 - C²)/n)`.
    pub standard_errors: [[f64; 2]; 2],
    pub signed_s: f64,
    pub s_standard_error: f64,
}

impl EmpiricalCorrelators {
    fn from_sums(jim_outcome: Option<Outcome>, counts: [[u64; 2]; 2], sums: [[i64; 2]; 2]) -> Self {
        let mut c = [[0.0; 2]; 2];
        let mut se = [[0.0; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let n = counts[x][y];
                if n > 0 {
                    c[x][y] = sums[x][y] as f64 / n as f64;
                    se[x][y] = ((1.0 - c[x][y] * c[x][y]).max(0.0) / n as f64).sqrt();
                } else {
                    se[x][y] = f64::INFINITY;
                }
            }
        }
        let correlators = CorrelatorMatrix { c };
        EmpiricalCorrelators {
            jim_outcome,
            trials: counts.iter().flatten().sum(),
            counts,
            correlators,
            standard_errors: se,
            signed_s: correlators.chsh_signed(),
            s_standard_error: se.iter().flatten().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Result of a sampled jamming run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JamReport {
    pub choice: JamChoice,
    pub order: MeasurementOrder,
    pub angles: [f64; 4],
    pub n_samples: usize,
    pub seed: u64,
    /// Exact per-branch values for comparison.
    pub analytic: Vec<BranchChsh>,
    /// One entry per Jim outcome, `+1` first.
    pub binned: Vec<EmpiricalCorrelators>,
    pub unbinned: EmpiricalCorrelators,
    /// Largest gap between the two unbinned states and the GHZ partial trace.
    pub reduced_state_discrepancy: f64,
    pub no_signalling: bool,
}

/// Samples `n_samples` GHZ triples. On each, Alice and Bob pick settings
/// with fair coins, and all three outcomes are drawn from the Born
/// probabilities in the order given by `order`. Trial `i` uses stream `i`
/// of `seed`.
pub fn jam_statistics(
    choice: JamChoice,
    angles: [f64; 4],
    n_samples: usize,
    seed: u64,
    order: MeasurementOrder,
    workers: Option<usize>,
) -> Result<JamReport> {
    if n_samples == 0 {
        return Err(Error::out_of_range("n_samples", 0.0, ">= 1"));
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidConfig("angles must be finite".into()));
    }
    let law = SequentialLaw::new(&joint_distribution(choice, angles)?, order);

    // per Jim outcome: counts[x][y] and Σ a·b
    type Acc = [([[u64; 2]; 2], [[i64; 2]; 2]); 2];
    let zero: Acc = [([[0; 2]; 2], [[0; 2]; 2]); 2];
    let acc: Acc = with_workers(workers, || {
        (0..n_samples)
            .into_par_iter()
            .fold(
                || zero,
                |mut acc, i| {
                    let mut rng = stream_rng(seed, i as u64);
                    let x = rng.random::<bool>() as usize;
                    let y = rng.random::<bool>() as usize;
                    let (a, b, j) = law.sample(x, y, &mut rng);
                    let product = if a == b { 1 } else { -1 };
                    acc[j].0[x][y] += 1;
                    acc[j].1[x][y] += product;
                    acc
                },
            )
            .reduce(
                || zero,
                |mut l, r| {
                    for j in 0..2 {
                        for x in 0..2 {
                            for y in 0..2 {
                                l[j].0[x][y] += r[j].0[x][y];
                                l[j].1[x][y] += r[j].1[x][y];
                            }
                        }
                    }
                    l
                },
            )
    });

    let binned: Vec<EmpiricalCorrelators> = Outcome::BOTH
        .iter()
        .map(|&o| EmpiricalCorrelators::from_sums(Some(o), acc[o.index()].0, acc[o.index()].1))
        .collect();
    let mut counts = [[0u64; 2]; 2];
    let mut sums = [[0i64; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            counts[x][y] = acc[0].0[x][y] + acc[1].0[x][y];
            sums[x][y] = acc[0].1[x][y] + acc[1].1[x][y];
        }
    }
    let discrepancy = reduced_state_discrepancy();
    Ok(JamReport {
        choice,
        order,
        angles,
        n_samples,
        seed,
        analytic: binned_chsh(choice, angles)?,
        binned,
        unbinned: EmpiricalCorrelators::from_sums(None, counts, sums),
        reduced_state_discrepancy: discrepancy,
        no_signalling: discrepancy <= LINALG_TOL,
    })
}

/// `p(a,b|x,y)` of the pair with Jim's results ignored, from the joint table.
pub fn unbinned_table(joint: &JointTable) -> Result<crate::boxmodel::BehaviorTable> {
    let mut p = [0.0; 16];
    for x in Setting::BOTH {
        for y in Setting::BOTH {
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    p[flat_index(a, b, x, y)] = joint[x.index()][y.index()][a.index()][b.index()]
                        .iter()
                        .sum();
                }
            }
        }
    }
    crate::boxmodel::BehaviorTable::new(p)
}

/// CSV columns for binned and unbinned correlator rows.
pub const JAM_CSV_HEADER: [&str; 7] = [
    "jim_choice",
    "jim_outcome",
    "C00",
    "C01",
    "C10",
    "C11",
    "signed_S",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxmodel::TSIRELSON_BOUND;
    use crate::qlin::{bell_states, maximize_chsh, BellState};

    fn assert_state_close(a: &QState, b: &QState) {
        let d = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12, "{a:?} vs {b:?}");
    }

    #[test]
    fn z_branches_are_product_states() {
        let e = jim_measure(JamChoice::Z);
        assert_eq!(e.branches.len(), 2);
        assert!((e.branches[0].probability - 0.5).abs() < 1e-15);
        assert!((e.branches[1].probability - 0.5).abs() < 1e-15);
        assert_state_close(&e.branches[0].state, &QState::basis(4, 0).unwrap());
        // −|↓↓⟩ up to the global sign
        assert_state_close(
            &e.branches[1].state.with_phase(std::f64::consts::PI),
            &QState::basis(4, 3).unwrap(),
        );
        for b in &e.branches {
            let r = partial_trace(&b.state.density(), &[0]).unwrap();
            assert!((r.purity() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn x_branches_are_bell_states() {
        let e = jim_measure(JamChoice::X);
        let bell = bell_states();
        assert_eq!(e.branches[0].jim_outcome, Outcome::Plus);
        assert_state_close(&e.branches[0].state, &bell[BellState::PhiMinus.index()]);
        assert_state_close(&e.branches[1].state, &bell[BellState::PhiPlus.index()]);
        for b in &e.branches {
            assert!((b.probability - 0.5).abs() < 1e-15);
            let r = partial_trace(&b.state.density(), &[0]).unwrap();
            assert!((r.purity() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn unbinned_states_coincide() {
        let reference = ghz_reduced_state();
        for v in [0, 15] {
            assert!((reference.entries()[v].re - 0.5).abs() < 1e-15);
        }
        assert!(reduced_state_discrepancy() < 1e-12);
        let z = unbinned_state(JamChoice::Z);
        let diag = [0.5, 0.0, 0.0, 0.5];
        for i in 0..4 {
            assert!((z.get(i, i).re - diag[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn binned_chsh_examples() {
        let opt = maximize_chsh(&bell_states()[BellState::PhiMinus.index()]).unwrap();
        let x = binned_chsh(JamChoice::X, opt.angles).unwrap();
        for b in &x {
            assert!((b.signed_s.abs() - TSIRELSON_BOUND).abs() < 1e-6);
        }
        assert!(x[0].signed_s * x[1].signed_s < 0.0);

        let z = binned_chsh(JamChoice::Z, [0.3, 1.0, -0.2, 2.0]).unwrap();
        for b in &z {
            assert!(b.signed_s.abs() < 1e-12);
        }

        // all angles zero: ±(1 + 1 + 1 − 1)
        let zero = binned_chsh(JamChoice::X, [0.0; 4]).unwrap();
        assert!((zero[0].signed_s + 2.0).abs() < 1e-12);
        assert!((zero[1].signed_s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn both_orders_give_the_same_joint_law() {
        for choice in [JamChoice::Z, JamChoice::X] {
            let joint = joint_distribution(choice, [0.2, 1.7, -0.4, 0.8]).unwrap();
            for order in [MeasurementOrder::JimFirst, MeasurementOrder::PairFirst] {
                let back = SequentialLaw::new(&joint, order).recompose();
                let flat = |t: &JointTable| {
                    t.iter()
                        .flatten()
                        .flatten()
                        .flatten()
                        .flatten()
                        .copied()
                        .collect::<Vec<_>>()
                };
                for (u, v) in flat(&joint).iter().zip(flat(&back)) {
                    assert!((u - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn joint_table_agrees_with_branch_route() {
        // conditioning the direct three-qubit table on Jim's outcome must
        // give the Born table of the corresponding branch state
        let angles = [0.1, 1.3, -0.6, 0.5];
        for choice in [JamChoice::Z, JamChoice::X] {
            let joint = joint_distribution(choice, angles).unwrap();
            for (j, branch) in jim_measure(choice).branches.iter().enumerate() {
                let t = quantum_box_xy(&branch.state, angles).unwrap();
                for x in Setting::BOTH {
                    for y in Setting::BOTH {
                        for a in Outcome::BOTH {
                            for b in Outcome::BOTH {
                                let direct = joint[x.index()][y.index()][a.index()][b.index()][j];
                                let via = branch.probability * t.prob(a, b, x, y);
                                assert!((direct - via).abs() < 1e-12);
                            }
                        }
                    }
                }
            }
            let unbinned = unbinned_table(&joint).unwrap();
            assert!(unbinned.chsh_value() < 1e-12);
        }
    }

    #[test]
    fn sampled_bins_converge() {
        let opt = maximize_chsh(&bell_states()[BellState::PhiMinus.index()]).unwrap();
        let r = jam_statistics(
            JamChoice::X,
            opt.angles,
            40_000,
            3,
            MeasurementOrder::JimFirst,
            None,
        )
        .unwrap();
        for (emp, exact) in r.binned.iter().zip(&r.analytic) {
            for x in 0..2 {
                for y in 0..2 {
                    let d = (emp.correlators.c[x][y] - exact.correlators.c[x][y]).abs();
                    assert!(d < 4.0 * emp.standard_errors[x][y], "{d}");
                }
            }
        }
        assert!(r.unbinned.signed_s.abs() < 4.0 * r.unbinned.s_standard_error);
        assert!(r.no_signalling);
    }

    #[test]
    fn report_independent_of_workers() {
        let a = jam_statistics(
            JamChoice::Z,
            [0.0, 1.0, 2.0, 3.0],
            5000,
            9,
            MeasurementOrder::PairFirst,
            Some(1),
        )
        .unwrap();
        let b = jam_statistics(
            JamChoice::Z,
            [0.0, 1.0, 2.0, 3.0],
            5000,
            9,
            MeasurementOrder::PairFirst,
            Some(5),
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(jam_statistics(
            JamChoice::Z,
            [0.0; 4],
            0,
            9,
            MeasurementOrder::JimFirst,
            None
        )
        .is_err());
    }
}
